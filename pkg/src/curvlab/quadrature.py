"""Adaptive Gauss-Kronrod quadrature and honest tail classification.

The improper-integral and limit classifiers are deliberately
conservative: they report Divergent or Convergent/Finite only when an
explicit decision rule fires on the truncation trace, and Inconclusive
otherwise.  The rules are

  divergent:   partial integrals exceed policy.big, or the last three
               truncation increments are positive (negative) and
               nondecreasing in magnitude within a small slack,
  convergent:  increments become negligible, or the increments form a
               stable geometric sequence whose extrapolated limits
               agree within policy.tol, or (as a fallback when the
               scan is cut short by an evaluation failure) the
               increments fit a power-law decay with exponent safely
               on the convergent side.

No finite computation can prove an infinitary statement; every result
records the trace and the rule that produced it.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .funcexpr import ExpressionError

__all__ = [
    "QuadResult",
    "ImproperResult",
    "LimitResult",
    "ClassifyPolicy",
    "LimitPolicy",
    "integrate",
    "classify_improper",
    "limit_at_infinity",
    "CumulativeIntegral",
]


# 15-point Kronrod nodes with embedded 7-point Gauss weights.
_GK_NODES = (
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
)
_K15_WEIGHTS = (
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
)
_G7_WEIGHTS = (
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
)


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    n_evals: int
    converged: bool = True  # False when the subdivision budget ran out


def _gk15(f, a: float, b: float) -> tuple[float, float]:
    """One Gauss-Kronrod panel: returns (K15 value, |K15-G7| estimate)."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    k15 = _K15_WEIGHTS[7] * f(mid)
    g7 = _G7_WEIGHTS[3] * f(mid)
    for i in range(7):
        x = half * _GK_NODES[i]
        fs = f(mid - x) + f(mid + x)
        k15 += _K15_WEIGHTS[i] * fs
        if i % 2 == 1:
            g7 += _G7_WEIGHTS[i // 2] * fs
    return k15 * half, abs(k15 - g7) * half


def integrate(f, a: float, b: float, rel_tol: float = 1e-9,
              abs_tol: float = 1e-14, max_panels: int = 4000) -> QuadResult:
    """Adaptively integrate f over [a, b].

    The worst panel (largest embedded error estimate) is bisected until
    the summed estimate meets max(abs_tol, rel_tol*|value|).  Endpoint
    singularities that are integrable are handled by refinement; the
    Kronrod nodes never touch the endpoints.  When the panel budget is
    exhausted the best value is returned with converged=False.
    """
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    if a > b:
        res = integrate(f, b, a, rel_tol, abs_tol, max_panels)
        return QuadResult(-res.value, res.error_estimate, res.n_evals, res.converged)

    value, err = _gk15(f, a, b)
    n_evals = 15
    counter = 0
    heap = [(-err, counter, a, b, value, err)]
    total_value, total_err = value, err
    while total_err > max(abs_tol, rel_tol * abs(total_value)):
        if len(heap) >= max_panels:
            return QuadResult(total_value, total_err, n_evals, False)
        neg_err, _, lo, hi, pval, perr = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            # interval at floating-point resolution; keep its estimate
            counter += 1
            heapq.heappush(heap, (0.0, counter, lo, hi, pval, 0.0))
            total_err -= perr
            continue
        lv, le = _gk15(f, lo, mid)
        rv, re = _gk15(f, mid, hi)
        n_evals += 30
        total_value += lv + rv - pval
        total_err += le + re - perr
        counter += 1
        heapq.heappush(heap, (-le, counter, lo, mid, lv, le))
        counter += 1
        heapq.heappush(heap, (-re, counter, mid, hi, rv, re))
    return QuadResult(total_value, total_err, n_evals, True)


class CumulativeIntegral:
    """Cached cumulative integral F(x) = int_{x0}^{x} f dt.

    Monotone advancing queries append checkpoints, so walking a grid
    costs one short panel per step; queries below the frontier reuse
    the nearest lower checkpoint.
    """

    def __init__(self, f, x0: float = 0.0, rel_tol: float = 1e-9):
        self._f = f
        self._rel_tol = rel_tol
        self._xs = [float(x0)]
        self._vals = [0.0]

    @property
    def x0(self) -> float:
        return self._xs[0]

    def value(self, x: float) -> float:
        if x < self._xs[0]:
            raise ValueError(f"query {x} below lower limit {self._xs[0]}")
        i = bisect_right(self._xs, x) - 1
        base_x, base_v = self._xs[i], self._vals[i]
        if x == base_x:
            return base_v
        seg = integrate(self._f, base_x, x, rel_tol=self._rel_tol,
                        abs_tol=1e-14 * (1.0 + abs(base_v)))
        v = base_v + seg.value
        if x > self._xs[-1]:
            self._xs.append(x)
            self._vals.append(v)
        return v


# ---------------------------------------------------------------------------
# Improper integrals over [a, inf)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassifyPolicy:
    tol: float = 1e-6            # agreement tolerance for convergence
    big: float = 1e8             # partial-integral divergence threshold
    max_doublings: int = 20      # truncations R_k = a * 2^k
    quad_rel_tol: float = 1e-8   # per-segment quadrature tolerance
    trend_slack: float = 1e-3    # nondecreasing-increment slack
    ratio_cap: float = 0.97      # geometric extrapolation needs ratio below this
    fit_margin: float = 0.1      # exponent dead zone around 1 for the tail fit
    min_fit_points: int = 4


@dataclass(frozen=True)
class ImproperResult:
    kind: str                    # "convergent" | "divergent" | "inconclusive"
    value: float | None
    direction: int | None        # +1 or -1 when divergent
    rationale: str
    trace: tuple[tuple[float, float], ...]

    @property
    def is_convergent(self) -> bool:
        return self.kind == "convergent"

    @property
    def is_divergent(self) -> bool:
        return self.kind == "divergent"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "direction": self.direction,
            "rationale": self.rationale,
            "trace": [[r, v] for r, v in self.trace],
        }


def _judge_trace(partials: list[tuple[float, float]], policy: ClassifyPolicy,
                 prev_extrap: list[float]) -> ImproperResult | None:
    """Apply the decision rules to the truncation trace seen so far."""
    if len(partials) < 3:
        return None
    totals = [p[1] for p in partials]
    incs = [totals[i] - totals[i - 1] for i in range(1, len(totals))]
    total = totals[-1]
    scale = policy.tol * (1.0 + abs(total))

    # negligible increments: the partial sums have stopped moving
    if len(incs) >= 2 and abs(incs[-1]) <= scale and abs(incs[-2]) <= scale:
        return ImproperResult(
            "convergent", total, None,
            "last increments below tolerance", tuple(partials))

    # divergence by magnitude
    if total > policy.big:
        return ImproperResult(
            "divergent", None, 1,
            f"partial integrals exceeded {policy.big:g}", tuple(partials))
    if total < -policy.big:
        return ImproperResult(
            "divergent", None, -1,
            f"partial integrals exceeded -{policy.big:g}", tuple(partials))

    # divergence by trend: four same-sign increments of nondecreasing
    # magnitude, with the partial sum at a running record (so bounded or
    # slowly oscillating integrands cannot alias into a divergence call)
    if len(incs) >= 4:
        last = incs[-4:]
        slack = 1.0 - policy.trend_slack
        if all(d > 0.0 for d in last) and last[0] > scale and \
           total >= max(totals[:-1]):
            if all(last[i + 1] >= last[i] * slack for i in range(3)):
                return ImproperResult(
                    "divergent", None, 1,
                    "positive increments with nondecreasing magnitude",
                    tuple(partials))
        if all(d < 0.0 for d in last) and last[0] < -scale and \
           total <= min(totals[:-1]):
            if all(last[i + 1] <= last[i] * slack for i in range(3)):
                return ImproperResult(
                    "divergent", None, -1,
                    "negative increments with nondecreasing magnitude",
                    tuple(partials))

    # convergence by geometric extrapolation of the increment sequence
    if len(incs) >= 2 and incs[-2] != 0.0:
        ratio = incs[-1] / incs[-2]
        if 0.0 < ratio < policy.ratio_cap:
            extrap = total + incs[-1] * ratio / (1.0 - ratio)
            prev_extrap.append(extrap)
            if len(prev_extrap) >= 2:
                a, b = prev_extrap[-2], prev_extrap[-1]
                if abs(a - b) <= policy.tol * (1.0 + abs(b)):
                    return ImproperResult(
                        "convergent", b, None,
                        "geometric extrapolation stabilized", tuple(partials))
        else:
            prev_extrap.clear()
    return None


def _power_law_fallback(partials: list[tuple[float, float]],
                        policy: ClassifyPolicy, note: str) -> ImproperResult:
    """Last resort when the scan stopped early: fit the increment decay.

    Increments of int g over doubling windows scale like R^(1-p) for
    g ~ r^(-p); the fitted exponent decides the tail when it is safely
    away from 1.
    """
    totals = [p[1] for p in partials]
    incs = [totals[i] - totals[i - 1] for i in range(1, len(totals))]
    rs = [partials[i][0] for i in range(1, len(partials))]
    # only the tail-most increments carry the asymptotic exponent
    window = max(policy.min_fit_points, 6)
    incs, rs = incs[-window:], rs[-window:]
    same_sign = all(d > 0.0 for d in incs) or all(d < 0.0 for d in incs)
    if len(incs) >= policy.min_fit_points and same_sign:
        logs = np.log([abs(d) for d in incs])
        logr = np.log(rs)
        slope, intercept = np.polyfit(logr, logs, 1)
        resid = logs - (slope * logr + intercept)
        if float(np.max(np.abs(resid))) <= 0.15:
            p_hat = 1.0 - float(slope)
            sign = 1 if incs[-1] > 0.0 else -1
            if p_hat >= 1.0 + policy.fit_margin:
                rho = 2.0 ** (1.0 - p_hat)
                tail = incs[-1] * rho / (1.0 - rho)
                return ImproperResult(
                    "convergent", totals[-1] + tail, None,
                    f"power-law increment fit (exponent {p_hat:.3f}); {note}",
                    tuple(partials))
            if p_hat <= 1.0 - policy.fit_margin:
                return ImproperResult(
                    "divergent", None, sign,
                    f"power-law increment fit (exponent {p_hat:.3f}); {note}",
                    tuple(partials))
    return ImproperResult("inconclusive", None, None,
                          f"no decision rule fired; {note}", tuple(partials))


def classify_improper(g, a: float, policy: ClassifyPolicy | None = None) -> ImproperResult:
    """Classify int_a^inf g(r) dr from partial integrals at R_k = a*2^k."""
    if policy is None:
        policy = ClassifyPolicy()
    if a <= 0.0:
        raise ValueError("classification requires a > 0 (doubling truncations)")
    partials: list[tuple[float, float]] = [(a, 0.0)]
    extrap: list[float] = []
    note = "scan exhausted the doubling budget"
    prev_r, total = a, 0.0
    for k in range(1, policy.max_doublings + 1):
        r_k = a * 2.0 ** k
        try:
            seg = integrate(g, prev_r, r_k, rel_tol=policy.quad_rel_tol,
                            abs_tol=1e-14 * (1.0 + abs(total)))
        except (ExpressionError, ArithmeticError) as exc:
            note = f"evaluation failed near R={r_k:g} ({exc})"
            break
        total += seg.value
        partials.append((r_k, total))
        prev_r = r_k
        verdict = _judge_trace(partials, policy, extrap)
        if verdict is not None:
            return verdict
    return _power_law_fallback(partials, policy, note)


# ---------------------------------------------------------------------------
# Limits at infinity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitPolicy:
    tol: float = 1e-6
    big: float = 1e8
    r0: float = 1.0
    max_samples: int = 40
    trend_slack: float = 1e-3
    ratio_cap: float = 0.97


@dataclass(frozen=True)
class LimitResult:
    kind: str                    # "finite" | "infinite" | "inconclusive"
    value: float | None
    direction: int | None        # +1 or -1 when infinite
    rationale: str
    trace: tuple[tuple[float, float], ...]

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def is_infinite(self) -> bool:
        return self.kind == "infinite"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value,
            "direction": self.direction,
            "rationale": self.rationale,
            "trace": [[r, v] for r, v in self.trace],
        }


def _judge_limit(samples: list[tuple[float, float]], policy: LimitPolicy,
                 extrap: list[float]) -> LimitResult | None:
    if len(samples) < 4:
        return None
    values = [v for _, v in samples]
    diffs = [values[i] - values[i - 1] for i in range(1, len(values))]
    v = values[-1]
    scale = policy.tol * (1.0 + abs(v))

    # settled: two successive differences below tolerance
    if abs(diffs[-1]) <= scale and abs(diffs[-2]) <= scale:
        return LimitResult("finite", v, None,
                           "successive samples agree", tuple(samples))

    # unbounded by magnitude (with a monotone tail so oscillation cannot fire)
    last3 = diffs[-3:]
    if abs(v) > policy.big:
        if v > 0.0 and all(d > 0.0 for d in last3):
            return LimitResult("infinite", None, 1,
                               f"samples exceeded {policy.big:g}", tuple(samples))
        if v < 0.0 and all(d < 0.0 for d in last3):
            return LimitResult("infinite", None, -1,
                               f"samples exceeded -{policy.big:g}", tuple(samples))

    # unbounded by trend: growth steps that refuse to shrink, ending on a
    # running record (blocks aliased oscillations, which revisit old levels)
    if len(diffs) >= 4:
        last4 = diffs[-4:]
        slack = 1.0 - policy.trend_slack
        if all(d > scale for d in last4) and v >= max(values[:-1]) and \
           all(last4[i + 1] >= last4[i] * slack for i in range(3)):
            return LimitResult("infinite", None, 1,
                               "sample increments keep growing", tuple(samples))
        if all(d < -scale for d in last4) and v <= min(values[:-1]) and \
           all(last4[i + 1] <= last4[i] * slack for i in range(3)):
            return LimitResult("infinite", None, -1,
                               "sample decrements keep growing", tuple(samples))

    # Richardson-style geometric extrapolation
    if diffs[-2] != 0.0:
        ratio = diffs[-1] / diffs[-2]
        if abs(ratio) < policy.ratio_cap:
            est = v + diffs[-1] * ratio / (1.0 - ratio)
            extrap.append(est)
            if len(extrap) >= 2 and abs(extrap[-1] - extrap[-2]) <= policy.tol * (1.0 + abs(extrap[-1])):
                return LimitResult("finite", extrap[-1], None,
                                   "geometric extrapolation stabilized",
                                   tuple(samples))
        else:
            extrap.clear()
    return None


def limit_at_infinity(g, policy: LimitPolicy | None = None) -> LimitResult:
    """Classify lim_{r->inf} g(r) from geometrically spaced samples."""
    if policy is None:
        policy = LimitPolicy()
    samples: list[tuple[float, float]] = []
    extrap: list[float] = []
    note = "sample budget exhausted"
    for j in range(policy.max_samples + 1):
        r = policy.r0 * 2.0 ** j
        try:
            v = float(g(r))
        except (ExpressionError, ArithmeticError) as exc:
            note = f"evaluation failed near r={r:g} ({exc})"
            break
        if not math.isfinite(v):
            note = f"non-finite sample at r={r:g}"
            break
        samples.append((r, v))
        verdict = _judge_limit(samples, policy, extrap)
        if verdict is not None:
            return verdict
    return LimitResult("inconclusive", None, None,
                       f"no decision rule fired; {note}", tuple(samples))
