"""Radial solutions of the conformal curvature equation.

The radial reduction of  c_n Lap(u) - k u + K u^sigma = 0  is

    u'' = (k u - K u^sigma)/c_n - (lap r) u',    u(0)=u0, u'(0)=0,

integrated with an embedded Dormand-Prince 5(4) pair.  The pole is
handled by a Taylor start at r_start: in normal coordinates
Lap(u)(0) = n u''(0), so

    u(r0) ~ u0 + r0^2 (k(0) u0 - K(0) u0^sigma) / (2 n c_n).

Sign convention (fixed throughout): a positive u is a SUPERsolution
when  c_n Lap(u) - k u + K u^sigma <= 0  everywhere.  This is the only
convention under which v = u^(1-sigma) satisfies the averaged lower
bound checked by verify_supersolution_bound, because 1 - sigma < 0
flips the inequality.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .funcexpr import Jet2
from .integrals import NestedBallIntegral
from .manifold import ModelManifold, RadialFn, laplacian_r, scalar_curvature
from .quadrature import ClassifyPolicy, classify_improper, integrate

__all__ = [
    "ConformalExponents",
    "Solution",
    "SolutionJet",
    "solve_radial",
    "ResidualReport",
    "residual",
    "BoundReport",
    "verify_supersolution_bound",
    "LengthResult",
    "conformal_length",
    "InfEstimate",
    "inf_estimate",
]

BLOW_UP = 1e12
UNDERFLOW = 1e-12
R_START = 1e-4


@dataclass(frozen=True)
class ConformalExponents:
    """The dimension-determined exponents of the curvature equation."""

    n: int
    c_n: float
    sigma: float
    alpha: float

    @staticmethod
    def for_dimension(n: int) -> "ConformalExponents":
        if n < 3:
            raise ValueError(f"exponents require n >= 3, got {n}")
        c_n = 4.0 * (n - 1) / (n - 2)
        sigma = (n + 2.0) / (n - 2.0)
        return ConformalExponents(n, c_n, sigma, 1.0 - sigma)


# ---------------------------------------------------------------------------
# Solution record and its twice-differentiable view
# ---------------------------------------------------------------------------

@dataclass
class Solution:
    """One integrated radial solution.

    grid/u/u_prime hold the accepted step points; u_second holds the
    equation right-hand side evaluated at those points, so residual
    evaluation re-derives every coefficient independently and checks
    that the integrated field matches the claimed equation.  status is
    one of completed, blow_up, underflow, step_failure.
    """

    grid: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    u_second: np.ndarray
    status: str
    stop_r: float | None
    u0: float
    tol: float
    fingerprint: str
    n_steps: int
    n_rejected: int
    error_budget: float

    def jet_fn(self) -> "SolutionJet":
        return SolutionJet(self)


class _Hermite:
    """Cubic Hermite interpolant of (y, y') node data."""

    def __init__(self, x: np.ndarray, y: np.ndarray, yp: np.ndarray):
        self.x = x
        self.y = y
        self.yp = yp

    def _locate(self, q: float) -> int:
        i = int(np.searchsorted(self.x, q, side="right")) - 1
        return min(max(i, 0), len(self.x) - 2)

    def __call__(self, q: float) -> float:
        i = self._locate(q)
        h = self.x[i + 1] - self.x[i]
        t = (q - self.x[i]) / h
        t2, t3 = t * t, t * t * t
        return ((2 * t3 - 3 * t2 + 1) * self.y[i]
                + (t3 - 2 * t2 + t) * h * self.yp[i]
                + (-2 * t3 + 3 * t2) * self.y[i + 1]
                + (t3 - t2) * h * self.yp[i + 1])

    def derivative(self, q: float) -> float:
        i = self._locate(q)
        h = self.x[i + 1] - self.x[i]
        t = (q - self.x[i]) / h
        t2 = t * t
        return ((6 * t2 - 6 * t) * self.y[i] / h
                + (3 * t2 - 4 * t + 1) * self.yp[i]
                + (-6 * t2 + 6 * t) * self.y[i + 1] / h
                + (3 * t2 - 2 * t) * self.yp[i + 1])


class SolutionJet(RadialFn):
    """Solution viewed as a radial function with two derivatives.

    Values and first derivatives interpolate the recorded (u, u') data;
    second derivatives interpolate the recorded equation right-hand
    side.  Node queries reproduce the recorded values exactly.
    """

    def __init__(self, sol: Solution):
        self._sol = sol
        self._u = _Hermite(sol.grid, sol.u, sol.u_prime)
        self._up = _Hermite(sol.grid, sol.u_prime, sol.u_second)

    def jet(self, r: float) -> Jet2:
        g = self._sol.grid
        if r < g[0] or r > g[-1]:
            raise ValueError(f"r={r!r} outside solution grid [{g[0]}, {g[-1]}]")
        i = int(np.searchsorted(g, r))
        if i < len(g) and g[i] == r:
            return Jet2(self._sol.u[i], self._sol.u_prime[i], self._sol.u_second[i])
        return Jet2(self._u(r), self._up(r), self._up.derivative(r))

    def __repr__(self) -> str:
        return f"SolutionJet({self._sol.fingerprint})"


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) integration
# ---------------------------------------------------------------------------

_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
          187 / 2100, 1 / 40)
_DP_ERR = tuple(b5 - b4 for b5, b4 in zip(_DP_B5, _DP_B4))


def _density_near_zero(K: RadialFn, fallback_r: float) -> float:
    try:
        return K.value(0.0)
    except Exception:
        return K.value(fallback_r)


def solve_radial(M: ModelManifold, K: RadialFn, u0: float, r_max: float,
                 tol: float = 1e-8, r_start: float = R_START,
                 blow_up: float = BLOW_UP, underflow: float = UNDERFLOW,
                 h_max: float | None = None, max_steps: int = 200000) -> Solution:
    """Integrate the radial curvature equation from the pole to r_max.

    Stops early with status blow_up / underflow when u crosses the
    corresponding threshold (the crossing radius is located on the
    dense interpolant).  A finite-radius pole of u steeper than the
    float grid is also reported as blow_up, at the last representable
    radius; step_failure means the controller stalled for any other
    reason.
    """
    if u0 <= 0.0:
        raise ValueError("u0 must be positive")
    if r_max <= r_start:
        raise ValueError(f"r_max must exceed the start radius {r_start}")
    exps = ConformalExponents.for_dimension(M.n)
    sigma, c_n = exps.sigma, exps.c_n

    def power(u: float) -> float:
        return u ** sigma if u > 0.0 else math.nan

    def rhs(r: float, u: float, w: float) -> tuple[float, float]:
        k = scalar_curvature(M, r)
        kv = K.value(r)
        return w, (k * u - kv * power(u)) / c_n - laplacian_r(M, r) * w

    k0 = scalar_curvature(M, 0.0)
    kv0 = _density_near_zero(K, r_start)
    drive = k0 * u0 - kv0 * u0 ** sigma
    r = r_start
    u = u0 + r_start * r_start * drive / (2.0 * M.n * c_n)
    w = r_start * drive / (M.n * c_n)

    grid = [r]
    us = [u]
    ws = [w]
    seconds = [rhs(r, u, w)[1]]
    fingerprint = hashlib.sha256(
        f"{M!r}|{K!r}|{u0!r}|{r_max!r}|{tol!r}".encode()).hexdigest()[:16]

    if h_max is None:
        h_max = max((r_max - r_start) / 50.0, 1e-3)
    h = min(1e-3, h_max)
    atol = rtol = tol
    status = "completed"
    stop_r = None
    n_steps = n_rejected = 0
    budget = 0.0
    f_now = rhs(r, u, w)

    def hermite_crossing(r0, u0_, w0, r1, u1_, w1, level):
        # bisect the cubic Hermite of u for the first threshold crossing
        hh = r1 - r0
        def uval(q):
            t = (q - r0) / hh
            t2, t3 = t * t, t * t * t
            return ((2 * t3 - 3 * t2 + 1) * u0_ + (t3 - 2 * t2 + t) * hh * w0
                    + (-2 * t3 + 3 * t2) * u1_ + (t3 - t2) * hh * w1)
        lo, hi = r0, r1
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if (uval(mid) - level) * (uval(hi) - level) <= 0.0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-12 * max(1.0, abs(hi)):
                break
        return hi

    while r < r_max:
        if n_steps + n_rejected > max_steps:
            status = "step_failure"
            stop_r = r
            break
        h = min(h, r_max - r, h_max)
        ks = [f_now]
        bad = False
        for i in range(1, 7):
            ri = r + _DP_C[i] * h
            ui = u + h * sum(a * ks[j][0] for j, a in enumerate(_DP_A[i]))
            wi = w + h * sum(a * ks[j][1] for j, a in enumerate(_DP_A[i]))
            if not (math.isfinite(ui) and math.isfinite(wi)):
                bad = True
                break
            try:
                ks.append(rhs(ri, ui, wi))
            except (ArithmeticError, ValueError):
                bad = True
                break
            if not all(math.isfinite(v) for v in ks[-1]):
                bad = True
                break
        if not bad:
            u_new = u + h * sum(b * ks[i][0] for i, b in enumerate(_DP_B5))
            w_new = w + h * sum(b * ks[i][1] for i, b in enumerate(_DP_B5))
            err_u = h * sum(e * ks[i][0] for i, e in enumerate(_DP_ERR))
            err_w = h * sum(e * ks[i][1] for i, e in enumerate(_DP_ERR))
            if math.isfinite(u_new) and math.isfinite(w_new):
                scale_u = atol + rtol * max(abs(u), abs(u_new))
                scale_w = atol + rtol * max(abs(w), abs(w_new))
                err_norm = math.sqrt(0.5 * ((err_u / scale_u) ** 2
                                            + (err_w / scale_w) ** 2))
            else:
                bad = True
        if bad or err_norm > 1.0:
            n_rejected += 1
            factor = 0.2 if bad else max(0.2, 0.9 * err_norm ** -0.2)
            h *= factor
            if h < 1e-12 * max(1.0, r):
                status = "step_failure"
                stop_r = r
                break
            continue

        r_new = r + h
        crossed = None
        if u_new >= blow_up and u < blow_up:
            crossed = ("blow_up", blow_up)
        elif u_new <= underflow and u > underflow:
            crossed = ("underflow", underflow)
        if crossed is not None:
            status, level = crossed
            if r_new > r:
                rc = hermite_crossing(r, u, w, r_new, u_new, w_new, level)
                hh = r_new - r
                t = (rc - r) / hh
                t2, t3 = t * t, t * t * t
                uc = ((2 * t3 - 3 * t2 + 1) * u + (t3 - 2 * t2 + t) * hh * w
                      + (-2 * t3 + 3 * t2) * u_new + (t3 - t2) * hh * w_new)
                wc = ((6 * t2 - 6 * t) * u / hh + (3 * t2 - 4 * t + 1) * w
                      + (-6 * t2 + 6 * t) * u_new / hh + (3 * t2 - 2 * t) * w_new)
            else:
                # the controller tracked a singularity below float
                # resolution; the crossing is at the current radius
                rc, uc, wc = r_new, u_new, w_new
            grid.append(rc)
            us.append(uc)
            ws.append(wc)
            seconds.append(rhs(rc, uc, wc)[1])
            stop_r = rc
            n_steps += 1
            break
        if r_new == r:
            # radius frozen at float resolution: a finite-radius pole of u
            # sits closer than one representable step.  When the local
            # solution scale u/u' confirms that, the threshold is crossed
            # within resolution; otherwise the controller genuinely stalled.
            stop_r = r
            window = 64.0 * math.ulp(max(1.0, r))
            if w > 0.0 and u / w <= window:
                status = "blow_up"
            elif w < 0.0 and u / -w <= window:
                status = "underflow"
            else:
                status = "step_failure"
            break

        f_now = ks[6] if _DP_C[6] == 1.0 else rhs(r_new, u_new, w_new)
        r, u, w = r_new, u_new, w_new
        grid.append(r)
        us.append(u)
        ws.append(w)
        seconds.append(f_now[1])
        n_steps += 1
        budget += max(abs(err_u), abs(err_w))
        if err_norm == 0.0:
            h *= 5.0
        else:
            h *= min(5.0, max(0.2, 0.9 * err_norm ** -0.2))

    return Solution(
        grid=np.asarray(grid), u=np.asarray(us), u_prime=np.asarray(ws),
        u_second=np.asarray(seconds), status=status, stop_r=stop_r,
        u0=u0, tol=tol, fingerprint=fingerprint, n_steps=n_steps,
        n_rejected=n_rejected, error_budget=budget)


# ---------------------------------------------------------------------------
# Residual classification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidualReport:
    max_abs: float
    classification: str   # solution | supersolution | subsolution | mixed
    grid: tuple[float, ...]
    values: tuple[float, ...]


def residual(M: ModelManifold, K: RadialFn, u, grid,
             tol_res: float = 1e-6) -> ResidualReport:
    """Evaluate c_n Lap(u) - k u + K u^sigma on the grid and classify.

    u must be jet-evaluable (a RadialFn or a Solution's jet_fn()) and
    positive on the grid.  Classification follows the fixed sign
    convention: nonpositive residual means supersolution.
    """
    if isinstance(u, Solution):
        u = u.jet_fn()
    exps = ConformalExponents.for_dimension(M.n)
    values = []
    for r in grid:
        jet = u.jet(float(r))
        if jet.value <= 0.0:
            raise ValueError(f"u({r!r}) = {jet.value!r} <= 0; need positive u")
        lap = jet.d2 + laplacian_r(M, float(r)) * jet.d1
        res = (exps.c_n * lap - scalar_curvature(M, float(r)) * jet.value
               + K.value(float(r)) * jet.value ** exps.sigma)
        values.append(res)
    arr = np.asarray(values)
    max_abs = float(np.max(np.abs(arr)))
    if max_abs <= tol_res:
        cls = "solution"
    elif np.all(arr <= tol_res) and np.any(arr < -tol_res):
        cls = "supersolution"
    elif np.all(arr >= -tol_res) and np.any(arr > tol_res):
        cls = "subsolution"
    else:
        cls = "mixed"
    return ResidualReport(max_abs, cls, tuple(float(r) for r in grid),
                          tuple(float(v) for v in arr))


# ---------------------------------------------------------------------------
# Averaged lower bound for supersolutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    margin_min: float
    argmin_r: float
    passed: bool
    slack: float
    trace: tuple[tuple[float, float, float], ...]  # (r, v, bound)


def verify_supersolution_bound(M: ModelManifold, K: RadialFn, sol: Solution,
                               slack: float = 1e-6,
                               rel_tol: float = 1e-9) -> BoundReport:
    """Check v = u^(1-sigma) against its averaged integral lower bound.

    For every grid radius the transformed solution must dominate
    I(r)/(n-1), where I is the nested ball integral of K.  The report
    carries the minimum margin and where it occurs.
    """
    exps = ConformalExponents.for_dimension(M.n)
    nested = NestedBallIntegral(M, K, rel_tol=rel_tol)
    margin_min = math.inf
    argmin_r = float(sol.grid[0])
    trace = []
    for r, u in zip(sol.grid, sol.u):
        v = float(u) ** exps.alpha
        bound = nested.value(float(r)) / (M.n - 1)
        margin = v - bound
        trace.append((float(r), v, bound))
        if margin < margin_min:
            margin_min = margin
            argmin_r = float(r)
    return BoundReport(margin_min, argmin_r, margin_min >= -slack, slack,
                       tuple(trace))


# ---------------------------------------------------------------------------
# Conformal length along a ray
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LengthResult:
    length: float                 # finite part plus tail estimate when finite
    tail: str                     # "finite" | "infinite" | "inconclusive"
    finite_part: float
    tail_estimate: float | None
    fitted_exponent: float        # decay exponent q of u ~ C r^-q on the tail
    rationale: str


def conformal_length(M: ModelManifold, sol: Solution, a: float = 0.0,
                     policy: ClassifyPolicy | None = None) -> LengthResult:
    """Length of the radial ray from a in the conformal metric.

    The length element is u^{2/(n-2)} dr.  The integral over the
    recorded grid is computed from the dense interpolant; beyond the
    grid a power law fitted to the last octave of u drives the tail
    classification, and a convergent tail is added to the length.
    """
    if a < 0.0:
        raise ValueError("a must be nonnegative")
    p_exp = 2.0 / (M.n - 2)
    grid = sol.grid
    r_end = float(grid[-1])
    if a > r_end:
        raise ValueError(f"a={a} beyond the solution grid end {r_end}")
    interp = _Hermite(grid, sol.u, sol.u_prime)

    finite = 0.0
    lo = max(a, float(grid[0]))
    if a < grid[0]:
        # flat start: u'(0) = 0, so u is constant to second order
        finite += (float(grid[0]) - a) * float(sol.u[0]) ** p_exp
    if lo < r_end:
        finite += integrate(lambda q: max(interp(q), 0.0) ** p_exp,
                            lo, r_end, rel_tol=1e-9).value

    # power-law tail fit over the last octave (at least 6 points)
    mask = grid >= 0.5 * r_end
    if int(np.count_nonzero(mask)) < 6:
        mask = np.zeros(len(grid), dtype=bool)
        mask[-min(6, len(grid)):] = True
    logs_r = np.log(grid[mask])
    logs_u = np.log(sol.u[mask])
    slope, intercept = np.polyfit(logs_r, logs_u, 1)
    q = -float(slope)
    c_fit = math.exp(float(intercept))

    def tail_model(r: float) -> float:
        return (c_fit * r ** -q) ** p_exp

    cls = classify_improper(tail_model, r_end, policy)
    if cls.is_convergent:
        tail = "finite"
        tail_estimate = cls.value
        length = finite + cls.value
    elif cls.is_divergent:
        tail = "infinite"
        tail_estimate = None
        length = finite
    else:
        tail = "inconclusive"
        tail_estimate = None
        length = finite
    rationale = (f"tail model u ~ {c_fit:.6g} r^-{q:.6g}: {cls.rationale}")
    return LengthResult(length, tail, finite, tail_estimate, q, rationale)


# ---------------------------------------------------------------------------
# Infimum witness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class InfEstimate:
    inf_on_grid: float
    trend: str   # "decreasing_to_zero" | "bounded_below" | "inconclusive"


def inf_estimate(sol: Solution) -> InfEstimate:
    """Grid infimum plus a trend classification of the tail decade."""
    u = sol.u
    grid = sol.grid
    if len(u) == 0:
        raise ValueError("empty solution")
    inf_grid = float(np.min(u))
    r_end = float(grid[-1])
    mask = grid >= r_end / 10.0
    if int(np.count_nonzero(mask)) < 8:
        mask = np.zeros(len(grid), dtype=bool)
        mask[-min(8, len(grid)):] = True
    tail = u[mask]
    tail_r = grid[mask]
    variation = float(np.max(tail) - np.min(tail))
    mean = float(np.mean(tail))
    diffs = np.diff(tail)
    if variation <= 1e-9 * (1.0 + abs(mean)) and inf_grid > 0.0:
        return InfEstimate(inf_grid, "bounded_below")
    if np.all(diffs >= -1e-12 * (1.0 + np.abs(tail[:-1]))):
        return InfEstimate(inf_grid, "bounded_below")
    if np.all(diffs <= 1e-12 * (1.0 + np.abs(tail[:-1]))):
        slope = float(np.polyfit(np.log(tail_r), np.log(tail), 1)[0])
        if slope <= -0.05:
            return InfEstimate(inf_grid, "decreasing_to_zero")
    return InfEstimate(inf_grid, "inconclusive")
