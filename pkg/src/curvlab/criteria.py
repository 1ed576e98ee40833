"""Numerical verdicts for the supersolution and nonexistence criteria.

Each check evaluates the hypotheses of one criterion on a concrete
(manifold, curvature density) pair and returns a Verdict carrying the
full numeric evidence.  A verdict claims no more than its criterion:

  * the infimum checks speak about positive supersolutions of the
    curvature equation having infimum zero,
  * the nonexistence checks speak about complete rotationally
    symmetric conformal metrics with the given curvature.

Hypotheses are infinitary statements; every check reports the scan
horizon and classification traces it used, and returns Inconclusive
or NotApplicable when its decision rules do not fire.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .integrals import NestedBallIntegral
from .manifold import (CurvatureReport, ModelManifold, RadialFn, ValueRadial,
                       check_curvature, laplacian_r, scalar_curvature,
                       volume_sphere)
from .quadrature import (ClassifyPolicy, ImproperResult, LimitPolicy,
                         LimitResult, classify_improper, limit_at_infinity)

__all__ = [
    "ScanPolicy",
    "DeltaOutOfRange",
    "CriterionReport",
    "Verdict",
    "GrowthReport",
    "infimum_zero_integral_check",
    "infimum_zero_limit_check",
    "volume_growth_check",
    "nonexistence_integral_check",
    "nonexistence_growth_check",
]

INF_ZERO_STATEMENT = ("every positive C2 supersolution of the curvature "
                      "equation on this manifold has infimum zero")
NONEXISTENCE_STATEMENT = ("no complete rotationally symmetric conformal "
                          "metric on this manifold has this scalar curvature")


class DeltaOutOfRange(ValueError):
    pass


@dataclass(frozen=True)
class ScanPolicy:
    """Geometric scan grid used for tail and positivity searches."""

    r_min: float = 0.1
    r_max: float = 100.0
    n_points: int = 64
    tail_tol: float = 1e-12

    def grid(self) -> list[float]:
        if self.r_min <= 0.0 or self.r_max <= self.r_min:
            raise ValueError("scan needs 0 < r_min < r_max")
        ratio = (self.r_max / self.r_min) ** (1.0 / (self.n_points - 1))
        return [self.r_min * ratio ** i for i in range(self.n_points)]

    def to_dict(self) -> dict:
        return {"r_min": self.r_min, "r_max": self.r_max,
                "n_points": self.n_points, "tail_tol": self.tail_tol}


@dataclass
class CriterionReport:
    """Numeric evidence behind a verdict."""

    tail_start: float | None = None       # first scan radius with nonnegative tail
    a_found: float | None = None          # positivity onset for the nested integral
    pinching_c: float | None = None
    classifications: dict = field(default_factory=dict)  # name -> ImproperResult
    limits: dict = field(default_factory=dict)           # name -> LimitResult
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "tail_start": self.tail_start,
            "a_found": self.a_found,
            "pinching_c": self.pinching_c,
            "classifications": {k: v.to_dict() for k, v in self.classifications.items()},
            "limits": {k: v.to_dict() for k, v in self.limits.items()},
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class Verdict:
    criterion: str
    kind: str            # inf_zero_forced | no_complete_metric | not_applicable | inconclusive
    clause: str | None
    statement: str
    reason: str
    report: CriterionReport
    policies: dict

    @property
    def fired(self) -> bool:
        return self.kind in ("inf_zero_forced", "no_complete_metric")

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion,
            "kind": self.kind,
            "clause": self.clause,
            "statement": self.statement,
            "reason": self.reason,
            "evidence": self.report.to_dict(),
            "policies": self.policies,
        }


def _abs_curvature(M: ModelManifold) -> RadialFn:
    return ValueRadial(lambda r: abs(scalar_curvature(M, r)),
                       "abs(scalar_curvature)")


def _policies_dict(scan: ScanPolicy, classify: ClassifyPolicy | None = None,
                   limits: LimitPolicy | None = None) -> dict:
    out = {"scan": scan.to_dict()}
    if classify is not None:
        out["classify"] = {
            "tol": classify.tol, "big": classify.big,
            "max_doublings": classify.max_doublings,
            "quad_rel_tol": classify.quad_rel_tol,
            "trend_slack": classify.trend_slack,
            "ratio_cap": classify.ratio_cap,
            "fit_margin": classify.fit_margin,
        }
    if limits is not None:
        out["limit"] = {
            "tol": limits.tol, "big": limits.big, "r0": limits.r0,
            "max_samples": limits.max_samples,
            "trend_slack": limits.trend_slack,
            "ratio_cap": limits.ratio_cap,
        }
    return out


def _tail_nonnegative_start(nested: NestedBallIntegral,
                            scan: ScanPolicy) -> tuple[float | None, list]:
    """Smallest scan radius after which the ball integral of K stays >= 0.

    Verified only up to the scan horizon; the horizon is part of the
    report so the claim is explicit about its reach.
    """
    grid = scan.grid()
    values = [nested.ball_integral(r) for r in grid]
    scale = max(1.0, max(abs(v) for v in values))
    tau = None
    for i in range(len(grid) - 1, -1, -1):
        if values[i] < -scan.tail_tol * scale:
            break
        tau = grid[i]
    return tau, list(zip(grid, values))


# ---------------------------------------------------------------------------
# Infimum-zero by divergent integrals
# ---------------------------------------------------------------------------

def infimum_zero_integral_check(M: ModelManifold, K: RadialFn,
                                scan: ScanPolicy | None = None,
                                classify: ClassifyPolicy | None = None) -> Verdict:
    """Integral criterion for a forced zero infimum.

    Clause (a): the integral of the normalized ball integral of K over
    all radii diverges to +infinity.  Clause (b): the ball integral of
    K is eventually nonnegative and the corresponding integral with
    |k| in place of K diverges.  Clause (a) is tried first.
    """
    scan = scan or ScanPolicy()
    classify = classify or ClassifyPolicy()
    report = CriterionReport()
    policies = _policies_dict(scan, classify=classify)

    nested = NestedBallIntegral(M, K, rel_tol=classify.quad_rel_tol)
    res_a = classify_improper(nested.normalized_ball, scan.r_min, classify)
    report.classifications["clause_a"] = res_a
    if res_a.is_divergent and res_a.direction == 1:
        return Verdict("infimum_zero_integral", "inf_zero_forced", "a",
                       INF_ZERO_STATEMENT,
                       "normalized ball integral of K diverges to +infinity",
                       report, policies)

    tau, tail_trace = _tail_nonnegative_start(nested, scan)
    report.tail_start = tau
    report.notes.append(f"tail scan horizon {scan.r_max:g}")
    if tau is not None:
        nested_k = NestedBallIntegral(M, _abs_curvature(M),
                                      rel_tol=classify.quad_rel_tol)
        res_b = classify_improper(nested_k.normalized_ball, scan.r_min, classify)
        report.classifications["clause_b"] = res_b
        if res_b.is_divergent and res_b.direction == 1:
            return Verdict("infimum_zero_integral", "inf_zero_forced", "b",
                           INF_ZERO_STATEMENT,
                           f"ball integral of K nonnegative from r={tau:g} and "
                           "normalized ball integral of |k| diverges",
                           report, policies)
        reason = (f"clause a: {res_a.kind} ({res_a.rationale}); "
                  f"clause b: {res_b.kind} ({res_b.rationale})")
    else:
        reason = (f"clause a: {res_a.kind} ({res_a.rationale}); clause b: ball "
                  "integral of K not eventually nonnegative on the scan grid")
    return Verdict("infimum_zero_integral", "inconclusive", None,
                   INF_ZERO_STATEMENT, reason, report, policies)


# ---------------------------------------------------------------------------
# Infimum-zero by limit comparison
# ---------------------------------------------------------------------------

def infimum_zero_limit_check(M: ModelManifold, K: RadialFn,
                             scan: ScanPolicy | None = None,
                             limits: LimitPolicy | None = None) -> Verdict:
    """Limit-form criterion for a forced zero infimum (radial K only).

    Shared hypothesis: the ball integral of K is eventually
    nonnegative.  Clause (b), which depends only on the geometry
    through |k|, is evaluated first: when it fires the conclusion
    holds for every admissible K at once.  Clause (a) uses K itself.
    """
    scan = scan or ScanPolicy()
    limits = limits or LimitPolicy()
    report = CriterionReport()
    policies = _policies_dict(scan, limits=limits)

    nested = NestedBallIntegral(M, K, rel_tol=1e-8)
    tau, _ = _tail_nonnegative_start(nested, scan)
    report.tail_start = tau
    if tau is None:
        return Verdict("infimum_zero_limit", "not_applicable", None,
                       INF_ZERO_STATEMENT,
                       "ball integral of K is not eventually nonnegative "
                       f"on the scan grid (horizon {scan.r_max:g})",
                       report, policies)

    def ratio_of(density: RadialFn):
        def g(r: float) -> float:
            return (r * r * density.value(r)) / (r * laplacian_r(M, r) - 1.0)
        return g

    nested_k = NestedBallIntegral(M, _abs_curvature(M), rel_tol=1e-8)
    lim_kb = limit_at_infinity(nested_k.ball_integral, limits)
    lim_gamma = limit_at_infinity(ratio_of(_abs_curvature(M)), limits)
    report.limits["ball_integral_abs_k"] = lim_kb
    report.limits["gamma_ratio"] = lim_gamma
    if _limit_fires(lim_kb) and _limit_positive(lim_gamma, limits.tol):
        return Verdict("infimum_zero_limit", "inf_zero_forced", "b",
                       INF_ZERO_STATEMENT,
                       "ball integral of |k| is unbounded and the |k| "
                       "growth ratio has a positive (or infinite) limit",
                       report, policies)

    lim_ka = limit_at_infinity(nested.ball_integral, limits)
    lim_beta = limit_at_infinity(ratio_of(K), limits)
    report.limits["ball_integral_K"] = lim_ka
    report.limits["beta_ratio"] = lim_beta
    if _limit_fires(lim_ka) and _limit_positive(lim_beta, limits.tol):
        return Verdict("infimum_zero_limit", "inf_zero_forced", "a",
                       INF_ZERO_STATEMENT,
                       "ball integral of K is unbounded and the K growth "
                       "ratio has a positive (or infinite) limit",
                       report, policies)
    reason = (f"clause b: ball integral of |k| {lim_kb.kind}, ratio "
              f"{lim_gamma.kind}; clause a: ball integral of K {lim_ka.kind}, "
              f"ratio {lim_beta.kind}")
    return Verdict("infimum_zero_limit", "inconclusive", None,
                   INF_ZERO_STATEMENT, reason, report, policies)


def _limit_fires(res: LimitResult) -> bool:
    return res.is_infinite and res.direction == 1


def _limit_positive(res: LimitResult, tol: float) -> bool:
    if res.is_infinite and res.direction == 1:
        return True
    return res.is_finite and res.value is not None and res.value > tol


# ---------------------------------------------------------------------------
# Sphere-volume growth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GrowthReport:
    delta: float
    nondecreasing: bool
    growth_factor: float        # ratio(r_max) / ratio(r_max/4)
    ratio_end: float            # V(r_max) / r_max^{n-2+delta}
    passed: bool
    trace: tuple[tuple[float, float], ...]

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "nondecreasing": self.nondecreasing,
            "growth_factor": self.growth_factor,
            "ratio_end": self.ratio_end,
            "passed": self.passed,
        }


def volume_growth_check(M: ModelManifold, delta: float, r_max: float = 100.0,
                        n_grid: int = 64,
                        growth_threshold: float = 1.05) -> GrowthReport:
    """Check that V(r)/r^{n-2+delta} is nondecreasing and actually grows.

    Valid for delta in [0, 1); the endpoint delta=1 is rejected because
    the flat model makes the ratio exactly constant there.
    """
    if not (0.0 <= delta < 1.0):
        raise DeltaOutOfRange(f"delta must lie in [0, 1), got {delta}")
    if r_max <= 0.0 or n_grid < 8:
        raise ValueError("need r_max > 0 and n_grid >= 8")
    expo = M.n - 2 + delta

    def ratio(r: float) -> float:
        return volume_sphere(M, r) / r ** expo

    lo = r_max / 100.0
    step = (r_max / lo) ** (1.0 / (n_grid - 1))
    grid = [lo * step ** i for i in range(n_grid)]
    values = [ratio(r) for r in grid]
    nondecr = all(values[i + 1] >= values[i] * (1.0 - 1e-12)
                  for i in range(len(values) - 1))
    growth = ratio(r_max) / ratio(r_max / 4.0)
    return GrowthReport(delta, nondecr, growth, values[-1],
                        nondecr and growth >= growth_threshold,
                        tuple(zip(grid, values)))


# ---------------------------------------------------------------------------
# Nonexistence by the convergent reciprocal-root integral
# ---------------------------------------------------------------------------

def nonexistence_integral_check(M: ModelManifold, K: RadialFn,
                                scan: ScanPolicy | None = None,
                                classify: ClassifyPolicy | None = None) -> Verdict:
    """Nonexistence of a complete conformal metric via I(r)^(-1/2).

    Finds the positivity onset a of the nested ball integral I on the
    scan grid, then classifies the integral of I^(-1/2) from a.  Only a
    convergent classification fires the verdict.
    """
    scan = scan or ScanPolicy()
    classify = classify or ClassifyPolicy()
    report = CriterionReport()
    policies = _policies_dict(scan, classify=classify)

    nested = NestedBallIntegral(M, K, rel_tol=classify.quad_rel_tol)
    grid = scan.grid()
    ivals = [nested.value(r) for r in grid]
    a_found = None
    for i in range(len(grid) - 1, -1, -1):
        if ivals[i] <= 0.0:
            break
        a_found = grid[i]
    report.a_found = a_found
    report.notes.append(f"positivity scan horizon {scan.r_max:g}")
    if a_found is None:
        return Verdict("nonexistence_integral", "not_applicable", None,
                       NONEXISTENCE_STATEMENT,
                       "nested ball integral of K is not eventually positive "
                       "on the scan grid", report, policies)

    def integrand(r: float) -> float:
        val = nested.value(r)
        if val <= 0.0:
            raise ArithmeticError(
                f"nested integral became nonpositive at r={r:g}")
        return val ** -0.5

    res = classify_improper(integrand, a_found, classify)
    report.classifications["reciprocal_root"] = res
    if res.is_convergent:
        return Verdict("nonexistence_integral", "no_complete_metric", None,
                       NONEXISTENCE_STATEMENT,
                       f"integral of I^(-1/2) from a={a_found:g} converges "
                       f"(value {res.value:.6g})", report, policies)
    if res.is_divergent:
        reason = "integral of I^(-1/2) diverges; the criterion does not fire"
    else:
        reason = f"classification inconclusive: {res.rationale}"
    return Verdict("nonexistence_integral", "inconclusive", None,
                   NONEXISTENCE_STATEMENT, reason, report, policies)


# ---------------------------------------------------------------------------
# Nonexistence by superlinear growth of K under pinched curvature
# ---------------------------------------------------------------------------

def nonexistence_growth_check(M: ModelManifold, K: RadialFn, delta: float,
                              scan: ScanPolicy | None = None,
                              limits: LimitPolicy | None = None) -> Verdict:
    """Nonexistence when K(r)/r^(1+delta) blows up on a pinched manifold.

    Requires a finite curvature pinching constant from the curvature
    report, then classifies the growth limit; an infinite positive
    limit fires the verdict.
    """
    if delta <= 0.0:
        raise DeltaOutOfRange(f"delta must be positive, got {delta}")
    scan = scan or ScanPolicy()
    limits = limits or LimitPolicy()
    report = CriterionReport()
    policies = _policies_dict(scan, limits=limits)
    policies["delta"] = delta

    curv = check_curvature(M, scan.r_max, n_grid=128)
    report.pinching_c = curv.pinching_c
    if not curv.valid:
        return Verdict("nonexistence_growth", "not_applicable", None,
                       NONEXISTENCE_STATEMENT,
                       "sectional curvature is not nonpositive on the grid",
                       report, policies)
    if curv.pinching_c is None:
        return Verdict("nonexistence_growth", "not_applicable", None,
                       NONEXISTENCE_STATEMENT,
                       "no finite curvature pinching constant on the scan grid",
                       report, policies)

    res = limit_at_infinity(lambda r: K.value(r) / r ** (1.0 + delta), limits)
    report.limits["growth_ratio"] = res
    if res.is_infinite and res.direction == 1:
        return Verdict("nonexistence_growth", "no_complete_metric", None,
                       NONEXISTENCE_STATEMENT,
                       f"K(r)/r^(1+{delta:g}) grows without bound under "
                       f"pinching c={curv.pinching_c:.6g}", report, policies)
    if res.is_finite:
        return Verdict("nonexistence_growth", "not_applicable", None,
                       NONEXISTENCE_STATEMENT,
                       f"growth limit is finite ({res.value:.6g})",
                       report, policies)
    return Verdict("nonexistence_growth", "inconclusive", None,
                   NONEXISTENCE_STATEMENT,
                   f"growth limit inconclusive: {res.rationale}",
                   report, policies)
