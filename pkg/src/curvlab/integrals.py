"""Nested ball integrals of a radial density over a model manifold.

For a radial density K the two quantities of interest are

    normalized ball integral   m(s) = (1/V(s)) int_0^s K(t) V(t) dt
    nested integral            I(r) = int_0^r m(s) ds

m(s) is the ball integral of K divided by the bounding sphere volume.
Near the pole both V(s) and the ball integral vanish; for s below
S_SERIES the quotient is replaced by its exact limit K(0) s / n.
"""

from __future__ import annotations

from .manifold import ModelManifold, RadialFn, volume_sphere
from .quadrature import CumulativeIntegral, integrate

__all__ = [
    "NestedBallIntegral",
    "normalized_ball_integral",
    "nested_ball_integral",
]

S_SERIES = 1e-4  # below this the normalized ball integral uses its series


class NestedBallIntegral:
    """Cached evaluator for m(s) and I(r) over one (manifold, K) pair.

    Walking increasing radii reuses cumulative checkpoints, so criteria
    scans and per-grid verification stay cheap.
    """

    def __init__(self, M: ModelManifold, K: RadialFn, rel_tol: float = 1e-9):
        self.M = M
        self.K = K
        self._weighted = CumulativeIntegral(
            lambda t: K.value(t) * volume_sphere(M, t), 0.0, rel_tol)
        self._outer = CumulativeIntegral(self.normalized_ball, 0.0, rel_tol)
        self._k_at_zero = None

    def _k0(self) -> float:
        if self._k_at_zero is None:
            try:
                self._k_at_zero = self.K.value(0.0)
            except Exception:
                # density singular at the pole; sample just off it
                self._k_at_zero = self.K.value(S_SERIES)
        return self._k_at_zero

    def normalized_ball(self, s: float) -> float:
        if s < 0.0:
            raise ValueError(f"radius must be nonnegative, got {s}")
        if s == 0.0:
            return 0.0
        if s < S_SERIES:
            # V ~ omega s^{n-1}: int K V / V(s) -> K(0) s / n
            return self._k0() * s / self.M.n
        return self._weighted.value(s) / volume_sphere(self.M, s)

    def ball_integral(self, s: float) -> float:
        """int_{B(s)} K dmu = int_0^s K(t) V(t) dt."""
        return self._weighted.value(s)

    def value(self, r: float) -> float:
        """The nested integral I(r); I(0) = 0 and I is continuous."""
        if r < 0.0:
            raise ValueError(f"radius must be nonnegative, got {r}")
        if r == 0.0:
            return 0.0
        return self._outer.value(r)


def normalized_ball_integral(M: ModelManifold, K: RadialFn, s: float,
                             rel_tol: float = 1e-9) -> float:
    """One-shot m(s) = (1/V(s)) int_0^s K(t) V(t) dt."""
    if s <= 0.0:
        raise ValueError("normalized ball integral needs s > 0")
    if s < S_SERIES:
        return NestedBallIntegral(M, K, rel_tol).normalized_ball(s)
    num = integrate(lambda t: K.value(t) * volume_sphere(M, t), 0.0, s,
                    rel_tol=rel_tol)
    return num.value / volume_sphere(M, s)


def nested_ball_integral(M: ModelManifold, K: RadialFn, r: float,
                         rel_tol: float = 1e-9) -> float:
    """One-shot I(r) = int_0^r m(s) ds."""
    return NestedBallIntegral(M, K, rel_tol).value(r)
