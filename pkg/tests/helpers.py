"""Shared test utilities: random expression generation and FD oracles."""

from __future__ import annotations

import math
import random

from curvlab import funcexpr as fe

UNARY_FUNCTIONS = ("sin", "cos", "sinh", "cosh", "tanh", "exp", "atan",
                   "sqrt", "log", "abs", "tan", "coth")


def random_expr(rng: random.Random, depth: int) -> fe.Expr:
    """Draw a tree from the grammar; leaves and shapes weighted for sanity."""
    if depth <= 0:
        roll = rng.random()
        if roll < 0.55:
            return fe.Var()
        if roll < 0.9:
            return fe.Num(round(rng.uniform(0.25, 2.5), 3))
        return fe.Const(rng.choice(("pi", "e")))
    roll = rng.random()
    if roll < 0.38:
        op = rng.choice("+-*/")
        return fe.BinOp(op, random_expr(rng, depth - 1),
                        random_expr(rng, depth - 1))
    if roll < 0.5:
        return fe.Neg(random_expr(rng, depth - 1))
    if roll < 0.62:
        exponent = rng.choice((fe.Num(2.0), fe.Num(3.0), fe.Num(0.5),
                               fe.Num(1.5), fe.Neg(fe.Num(1.0))))
        return fe.BinOp("^", random_expr(rng, depth - 1), exponent)
    if roll < 0.68:
        return fe.Call("pow", (random_expr(rng, depth - 1), fe.Num(2.0)))
    return fe.Call(rng.choice(UNARY_FUNCTIONS), (random_expr(rng, depth - 1),))


def _value(expr: fe.Expr, r: float) -> float:
    return fe.eval_jet2(expr, r).value


def fd_check_sample(expr: fe.Expr, r: float, tol: float = 1e-6):
    """Compare jet derivatives against centered finite differences.

    Returns (ok, detail) for usable samples and None when the sample is
    not a fair test for the FD oracle (domain error nearby, magnitudes
    that drown the stencil in roundoff, or FD estimates that disagree
    with their own half-step refinement).
    """
    h1 = 1e-5   # first-difference step
    h2 = 1e-4   # second-difference step (roundoff-optimal regime)
    try:
        jet = fe.eval_jet2(expr, r)
        f0 = jet.value
        fp1 = _value(expr, r + h1)
        fm1 = _value(expr, r - h1)
        fp2 = _value(expr, r + h2)
        fm2 = _value(expr, r - h2)
        fp2h = _value(expr, r + h2 / 2)
        fm2h = _value(expr, r - h2 / 2)
    except fe.ExpressionError:
        return None
    mags = (abs(f0), abs(fp2), abs(fm2))
    if max(mags) > 50.0 or abs(jet.d1) > 1e4 or abs(jet.d2) > 1e4:
        return None
    d1_fd = (fp1 - fm1) / (2 * h1)
    d2_fd = (fp2 - 2 * f0 + fm2) / (h2 * h2)
    d2_fd_half = (fp2h - 2 * f0 + fm2h) / (h2 * h2 / 4)
    # the FD oracle must agree with its own refinement to be trusted
    if abs(d2_fd - d2_fd_half) > 0.2 * tol * (1.0 + abs(d2_fd)):
        return None
    d2_rich = (4 * d2_fd_half - d2_fd) / 3
    ok1 = abs(jet.d1 - d1_fd) <= tol * (1.0 + abs(jet.d1))
    ok2 = abs(jet.d2 - d2_rich) <= tol * (1.0 + abs(jet.d2))
    detail = (fe.to_source(expr), r, jet.d1, d1_fd, jet.d2, d2_rich)
    return ok1 and ok2, detail


def collect_fd_samples(n_samples: int, seed: int = 20240817,
                       max_tries: int = 60000):
    """Yield n_samples usable (ok, detail) comparisons, deterministically."""
    rng = random.Random(seed)
    collected = []
    tries = 0
    while len(collected) < n_samples and tries < max_tries:
        tries += 1
        expr = random_expr(rng, rng.randint(1, 4))
        r = rng.uniform(0.1, 5.0)
        sample = fd_check_sample(expr, r)
        if sample is not None and math.isfinite(sample[1][2]):
            collected.append(sample)
    if len(collected) < n_samples:
        raise RuntimeError(f"only {len(collected)} usable samples in {tries} tries")
    return collected
