"""Command line interface.

    curvlab <geometry|check|solve|verify|report> --config <path>
            [--out <path>] [--format csv|json] [--seed N]

geometry  emit the geometry series (r, h, V, laplacian, curvature, ball volume)
check     run every criterion check and emit the verdict report
solve     integrate the radial curvature equation and emit the solution
verify    solve, then check the averaged lower bound, conformal length
          and infimum trend
report    run everything into a directory, with figures rendered next
          to the delimited output

Exit codes: 0 success, 1 configuration or evaluation error, 2 internal
failure.  Verdict outcomes never affect the exit code.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import __version__
from .config import (Config, ConfigError, ValidationError, build_curvature,
                     build_manifold, load_config)
from .criteria import (DeltaOutOfRange, infimum_zero_integral_check,
                       infimum_zero_limit_check, nonexistence_growth_check,
                       nonexistence_integral_check, volume_growth_check)
from .funcexpr import ExpressionError
from .manifold import (GeometryError, ModelManifold, RadialFn, ball_volume,
                       laplacian_r, scalar_curvature, volume_sphere)
from .quadrature import CumulativeIntegral
from .radial_ode import (conformal_length, inf_estimate, residual,
                         solve_radial, verify_supersolution_bound)

__all__ = ["main"]

_USER_ERRORS = (ConfigError, ExpressionError, GeometryError, DeltaOutOfRange,
                ValueError)


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------

def geometry_series(M: ModelManifold, config: Config) -> dict:
    pol = config.policies
    grid = [pol.r_max * (i + 1) / pol.n_grid for i in range(pol.n_grid)]
    ball = CumulativeIntegral(lambda t: volume_sphere(M, t), 0.0,
                              rel_tol=pol.quad_rel_tol)
    series = {"r": [], "h": [], "V": [], "laplacian_r": [],
              "scalar_curvature": [], "ball_volume": []}
    for r in grid:
        series["r"].append(r)
        series["h"].append(M.warp.value(r))
        series["V"].append(volume_sphere(M, r))
        series["laplacian_r"].append(laplacian_r(M, r))
        series["scalar_curvature"].append(scalar_curvature(M, r))
        series["ball_volume"].append(ball.value(r))
    return series


def run_check(M: ModelManifold, K: RadialFn, config: Config) -> dict:
    pol = config.policies
    scan = pol.scan_policy()
    classify = pol.classify_policy()
    limits = pol.limit_policy()
    verdicts = [
        infimum_zero_integral_check(M, K, scan, classify),
        infimum_zero_limit_check(M, K, scan, limits),
        nonexistence_integral_check(M, K, scan, classify),
        nonexistence_growth_check(M, K, pol.delta, scan, limits),
    ]
    growth = volume_growth_check(M, pol.delta, r_max=pol.scan_r_max)
    return {"verdicts": [v.to_dict() for v in verdicts],
            "volume_growth": growth.to_dict()}


def run_solve(M: ModelManifold, K: RadialFn, config: Config) -> tuple[dict, dict]:
    pol = config.policies
    sol = solve_radial(M, K, u0=pol.u0, r_max=pol.solve_r_max,
                       tol=pol.solve_tol)
    res = residual(M, K, sol, sol.grid, tol_res=pol.residual_tol)
    series = {"r": [float(x) for x in sol.grid],
              "u": [float(x) for x in sol.u],
              "u_prime": [float(x) for x in sol.u_prime],
              "residual": list(res.values)}
    summary = {"status": sol.status, "stop_r": sol.stop_r,
               "u0": sol.u0, "tol": sol.tol, "n_steps": sol.n_steps,
               "n_rejected": sol.n_rejected,
               "error_budget": sol.error_budget,
               "fingerprint": sol.fingerprint,
               "r_end": float(sol.grid[-1]), "u_end": float(sol.u[-1]),
               "residual_max_abs": res.max_abs,
               "residual_classification": res.classification}
    return series, summary


def run_verify(M: ModelManifold, K: RadialFn, config: Config) -> tuple[dict, dict]:
    pol = config.policies
    sol = solve_radial(M, K, u0=pol.u0, r_max=pol.solve_r_max,
                       tol=pol.solve_tol)
    res = residual(M, K, sol, sol.grid, tol_res=pol.residual_tol)
    bound = verify_supersolution_bound(M, K, sol, slack=pol.bound_slack)
    length = conformal_length(M, sol, a=pol.length_a,
                              policy=pol.classify_policy())
    inf = inf_estimate(sol)
    payload = {
        "solution": {"status": sol.status, "r_end": float(sol.grid[-1]),
                     "u_end": float(sol.u[-1]), "n_steps": sol.n_steps,
                     "fingerprint": sol.fingerprint},
        "residual": {"max_abs": res.max_abs,
                     "classification": res.classification},
        "bound": {"margin_min": bound.margin_min, "argmin_r": bound.argmin_r,
                  "passed": bound.passed, "slack": bound.slack},
        "conformal_length": {"length": length.length, "tail": length.tail,
                             "finite_part": length.finite_part,
                             "tail_estimate": length.tail_estimate,
                             "fitted_exponent": length.fitted_exponent,
                             "rationale": length.rationale},
        "inf_estimate": {"inf_on_grid": inf.inf_on_grid, "trend": inf.trend},
    }
    trace = {"r": [t[0] for t in bound.trace],
             "v": [t[1] for t in bound.trace],
             "bound": [t[2] for t in bound.trace],
             "margin": [t[1] - t[2] for t in bound.trace]}
    return trace, payload


# ---------------------------------------------------------------------------
# Emission
# ---------------------------------------------------------------------------

def _meta(config: Config, seed: int, warnings: list[str]) -> dict:
    cfg = config.to_dict()
    cfg.pop("output", None)  # paths must not leak into reproducible output
    return {"tool": "curvlab", "version": __version__, "seed": seed,
            "config": cfg, "warnings": warnings}


def _json_text(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _csv_text(columns: list[str], rows) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" if isinstance(v, float) else str(v)
                              for v in row))
    return "\n".join(lines) + "\n"


def _series_csv(series: dict, columns: list[str]) -> str:
    rows = zip(*(series[c] for c in columns))
    return _csv_text(columns, rows)


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


_GEOMETRY_COLUMNS = ["r", "h", "V", "laplacian_r", "scalar_curvature",
                     "ball_volume"]
_SOLVE_COLUMNS = ["r", "u", "u_prime", "residual"]
_VERIFY_COLUMNS = ["r", "v", "bound", "margin"]


def _check_csv(check: dict) -> str:
    rows = []
    for v in check["verdicts"]:
        rows.append([v["criterion"], v["kind"], v["clause"] or "",
                     v["reason"].replace(",", ";")])
    g = check["volume_growth"]
    rows.append(["volume_growth", "pass" if g["passed"] else "fail",
                 f"delta={g['delta']:g}",
                 f"growth_factor={g['growth_factor']:.6g}"])
    return _csv_text(["criterion", "kind", "clause", "detail"], rows)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_geometry(M, K, config, out, fmt, seed, warnings) -> None:
    series = geometry_series(M, config)
    if fmt == "csv":
        _write(_series_csv(series, _GEOMETRY_COLUMNS), out)
    else:
        _write(_json_text({"meta": _meta(config, seed, warnings),
                           "series": series}), out)


def _cmd_check(M, K, config, out, fmt, seed, warnings) -> None:
    check = run_check(M, K, config)
    if fmt == "csv":
        _write(_check_csv(check), out)
    else:
        payload = {"meta": _meta(config, seed, warnings)}
        payload.update(check)
        _write(_json_text(payload), out)


def _cmd_solve(M, K, config, out, fmt, seed, warnings) -> None:
    series, summary = run_solve(M, K, config)
    if fmt == "csv":
        _write(_series_csv(series, _SOLVE_COLUMNS), out)
    else:
        _write(_json_text({"meta": _meta(config, seed, warnings),
                           "solution": summary, "series": series}), out)


def _cmd_verify(M, K, config, out, fmt, seed, warnings) -> None:
    trace, payload = run_verify(M, K, config)
    if fmt == "csv":
        _write(_series_csv(trace, _VERIFY_COLUMNS), out)
    else:
        _write(_json_text({"meta": _meta(config, seed, warnings),
                           "verify": payload}), out)


def _cmd_report(M, K, config, out, fmt, seed, warnings) -> None:
    from . import figures

    outdir = out or "curvlab_report"
    os.makedirs(outdir, exist_ok=True)
    series = geometry_series(M, config)
    solve_series, solve_summary = run_solve(M, K, config)
    verify_trace, verify_payload = run_verify(M, K, config)
    check = run_check(M, K, config)

    _write(_series_csv(series, _GEOMETRY_COLUMNS),
           os.path.join(outdir, "geometry.csv"))
    _write(_series_csv(solve_series, _SOLVE_COLUMNS),
           os.path.join(outdir, "solution.csv"))
    _write(_series_csv(verify_trace, _VERIFY_COLUMNS),
           os.path.join(outdir, "verify.csv"))

    report = {"meta": _meta(config, seed, warnings),
              "verdicts": check["verdicts"],
              "volume_growth": check["volume_growth"],
              "solution": solve_summary,
              "verify": verify_payload,
              "files": {"geometry": "geometry.csv",
                        "solution": "solution.csv",
                        "verify": "verify.csv",
                        "figures": ["geometry.png", "solution.png",
                                    "criteria.png"]}}
    _write(_json_text(report), os.path.join(outdir, "report.json"))

    figures.save_geometry_figure(series, os.path.join(outdir, "geometry.png"))
    figures.save_solution_figure(solve_series,
                                 os.path.join(outdir, "solution.png"))
    figures.save_criteria_figure(check["verdicts"],
                                 os.path.join(outdir, "criteria.png"))


_COMMANDS = {
    "geometry": _cmd_geometry,
    "check": _cmd_check,
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "report": _cmd_report,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvlab",
        description="geometry and curvature-equation criteria for "
                    "rotationally symmetric model manifolds")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--seed", type=int, default=None)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config.policies.seed = args.seed
        seed = config.policies.seed
        fmt = args.format or config.output.format
        out = args.out if args.out is not None else config.output.path
        M, warnings = build_manifold(config)
        K = build_curvature(config)
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)
        _COMMANDS[args.command](M, K, config, out, fmt, seed, warnings)
        return 0
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - internal failures
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
