"""Matplotlib figure rendering for the report bundle.

Figures are written next to the delimited output, one PNG per topic:
geometry series, radial solution, and criterion evidence traces.  All
rendering is deterministic (fixed size, no timestamps in metadata) so
repeated runs produce stable artifacts.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["save_geometry_figure", "save_solution_figure",
           "save_criteria_figure"]

_DPI = 140
_META = {"Software": None}


def _finish(fig, path: str) -> None:
    fig.savefig(path, dpi=_DPI, metadata=_META)
    plt.close(fig)


def save_geometry_figure(series: dict, path: str) -> None:
    r = series["r"]
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5))
    axes[0, 0].plot(r, series["h"], color="tab:blue")
    axes[0, 0].set_ylabel("h(r)")
    axes[0, 1].plot(r, series["V"], color="tab:orange", label="V(r)")
    axes[0, 1].plot(r, series["ball_volume"], color="tab:green",
                    label="vol B(r)")
    if max(series["V"]) > 1e4 * max(min(series["V"]), 1e-300):
        axes[0, 1].set_yscale("log")
    axes[0, 1].legend(fontsize=8)
    axes[1, 0].plot(r, series["laplacian_r"], color="tab:red")
    axes[1, 0].set_ylabel("laplacian of r")
    axes[1, 0].set_xlabel("r")
    axes[1, 1].plot(r, series["scalar_curvature"], color="tab:purple")
    axes[1, 1].set_ylabel("scalar curvature")
    axes[1, 1].set_xlabel("r")
    fig.suptitle("model geometry")
    fig.tight_layout()
    _finish(fig, path)


def save_solution_figure(series: dict, path: str) -> None:
    r = series["r"]
    fig, axes = plt.subplots(3, 1, figsize=(8, 8), sharex=True)
    axes[0].plot(r, series["u"], color="tab:blue")
    axes[0].set_ylabel("u(r)")
    umin, umax = min(series["u"]), max(series["u"])
    if umin > 0 and umax > 1e3 * umin:
        axes[0].set_yscale("log")
    axes[1].plot(r, series["u_prime"], color="tab:orange")
    axes[1].set_ylabel("u'(r)")
    axes[2].plot(r, series["residual"], color="tab:red")
    axes[2].set_ylabel("residual")
    axes[2].set_xlabel("r")
    fig.suptitle("radial solution")
    fig.tight_layout()
    _finish(fig, path)


def save_criteria_figure(verdicts: list[dict], path: str) -> None:
    """Partial-integral and limit traces backing each verdict."""
    panels = []
    for v in verdicts:
        ev = v.get("evidence", {})
        for name, cls in ev.get("classifications", {}).items():
            if cls.get("trace"):
                panels.append((f"{v['criterion']}/{name}\n{cls['kind']}",
                               cls["trace"], "partial integral"))
        for name, lim in ev.get("limits", {}).items():
            if lim.get("trace"):
                panels.append((f"{v['criterion']}/{name}\n{lim['kind']}",
                               lim["trace"], "sample"))
    if not panels:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.text(0.5, 0.5, "no traces", ha="center", va="center")
        ax.set_axis_off()
        _finish(fig, path)
        return
    cols = 2
    rows = (len(panels) + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(10, 2.6 * rows),
                             squeeze=False)
    for i, (title, trace, ylabel) in enumerate(panels):
        ax = axes[i // cols][i % cols]
        rr = [p[0] for p in trace]
        vv = [p[1] for p in trace]
        ax.plot(rr, vv, marker="o", ms=3)
        ax.set_xscale("log")
        ax.set_title(title, fontsize=8)
        ax.set_ylabel(ylabel, fontsize=8)
        ax.tick_params(labelsize=7)
    for j in range(len(panels), rows * cols):
        axes[j // cols][j % cols].set_axis_off()
    fig.suptitle("criterion evidence traces")
    fig.tight_layout()
    _finish(fig, path)
