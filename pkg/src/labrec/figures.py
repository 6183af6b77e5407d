"""Report figures rendered straight to image files.

Uses the object-oriented matplotlib API with an Agg canvas so rendering
works headless and never touches pyplot's global figure registry. The
default Software tag is stripped from PNG metadata so re-rendering the
same report yields the same bytes regardless of toolchain patch level.
"""

from __future__ import annotations

from pathlib import Path

from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .evaluation import EvalReport, EvalResult

_DPI = 120
_MARKERS = ("o", "s", "^", "d", "v", "P", "X")
_PNG_METADATA = {"Software": None}


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig = Figure(figsize=(7.0, 4.5), dpi=_DPI)
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(111)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, linewidth=0.4, alpha=0.5)
    return fig, ax


def render_grid_figure(report: EvalReport, path: str | Path) -> Path:
    """One line per distance metric: mean CV score against neighbourhood size."""
    fig, ax = _new_axes(
        title=f"Cross-validated MAP@{report.scoring_k} by neighbourhood size",
        xlabel="number of nearest neighbours (s)",
        ylabel=f"mean CV MAP@{report.scoring_k} (%)",
    )
    names = sorted({name for name, _ in report.cv_scores})
    for pos, name in enumerate(names):
        ys = [report.cv_scores[(name, s)] * 100 for s in report.s_values]
        ax.plot(
            report.s_values,
            ys,
            marker=_MARKERS[pos % len(_MARKERS)],
            markersize=4,
            linewidth=1.2,
            label=name,
        )
    ax.set_xticks(list(report.s_values))
    ax.legend(loc="best", fontsize=8)
    target = Path(path)
    fig.savefig(target, format="png", metadata=_PNG_METADATA)
    return target


def render_metrics_figure(
    by_k: dict[int, EvalResult],
    path: str | Path,
    secondary: dict[int, EvalResult] | None = None,
) -> Path:
    """MAP and MAR against k; the secondary protocol, if given, is dashed."""
    fig, ax = _new_axes(
        title="Test-set ranking quality by recommendation depth",
        xlabel="recommendation list length (k)",
        ylabel="score (%)",
    )
    ks = sorted(by_k)
    ax.plot(ks, [by_k[k].map_at_k * 100 for k in ks], marker="o", label="MAP")
    ax.plot(ks, [by_k[k].mar_at_k * 100 for k in ks], marker="s", label="MAR")
    if secondary:
        sks = sorted(secondary)
        ax.plot(
            sks,
            [secondary[k].map_at_k * 100 for k in sks],
            marker="o",
            linestyle="--",
            alpha=0.6,
            label="MAP (leave-out)",
        )
        ax.plot(
            sks,
            [secondary[k].mar_at_k * 100 for k in sks],
            marker="s",
            linestyle="--",
            alpha=0.6,
            label="MAR (leave-out)",
        )
    ax.set_xticks(ks)
    ax.set_ylim(0, 105)
    ax.legend(loc="best", fontsize=8)
    target = Path(path)
    fig.savefig(target, format="png", metadata=_PNG_METADATA)
    return target
