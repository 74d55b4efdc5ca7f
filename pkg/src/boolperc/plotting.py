"""Self-contained SVG line plots of the harness outputs."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.4),
    "font.size": 9,
    "axes.linewidth": 0.6,
    "lines.linewidth": 1.0,
    "lines.markersize": 3,
    "legend.fontsize": 8,
    "legend.frameon": False,
    "svg.fonttype": "none",
    # fixed salt and no date stamp keep the files byte-reproducible
    "svg.hashsalt": "boolperc",
}


def line_plot(path, series, xlabel: str, ylabel: str, title: str = "", logy: bool = False) -> None:
    """Write ``series`` (dicts with ``x``, ``y``, optional ``err`` and ``label``) to an SVG file."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for s in series:
            if s.get("err") is not None:
                ax.errorbar(s["x"], s["y"], yerr=s["err"], marker="o", capsize=2, label=s.get("label"))
            else:
                ax.plot(s["x"], s["y"], marker=s.get("marker", "o"), linestyle=s.get("linestyle", "-"),
                        label=s.get("label"))
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if any(s.get("label") for s in series):
            ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
