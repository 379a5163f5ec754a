"""Figure rendering for sweep reports.

The sweep command writes a PNG next to its CSV so a run leaves both the
raw numbers and a quick look at the bands.  Everything draws through the
Agg backend; no display is required.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_sweep_figure(param_name, values, columns, dim, outputs, path, title=""):
    """Render folded exponents (and friends) against the swept parameter.

    ``columns`` maps column name to a float array aligned with ``values``.
    """
    panels = []
    if "f0" in outputs:
        panels.append("f0_im")
        panels.append("f0_re")
    if "folding" in outputs:
        panels.append("folding")
    if "lambda2" in outputs:
        panels.append("lambda2")
    if "ep" in outputs:
        panels.append("ep")
    if not panels:
        panels = ["folding"]
    fig, axes = plt.subplots(
        len(panels), 1, figsize=(8.0, 2.6 * len(panels)), sharex=True, squeeze=False
    )
    axes = axes[:, 0]
    values = np.asarray(values, dtype=float)
    for ax, panel in zip(axes, panels):
        if panel == "f0_im":
            for i in range(dim):
                ax.plot(values, columns[f"f0_{i + 1}_im"], ".", ms=1.5, label=f"Im f0[{i + 1}]")
            ax.set_ylabel("Im f0")
        elif panel == "f0_re":
            for i in range(dim):
                ax.plot(values, columns[f"f0_{i + 1}_re"], ".", ms=1.5, label=f"Re f0[{i + 1}]")
            ax.set_ylabel("Re f0")
        elif panel == "folding":
            for i in range(dim):
                ax.plot(values, columns[f"n_{i + 1}"], ".", ms=1.5, label=f"n[{i + 1}]")
            ax.set_ylabel("folding number")
        elif panel == "lambda2":
            for i in range(dim):
                key = f"lam2_{i + 1}_im"
                if key in columns:
                    ax.plot(values, columns[key], ".", ms=1.5, label=f"Im lam2[{i + 1}]")
            ax.set_ylabel("Im lambda2")
        elif panel == "ep":
            ax.plot(values, columns["ep"], ".", ms=2.0)
            ax.set_ylabel("EP verdict")
            ax.set_ylim(-0.1, 1.1)
        ax.grid(True, lw=0.3, alpha=0.6)
        if dim <= 4 and panel != "ep":
            ax.legend(loc="best", fontsize=7, ncol=dim)
    axes[-1].set_xlabel(param_name)
    if title:
        axes[0].set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
