"""
Index plots of PRESS components.

Two panels share the observation index on the x axis: the PRESS
components on top and the combined-residual PRESS components below.
Flagged observations are annotated with their 1-based index. The SVG is
byte-stable for fixed input: matplotlib's hash salt is fixed and the
date metadata is dropped.
"""

import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

_SVG_SALT = "betapress"


def _panel(ax, components: np.ndarray, flagged: Sequence[int], ylabel: str) -> None:
    index = np.arange(1, components.size + 1)
    ax.scatter(index, components, s=14, color="black")
    for t in flagged:
        ax.annotate(
            str(t),
            (t, components[t - 1]),
            textcoords="offset points",
            xytext=(4, 4),
            fontsize=8,
        )
    ax.set_ylabel(ylabel)
    ax.set_xlim(0, components.size + 1)


def press_index_plot(
    press_components,
    press_bg_components,
    flagged_press: Sequence[int],
    flagged_press_bg: Sequence[int],
    out,
    title: str = "",
) -> Path:
    """
    Write the two-panel index plot as SVG.

    Args:
        press_components: Per-observation PRESS components
        press_bg_components: Per-observation combined-residual components
        flagged_press: 1-based indices to annotate in the top panel
        flagged_press_bg: 1-based indices to annotate in the bottom panel
        out: Output path (.svg)
        title: Optional figure title

    Returns:
        The written path
    """
    press_components = np.asarray(press_components, dtype=float)
    press_bg_components = np.asarray(press_bg_components, dtype=float)
    out = Path(out)

    with plt.rc_context({"svg.hashsalt": _SVG_SALT, "svg.fonttype": "none"}):
        fig, (top, bottom) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
        try:
            _panel(top, press_components, flagged_press, "PRESS component")
            _panel(bottom, press_bg_components, flagged_press_bg, "PRESS_bg component")
            bottom.set_xlabel("observation index")
            if title:
                fig.suptitle(title)
            fig.tight_layout()
            fig.savefig(out, format="svg", metadata={"Date": None})
        finally:
            plt.close(fig)

    logger.info(f"Wrote PRESS index plot to {out}")
    return out
