"""Figure defaults for the convergence charts."""

from contextlib import contextmanager

import numpy as np

golden_mean = (np.sqrt(5) - 1.0) / 2.0
fig_width = 5.0
colors = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02"]


def params():
    import matplotlib

    return {
        "axes.prop_cycle": matplotlib.cycler(color=colors),
        "axes.labelsize": 10,
        "font.size": 9,
        "legend.fontsize": 8,
        "xtick.labelsize": 8,
        "ytick.labelsize": 8,
        "figure.figsize": [fig_width, fig_width * golden_mean],
        "lines.markersize": 4,
        "lines.linewidth": 1,
        # keep text as text so the legend is searchable, and ids stable
        "svg.fonttype": "none",
        "svg.hashsalt": "fcfv",
    }


@contextmanager
def style():
    import matplotlib

    with matplotlib.rc_context(params()):
        yield
