"""Visualization module for gendisc.

Provides diagnostic plots of posterior marginals, training loss and
classifier accuracy.
"""

from gendisc.visualization.plots import (
    plot_accuracy_comparison,
    plot_loss_trace,
    plot_marginals,
    save_experiment_plots,
)

__all__ = [
    "plot_marginals",
    "plot_loss_trace",
    "plot_accuracy_comparison",
    "save_experiment_plots",
]
