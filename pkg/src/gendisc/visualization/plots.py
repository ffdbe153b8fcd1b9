"""Plotting functions for decoding and training diagnostics.

This module draws posterior-marginal tracks of a decoded sequence, the
per-epoch loss of trained feature heads, and the accuracy of the
generative and discriminative classifiers side by side.
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from pathlib import Path

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.figure import Figure

from gendisc.config import OutputConfig
from gendisc.io.paths import OutputPaths

logger = logging.getLogger(__name__)

FIGSIZE = (10, 6)


def _axes(ax: plt.Axes | None) -> tuple[Figure, plt.Axes]:
    if ax is None:
        return plt.subplots(figsize=FIGSIZE)
    return ax.get_figure(), ax


def plot_marginals(
    probs: np.ndarray,
    label_names: Sequence[str],
    gold: np.ndarray | None = None,
    title: str | None = None,
    ax: plt.Axes | None = None,
) -> tuple[Figure, plt.Axes]:
    """Plot p(x_t | y_{1:T}) of every label against position.

    Args:
        probs: Posterior marginals (T, N)
        label_names: Names of the N labels
        gold: Optional gold label indices (T,), drawn as markers at p = 1
        title: Plot title
        ax: Optional existing axes to plot on

    Returns:
        Tuple of (Figure, Axes)

    """
    fig, ax = _axes(ax)
    positions = np.arange(1, probs.shape[0] + 1)

    for k, name in enumerate(label_names):
        ax.plot(positions, probs[:, k], marker=".", linewidth=1.2, label=name)

    if gold is not None:
        colors = [line.get_color() for line in ax.get_lines()]
        for t, label in enumerate(np.asarray(gold)):
            ax.plot(t + 1, 1.02, marker="v", color=colors[int(label)], markersize=5)

    ax.set_ylim(-0.02, 1.06)
    ax.set_xlabel("Position t")
    ax.set_ylabel("p(x_t | y)")
    ax.legend(loc="lower right", fontsize="small")
    ax.set_title(title or f"Posterior Marginals (T={probs.shape[0]})")

    return fig, ax


def plot_loss_trace(
    loss_history: Mapping[str, Sequence[float]],
    title: str | None = None,
    ax: plt.Axes | None = None,
) -> tuple[Figure, plt.Axes]:
    """Plot mean cross-entropy per epoch for each trained head."""
    fig, ax = _axes(ax)

    for unit, losses in loss_history.items():
        if losses:
            ax.plot(np.arange(1, len(losses) + 1), losses, linewidth=1.5, label=unit)

    ax.set_xlabel("Epoch")
    ax.set_ylabel("Cross-entropy")
    if loss_history:
        ax.legend()
    ax.set_title(title or "Feature Head Training Loss")

    return fig, ax


def plot_accuracy_comparison(
    accuracies: Mapping[str, float],
    chance: float | None = None,
    title: str | None = None,
    ax: plt.Axes | None = None,
) -> tuple[Figure, plt.Axes]:
    """Bar chart of test accuracy per classifier.

    Args:
        accuracies: Classifier name to accuracy in [0, 1]
        chance: Optional chance level drawn as a dashed line
        title: Plot title
        ax: Optional existing axes to plot on

    Returns:
        Tuple of (Figure, Axes)

    """
    fig, ax = _axes(ax)
    names = list(accuracies)
    values = [100.0 * accuracies[n] for n in names]

    bars = ax.bar(names, values, color=plt.cm.viridis(np.linspace(0.2, 0.8, len(names))))
    for bar, value in zip(bars, values):
        ax.annotate(
            f"{value:.1f}",
            (bar.get_x() + bar.get_width() / 2, value),
            ha="center",
            va="bottom",
        )
    if chance is not None:
        ax.axhline(100.0 * chance, linestyle="--", color="gray", alpha=0.7, label="Chance")
        ax.legend()

    ax.set_ylim(0, 105)
    ax.set_ylabel("Accuracy (%)")
    ax.set_title(title or "Generative vs Discriminative Accuracy")

    return fig, ax


def save_experiment_plots(
    paths: OutputPaths | str | Path,
    base_name: str,
    accuracies: Mapping[str, float],
    loss_history: Mapping[str, Sequence[float]],
    chance: float | None = None,
    marginals: tuple[np.ndarray, Sequence[str], np.ndarray | None] | None = None,
    config: OutputConfig | None = None,
) -> dict[str, Path]:
    """Generate the experiment plots and save them to files.

    Args:
        paths: OutputPaths or a plot directory
        base_name: Base name for output files
        accuracies: Classifier name to test accuracy
        loss_history: Per-head loss traces
        chance: Chance accuracy
        marginals: Optional (probs, label names, gold) of one test sequence
        config: OutputConfig giving dpi and format

    Returns:
        Dictionary mapping plot names to saved file paths

    """
    if config is None:
        config = OutputConfig()

    if isinstance(paths, OutputPaths):
        plot_dir = paths.plots
    else:
        plot_dir = Path(paths)
    plot_dir.mkdir(parents=True, exist_ok=True)

    figures: dict[str, Figure] = {}
    figures["accuracy"], _ = plot_accuracy_comparison(
        accuracies, chance=chance, title=f"Test Accuracy ({base_name})"
    )
    figures["loss"], _ = plot_loss_trace(loss_history, title=f"Training Loss ({base_name})")
    if marginals is not None:
        probs, names, gold = marginals
        figures["marginals"], _ = plot_marginals(
            probs, names, gold, title=f"Posterior Marginals ({base_name})"
        )

    saved_plots = {}
    for name, fig in figures.items():
        path = plot_dir / f"{base_name}_{name}.{config.plot_format}"
        fig.savefig(path, dpi=config.plot_dpi, bbox_inches="tight")
        plt.close(fig)
        saved_plots[name] = path
        logger.debug(f"Saved {path}")

    logger.info(f"Saved {len(saved_plots)} plots to {plot_dir}")

    return saved_plots
