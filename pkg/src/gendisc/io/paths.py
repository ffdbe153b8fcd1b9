"""Output path management.

This module lays out the output directory of an experiment run.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from gendisc.exceptions import GendiscError

logger = logging.getLogger(__name__)


@dataclass
class OutputPaths:
    """Container for output file paths.

    Attributes:
        root: Root output directory
        plots: Subdirectory for plots
        report: Path for the JSON experiment report
        training_log: Path for the JSON-lines loss trace
        generative_model: Path for the fitted generative model
        discriminative_model: Path for the trained feature-head units
        base_name: Prefix shared by every file of the run

    """

    root: Path
    plots: Path
    report: Path
    training_log: Path
    generative_model: Path
    discriminative_model: Path
    base_name: str

    def create_directories(self) -> None:
        """Create all necessary directories."""
        self.root.mkdir(parents=True, exist_ok=True)
        self.plots.mkdir(parents=True, exist_ok=True)
        logger.debug(f"Created output directories: {self.root}")

    def exists(self) -> bool:
        """True if a report from an earlier run is present."""
        return self.report.exists()

    def get_plot_path(self, plot_name: str, extension: str = "png") -> Path:
        """Get path for a specific plot."""
        return self.plots / f"{self.base_name}_{plot_name}.{extension}"

    def __repr__(self) -> str:
        """Return string representation of OutputPaths."""
        return f"OutputPaths(root={self.root}, base_name='{self.base_name}')"


def build_output_paths(
    base_name: str,
    output_dir: str | Path | None = None,
    create: bool = True,
    overwrite: bool = True,
) -> OutputPaths:
    """Build output paths for one experiment run.

    Default structure:
        experiments/<base_name>/
            <base_name>_report.json
            <base_name>_training.jsonl
            <base_name>_generative.json
            <base_name>_discriminative.json
            plots/
                <base_name>_*.png

    Args:
        base_name: Run name, e.g. "nb_d8_seed0"
        output_dir: Optional custom output directory
        create: Whether to create directories immediately
        overwrite: If False, refuse a directory that already holds a report

    Returns:
        OutputPaths with all file paths configured

    Raises:
        GendiscError: ``overwrite`` is False and a report already exists

    Example:
        >>> paths = build_output_paths("nb_d8_seed0", create=False)
        >>> print(paths.report)
        experiments/nb_d8_seed0/nb_d8_seed0_report.json

    """
    root = Path(output_dir) if output_dir is not None else Path("experiments") / base_name
    plots = root / "plots"

    paths = OutputPaths(
        root=root,
        plots=plots,
        report=root / f"{base_name}_report.json",
        training_log=root / f"{base_name}_training.jsonl",
        generative_model=root / f"{base_name}_generative.json",
        discriminative_model=root / f"{base_name}_discriminative.json",
        base_name=base_name,
    )

    if not overwrite and paths.exists():
        raise GendiscError(f"{paths.report} exists (set output.overwrite to replace it)")
    if create:
        paths.create_directories()

    logger.debug(f"Built output paths for '{base_name}'")

    return paths
