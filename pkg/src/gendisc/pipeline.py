"""High-level workflows for gendisc.

This module provides the verification harness that checks, on random
models, that the discriminative construction reproduces the generative
classifier, and the featurized experiment that compares a quantized
generative classifier with a feature-head discriminative one.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Callable
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.special import softmax

from gendisc.config import RunConfig, TaskConfig, VerifyConfig
from gendisc.core.classifiers import discriminative_class_scores
from gendisc.core.estimation import fit_discriminative_tables, fit_generative, train_feature_head
from gendisc.core.inference import classify, discriminative_log_prob, posterior_marginals
from gendisc.core.inversion import bayes_invert
from gendisc.core.joint import joint_log_prob, kappa_log
from gendisc.core.metrics import MetricsReport, compute_metrics
from gendisc.core.models import DiscriminativeUnits, GenerativeModel, unit_specs
from gendisc.core.oracle import (
    attains_map,
    brute_force_map,
    brute_force_marginals,
    brute_force_posterior,
)
from gendisc.core.sampling import (
    FeatureDataset,
    SplitMix64,
    make_feature_task,
    make_tagging_task,
    random_model,
    sample,
)
from gendisc.core.sequences import hmc_efb_mpm, hmc_fb_mpm
from gendisc.core.types import LabeledSequence, ModelKind
from gendisc.io.paths import OutputPaths, build_output_paths
from gendisc.io.serialization import save_model, write_training_log
from gendisc.visualization.plots import save_experiment_plots

logger = logging.getLogger(__name__)

CHECKS = ("argmax", "posterior", "kappa", "efb")


def setup_logging(
    level: str = "INFO",
    log_file: str | Path | None = None,
) -> None:
    """Configure logging for the package.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR)
        log_file: Optional file to write logs to

    """
    log_level = getattr(logging, level.upper(), logging.INFO)

    handlers: list[logging.Handler] = [logging.StreamHandler()]

    if log_file is not None:
        handlers.append(logging.FileHandler(log_file))

    logging.basicConfig(
        level=log_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
    )

    # Set level for our package
    logging.getLogger("gendisc").setLevel(log_level)


# ----------------------------------------------------------------------------
# Verification
# ----------------------------------------------------------------------------


@dataclass
class CheckFailure:
    """One failed check, with the seed that replays its trial."""

    kind: str
    trial: int
    seed: int
    check: str
    detail: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "trial": self.trial,
            "seed": self.seed,
            "check": self.check,
            "detail": self.detail,
        }


@dataclass
class KindReport:
    """Pass counts of every check for one model kind.

    ``passed[check]`` is None for checks that do not apply to the kind.
    """

    kind: str
    trials: int = 0
    passed: dict[str, int | None] = field(default_factory=dict)
    failures: list[CheckFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict[str, Any]:
        return {
            "trials": self.trials,
            "passed": dict(self.passed),
            "failures": [f.to_dict() for f in self.failures],
        }


@dataclass
class VerificationReport:
    """Outcome of :func:`run_verification`."""

    config: VerifyConfig
    kinds: dict[str, KindReport]

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.kinds.values())

    @property
    def failures(self) -> list[CheckFailure]:
        return [f for r in self.kinds.values() for f in r.failures]

    @property
    def first_failing_seed(self) -> int | None:
        failures = self.failures
        return failures[0].seed if failures else None

    def to_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "seed": self.config.seed,
            "trials": self.config.trials,
            "sabotage": self.config.sabotage,
            "kinds": {k: r.to_dict() for k, r in self.kinds.items()},
            "failing_seed": self.first_failing_seed,
        }

    def summary(self) -> str:
        """Per-kind pass-count table."""
        header = f"{'kind':<10}" + "".join(f"{c:>11}" for c in CHECKS)
        lines = [header, "-" * len(header)]
        for name, report in self.kinds.items():
            cells = []
            for check in CHECKS:
                count = report.passed.get(check)
                cells.append(f"{'-':>11}" if count is None else f"{count:>6}/{report.trials:<4}")
            lines.append(f"{name:<10}" + "".join(cells))
        verdict = "PASS" if self.ok else f"FAIL (replay with --replay {self.first_failing_seed})"
        lines.append(verdict)
        return "\n".join(lines)


def trial_seed(seed: int, kind_index: int, trial: int) -> int:
    """Seed of one verification trial, derived from the run seed."""
    return SplitMix64(seed).spawn(kind_index).spawn(trial).seed


def sabotage_units(units: DiscriminativeUnits) -> DiscriminativeUnits:
    """Reverse the label axis of every table-valued posterior unit."""
    flipped = {
        spec.name: np.array(units.table(spec.name)[..., ::-1])
        for spec in unit_specs(units.kind)
        if spec.name in units.tables
    }
    return units.with_tables(**flipped)


def _max_abs(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def _run_checks(
    model: GenerativeModel, units: DiscriminativeUnits, seq: LabeledSequence, tol: float
) -> dict[str, str | None]:
    """Run every applicable check; values are None on pass, a message on failure."""
    kind = model.kind
    y = seq.y
    results: dict[str, str | None] = {}

    # Exact MAP ties pass when the decoded path reaches the enumerated maximum.
    oracle = brute_force_map(model, y)
    gen = classify(model, y, "generative", "map").labels
    dis = classify(units, y, "discriminative", "map").labels
    if attains_map(model, y, gen, oracle, tol) and attains_map(model, y, dis, oracle, tol):
        results["argmax"] = None
    else:
        results["argmax"] = (
            f"generative {gen.tolist()}, discriminative {dis.tolist()}, "
            f"oracle {oracle.labels.tolist()}"
        )

    if kind.is_sequence:
        truth = brute_force_marginals(model, y).probs
        dis_probs = posterior_marginals(units, y, "discriminative").probs
        gen_probs = posterior_marginals(model, y, "generative").probs
        err = max(_max_abs(dis_probs, truth), _max_abs(gen_probs, truth))
        mpm = classify(units, y, "discriminative", "mpm").labels
        if err > tol:
            results["posterior"] = f"max |marginal - oracle| = {err:.3g}"
        elif np.any(truth[np.arange(mpm.size), mpm] < truth.max(axis=1) - tol):
            results["posterior"] = f"MPM {mpm.tolist()} differs from oracle"
        else:
            results["posterior"] = None
    else:
        truth = brute_force_posterior(model, y)
        probs = softmax(discriminative_class_scores(units, y))
        err = _max_abs(probs, truth)
        results["posterior"] = f"max |posterior - oracle| = {err:.3g}" if err > tol else None

    kappa = kappa_log(model, y)
    lhs = kappa.log_kappa + joint_log_prob(model, seq)
    rhs = discriminative_log_prob(units, seq)
    if kappa.zero_probability or abs(lhs - rhs) > tol:
        results["kappa"] = f"log kappa + log joint = {lhs:.12g}, ratio form = {rhs:.12g}"
    else:
        results["kappa"] = None

    if kind is ModelKind.HMC:
        fb = hmc_fb_mpm(model, y)[0].probs
        efb = hmc_efb_mpm(units, y)[0].probs
        err = _max_abs(fb, efb)
        results["efb"] = f"max |EFB - FB| = {err:.3g}" if err > tol else None
    return results


def verify_trial(
    kind: ModelKind | str, seed: int, config: VerifyConfig | None = None
) -> dict[str, str | None]:
    """Run one randomized trial of ``kind`` drawn from ``seed``.

    Returns:
        Check name to None (pass) or a failure message; an exception raised
        during the trial fails every check with its message

    """
    config = config or VerifyConfig()
    kind = ModelKind.parse(kind)
    rng = SplitMix64(seed)
    n_labels = int(rng.integers(2, config.max_labels + 1, 1)[0])
    n_symbols = int(rng.integers(2, config.max_symbols + 1, 1)[0])
    length = int(rng.integers(1, config.max_length + 1, 1)[0])
    try:
        model = random_model(kind, n_labels, n_symbols, rng)
        seq = sample(model, length, rng)
        units = bayes_invert(model, horizon=length)
        if config.sabotage:
            units = sabotage_units(units)
        return _run_checks(model, units, seq, config.tolerance)
    except Exception as e:
        logger.debug(f"trial {kind.value} seed={seed} raised {e!r}")
        message = f"{type(e).__name__}: {e}"
        checks = CHECKS if kind is ModelKind.HMC else CHECKS[:3]
        return {c: message for c in checks}


def run_verification(
    config: VerifyConfig | None = None,
    progress: Callable[[str, int], None] | None = None,
) -> VerificationReport:
    """Check construction equivalence on random strictly-positive models.

    For every selected kind, each trial draws N, M and T within the
    configured bounds, a random model and a sampled sequence, inverts the
    model, and checks that:

    - argmax: generative and discriminative MAP labels reach the brute-force
      maximum (exact ties may pick different optimal paths)
    - posterior: posteriors of both constructions match enumeration
    - kappa: log kappa(y) + log p(x, y) equals the discriminative log objective
    - efb: entropic and classic forward-backward marginals agree (HMC only)

    Args:
        config: VerifyConfig (created with defaults if None)
        progress: Optional callback receiving (kind, trials done)

    Returns:
        VerificationReport with per-kind pass counts and failing seeds

    Example:
        >>> report = run_verification(VerifyConfig(trials=5, seed=42))
        >>> report.ok
        True

    """
    if config is None:
        config = VerifyConfig()

    logger.info(
        f"Verifying {len(config.kinds)} kinds x {config.trials} trials (seed={config.seed})"
    )
    kinds: dict[str, KindReport] = {}
    for name in config.kinds:
        kind = ModelKind.parse(name)
        kind_index = list(ModelKind).index(kind)
        report = KindReport(kind=kind.value)
        report.passed = {c: (0 if c != "efb" or kind is ModelKind.HMC else None) for c in CHECKS}
        for trial in range(config.trials):
            seed = trial_seed(config.seed, kind_index, trial)
            results = verify_trial(kind, seed, config)
            report.trials += 1
            for check, message in results.items():
                if message is None:
                    report.passed[check] = (report.passed[check] or 0) + 1
                else:
                    report.failures.append(CheckFailure(kind.value, trial, seed, check, message))
                    logger.warning(f"{kind.value} trial {trial} (seed {seed}) {check}: {message}")
            if progress is not None:
                progress(kind.value, trial + 1)
        kinds[kind.value] = report
        logger.info(f"{kind.value}: {report.trials} trials, {len(report.failures)} failed checks")

    return VerificationReport(config=config, kinds=kinds)


# ----------------------------------------------------------------------------
# Featurized experiment
# ----------------------------------------------------------------------------


@dataclass
class ExperimentResult:
    """Accuracies of the classifiers compared on one synthetic task.

    Attributes:
        family: "nb" (document classification) or "hmc" (tagging)
        task: Task configuration used
        metrics: Classifier name to MetricsReport on the test split
        chance: 1 / number of classes
        loss_history: Per-epoch loss of every trained head
        paths: Output paths, if outputs were written
        saved_files: Written files by name

    """

    family: str
    task: TaskConfig
    metrics: dict[str, MetricsReport]
    chance: float
    loss_history: dict[str, list[float]]
    paths: OutputPaths | None = None
    saved_files: dict[str, Path] = field(default_factory=dict)

    @property
    def accuracies(self) -> dict[str, float]:
        return {name: report.accuracy for name, report in self.metrics.items()}

    @property
    def gap(self) -> float:
        """Feature-head accuracy minus quantized generative accuracy."""
        acc = self.accuracies
        return acc["discriminative_head"] - acc["generative"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "family": self.family,
            "task": asdict(self.task),
            "chance": self.chance,
            "accuracy": self.accuracies,
            "gap": self.gap,
            "metrics": {k: v.to_dict() for k, v in self.metrics.items()},
            "final_loss": {k: v[-1] for k, v in self.loss_history.items() if v},
            "files": {k: str(v) for k, v in self.saved_files.items()},
        }

    def summary(self) -> str:
        """Generate a text summary of the results."""
        lines = [
            "=" * 50,
            f"GENDISC EXPERIMENT ({self.family.upper()} family)",
            "=" * 50,
            f"Task: d={self.task.dim}, classes={self.task.n_classes}, "
            f"separation={self.task.separation}, noise={self.task.noise}",
        ]
        for name, acc in self.accuracies.items():
            lines.append(f"{name:<24}{100.0 * acc:6.2f}%")
        lines.append(f"{'chance':<24}{100.0 * self.chance:6.2f}%")
        lines.append("=" * 50)
        return "\n".join(lines)


def _make_task(family: str, task: TaskConfig) -> tuple[FeatureDataset, FeatureDataset]:
    n = task.n_train + task.n_test
    if family == "nb":
        data = make_feature_task(
            task.n_classes,
            task.dim,
            task.separation,
            task.noise,
            n=n,
            rng=task.seed,
            doc_length=task.doc_length,
            offset=task.offset,
        )
    else:
        data = make_tagging_task(
            task.n_classes,
            task.dim,
            length=task.sequence_length,
            n=n,
            rng=task.seed,
            stickiness=task.stickiness,
            separation=task.separation,
            noise=task.noise,
            offset=task.offset,
        )
    return data.split(task.n_train)


def _evaluate(
    source: GenerativeModel | DiscriminativeUnits,
    data: list[LabeledSequence],
    construction: str,
    names: tuple[str, ...],
) -> MetricsReport:
    predicted, gold = [], []
    for seq in data:
        labels = classify(source, seq.y, construction, "map").labels
        predicted.append([names[i] for i in labels])
        gold.append([names[i] for i in np.asarray(seq.x)])
    return compute_metrics(predicted, gold, list(names))


def run_feature_experiment(
    config: RunConfig | None = None,
    family: str = "nb",
) -> ExperimentResult:
    """Compare generative and discriminative classifiers on a featurized task.

    Three classifiers are trained on the same split: the generative model
    fitted on quantized symbols, discriminative units counted on the same
    symbols, and feature heads trained on the raw vectors. The first two
    see identical information; the head sees the features.

    Args:
        config: RunConfig; ``task``, ``train`` and ``output`` are used
        family: "nb" for NB document classification, "hmc" for tagging

    Returns:
        ExperimentResult with per-classifier metrics on the test split

    Example:
        >>> result = run_feature_experiment()
        >>> result.gap > 0.10
        True

    """
    if config is None:
        config = RunConfig()
    if family not in ("nb", "hmc"):
        raise ValueError(f"family must be 'nb' or 'hmc', got {family!r}")
    kind = ModelKind.NB if family == "nb" else ModelKind.HMC
    task = config.task

    logger.info(f"Building {family} task: n_train={task.n_train}, n_test={task.n_test}")
    train, test = _make_task(family, task)
    labels, observations = train.label_set(), train.obs_set()
    names = labels.names

    logger.info("Fitting quantized generative model...")
    generative = fit_generative(kind, train.discrete(), config.train, labels, observations)
    logger.info("Counting quantized discriminative units...")
    tables = fit_discriminative_tables(kind, train.discrete(), config.train, labels, observations)
    logger.info("Training feature heads...")
    trained = train_feature_head(kind, train.featurized(), config.train, labels)

    metrics = {
        "generative": _evaluate(generative, test.discrete(), "generative", names),
        "discriminative_tables": _evaluate(tables, test.discrete(), "discriminative", names),
        "discriminative_head": _evaluate(trained.units, test.featurized(), "discriminative", names),
    }
    result = ExperimentResult(
        family=family,
        task=task,
        metrics=metrics,
        chance=1.0 / task.n_classes,
        loss_history=trained.loss_history,
    )

    output = config.output
    if output.output_dir is not None or output.save_plots:
        base_name = f"{family}_d{task.dim}_seed{task.seed}"
        paths = build_output_paths(base_name, output.output_dir, overwrite=output.overwrite)
        result.paths = paths
        result.saved_files["generative_model"] = save_model(paths.generative_model, generative)
        result.saved_files["discriminative_model"] = save_model(
            paths.discriminative_model, trained.units
        )
        result.saved_files["training_log"] = write_training_log(
            paths.training_log, trained.loss_history
        )
        if output.save_plots:
            marginals = None
            if kind.is_sequence:
                first = test.featurized()[0]
                probs = posterior_marginals(trained.units, first.y).probs
                marginals = (probs, names, first.x)
            plots = save_experiment_plots(
                paths,
                base_name,
                result.accuracies,
                trained.loss_history,
                chance=result.chance,
                marginals=marginals,
                config=output,
            )
            result.saved_files.update({f"plot_{k}": v for k, v in plots.items()})
        paths.report.write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
        result.saved_files["report"] = paths.report

    logger.info(
        "Experiment complete: "
        + ", ".join(f"{k}={v:.4f}" for k, v in result.accuracies.items())
    )
    return result
