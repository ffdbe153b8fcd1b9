"""Command-line interface for gendisc.

Machine-readable reports go to stdout as JSON; diagnostics go to stderr.
Exit codes: 0 success, 1 failure (bad input, invalid model, failed
verification), 2 usage error.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path
from typing import Any, NoReturn

import click

from gendisc import __version__

KINDS = ["nb", "pooledmc", "pooledmc2", "hmc", "hmc2", "hmcplus"]
FORMATS = ["auto", "tsv", "docs", "jsonl"]


def _emit(data: dict[str, Any]) -> None:
    click.echo(json.dumps(data, indent=2))


def _fail(ctx: click.Context, error: Exception, prefix: str = "Error") -> NoReturn:
    click.echo(click.style(f"✗ {prefix}: {error}", fg="red", bold=True), err=True)
    if ctx.obj.get("debug"):
        import traceback

        traceback.print_exc()
    sys.exit(1)


def _note(message: str) -> None:
    click.echo(click.style(f"note: {message}", fg="yellow"), err=True)


def _override(obj: Any, **changes: Any) -> Any:
    """Copy a config dataclass with the non-None changes, re-running its validation."""
    changes = {k: v for k, v in changes.items() if v is not None}
    return dataclasses.replace(obj, **changes) if changes else obj


def _load_config(path: str | None) -> Any:
    from gendisc.config import RunConfig

    return RunConfig.from_file(path) if path else RunConfig.from_env()


@click.group()
@click.version_option(version=__version__, prog_name="gendisc")
@click.option("-v", "--verbose", is_flag=True, help="Enable verbose output")
@click.option("--debug", is_flag=True, help="Enable debug logging")
@click.pass_context
def cli(ctx: click.Context, verbose: bool, debug: bool) -> None:
    r"""Gendisc - generative models and their discriminative constructions.

    Fit, sample and decode Naive Bayes, Pooled Markov chain and hidden
    Markov chain models with either the generative or the discriminative
    construction, and check that both give the same classifier.

    Examples:
    \b
        # Sample a labeled corpus from a model
        gendisc sample --model hmc.json --num 100 --len 20 -o train.tsv

    \b
        # Fit a model and decode with the discriminative construction
        gendisc fit --kind hmc --data train.tsv -o fitted.json
        gendisc predict --model fitted.json --data test.tsv -o pred.tsv

    \b
        # Score predictions
        gendisc eval pred.tsv test.tsv

    \b
        # Check construction equivalence on random models
        gendisc verify --trials 100

    """
    from gendisc.pipeline import setup_logging

    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    ctx.obj["debug"] = debug

    if debug:
        setup_logging("DEBUG")
    elif verbose:
        setup_logging("INFO")


@cli.command("sample")
@click.option("-m", "--model", "model_file", required=True, type=click.Path(exists=True))
@click.option("-n", "--num", type=click.IntRange(min=1), default=1, help="Number of sequences")
@click.option("--len", "length", type=click.IntRange(min=1), required=True, help="Sequence length")
@click.option("--seed", type=int, default=0, help="Random seed")
@click.option("-o", "--output", required=True, type=click.Path(), help="Output data file")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="auto", help="Data format")
@click.pass_context
def sample_command(
    ctx: click.Context,
    model_file: str,
    num: int,
    length: int,
    seed: int,
    output: str,
    fmt: str,
) -> None:
    r"""Sample a labeled corpus from a generative model.

    Sequence i is drawn from its own stream derived from --seed, so the
    same command always writes the same bytes.

    Example:
    \b
        gendisc sample --model hmc.json --num 10 --len 5 --seed 7 -o d.tsv

    """
    from gendisc.core.models import GenerativeModel
    from gendisc.core.sampling import sample_corpus
    from gendisc.io.formats import write_corpus
    from gendisc.io.serialization import load_model

    try:
        model = load_model(model_file)
        if not isinstance(model, GenerativeModel):
            raise ValueError("sampling needs a generative model file")
        corpus = sample_corpus(model, num, length, seed=seed)
        write_corpus(output, corpus, model.kind, model.labels, model.observations, fmt)
    except Exception as e:
        _fail(ctx, e)

    _emit({"sequences": num, "tokens": num * length, "output": output})


@cli.command("fit")
@click.option("-k", "--kind", type=click.Choice(KINDS), required=True, help="Model kind")
@click.option("-d", "--data", "data_file", required=True, type=click.Path(exists=True))
@click.option("-o", "--output", required=True, type=click.Path(), help="Output model file")
@click.option(
    "--construction",
    type=click.Choice(["generative", "discriminative"]),
    default="generative",
    help="Fit generative tables or discriminative units",
)
@click.option("-c", "--config", type=click.Path(exists=True), help="Config file (YAML/TOML)")
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="auto", help="Data format")
@click.option("--smoothing", type=click.FloatRange(min=0.0), help="Additive smoothing alpha")
@click.option("--marginals", type=click.Choice(["empirical", "propagated"]), help="Label marginals")
@click.option("--epochs", type=click.IntRange(min=0), help="Feature-head epochs")
@click.option("--lr", type=float, help="Feature-head learning rate")
@click.option("--batch-size", type=click.IntRange(min=1), help="Feature-head batch size")
@click.option("--seed", type=int, help="Shuffling seed")
@click.option("--dev", "dev_file", type=click.Path(exists=True), help="Held-out labeled data")
@click.option("--training-log", type=click.Path(), help="Write feature-head losses (JSON lines)")
@click.pass_context
def fit_command(
    ctx: click.Context,
    kind: str,
    data_file: str,
    output: str,
    construction: str,
    config: str | None,
    fmt: str,
    smoothing: float | None,
    marginals: str | None,
    epochs: int | None,
    lr: float | None,
    batch_size: int | None,
    seed: int | None,
    dev_file: str | None,
    training_log: str | None,
) -> None:
    r"""Fit a model on labeled data.

    Discrete data gives count-based tables (generative) or posterior-unit
    tables (discriminative); featurized JSON-lines data trains feature
    heads and needs --construction discriminative.

    Example:
    \b
        gendisc fit --kind hmc --data train.tsv -o hmc.json
        gendisc fit --kind nb --data docs.jsonl --construction discriminative -o nb.json

    """
    from gendisc.core.estimation import (
        fit_discriminative_tables,
        fit_generative,
        train_feature_head,
    )
    from gendisc.core.inference import heldout_log_likelihood
    from gendisc.core.types import LabelSet, ModelKind, ObsSet
    from gendisc.exceptions import DataFormatError
    from gendisc.io.formats import read_corpus
    from gendisc.io.serialization import save_model, write_training_log

    try:
        cfg = _load_config(config)
        train = _override(
            cfg.train,
            smoothing_alpha=smoothing,
            marginals=marginals,
            epochs=epochs,
            learning_rate=lr,
            batch_size=batch_size,
            seed=seed,
        )
        model_kind = ModelKind.parse(kind)
        corpus = read_corpus(data_file, fmt)
        corpus.check_family(model_kind)
        if not corpus.is_labeled:
            raise DataFormatError("fitting needs labeled data", data_file)

        labels = LabelSet.from_iterable(corpus.label_names())
        if corpus.is_featurized:
            if construction != "discriminative":
                raise DataFormatError(
                    "featurized data trains feature heads: use --construction discriminative",
                    data_file,
                )
            result = train_feature_head(model_kind, corpus.to_sequences(labels), train, labels)
            model: Any = result.units
            if training_log:
                write_training_log(training_log, result.loss_history)
        else:
            observations = ObsSet.from_iterable(corpus.token_names())
            data = corpus.to_sequences(labels, observations)
            fit = fit_generative if construction == "generative" else fit_discriminative_tables
            model = fit(model_kind, data, train, labels, observations)
        save_model(output, model)

        report: dict[str, Any] = {
            "kind": model_kind.value,
            "type": construction,
            "sequences": len(corpus),
            "tokens": corpus.n_tokens,
            "labels": len(labels),
            "output": output,
        }
        if dev_file:
            dev = read_corpus(dev_file, fmt)
            dev.check_family(model_kind)
            dev_data = dev.to_sequences(labels, model.observations)
            report["dev_log_likelihood"] = heldout_log_likelihood(model, dev_data)
            report["dev_sequences"] = len(dev)
    except Exception as e:
        _fail(ctx, e)

    _emit(report)


@cli.command("predict")
@click.option("-m", "--model", "model_file", required=True, type=click.Path(exists=True))
@click.option("-d", "--data", "data_file", required=True, type=click.Path(exists=True))
@click.option("-o", "--output", type=click.Path(), help="Predictions file (default: stdout)")
@click.option(
    "--construction",
    type=click.Choice(["generative", "discriminative"]),
    default="discriminative",
    help="Classifier construction",
)
@click.option(
    "--algorithm", type=click.Choice(["map", "mpm"]), default="map", help="Decoding criterion"
)
@click.option(
    "--pair-form", type=click.Choice(["pair", "marginal"]), default="pair", help="HMC+ step form"
)
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="auto", help="Data format")
@click.pass_context
def predict_command(
    ctx: click.Context,
    model_file: str,
    data_file: str,
    output: str | None,
    construction: str,
    algorithm: str,
    pair_form: str,
    fmt: str,
) -> None:
    r"""Label every sequence of a data file.

    The output mirrors the input format with the label column replaced.
    A generative model file used with the discriminative construction is
    inverted first.

    Example:
    \b
        gendisc predict --model hmc.json --data test.tsv -o pred.tsv
        gendisc predict --model hmc.json --data test.tsv --algorithm mpm

    """
    from gendisc.core.inference import classify
    from gendisc.core.inversion import as_units
    from gendisc.core.models import GenerativeModel
    from gendisc.io.formats import format_predictions, read_corpus, write_predictions
    from gendisc.io.serialization import load_model

    try:
        model: Any = load_model(model_file)
        corpus = read_corpus(data_file, fmt)
        corpus.check_family(model.kind)
        if construction == "generative" and not isinstance(model, GenerativeModel):
            raise ValueError("the generative construction needs a generative model file")
        if construction == "discriminative" and isinstance(model, GenerativeModel):
            _note("inverting the generative model for the discriminative construction")
            model = as_units(model, corpus.max_length)

        observations = None if corpus.is_featurized else model.observations
        sequences = corpus.to_sequences(None, observations)
        predictions, ties = [], 0
        for seq in sequences:
            result = classify(model, seq.y, construction, algorithm, pair_form)
            predictions.append(model.labels.decode(result.labels))
            ties += result.ties_broken

        if output is None:
            click.echo(format_predictions(corpus, predictions, model.kind), nl=False)
            return
        write_predictions(output, corpus, predictions, model.kind)
    except Exception as e:
        _fail(ctx, e)

    _emit(
        {
            "sequences": len(corpus),
            "tokens": corpus.n_tokens,
            "construction": construction,
            "algorithm": algorithm,
            "ties_broken": ties,
            "output": output,
        }
    )


@cli.command("eval")
@click.argument("pred_file", type=click.Path(exists=True))
@click.argument("gold_file", type=click.Path(exists=True))
@click.option("--format", "fmt", type=click.Choice(FORMATS), default="auto", help="Data format")
@click.pass_context
def eval_command(ctx: click.Context, pred_file: str, gold_file: str, fmt: str) -> None:
    r"""Score predicted labels against gold labels.

    Prints accuracy, per-label precision/recall/F1 and the confusion
    matrix as JSON.

    Example:
    \b
        gendisc eval pred.tsv gold.tsv

    """
    from gendisc.core.metrics import compute_metrics
    from gendisc.io.formats import align_corpora, read_corpus

    try:
        predicted = read_corpus(pred_file, fmt)
        gold = read_corpus(gold_file, fmt)
        align_corpora(predicted, gold)
        report = compute_metrics(predicted.gold(), gold.gold())
    except Exception as e:
        _fail(ctx, e)

    _emit(report.to_dict())


@cli.command("verify")
@click.option("--trials", type=click.IntRange(min=1), help="Random models per kind [100]")
@click.option("--seed", type=int, help="Run seed [0]")
@click.option("--kind", "kinds", multiple=True, type=click.Choice(KINDS), help="Kinds to check")
@click.option("--max-labels", type=click.IntRange(min=2), help="Largest label alphabet [4]")
@click.option("--max-symbols", type=click.IntRange(min=2), help="Largest observation alphabet [5]")
@click.option("--max-length", type=click.IntRange(min=1), help="Longest sequence [8]")
@click.option("--tolerance", type=float, help="Numerical tolerance [1e-9]")
@click.option("--replay", type=int, help="Run the single trial with this trial seed")
@click.option("--sabotage", is_flag=True, hidden=True, help="Corrupt the units (self-test)")
@click.option("-c", "--config", type=click.Path(exists=True), help="Config file (YAML/TOML)")
@click.pass_context
def verify_command(
    ctx: click.Context,
    trials: int | None,
    seed: int | None,
    kinds: tuple[str, ...],
    max_labels: int | None,
    max_symbols: int | None,
    max_length: int | None,
    tolerance: float | None,
    replay: int | None,
    sabotage: bool,
    config: str | None,
) -> None:
    r"""Check that both constructions give the same classifier.

    For every kind, random strictly-positive models are inverted and the
    discriminative classifier is compared with the generative one, the
    brute-force oracle, the kappa identity and (for HMC) classic
    forward-backward. Exits 1 and names the failing seed on any failure.

    Example:
    \b
        gendisc verify
        gendisc verify --seed 42 --trials 5 --kind hmc --kind hmc2

    """
    from gendisc.pipeline import CHECKS, run_verification, verify_trial

    try:
        cfg = _load_config(config)
        verify = _override(
            cfg.verify,
            trials=trials,
            seed=seed,
            kinds=list(kinds) or None,
            max_labels=max_labels,
            max_symbols=max_symbols,
            max_length=max_length,
            tolerance=tolerance,
            sabotage=sabotage or None,
        )
        if replay is not None:
            results = {k: verify_trial(k, replay, verify) for k in verify.kinds}
            failed = {k: {c: m for c, m in r.items() if m} for k, r in results.items()}
            failed = {k: v for k, v in failed.items() if v}
            _emit({"ok": not failed, "seed": replay, "failures": failed})
            if failed:
                sys.exit(1)
            return

        report = run_verification(verify)
    except Exception as e:
        _fail(ctx, e)

    _emit(report.to_dict())
    click.echo(report.summary(), err=True)
    if not report.ok:
        first = report.failures[0]
        click.echo(
            click.style(
                f"✗ Verification failed: {len(report.failures)} check(s); first failure "
                f"{first.kind}/{first.check} at seed {first.seed}",
                fg="red",
                bold=True,
            ),
            err=True,
        )
        sys.exit(1)
    n_checks = sum(1 for r in report.kinds.values() for c in CHECKS if r.passed.get(c) is not None)
    click.echo(click.style(f"✓ All {n_checks} check groups passed", fg="green"), err=True)


@cli.command("experiment")
@click.option(
    "--family", type=click.Choice(["nb", "hmc"]), default="nb", help="Classification or tagging"
)
@click.option("-c", "--config", type=click.Path(exists=True), help="Config file (YAML/TOML)")
@click.option("--classes", type=click.IntRange(min=2), help="Number of classes [2]")
@click.option("--dim", type=click.IntRange(min=2, max=16), help="Feature dimension [8]")
@click.option("--separation", type=click.FloatRange(min=0.0), help="Class-mean distance [2.0]")
@click.option("--noise", type=click.FloatRange(min=0.0), help="Noise SD [1.0]")
@click.option("--n-train", type=click.IntRange(min=1), help="Training items [5000]")
@click.option("--n-test", type=click.IntRange(min=1), help="Test items [1000]")
@click.option("--seed", type=int, help="Task seed [0]")
@click.option("--epochs", type=click.IntRange(min=0), help="Feature-head epochs [200]")
@click.option("-o", "--output-dir", type=click.Path(), help="Write models, log and report here")
@click.option("--plots", is_flag=True, help="Save plots (needs an output directory)")
@click.option("--overwrite", is_flag=True, help="Replace an earlier report")
@click.pass_context
def experiment_command(
    ctx: click.Context,
    family: str,
    config: str | None,
    classes: int | None,
    dim: int | None,
    separation: float | None,
    noise: float | None,
    n_train: int | None,
    n_test: int | None,
    seed: int | None,
    epochs: int | None,
    output_dir: str | None,
    plots: bool,
    overwrite: bool,
) -> None:
    r"""Compare quantized generative and feature-head discriminative classifiers.

    Example:
    \b
        gendisc experiment
        gendisc experiment --family hmc --n-train 500 --n-test 200 -o results/ --plots

    """
    from gendisc.pipeline import run_feature_experiment

    try:
        cfg = _load_config(config)
        cfg.task = _override(
            cfg.task,
            n_classes=classes,
            dim=dim,
            separation=separation,
            noise=noise,
            n_train=n_train,
            n_test=n_test,
            seed=seed,
        )
        cfg.train = _override(cfg.train, epochs=epochs)
        cfg.output = _override(
            cfg.output,
            output_dir=output_dir,
            save_plots=plots or None,
            overwrite=overwrite or None,
        )
        result = run_feature_experiment(cfg, family=family)
    except Exception as e:
        _fail(ctx, e)

    _emit(result.to_dict())
    if ctx.obj.get("verbose"):
        click.echo(result.summary(), err=True)


@cli.command("info")
@click.argument("model_file", type=click.Path(exists=True))
@click.pass_context
def info_command(ctx: click.Context, model_file: str) -> None:
    r"""Display kind, alphabets, table shapes and validation status of a model file.

    Example:
    \b
        gendisc info hmc.json

    """
    from gendisc.core.models import DiscriminativeUnits, validate
    from gendisc.io.serialization import load_model

    try:
        model = load_model(model_file, validate=False)
    except Exception as e:
        _fail(ctx, e, prefix="Error reading file")

    violations = validate(model)
    info: dict[str, Any] = {
        "file": model_file,
        "type": "discriminative" if isinstance(model, DiscriminativeUnits) else "generative",
        "kind": model.kind.value,
        "labels": len(model.labels),
        "observations": len(model.observations) if model.observations is not None else None,
        "tables": {name: list(table.shape) for name, table in model.tables.items()},
        "valid": not violations,
        "violations": [str(v) for v in violations],
    }
    if isinstance(model, DiscriminativeUnits):
        info["heads"] = {n: [h.n_outputs, h.d] for n, h in model.heads.items()}
        info["marginal_mode"] = model.marginal_mode
        info["horizon"] = model.horizon
    _emit(info)
    if violations:
        sys.exit(1)


@cli.command("init-config")
@click.argument("output_file", type=click.Path())
@click.option(
    "--format", "-f", type=click.Choice(["yaml", "toml"]), default="yaml", help="Config file format"
)
def init_config_command(output_file: str, format: str) -> None:
    r"""Generate an example configuration file.

    Creates a documented config file with all available options.

    Example:
    \b
        gendisc init-config my_config.yaml

    """
    from gendisc.config import generate_example_config

    try:
        generate_example_config(output_file, format=format)
        click.echo(click.style(f"✓ Created config file: {output_file}", fg="green"), err=True)
        click.echo(f"  Edit this file and use with: gendisc verify -c {output_file}", err=True)
    except Exception as e:
        click.echo(click.style(f"Error: {e}", fg="red"), err=True)
        sys.exit(1)


@cli.command("validate-config")
@click.argument("config_file", type=click.Path(exists=True))
def validate_config_command(config_file: str) -> None:
    r"""Validate a configuration file.

    Example:
    \b
        gendisc validate-config my_config.yaml

    """
    from gendisc.config import RunConfig

    try:
        cfg = RunConfig.from_file(config_file)
        click.echo(click.style("✓ Configuration is valid", fg="green"), err=True)
        click.echo(f"  Smoothing alpha: {cfg.train.smoothing_alpha}", err=True)
        click.echo(f"  Verification trials: {cfg.verify.trials}", err=True)
        click.echo(f"  Task: d={cfg.task.dim}, classes={cfg.task.n_classes}", err=True)
    except Exception as e:
        click.echo(click.style(f"✗ Invalid configuration: {e}", fg="red"), err=True)
        sys.exit(1)


def main() -> None:
    """Entry point for the CLI."""
    cli(obj={})


if __name__ == "__main__":
    main()
