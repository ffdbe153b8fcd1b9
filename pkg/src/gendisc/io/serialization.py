"""Model files and training logs.

A model file is one JSON document::

    {
      "schema_version": 1,
      "type": "generative" | "discriminative",
      "kind": "hmc",
      "labels": ["a", "b"],
      "observations": ["u", "v"] | null,
      "tables": {"prior": [...], "transition": [[...], ...], ...},
      "heads": {"posterior": {"d": 8, "W": [[...]], "b": [...]}},
      "marginal_mode": "propagated"
    }

``heads`` and ``marginal_mode`` appear only for discriminative units.
Tables are nested lists in row-major order.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping
from pathlib import Path
from typing import Any

import numpy as np

from gendisc.core.models import (
    AnyModel,
    DiscriminativeUnits,
    FeatureHead,
    GenerativeModel,
    require_valid,
)
from gendisc.core.types import LabelSet, ModelKind, ObsSet
from gendisc.exceptions import DataFormatError, ShapeError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


def model_to_dict(model: AnyModel) -> dict[str, Any]:
    """Convert a model to a JSON-ready dictionary."""
    data: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "type": "generative" if isinstance(model, GenerativeModel) else "discriminative",
        "kind": model.kind.value,
        "labels": list(model.labels.names),
        "observations": list(model.observations.names) if model.observations is not None else None,
        "tables": {name: table.tolist() for name, table in model.tables.items()},
    }
    if isinstance(model, DiscriminativeUnits):
        data["heads"] = {
            name: {"d": head.d, "W": head.W.tolist(), "b": head.b.tolist()}
            for name, head in model.heads.items()
        }
        data["marginal_mode"] = model.marginal_mode
    return data


def _head_from_dict(name: str, data: Mapping[str, Any]) -> FeatureHead:
    try:
        head = FeatureHead(np.asarray(data["W"], dtype=np.float64), np.asarray(data["b"]))
    except KeyError as err:
        raise DataFormatError(f"head '{name}' lacks {err.args[0]!r}") from err
    except (ShapeError, ValueError) as err:
        raise DataFormatError(f"head '{name}': {err}") from err
    if "d" in data and int(data["d"]) != head.d:
        raise DataFormatError(f"head '{name}' declares d={data['d']} but W has {head.d} columns")
    return head


def model_from_dict(data: Mapping[str, Any], validate: bool = True) -> AnyModel:
    """Build a model from a dictionary produced by :func:`model_to_dict`.

    Args:
        data: Parsed model document
        validate: Run the model invariants and raise on any violation

    Raises:
        DataFormatError: Missing or unsupported fields
        ModelValidationError: The tables violate the model invariants

    """
    version = data.get("schema_version")
    if version is None:
        raise DataFormatError("model file has no schema_version")
    if version != SCHEMA_VERSION:
        raise DataFormatError(f"unsupported schema_version {version} (expected {SCHEMA_VERSION})")
    for key in ("type", "kind", "labels", "tables"):
        if key not in data:
            raise DataFormatError(f"model file has no '{key}'")

    try:
        kind = ModelKind.parse(data["kind"])
    except ValueError as err:
        raise DataFormatError(str(err)) from err
    labels = LabelSet(tuple(data["labels"]))
    obs_names = data.get("observations")
    observations = ObsSet(tuple(obs_names)) if obs_names else None
    tables = {name: np.asarray(value, dtype=np.float64) for name, value in data["tables"].items()}

    model: AnyModel
    if data["type"] == "generative":
        if observations is None:
            raise DataFormatError("generative model file has no observations")
        model = GenerativeModel(kind, labels, observations, tables)
    elif data["type"] == "discriminative":
        heads = {name: _head_from_dict(name, h) for name, h in (data.get("heads") or {}).items()}
        model = DiscriminativeUnits(
            kind,
            labels,
            observations,
            tables,
            heads=heads,
            marginal_mode=data.get("marginal_mode", "propagated"),
        )
    else:
        raise DataFormatError(f"unknown model type {data['type']!r}")

    if validate:
        require_valid(model)
    return model


def save_model(path: str | Path, model: AnyModel) -> Path:
    """Write ``model`` as JSON to ``path``."""
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(model), indent=1) + "\n", encoding="utf-8")
    logger.info(f"Saved {model.kind.value} model to {path}")
    return path


def load_model(path: str | Path, validate: bool = True) -> AnyModel:
    """Read a model file.

    Args:
        path: JSON model file
        validate: Raise ModelValidationError on invariant violations

    Returns:
        GenerativeModel or DiscriminativeUnits

    Raises:
        DataFormatError: Missing file, invalid JSON or missing fields
        ModelValidationError: The tables violate the model invariants

    Example:
        >>> model = load_model("hmc.json")
        >>> model.kind.value
        'hmc'

    """
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as err:
        raise DataFormatError("file not found", str(path)) from err
    except json.JSONDecodeError as err:
        raise DataFormatError(f"invalid JSON ({err.msg})", str(path), err.lineno) from err
    if not isinstance(data, dict):
        raise DataFormatError("model file must hold a JSON object", str(path))

    try:
        model = model_from_dict(data, validate=False)
    except DataFormatError as err:
        raise DataFormatError(str(err), str(path)) from err
    if validate:
        require_valid(model, source=str(path))
    logger.debug(f"Loaded {model!r} from {path}")
    return model


def write_training_log(path: str | Path, loss_history: Mapping[str, list[float]]) -> Path:
    """Write per-epoch losses as JSON lines ``{"unit", "epoch", "loss"}``."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        for unit, losses in loss_history.items():
            for epoch, loss in enumerate(losses, 1):
                f.write(json.dumps({"unit": unit, "epoch": epoch, "loss": loss}) + "\n")
    logger.info(f"Wrote training log to {path}")
    return path


def read_training_log(path: str | Path) -> dict[str, list[float]]:
    """Read a log written by :func:`write_training_log`."""
    history: dict[str, list[float]] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            history.setdefault(record.get("unit", "head"), []).append(float(record["loss"]))
        except (json.JSONDecodeError, KeyError, TypeError) as err:
            raise DataFormatError(f"bad training log record ({err})", str(path), lineno) from err
    return history
