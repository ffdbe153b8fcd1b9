"""Corpus file formats.

Three line-oriented formats are supported:

- ``tsv``: CoNLL-style, one ``token<TAB>label`` per line and a blank line
  between sequences (HMC family). Extra middle columns are kept verbatim.
- ``docs``: one document per line, ``label<TAB>tok1 tok2 ...`` (NB family).
- ``jsonl``: one JSON object per line with ``label`` (NB family) or
  ``labels`` (HMC family) and either ``vectors`` (featurized) or ``tokens``.

Unlabeled input drops the label column (``tsv``, ``docs``) or key (``jsonl``).
"""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from gendisc.core.metrics import check_alignment
from gendisc.core.types import LabeledSequence, LabelSet, ModelKind, ObsSet
from gendisc.exceptions import AlignmentMismatchError, DataFormatError

logger = logging.getLogger(__name__)

FORMATS = ("auto", "tsv", "docs", "jsonl")

_SUFFIXES = {".tsv": "tsv", ".conll": "tsv", ".jsonl": "jsonl"}


@dataclass
class CorpusRecord:
    """One sequence (HMC family) or document (NB family) read from a file.

    Attributes:
        line: 1-based line where the record starts
        tokens: Observation tokens, or None for featurized records
        vectors: Feature vectors (T, d), or None for token records
        labels: Label names (T for the HMC family, one for the NB family),
            or None when unlabeled
        raw: Text kept for prediction output: per-token column prefixes
            (tsv), the document text (docs) or the parsed object (jsonl)

    """

    line: int
    tokens: list[str] | None = None
    vectors: np.ndarray | None = None
    labels: list[str] | None = None
    raw: Any = None

    @property
    def length(self) -> int:
        if self.tokens is not None:
            return len(self.tokens)
        return 0 if self.vectors is None else int(self.vectors.shape[0])


@dataclass
class Corpus:
    """Records of one file plus the format and model family they belong to."""

    records: list[CorpusRecord]
    format: str
    family: str | None
    path: Path | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def n_tokens(self) -> int:
        return sum(r.length for r in self.records)

    @property
    def is_labeled(self) -> bool:
        return bool(self.records) and all(r.labels is not None for r in self.records)

    @property
    def is_featurized(self) -> bool:
        return bool(self.records) and all(r.vectors is not None for r in self.records)

    @property
    def max_length(self) -> int:
        return max((r.length for r in self.records), default=0)

    def label_names(self) -> list[str]:
        """Distinct label names in first-seen order."""
        seen: dict[str, None] = {}
        for record in self.records:
            for name in record.labels or ():
                seen.setdefault(name, None)
        return list(seen)

    def token_names(self) -> list[str]:
        """Distinct observation tokens in first-seen order."""
        seen: dict[str, None] = {}
        for record in self.records:
            for token in record.tokens or ():
                seen.setdefault(token, None)
        return list(seen)

    def gold(self) -> list[list[str]]:
        """Label names per record; raises if the corpus is unlabeled."""
        if not self.is_labeled:
            raise DataFormatError("corpus has unlabeled records", self._where())
        return [list(r.labels or ()) for r in self.records]

    def check_family(self, kind: ModelKind) -> None:
        """Raise DataFormatError if the corpus was written for the other family."""
        if self.family is not None and self.family != kind.family:
            raise DataFormatError(
                f"{self.format} data holds {self.family.upper()}-family records, "
                f"but a {kind.value} model needs {kind.family.upper()}-family data",
                self._where(),
            )
        if self.is_labeled and not kind.is_sequence:
            for record in self.records:
                if len(record.labels or ()) != 1:
                    raise DataFormatError(
                        f"{kind.value} needs one label per document", self._where(), record.line
                    )

    def to_sequences(
        self, labels: LabelSet | None = None, observations: ObsSet | None = None
    ) -> list[LabeledSequence]:
        """Encode records as index sequences.

        Args:
            labels: Label alphabet; labels are dropped when None
            observations: Observation alphabet; required for token records

        Raises:
            AlphabetError: A token or label is not in its alphabet

        """
        out = []
        for record in self.records:
            if record.vectors is not None:
                y = record.vectors
            else:
                if observations is None:
                    raise DataFormatError("token records need an observation alphabet")
                y = observations.encode(record.tokens or [])
            x = None
            if labels is not None and record.labels is not None:
                x = labels.encode(record.labels)
            out.append(LabeledSequence(y, x))
        return out

    def _where(self) -> str | None:
        return str(self.path) if self.path is not None else None


# ----------------------------------------------------------------------------
# Reading
# ----------------------------------------------------------------------------


def detect_format(path: str | Path, fmt: str = "auto") -> str:
    """Resolve ``auto`` by suffix: .tsv/.conll → tsv, .jsonl → jsonl, else docs."""
    if fmt not in FORMATS:
        raise ValueError(f"Unknown format: {fmt!r} (expected one of {FORMATS})")
    if fmt != "auto":
        return fmt
    return _SUFFIXES.get(Path(path).suffix.lower(), "docs")


def _lines(path: Path) -> list[str]:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as err:
        raise DataFormatError("file not found", str(path)) from err
    except UnicodeDecodeError as err:
        raise DataFormatError(f"not UTF-8 text ({err.reason})", str(path)) from err
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [line[:-1] if line.endswith("\r") else line for line in lines]


def _check_labeling(records: list[CorpusRecord], where: str) -> None:
    expected = records[0].labels is not None
    for record in records:
        if (record.labels is not None) != expected:
            raise DataFormatError("mix of labeled and unlabeled records", where, record.line)


def _read_tsv(lines: list[str], where: str) -> list[CorpusRecord]:
    records: list[CorpusRecord] = []
    current: CorpusRecord | None = None
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            current = None
            continue
        parts = line.split("\t")
        token = parts[0]
        if not token or len(token.split()) != 1:
            raise DataFormatError(
                f"expected one token per line, got {token!r} (document data? use --format docs)",
                where,
                lineno,
            )
        if current is None:
            current = CorpusRecord(line=lineno, tokens=[], raw=[])
            current.labels = [] if len(parts) > 1 else None
            records.append(current)
        if (len(parts) > 1) != (current.labels is not None):
            raise DataFormatError("labeled and unlabeled tokens in one sequence", where, lineno)
        assert current.tokens is not None
        current.tokens.append(token)
        if current.labels is not None:
            current.labels.append(parts[-1])
            current.raw.append("\t".join(parts[:-1]))
        else:
            current.raw.append(line)
    return records


def _read_docs(lines: list[str], where: str) -> list[CorpusRecord]:
    records = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            if any(rest.strip() for rest in lines[lineno:]):
                raise DataFormatError(
                    "blank line inside document data (sequence data? use --format tsv)",
                    where,
                    lineno,
                )
            break
        label, sep, text = line.partition("\t")
        if not sep:
            label, text = "", line
        tokens = text.split()
        if not tokens:
            raise DataFormatError("document has no tokens", where, lineno)
        records.append(
            CorpusRecord(
                line=lineno, tokens=tokens, labels=[label] if sep else None, raw=text
            )
        )
    return records


def _read_jsonl(lines: list[str], where: str) -> tuple[list[CorpusRecord], str | None]:
    records = []
    families = set()
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            raise DataFormatError(f"invalid JSON ({err.msg})", where, lineno) from err
        if not isinstance(obj, dict):
            raise DataFormatError("expected a JSON object", where, lineno)

        record = CorpusRecord(line=lineno, raw=obj)
        if "vectors" in obj:
            vectors = np.asarray(obj["vectors"], dtype=np.float64)
            if vectors.ndim != 2 or vectors.shape[0] < 1:
                raise DataFormatError("'vectors' must be a non-empty list of lists", where, lineno)
            record.vectors = vectors
        elif "tokens" in obj:
            record.tokens = [str(t) for t in obj["tokens"]]
            if not record.tokens:
                raise DataFormatError("'tokens' is empty", where, lineno)
        else:
            raise DataFormatError("record needs 'vectors' or 'tokens'", where, lineno)

        if "labels" in obj:
            record.labels = [str(v) for v in obj["labels"]]
            families.add("hmc")
            if len(record.labels) != record.length:
                raise DataFormatError(
                    f"{len(record.labels)} labels for {record.length} observations", where, lineno
                )
        elif "label" in obj:
            record.labels = [str(obj["label"])]
            families.add("nb")
        records.append(record)

    if records:
        dims = {r.vectors.shape[1] for r in records if r.vectors is not None}
        if len(dims) > 1:
            raise DataFormatError(f"inconsistent vector dimensions {sorted(dims)}", where)
        if len({r.vectors is None for r in records}) > 1:
            raise DataFormatError("mix of token and vector records", where)
    if len(families) > 1:
        raise DataFormatError("mix of 'label' and 'labels' records", where)
    return records, families.pop() if families else None


def read_corpus(path: str | Path, fmt: str = "auto") -> Corpus:
    """Read a corpus file.

    Args:
        path: Input file
        fmt: "auto", "tsv", "docs" or "jsonl"

    Returns:
        Corpus with one record per sequence or document

    Raises:
        DataFormatError: Unreadable file or malformed line (names file and line)

    Example:
        >>> corpus = read_corpus("train.tsv")
        >>> len(corpus), corpus.n_tokens
        (120, 2400)

    """
    path = Path(path)
    fmt = detect_format(path, fmt)
    lines = _lines(path)
    where = str(path)

    family: str | None
    if fmt == "tsv":
        records, family = _read_tsv(lines, where), "hmc"
    elif fmt == "docs":
        records, family = _read_docs(lines, where), "nb"
    else:
        records, family = _read_jsonl(lines, where)

    if not records:
        raise DataFormatError("no records", where)
    _check_labeling(records, where)
    corpus = Corpus(records=records, format=fmt, family=family, path=path)
    logger.info(f"Read {len(corpus)} records ({corpus.n_tokens} tokens) from {path} as {fmt}")
    return corpus


# ----------------------------------------------------------------------------
# Writing
# ----------------------------------------------------------------------------


def _default_format(kind_family: str, featurized: bool) -> str:
    if featurized:
        return "jsonl"
    return "tsv" if kind_family == "hmc" else "docs"


def format_corpus(
    sequences: Sequence[LabeledSequence],
    kind: ModelKind,
    labels: LabelSet,
    observations: ObsSet | None = None,
    fmt: str = "auto",
) -> str:
    """Render labeled sequences as corpus text.

    ``auto`` picks jsonl for featurized sequences, tsv for the HMC family
    and docs for the NB family.
    """
    featurized = bool(sequences) and sequences[0].is_featurized
    if fmt == "auto":
        fmt = _default_format(kind.family, featurized)
    if fmt != "jsonl" and (featurized or observations is None):
        raise DataFormatError(f"{fmt} output needs discrete tokens and an observation alphabet")

    chunks: list[str] = []
    for seq in sequences:
        names = labels.decode(seq.x) if seq.x is not None else None
        if fmt == "jsonl":
            obj: dict[str, Any] = {}
            if names is not None:
                if kind.is_sequence:
                    obj["labels"] = names
                else:
                    obj["label"] = names[0]
            if seq.is_featurized:
                obj["vectors"] = seq.y.tolist()
            else:
                assert observations is not None
                obj["tokens"] = observations.decode(seq.y)
            chunks.append(json.dumps(obj) + "\n")
            continue

        assert observations is not None
        tokens = observations.decode(seq.y)
        if fmt == "tsv":
            if names is not None and len(names) != len(tokens):
                raise DataFormatError("tsv output needs one label per token")
            rows = tokens if names is None else [f"{t}\t{n}" for t, n in zip(tokens, names)]
            chunks.append("\n".join(rows) + "\n\n")
        elif names is None:
            chunks.append(" ".join(tokens) + "\n")
        else:
            chunks.append(f"{names[0]}\t{' '.join(tokens)}\n")
    return "".join(chunks)


def write_corpus(
    path: str | Path,
    sequences: Sequence[LabeledSequence],
    kind: ModelKind,
    labels: LabelSet,
    observations: ObsSet | None = None,
    fmt: str = "auto",
) -> Path:
    """Write labeled sequences to ``path``; ``auto`` resolves by suffix first."""
    path = Path(path)
    if fmt == "auto" and path.suffix.lower() in _SUFFIXES:
        fmt = _SUFFIXES[path.suffix.lower()]
    text = format_corpus(sequences, kind, labels, observations, fmt)
    path.write_text(text, encoding="utf-8", newline="\n")
    logger.info(f"Wrote {len(sequences)} sequences to {path}")
    return path


def format_predictions(
    corpus: Corpus, predictions: Sequence[Sequence[str]], kind: ModelKind | None = None
) -> str:
    """Render predicted labels in the input's format.

    Token columns (tsv) and document text (docs) are copied byte for byte;
    only the label column changes. ``kind`` decides between ``label`` and
    ``labels`` for unlabeled jsonl input.
    """
    family = corpus.family or (kind.family if kind is not None else None)
    if len(predictions) != len(corpus):
        raise AlignmentMismatchError(
            min(len(predictions), len(corpus)) + 1,
            None,
            f"{len(predictions)} predictions for {len(corpus)} records",
        )
    chunks = []
    for record, names in zip(corpus.records, predictions):
        if corpus.format == "tsv":
            rows = [f"{prefix}\t{name}" for prefix, name in zip(record.raw, names)]
            chunks.append("\n".join(rows) + "\n\n")
        elif corpus.format == "docs":
            chunks.append(f"{names[0]}\t{record.raw}\n")
        else:
            obj = dict(record.raw)
            if family == "hmc":
                obj["labels"] = list(names)
            else:
                obj["label"] = names[0]
            chunks.append(json.dumps(obj) + "\n")
    return "".join(chunks)


def write_predictions(
    path: str | Path,
    corpus: Corpus,
    predictions: Sequence[Sequence[str]],
    kind: ModelKind | None = None,
) -> Path:
    """Write predictions mirroring ``corpus``'s format to ``path``."""
    path = Path(path)
    text = format_predictions(corpus, predictions, kind)
    path.write_text(text, encoding="utf-8", newline="\n")
    logger.info(f"Wrote predictions for {len(corpus)} records to {path}")
    return path


def align_corpora(predicted: Corpus, gold: Corpus) -> None:
    """Raise AlignmentMismatchError where the token columns or the counts diverge."""
    for i, (p, g) in enumerate(zip(predicted.records, gold.records)):
        if p.tokens is not None and g.tokens is not None:
            for j, (a, b) in enumerate(zip(p.tokens, g.tokens)):
                if a != b:
                    raise AlignmentMismatchError(i + 1, j + 1, f"token {a!r} vs {b!r}")
    check_alignment(
        [range(r.length) for r in predicted.records], [range(r.length) for r in gold.records]
    )
