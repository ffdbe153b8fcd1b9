"""Input/Output modules for gendisc.

This package reads and writes corpora and model files:
- formats: TSV, document-per-line and JSON-lines corpora
- serialization: model JSON and training logs
- paths: experiment output layout
"""

from gendisc.io.formats import (
    Corpus,
    CorpusRecord,
    align_corpora,
    detect_format,
    format_corpus,
    format_predictions,
    read_corpus,
    write_corpus,
    write_predictions,
)
from gendisc.io.paths import OutputPaths, build_output_paths
from gendisc.io.serialization import (
    load_model,
    model_from_dict,
    model_to_dict,
    read_training_log,
    save_model,
    write_training_log,
)

__all__ = [
    "Corpus",
    "CorpusRecord",
    "read_corpus",
    "detect_format",
    "format_corpus",
    "write_corpus",
    "format_predictions",
    "write_predictions",
    "align_corpora",
    "load_model",
    "save_model",
    "model_to_dict",
    "model_from_dict",
    "read_training_log",
    "write_training_log",
    "build_output_paths",
    "OutputPaths",
]
