"""Tests for I/O modules."""

import json

import numpy as np
import pytest

from gendisc.core.inversion import bayes_invert
from gendisc.core.models import DiscriminativeUnits, FeatureHead
from gendisc.core.types import LabeledSequence, LabelSet, ModelKind
from gendisc.exceptions import (
    AlignmentMismatchError,
    DataFormatError,
    GendiscError,
    ModelValidationError,
)
from gendisc.io.formats import (
    align_corpora,
    detect_format,
    format_corpus,
    format_predictions,
    read_corpus,
    write_corpus,
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

TSV = "the\tDET\ncat\tNOUN\n\nruns\tVERB\n"
DOCS = "pos\tgood fun film\nneg\tdull\n"


def _write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestDetectFormat:
    """Tests for format detection."""

    @pytest.mark.parametrize(
        "name,expected",
        [("a.tsv", "tsv"), ("a.conll", "tsv"), ("a.JSONL", "jsonl"), ("a.txt", "docs")],
    )
    def test_by_suffix(self, name, expected):
        assert detect_format(name) == expected

    def test_explicit_wins(self):
        assert detect_format("a.tsv", "docs") == "docs"

    def test_unknown(self):
        with pytest.raises(ValueError):
            detect_format("a.tsv", "csv")


class TestReadCorpus:
    """Tests for reading corpus files."""

    def test_tsv(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "train.tsv", TSV))
        assert len(corpus) == 2
        assert corpus.n_tokens == 3
        assert corpus.family == "hmc"
        assert corpus.gold() == [["DET", "NOUN"], ["VERB"]]
        assert corpus.token_names() == ["the", "cat", "runs"]

    def test_tsv_unlabeled(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "test.tsv", "the\ncat\n"))
        assert not corpus.is_labeled
        with pytest.raises(DataFormatError):
            corpus.gold()

    def test_tsv_rejects_documents(self, tmp_path):
        path = _write(tmp_path, "bad.tsv", "good fun film\tpos\n")
        with pytest.raises(DataFormatError, match="bad.tsv:1"):
            read_corpus(path)

    def test_docs(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "train.txt", DOCS))
        assert corpus.family == "nb"
        assert corpus.label_names() == ["pos", "neg"]
        assert corpus.records[0].tokens == ["good", "fun", "film"]

    def test_docs_blank_line_inside(self, tmp_path):
        path = _write(tmp_path, "bad.txt", "pos\ta\n\nneg\tb\n")
        with pytest.raises(DataFormatError) as excinfo:
            read_corpus(path)
        assert excinfo.value.line == 2

    def test_mixed_labeling(self, tmp_path):
        path = _write(tmp_path, "mixed.txt", "pos\tgood\nbad film\n")
        with pytest.raises(DataFormatError, match="mix of labeled"):
            read_corpus(path)

    def test_jsonl_vectors(self, tmp_path):
        lines = [
            json.dumps({"label": "a", "vectors": [[0.5, -1.0]]}),
            json.dumps({"label": "b", "vectors": [[1.0, 2.0], [0.0, 0.0]]}),
        ]
        corpus = read_corpus(_write(tmp_path, "feat.jsonl", "\n".join(lines) + "\n"))
        assert corpus.is_featurized
        assert corpus.family == "nb"
        seqs = corpus.to_sequences(LabelSet(("a", "b")))
        assert seqs[1].y.shape == (2, 2)
        assert seqs[1].x.tolist() == [1]

    def test_jsonl_label_count(self, tmp_path):
        line = json.dumps({"labels": ["A"], "tokens": ["p", "q"]})
        with pytest.raises(DataFormatError, match="1 labels for 2"):
            read_corpus(_write(tmp_path, "bad.jsonl", line + "\n"))

    def test_jsonl_inconsistent_dims(self, tmp_path):
        lines = [json.dumps({"vectors": [[0.0]]}), json.dumps({"vectors": [[0.0, 1.0]]})]
        with pytest.raises(DataFormatError, match="inconsistent"):
            read_corpus(_write(tmp_path, "bad.jsonl", "\n".join(lines)))

    def test_invalid_json(self, tmp_path):
        with pytest.raises(DataFormatError, match="invalid JSON"):
            read_corpus(_write(tmp_path, "bad.jsonl", "{nope\n"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFormatError, match="file not found"):
            read_corpus(tmp_path / "missing.tsv")

    def test_empty_file(self, tmp_path):
        with pytest.raises(DataFormatError, match="no records"):
            read_corpus(_write(tmp_path, "empty.tsv", ""))

    def test_check_family(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "train.tsv", TSV))
        corpus.check_family(ModelKind.HMC2)
        with pytest.raises(DataFormatError, match="HMC-family"):
            corpus.check_family(ModelKind.NB)


class TestWriteCorpus:
    """Tests for rendering and writing corpora."""

    def test_docs_text(self, nb_model):
        seqs = [LabeledSequence(y=np.array([0, 1, 1]), x=np.array([1]))]
        text = format_corpus(seqs, ModelKind.NB, nb_model.labels, nb_model.observations)
        assert text == "b\tu v v\n"

    def test_tsv_text(self, sticky_hmc):
        seqs = [LabeledSequence(y=np.array([2, 0]), x=np.array([1, 0]))]
        text = format_corpus(seqs, ModelKind.HMC, sticky_hmc.labels, sticky_hmc.observations)
        assert text == "r\tB\np\tA\n\n"

    def test_featurized_needs_jsonl(self):
        seqs = [LabeledSequence(y=np.zeros((1, 2)), x=np.array([0]))]
        with pytest.raises(DataFormatError):
            format_corpus(seqs, ModelKind.NB, LabelSet(("a",)), None, fmt="docs")

    def test_written_file_reads_back(self, sticky_hmc, tmp_path):
        seqs = [
            LabeledSequence(y=np.array([0, 1, 2]), x=np.array([0, 0, 1])),
            LabeledSequence(y=np.array([1]), x=np.array([1])),
        ]
        path = write_corpus(
            tmp_path / "out.tsv", seqs, ModelKind.HMC, sticky_hmc.labels, sticky_hmc.observations
        )
        corpus = read_corpus(path)
        assert corpus.gold() == [["A", "A", "B"], ["B"]]
        decoded = corpus.to_sequences(sticky_hmc.labels, sticky_hmc.observations)
        assert decoded[0].y.tolist() == [0, 1, 2]


class TestPredictions:
    """Tests for prediction output and alignment checks."""

    def test_tsv_keeps_token_columns(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "in.tsv", "the\tDET\ncat\tDET\n"))
        text = format_predictions(corpus, [["DET", "NOUN"]])
        assert text == "the\tDET\ncat\tNOUN\n\n"

    def test_docs_keeps_text(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "in.txt", "good  fun\n"))
        assert format_predictions(corpus, [["pos"]]) == "pos\tgood  fun\n"

    def test_jsonl_unlabeled_uses_kind(self, tmp_path):
        path = _write(tmp_path, "in.jsonl", json.dumps({"tokens": ["p", "q"], "id": 7}) + "\n")
        corpus = read_corpus(path)
        obj = json.loads(format_predictions(corpus, [["A", "B"]], ModelKind.HMC))
        assert obj == {"tokens": ["p", "q"], "id": 7, "labels": ["A", "B"]}

    def test_count_mismatch(self, tmp_path):
        corpus = read_corpus(_write(tmp_path, "in.txt", DOCS))
        with pytest.raises(AlignmentMismatchError):
            format_predictions(corpus, [["pos"]])

    def test_align_corpora_token(self, tmp_path):
        gold = read_corpus(_write(tmp_path, "gold.tsv", TSV))
        pred = read_corpus(_write(tmp_path, "pred.tsv", "the\tDET\ndog\tNOUN\n\nruns\tVERB\n"))
        with pytest.raises(AlignmentMismatchError) as excinfo:
            align_corpora(pred, gold)
        assert (excinfo.value.sequence, excinfo.value.token) == (1, 2)

    def test_align_corpora_length(self, tmp_path):
        gold = read_corpus(_write(tmp_path, "gold.tsv", TSV))
        pred = read_corpus(_write(tmp_path, "pred.tsv", "the\tDET\n\nruns\tVERB\n"))
        with pytest.raises(AlignmentMismatchError, match="sequence 1, token 2"):
            align_corpora(pred, gold)

    def test_align_corpora_sequence_count(self, tmp_path):
        gold = read_corpus(_write(tmp_path, "gold.tsv", TSV))
        pred = read_corpus(_write(tmp_path, "pred.tsv", "the\tDET\ncat\tNOUN\n"))
        with pytest.raises(AlignmentMismatchError, match="gold has 2") as excinfo:
            align_corpora(pred, gold)
        assert (excinfo.value.sequence, excinfo.value.token) == (2, None)


class TestModelSerialization:
    """Tests for model files."""

    def test_generative_roundtrip(self, hmc_model_file, sticky_hmc):
        loaded = load_model(hmc_model_file)
        assert loaded.kind is ModelKind.HMC
        assert loaded.labels == sticky_hmc.labels
        for name, table in sticky_hmc.tables.items():
            np.testing.assert_array_equal(loaded.table(name), table)

    def test_units_roundtrip(self, sticky_hmc, temp_output_dir):
        units = bayes_invert(sticky_hmc, horizon=3)
        loaded = load_model(save_model(temp_output_dir / "units.json", units))
        assert isinstance(loaded, DiscriminativeUnits)
        assert loaded.marginal_mode == "propagated"
        np.testing.assert_array_equal(loaded.table("posterior"), units.table("posterior"))

    def test_heads_roundtrip(self, nb_model, temp_output_dir):
        head = FeatureHead(np.array([[1.0, -2.0], [0.5, 0.0]]), np.array([0.1, -0.1]))
        tables = {"prior": nb_model.table("prior")}
        heads = {"posterior": head}
        units = DiscriminativeUnits(ModelKind.NB, nb_model.labels, None, tables, heads)
        data = model_to_dict(units)
        assert data["observations"] is None
        assert data["heads"]["posterior"]["d"] == 2
        loaded = model_from_dict(json.loads(json.dumps(data)))
        np.testing.assert_array_equal(loaded.heads["posterior"].W, head.W)

    def test_missing_schema_version(self, nb_model):
        data = model_to_dict(nb_model)
        del data["schema_version"]
        with pytest.raises(DataFormatError, match="schema_version"):
            model_from_dict(data)

    def test_invalid_tables(self, nb_model, temp_output_dir):
        data = model_to_dict(nb_model)
        data["tables"]["prior"] = [0.7, 0.7]
        path = temp_output_dir / "bad.json"
        path.write_text(json.dumps(data))
        with pytest.raises(ModelValidationError):
            load_model(path)
        assert load_model(path, validate=False).kind is ModelKind.NB

    def test_invalid_json(self, temp_output_dir):
        path = temp_output_dir / "broken.json"
        path.write_text("{")
        with pytest.raises(DataFormatError, match="broken.json"):
            load_model(path)

    def test_generative_needs_observations(self, nb_model):
        data = model_to_dict(nb_model)
        data["observations"] = None
        with pytest.raises(DataFormatError):
            model_from_dict(data)


class TestTrainingLog:
    """Tests for JSON-lines training logs."""

    def test_roundtrip(self, temp_output_dir):
        history = {"posterior": [0.9, 0.5], "pair_posterior": [1.2]}
        path = write_training_log(temp_output_dir / "train.jsonl", history)
        first = json.loads(path.read_text().splitlines()[0])
        assert first == {"unit": "posterior", "epoch": 1, "loss": 0.9}
        assert read_training_log(path) == history

    def test_bad_record(self, temp_output_dir):
        path = temp_output_dir / "bad.jsonl"
        path.write_text('{"unit": "posterior"}\n')
        with pytest.raises(DataFormatError):
            read_training_log(path)


class TestBuildOutputPaths:
    """Tests for output path generation."""

    def test_creates_paths(self, temp_output_dir):
        paths = build_output_paths("nb_d8_seed0", output_dir=temp_output_dir, create=False)
        assert isinstance(paths, OutputPaths)
        assert paths.root == temp_output_dir
        assert paths.report.name == "nb_d8_seed0_report.json"
        assert paths.training_log.suffix == ".jsonl"

    def test_default_structure(self):
        paths = build_output_paths("run", create=False)
        assert paths.root.parts[-2:] == ("experiments", "run")
        assert paths.plots.name == "plots"

    def test_creates_directories(self, tmp_path):
        paths = build_output_paths("run", output_dir=tmp_path / "new_dir")
        assert paths.root.exists()
        assert paths.plots.exists()

    def test_get_plot_path(self, temp_output_dir):
        paths = build_output_paths("run", output_dir=temp_output_dir)
        assert paths.get_plot_path("loss", "svg").name == "run_loss.svg"

    def test_refuses_overwrite(self, temp_output_dir):
        paths = build_output_paths("run", output_dir=temp_output_dir)
        paths.report.write_text("{}")
        assert paths.exists()
        with pytest.raises(GendiscError, match="exists"):
            build_output_paths("run", output_dir=temp_output_dir, overwrite=False)
