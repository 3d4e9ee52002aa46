"""CLI: exit codes, artifact layout, manifests, end-to-end pipeline."""

import json

import numpy as np
import pytest

from accelcough.cli import main, roc_svg
from accelcough.evaluation import REPORT_COLUMNS

TINY_FLAGS = ["--n-patients", "3", "--coughs-per-patient", "4",
              "--non-coughs-per-patient", "8", "--seed", "7"]
FAST_PARAMS = json.dumps({"conv_filters": 2, "kernel_size": 2, "dropout_rate": 0.1,
                          "dense_size": 4, "learning_rate": 0.01, "batch_size": 8,
                          "epochs": 2})


@pytest.fixture(scope="module")
def work(tmp_path_factory):
    """One pipeline run shared by the inspection tests below."""
    root = tmp_path_factory.mktemp("cli")
    corpus = root / "corpus"
    features = root / "features"
    model = root / "model.json"
    scores = root / "scores.csv"
    cv = root / "cv"
    report = root / "report"

    assert main(["synth", "--out", str(corpus), *TINY_FLAGS]) == 0
    assert main(["detect", "--signal", str(corpus / "signals" / "P01.csv"),
                 "--out", str(root / "detected.csv")]) == 0
    assert main(["featurize", "--corpus", str(corpus), "--out", str(features),
                 "--frame-len", "16", "--segments", "5"]) == 0
    assert main(["train", "--features", str(features), "--classifier", "cnn",
                 "--params", FAST_PARAMS, "--seed", "0", "--out", str(model)]) == 0
    assert main(["predict", "--model", str(model), "--features", str(features),
                 "--out", str(scores)]) == 0
    assert main(["crossval", "--corpus", str(corpus), "--out", str(cv),
                 "--frame-len", "16", "--segments", "5", "--classifier", "cnn",
                 "--params", FAST_PARAMS, "--seed", "0"]) == 0
    assert main(["report", "--crossval", str(cv), "--out", str(report)]) == 0
    return root


# ---------------------------------------------------------------------------
# exit codes


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    assert "crossval" in capsys.readouterr().out


def test_unknown_flag_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["synth", "--out", "x", "--bogus", "1"])
    assert exc.value.code == 2


def test_missing_command_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2


def test_missing_input_exits_2(tmp_path, capsys):
    code = main(["featurize", "--corpus", str(tmp_path / "nope"),
                 "--out", str(tmp_path / "f")])
    assert code == 2
    err = capsys.readouterr().err
    assert "usage error:" in err and "nope" in err


def test_bad_params_json_exits_2(tmp_path, capsys):
    code = main(["train", "--features", str(tmp_path), "--params", "{broken",
                 "--out", str(tmp_path / "m.json")])
    assert code == 2
    assert "usage error:" in capsys.readouterr().err


def test_invalid_config_value_exits_1(tmp_path, capsys):
    code = main(["synth", "--out", str(tmp_path / "c"), "--noise-rms", "-1.0"])
    assert code == 1
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# artifacts


def _check_manifest(path, command):
    doc = json.loads(path.read_text())
    assert set(doc) == {"command", "config", "outputs"}
    assert doc["command"] == command
    assert doc["outputs"] == sorted(doc["outputs"])
    return doc


def test_corpus_layout(work):
    corpus = work / "corpus"
    assert sorted(p.name for p in (corpus / "signals").iterdir()) == [
        "P01.csv", "P02.csv", "P03.csv"]
    assert (corpus / "annotations.csv").exists()
    manifest = json.loads((corpus / "manifest.json").read_text())
    assert manifest["n_events"] == 3 * 12


def test_detect_artifacts(work):
    lines = (work / "detected.csv").read_text().splitlines()
    assert lines[0] == "patient_id,start_s,end_s"
    assert len(lines) > 1
    for line in lines[1:]:
        pid, start_s, end_s = line.split(",")
        assert pid == "P01"
        assert float(end_s) > float(start_s) >= 0.0
    _check_manifest(work / "detected.csv.manifest.json", "detect")


def test_featurize_artifacts(work):
    features = work / "features"
    manifest = _check_manifest(features / "manifest.json", "featurize")
    assert manifest["config"]["matrix_shape"] == [5, 13]
    records = [json.loads(line) for line in
               (features / "features.jsonl").read_text().splitlines()]
    assert len(records) == 36
    assert all(np.asarray(r["matrix"]).shape == (5, 13) for r in records)
    assert {r["label"] for r in records} == {"cough", "non-cough"}


def test_train_artifacts(work):
    doc = json.loads((work / "model.json").read_text())
    assert doc["format"].startswith("accelcough.model/")
    assert doc["classifier"] == "CnnClassifier"
    assert doc["hyperparameters"]["conv_filters"] == 2
    assert doc["feature_config"] == {"frame_len": 16, "segments": 5,
                                     "log_epsilon": 1e-10}
    _check_manifest(work / "model.json.manifest.json", "train")


def test_predict_scores_parse(work):
    lines = (work / "scores.csv").read_text().splitlines()
    assert lines[0] == "event_id,patient_id,label,score,predicted"
    assert len(lines) == 1 + 36
    for line in lines[1:]:
        event_id, patient_id, label, score, predicted = line.split(",")
        assert 0.0 <= float(score) <= 1.0
        assert predicted in ("cough", "non-cough")
        assert patient_id in ("P01", "P02", "P03")
    _check_manifest(work / "scores.csv.manifest.json", "predict")


def test_crossval_artifacts(work):
    cv = work / "cv"
    report_lines = (cv / "report.csv").read_text().splitlines()
    assert report_lines[0].split(",") == list(REPORT_COLUMNS)
    assert len(report_lines) == 2
    extended = (cv / "report_extended.csv").read_text().splitlines()
    assert extended[0].split(",")[: len(REPORT_COLUMNS)] == list(REPORT_COLUMNS)
    assert len(extended[0].split(",")) > len(REPORT_COLUMNS)
    assert (cv / "folds_roc.csv").exists()
    mean_lines = (cv / "mean_roc.csv").read_text().splitlines()
    assert mean_lines[0] == "fpr,mean_tpr"
    assert len(mean_lines) == 1 + 101
    manifest = _check_manifest(cv / "manifest.json", "crossval")
    assert manifest["config"]["grid"] is False


def test_report_svg(work):
    svg = (work / "report" / "roc.svg").read_text()
    assert svg.startswith("<svg ")
    assert svg.rstrip().endswith("</svg>")
    assert "polyline" in svg
    _check_manifest(work / "report" / "manifest.json", "report")


def test_roc_svg_is_deterministic():
    fpr = np.linspace(0, 1, 5)
    tpr = np.sqrt(fpr)
    assert roc_svg([("cnn", fpr, tpr)]) == roc_svg([("cnn", fpr, tpr)])


# ---------------------------------------------------------------------------
# reruns and failure modes


def test_synth_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["synth", "--out", str(a), *TINY_FLAGS]) == 0
    assert main(["synth", "--out", str(b), *TINY_FLAGS]) == 0
    rel_a = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file())
    rel_b = sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file())
    assert rel_a == rel_b
    for rel in rel_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_predict_with_corrupt_model_exits_1(work, tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{\"format\": \"accelcough.model/1\"")  # truncated JSON
    code = main(["predict", "--model", str(bad), "--features",
                 str(work / "features"), "--out", str(tmp_path / "s.csv")])
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_train_on_nan_features_is_numeric_error(work, tmp_path, capsys):
    src = work / "features"
    dst = tmp_path / "poisoned"
    dst.mkdir()
    (dst / "manifest.json").write_text((src / "manifest.json").read_text())
    records = [json.loads(line) for line in
               (src / "features.jsonl").read_text().splitlines()]
    records[0]["matrix"][0][0] = float("nan")
    with open(dst / "features.jsonl", "w") as fh:
        for record in records:
            fh.write(json.dumps(record) + "\n")
    code = main(["train", "--features", str(dst), "--params", FAST_PARAMS,
                 "--out", str(tmp_path / "m.json")])
    assert code == 1
    assert "numeric error:" in capsys.readouterr().err
