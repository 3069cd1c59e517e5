import csv
import subprocess
import sys

from .conftest import write_port_separable_trace


def run_cli(*args):
    return subprocess.run([sys.executable, "-m", "flowtrainer.cli", *args],
                          capture_output=True, text=True)


def test_default_config_is_one_epoch():
    from flowtrainer.train import TrainerConfig

    assert TrainerConfig().epochs == 1


def test_train_then_export_pipeline(tmp_path):
    trace = tmp_path / "t.csv"
    write_port_separable_trace(trace, num_large=10, num_small=40)
    model_path = tmp_path / "model.pt"
    out = run_cli("train", "--trace", str(trace), "--model", "logistic",
                  "--seed", "4", "--out", str(model_path))
    assert out.returncode == 0, out.stderr
    assert "train accuracy" in out.stdout
    assert model_path.exists()

    preds = tmp_path / "preds.csv"
    out = run_cli("export", "--model", str(model_path), "--trace", str(trace),
                  "--out", str(preds))
    assert out.returncode == 0, out.stderr
    with open(preds, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["flow_key_hex", "score"]
    assert len(rows) == 1 + 50


def test_missing_trace_fails_cleanly(tmp_path):
    out = run_cli("train", "--trace", str(tmp_path / "absent.csv"),
                  "--model", "logistic", "--out", str(tmp_path / "m.pt"))
    assert out.returncode == 1
    assert "error:" in out.stderr
