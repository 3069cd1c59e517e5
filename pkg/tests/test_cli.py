import json
import subprocess
import sys


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "flowsketch", *args],
                          capture_output=True, text=True, cwd=cwd)


class TestCli:
    def test_generate_run_plot_pipeline(self, tmp_path):
        trace = tmp_path / "trace.csv"
        out = run_cli("generate", "--num-flows", "200", "--num-packets", "2000",
                      "--zipf-alpha", "1.0", "--seed", "5", "--out", str(trace))
        assert out.returncode == 0, out.stderr
        assert trace.exists()

        report = tmp_path / "report.json"
        out = run_cli("run", "--trace", str(trace), "--memory", "4KB,8KB",
                      "--mode", "size", "--backend", "oracle", "--seed", "5",
                      "--light-counter-bits", "32", "--out", str(report), "--plot")
        assert out.returncode == 0, out.stderr
        doc = json.loads(report.read_text())
        assert len(doc["runs"]) == 2
        assert (tmp_path / "report.metrics.csv").exists()
        assert (tmp_path / "report_are.png").exists()

        out = run_cli("plot", str(report), "--outdir", str(tmp_path / "figs"))
        assert out.returncode == 0, out.stderr
        assert (tmp_path / "figs" / "report_are.png").exists()

    def test_run_determinism_byte_identical(self, tmp_path):
        trace = tmp_path / "trace.csv"
        run_cli("generate", "--num-flows", "100", "--num-packets", "1000", "--out", str(trace))
        blobs = []
        for name in ("a.json", "b.json"):
            report = tmp_path / name
            out = run_cli("run", "--trace", str(trace), "--memory", "8KB",
                          "--seed", "3", "--out", str(report))
            assert out.returncode == 0, out.stderr
            doc = json.loads(report.read_text())
            doc.pop("generated_at")
            blobs.append(json.dumps(doc, sort_keys=False))
        assert blobs[0] == blobs[1]

    def test_missing_trace_is_input_error(self, tmp_path):
        out = run_cli("run", "--trace", str(tmp_path / "nope.csv"), "--memory", "8KB",
                      "--out", str(tmp_path / "r.json"))
        assert out.returncode == 3
        assert "input error" in out.stderr

    def test_too_small_budget_is_config_error(self, tmp_path):
        trace = tmp_path / "trace.csv"
        run_cli("generate", "--num-flows", "10", "--num-packets", "100", "--out", str(trace))
        out = run_cli("run", "--trace", str(trace), "--memory", "64",
                      "--out", str(tmp_path / "r.json"))
        assert out.returncode == 2
        assert "configuration error" in out.stderr

    def test_analyze_outputs_closed_forms(self):
        out = run_cli("analyze", "--accuracy-A", "0.8", "--w-light", "2048",
                      "--d-light", "3", "--n-light", "1000")
        assert out.returncode == 0
        doc = json.loads(out.stdout)
        assert 0 <= doc["cms_full_accuracy_prob"] <= 1
        assert doc["tiered_full_accuracy_prob"] >= 0.8
        assert doc["delta"] > 0

    def test_mc_lock_flag(self):
        out = run_cli("mc", "--kind", "lock", "--labels", "1,1,0,1",
                      "--trials", "20000", "--seed", "2")
        assert out.returncode == 0
        doc = json.loads(out.stdout)
        assert doc["expected_mean"] == 0.75
        assert abs(doc["mc_mean"] - 0.75) < 0.02

    def test_mc_slot_replacement(self):
        out = run_cli("mc", "--kind", "slot", "--trials", "3000", "--seed", "2")
        assert out.returncode == 0
        doc = json.loads(out.stdout)
        assert doc["expected_mean"] == 6.0
        assert abs(doc["mc_mean"] - 6.0) < 0.5

    def test_ingest_roundtrip(self, tmp_path):
        import struct

        frame = b"\xaa" * 12 + b"\x08\x00" + bytes([0x45, 0]) + (28).to_bytes(2, "big") \
            + bytes(4) + bytes([64, 17]) + bytes(2) + bytes([10, 0, 0, 1]) + bytes([10, 0, 0, 2]) \
            + (99).to_bytes(2, "big") + (53).to_bytes(2, "big") + (8).to_bytes(2, "big") + bytes(2)
        dump = tmp_path / "d.bin"
        dump.write_bytes(struct.pack("<III", 1, 0, len(frame)) + frame)
        out = run_cli("ingest", str(dump), "--out", str(tmp_path / "t.csv"))
        assert out.returncode == 0, out.stderr
        assert "1 packets" in out.stdout and "0 non-IP" in out.stdout
