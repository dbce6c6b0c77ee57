import json
import subprocess
import sys

import pytest

from coarsecausal import __version__
from coarsecausal.cli import EXIT_CONFIG, run

SMALL = ["--n", "2000", "--seed", "3"]


def read(path):
    return path.read_bytes()


class TestSimulate:
    def test_csv_with_provenance(self, tmp_path):
        out = tmp_path / "traj.csv"
        assert run(["simulate", "--n", "5", "--out", str(out), "--no-timestamp"]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == f"# coarsecausal {__version__}"
        assert lines[1].startswith("# config: ")
        cfg = json.loads(lines[1][len("# config: "):])
        assert cfg["params"]["alpha"] == 0.9 and cfg["n_samples"] == 5 and cfg["seed"] == 0
        assert lines[2] == "t,x,y" and len(lines) == 8

    def test_timestamp_present_by_default(self, tmp_path):
        out = tmp_path / "traj.csv"
        run(["simulate", "--n", "3", "--out", str(out)])
        assert any(l.startswith("# generated: ") for l in out.read_text().splitlines())

    def test_stdout(self, capsys):
        assert run(["simulate", "--n", "3", "--no-timestamp"]) == 0
        assert "t,x,y" in capsys.readouterr().out


class TestChecks:
    def test_moments(self, tmp_path, capsys):
        out = tmp_path / "m.json"
        assert run(["moments", *SMALL, "--out", str(out), "--no-timestamp"]) == 0
        doc = json.loads(out.read_text())
        assert doc["version"] == __version__ and "generated" not in doc
        assert [v["name"] for v in doc["verdicts"]] == ["mean_x", "mean_y", "c_xx", "c_xy", "c_yy"]
        assert "c_yy" in capsys.readouterr().out

    def test_negative_result(self, tmp_path):
        out = tmp_path / "n.json"
        code = run(["negative-result", "--n", "20000", "--seed", "1", "--out", str(out), "--no-timestamp"])
        doc = json.loads(out.read_text())
        assert code == 0
        assert doc["a"] == pytest.approx(0.45 / 0.55) and doc["a_prime"] == pytest.approx(1.0)

    def test_transformation_command(self, tmp_path):
        out = tmp_path / "t.json"
        code = run(["theorem1", "--n", "50000", "--seed", "2", "--out", str(out), "--no-timestamp"])
        doc = json.loads(out.read_text())
        assert code == 0, doc["verdicts"]
        assert doc["compatible"] is True

    def test_transformation_command_kernel_file(self, tmp_path):
        kfile = tmp_path / "g.json"
        kfile.write_text(json.dumps({"offset": 0, "re": [1.0, -1.0], "im": [0.0, 0.0]}))
        out = tmp_path / "t.json"
        code = run(["theorem1", "--n", "100000", "--kernel", str(kfile), "--out", str(out)])
        assert code == 0
        assert json.loads(out.read_text())["config"]["kernel"]["re"] == [1.0, -1.0]

    def test_frequency_scan(self, tmp_path):
        out = tmp_path / "f.csv"
        code = run(["frequency-scan", "--nu-grid", "8", "--T", "10", "20", "--out", str(out), "--no-timestamp"])
        assert code == 0
        rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert rows[0].split(",")[:3] == ["nu", "T", "transfer_re"]
        assert len(rows) == 1 + 16

    def test_frequency_scan_explicit_grid(self, tmp_path):
        out = tmp_path / "f.csv"
        assert run(["frequency-scan", "--nu-grid", "0.1,0.25", "--T", "15", "--out", str(out)]) == 0
        rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert [r.split(",")[0] for r in rows[1:]] == ["0.10000000000000001", "0.25"]


class TestDeterminism:
    @pytest.mark.parametrize("cmd,suffix", [
        (["simulate", "--n", "200"], "csv"),
        (["moments", *SMALL], "json"),
        (["negative-result", *SMALL], "json"),
        (["theorem1", *SMALL], "json"),
        (["frequency-scan", "--nu-grid", "4", "--T", "10"], "csv"),
    ])
    def test_byte_identical(self, tmp_path, cmd, suffix):
        out = tmp_path / f"out.{suffix}"
        run([*cmd, "--out", str(out), "--no-timestamp"])
        first = read(out)
        out.unlink()
        run([*cmd, "--out", str(out), "--no-timestamp"])
        assert read(out) == first


class TestConfig:
    def test_precedence(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"alpha": 0.3, "beta": 0.2, "seed": 9}))
        out = tmp_path / "m.json"
        run(["moments", "--config", str(cfg), "--beta", "0.7", "--n", "500", "--out", str(out)])
        doc = json.loads(out.read_text())["config"]
        assert doc["params"]["alpha"] == 0.3      # from file
        assert doc["params"]["beta"] == 0.7       # flag beats file
        assert doc["params"]["gamma"] == 0.5      # default
        assert doc["seed"] == 9

    @pytest.mark.parametrize("content", [
        '{"alpha": 1.5}', '{"bogus": 1}', '[1, 2]', 'not json', '{"n": 2}', '{"nu_grid": "0.5,1.2"}',
        '{"T": [0]}', '{"tol": -1}', '{"seed": 1.5}',
    ])
    def test_bad_config_exits_3(self, tmp_path, content, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(content)
        assert run(["moments", "--config", str(cfg)]) == EXIT_CONFIG
        assert "invalid config field" in capsys.readouterr().err

    def test_bad_flag_value(self, capsys):
        assert run(["moments", "--gamma", "-1"]) == EXIT_CONFIG
        assert "'gamma'" in capsys.readouterr().err

    def test_missing_config_file(self, tmp_path):
        assert run(["moments", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG

    def test_usage_errors_exit_3(self):
        with pytest.raises(SystemExit) as exc:
            run(["no-such-command"])
        assert exc.value.code == EXIT_CONFIG
        with pytest.raises(SystemExit) as exc:
            run(["moments", "--alpha", "abc"])
        assert exc.value.code == EXIT_CONFIG

    def test_transformation_command_rejects_complex_kernel(self, tmp_path):
        kfile = tmp_path / "g.json"
        kfile.write_text(json.dumps({"offset": 0, "re": [1.0], "im": [1.0]}))
        assert run(["theorem1", "--kernel", str(kfile)]) == EXIT_CONFIG


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "coarsecausal", "moments", "--alpha", "2"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG
    proc = subprocess.run([sys.executable, "-m", "coarsecausal", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
