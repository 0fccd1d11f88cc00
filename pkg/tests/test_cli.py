import json
import subprocess
import sys

import pytest

from elaa_detect.cli import main


def write_cfg(tmp_path, **data):
    base = {"M": 64, "N": 8, "trials": 2, "seed": 1, "solver": {"max_iters": 200}}
    base.update(data)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(base))
    return str(path)


def test_flops_command(tmp_path, capsys):
    assert main(["flops", "--n", "4,8", "--iterations", "2", "--out-dir", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "MISMATCH" not in out and out.count(" ok") == 20
    assert (tmp_path / "flops.csv").read_text().startswith("method,n,iterations,expected,measured")


def test_run_command(tmp_path, capsys):
    out_dir = tmp_path / "out"
    code = main(["run", write_cfg(tmp_path), "--out-dir", str(out_dir),
                 "--override", 'methods=["GS","I-LBFGS"]', "--seed", "4"])
    assert code == 0
    assert sorted(p.name for p in out_dir.iterdir()) == ["summary.json", "trace_GS.csv",
                                                        "trace_I-LBFGS.csv"]
    assert json.loads((out_dir / "summary.json").read_text())["seed"] == 4
    assert "I-LBFGS" in capsys.readouterr().out


def test_concentration_command(tmp_path, capsys):
    cfg = write_cfg(tmp_path, kappa=4.0, m_grid=[64, 256], trials=3)
    assert main(["concentration", cfg, "--out-dir", str(tmp_path / "t")]) == 0
    assert "PASS" in capsys.readouterr().out
    assert (tmp_path / "t" / "concentration.csv").exists()
    assert main(["theorem1", cfg, "--out-dir", str(tmp_path / "t")]) == 0
    bad = write_cfg(tmp_path, kappa=4.0, m_grid=[256, 64], trials=3)
    assert main(["concentration", bad, "--out-dir", str(tmp_path / "t")]) == 1


def test_ber_command(tmp_path, capsys):
    cfg = write_cfg(tmp_path, snr_db=[5, 25], methods=["P-SD"])
    assert main(["ber", cfg, "--out-dir", str(tmp_path / "b")]) == 0
    lines = (tmp_path / "b" / "ber.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 2


@pytest.mark.parametrize("argv", [
    ["run", "no-such-benchmark"],
    ["run", "strong_los", "--override", "kappa=-2"],
    ["flops", "--n", "4,x"],
])
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "config error" in capsys.readouterr().err


def test_console_module_entry(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "elaa_detect.cli", "flops", "--n", "4",
                           "--iterations", "1"], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
