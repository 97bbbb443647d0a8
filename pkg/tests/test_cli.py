import subprocess
import sys

import pytest

from sasfield.cli import main
from sasfield.experiment import ResultTable

CFG = """
kernel.family = product
kernel.alpha = 1.5
kernel.components = translation, torus_rotation
lattice.taus = 1, 2, 3, 4
run.replications = 3
run.seed = 3
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "exp.cfg"
    p.write_text(CFG)
    return p


def test_maxima_writes_table_and_report(cfg_path, tmp_path):
    out = tmp_path / "res.csv"
    assert main(["maxima", "--config", str(cfg_path), "--out", str(out), "--jobs", "1"]) == 0
    t = ResultTable.read(out)
    assert len(t) == 3 * 4 * 2 and {r["operation"] for r in t.records()} == {"maxima"}
    assert (tmp_path / "res.report.txt").exists() and (tmp_path / "res.summary.csv").exists()


def test_seed_flag_overrides(cfg_path, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["maxima", "--config", str(cfg_path), "--out", str(a), "--jobs", "1"])
    main(["maxima", "--config", str(cfg_path), "--out", str(b), "--jobs", "1", "--seed", "4"])
    ra, rb = ResultTable.read(a).records(), ResultTable.read(b).records()
    assert ra[0]["seed"] == "3:0" and rb[0]["seed"] == "4:0"
    assert ra[0]["value"] != rb[0]["value"]


def test_classify_to_stdout(cfg_path, capsys):
    assert main(["classify", "--config", str(cfg_path)]) == 0
    assert "conservative" in capsys.readouterr().out


def test_config_error_exit_2(tmp_path, capsys):
    p = tmp_path / "bad.cfg"
    p.write_text("kernel.family = translation\nkernel.alpha = 2.0\nrun.seed = 1\n")
    assert main(["maxima", "--config", str(p)]) == 2
    assert "open interval" in capsys.readouterr().err
    assert main(["maxima", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["maxima"]) == 2


def test_resource_error_exit_3(tmp_path):
    p = tmp_path / "big.cfg"
    p.write_text("kernel.family = translation\nkernel.alpha = 1.5\nlattice.taus = 100000\nrun.seed = 1\n")
    assert main(["simulate", "--config", str(p), "--jobs", "1"]) == 3


def test_data_error_exit_4(tmp_path):
    p = tmp_path / "table.csv"
    p.write_text("not,a,result,table\n")
    assert main(["report", str(p)]) == 4
    assert main(["report", str(tmp_path / "nope.csv")]) == 4


def test_report_subcommand(cfg_path, tmp_path, capsys):
    out = tmp_path / "res.csv"
    main(["maxima", "--config", str(cfg_path), "--out", str(out), "--jobs", "1"])
    assert main(["report", str(out)]) == 0
    assert "M_tau/b_tau" in capsys.readouterr().out
    summary = tmp_path / "summary.txt"
    assert main(["report", str(out), "--out", str(summary)]) == 0
    assert summary.exists() and (tmp_path / "summary.summary.csv").exists()


def test_module_entry_point(cfg_path):
    proc = subprocess.run(
        [sys.executable, "-m", "sasfield", "classify", "--config", str(cfg_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and "verdict" in proc.stdout
