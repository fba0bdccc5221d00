import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from nvpl.cli import TRAJECTORY_COLUMNS, main, parse_grid, parse_series

SEQ1 = """\
sequence seq1 {
  pulse minus pi/2 phase 0
  cpulse plus detuning 250kHz rabi 500kHz cycles 2
  pulse minus pi/2 phase 0
}
"""


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "seq1.seq").write_text(SEQ1)
    return tmp_path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_run_writes_trajectory_and_summary(workdir):
    assert main(["run", "seq1.seq"]) == 0
    rows = read_csv(workdir / "seq1.csv")
    assert tuple(rows[0]) == TRAJECTORY_COLUMNS
    final = [float(v) for v in rows[-1][1:7]]
    p0 = final[2] ** 2 + final[3] ** 2
    x = 250e3 / np.hypot(250e3, 500e3)
    assert p0 == pytest.approx(np.sin(np.pi * (1 + x)) ** 2, abs=1e-9)
    summary = json.loads((workdir / "seq1.json").read_text())
    assert summary["stepped_vs_exact_fidelity"] > 1 - 1e-9
    assert summary["final_populations"]["zero"] == pytest.approx(p0, abs=1e-9)
    cpulse = summary["segments"][1]
    assert cpulse["kind"] == "cpulse"
    assert cpulse["decomposition"]["cyclic"]
    assert abs(cpulse["decomposition"]["phi_dyn"]) < 1e-6


def test_run_is_byte_identical(workdir):
    main(["run", "seq1.seq", "-o", "a"])
    main(["run", "seq1.seq", "-o", "b"])
    assert (workdir / "a.csv").read_bytes() == (workdir / "b.csv").read_bytes()
    assert (workdir / "a.json").read_bytes() == (workdir / "b.json").read_bytes()


def test_run_empty_sequence(workdir):
    (workdir / "e.seq").write_text("sequence e { }\n")
    assert main(["run", "e.seq"]) == 0
    rows = read_csv(workdir / "e.csv")
    assert len(rows) == 2
    assert float(rows[1][3]) == 1.0


def test_run_reports_parse_errors(workdir, capsys):
    (workdir / "bad.seq").write_text("sequence s {\n  cpulse plus detuning 250 rabi 500kHz cycles 1\n}\n")
    assert main(["run", "bad.seq"]) == 1
    err = capsys.readouterr().err
    assert "bad.seq:2:" in err and "missing frequency unit" in err
    assert not (workdir / "bad.csv").exists()


def test_run_reports_semantic_and_step_errors(workdir, capsys):
    (workdir / "long.seq").write_text("sequence s { wait 20us }\n")
    assert main(["run", "long.seq"]) == 1
    assert "cap" in capsys.readouterr().err
    assert main(["run", "seq1.seq", "--dt", "1e-7"]) == 1
    assert "too coarse" in capsys.readouterr().err


def test_run_missing_file_and_sequence(workdir, capsys):
    assert main(["run", "nope.seq"]) == 1
    assert main(["run", "seq1.seq", "--sequence", "other"]) == 1
    assert "no sequence named" in capsys.readouterr().err


def test_run_multiple_blocks(workdir):
    (workdir / "two.seq").write_text(SEQ1 + "\nsequence w {\n  wait 1us\n}\n")
    assert main(["run", "two.seq"]) == 0
    assert (workdir / "two.seq1.csv").exists() and (workdir / "two.w.csv").exists()
    assert main(["run", "two.seq", "--sequence", "w", "-o", "only"]) == 0
    assert (workdir / "only.csv").exists()


def test_sweep_csv_and_fit(workdir):
    code = main(["sweep", "free_fringes", "--grid", "tau=0:10e-6:41", "--set", "delta=250e3"])
    assert code == 0
    rows = read_csv(workdir / "free_fringes_tau_sweep.csv")
    assert rows[0] == ["tau", "population0", "phi_total", "phi_dyn", "phi_aa", "solid_angle"]
    assert len(rows) == 42
    side = json.loads((workdir / "free_fringes_tau_sweep.json").read_text())
    assert side["fits"][0]["period"] == pytest.approx(4e-6, rel=1e-3)


def test_sweep_series_and_seeded_shots(workdir):
    args = ["sweep", "seq1", "--grid", "delta=-5e5:5e5:11", "--series", "n_cycles=1,2", "--shots", "200"]
    assert main(args + ["-o", "a", "--seed", "3"]) == 0
    assert main(args + ["-o", "b", "--seed", "3"]) == 0
    assert main(args + ["-o", "c", "--seed", "4"]) == 0
    a, b, c = ((workdir / f"{n}.csv").read_bytes() for n in "abc")
    assert a == b and a != c
    rows = read_csv(workdir / "a.csv")
    assert rows[0][:2] == ["delta", "n_cycles"] and len(rows) == 23


def test_sweep_random_grid_is_seeded():
    _, a = parse_grid("phi0=random:0:6.283:16", np.random.default_rng(1))
    _, b = parse_grid("phi0=random:0:6.283:16", np.random.default_rng(1))
    assert np.array_equal(a, b) and np.all(np.diff(a) > 0)


@pytest.mark.parametrize("spec", ["delta", "delta=1:2", "delta=a:b:3", "delta=1:1:3", "x=random:1:0:3"])
def test_malformed_grid(spec):
    with pytest.raises(ValueError, match="malformed"):
        parse_grid(spec)


def test_parse_series():
    assert parse_series("n_cycles=1,2,3") == ("n_cycles", [1, 2, 3])
    with pytest.raises(ValueError):
        parse_series("n_cycles=")


def test_sweep_usage_errors_exit_2(workdir, capsys):
    for argv in (
        ["sweep", "seq1", "--grid", "delta=1:2"],
        ["sweep", "seq1", "--grid", "bogus=0:1:3"],
        ["sweep", "seq1", "--grid", "delta=0:1:3", "--set", "rabi"],
        ["sweep", "nope", "--grid", "delta=0:1:3"],
        ["run", "seq1.seq", "--dt", "0"],
    ):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2


def test_sweep_failure_exits_1(workdir, capsys):
    assert main(["sweep", "seq3", "--grid", "delta=-1e5:1e5:3"]) == 1
    assert "delta=0.0" in capsys.readouterr().err


def test_verify_subset(workdir, capsys):
    assert main(["verify", "--only", "1,2", "-o", "report.txt"]) == 0
    out = capsys.readouterr().out
    assert "2/2 criteria passed" in out
    assert (workdir / "report.txt").read_text().strip().endswith("2/2 criteria passed")
    assert main(["verify", "--only", "99"]) == 2


def test_export_builders(workdir):
    assert main(["export-builders", "-o", "out"]) == 0
    names = sorted(p.name for p in (workdir / "out").iterdir())
    assert names == ["nested_se.seq", "seq1.seq", "seq2.seq", "seq3.seq", "seq4.seq"]
    assert main(["run", "out/seq3.seq", "-o", "s3"]) == 0


def test_plots(workdir):
    pytest.importorskip("matplotlib")
    assert main(["run", "seq1.seq", "--plot"]) == 0
    assert (workdir / "seq1.png").read_bytes()[:4] == b"\x89PNG"
    assert main(["sweep", "seq4", "--grid", "eta=0:1:5", "--set", "delta=2.5e5", "--plot", "-o", "s4"]) == 0
    assert (workdir / "s4.png").stat().st_size > 0


def test_module_entry_point(workdir):
    out = subprocess.run(
        [sys.executable, "-m", "nvpl", "verify", "--only", "2"], capture_output=True, text=True, check=False
    )
    assert out.returncode == 0
    assert "1/1 criteria passed" in out.stdout
