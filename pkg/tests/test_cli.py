import subprocess
import sys

import numpy as np
import pytest

from acreactor.cli import main
from acreactor.instance_io import parse_airland, parse_machine_report, parse_rh_panel, parse_tsplib, write_tsplib
from acreactor.problems import TspInstance


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def files(tmp_path, capsys):
    paths = {}
    for kind, name, extra in [("tsp-random", "t8.tsp", ["--n", 8]),
                              ("alsp-random", "a5.txt", ["--p", 5]),
                              ("rh-planted", "r8.rh", ["--m", 8, "--k", 12])]:
        path = tmp_path / name
        assert run(capsys, "gen", kind, *extra, "--seed", 3, "--out", path)[0] == 0
        paths[kind] = path
    return paths


def test_gen_tsp_deterministic(capsys):
    a = run(capsys, "gen", "tsp-random", "--n", 50, "--seed", 1)[1]
    b = run(capsys, "gen", "tsp-random", "--n", 50, "--seed", 1)[1]
    assert a == b
    inst = parse_tsplib(a)
    assert inst.n == 50 and inst.scale == 1000
    assert "scale=1000" in a


def test_gen_rh_planted_mass(capsys):
    text = run(capsys, "gen", "rh-planted", "--m", 6, "--k", 10, "--noise", 0)[1]
    panel = parse_rh_panel(text)
    assert panel.mass(range(6)) == 5


def test_gen_alsp_reparses(capsys):
    for seed in range(5):
        text = run(capsys, "gen", "alsp-random", "--p", 12, "--seed", seed)[1]
        inst = parse_airland(text)
        assert all(a.earliest <= a.target <= a.latest for a in inst.aircraft)


@pytest.mark.parametrize("argv", [
    ["gen", "tsp-random", "--n", "1"],
    ["gen", "rh-planted", "--noise", "1.5"],
    ["gen", "rh-planted", "--m", "10", "--k", "3"],
    ["gen", "alsp-random", "--p", "0"],
    ["solve"],
    ["solve", "--tsp", "x.tsp", "--repeats", "0"],
    ["bogus"],
])
def test_usage_errors(capsys, argv):
    # argparse rejections exit directly; semantic checks return the code
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_solve_deterministic_machine(files, capsys):
    args = ["solve", "--tsp", files["tsp-random"], "--repeats", 1, "--seed", 5, "--format", "machine"]
    a = run(capsys, *args)
    b = run(capsys, *args)
    assert a[0] == b[0] == 0
    assert a[1] == b[1]
    doc = parse_machine_report(a[1])
    assert doc.repeats == 1 and len(doc.groups) == 1


def test_solve_three_groups(files, capsys):
    code, out, _ = run(capsys, "solve", "--tsp", files["tsp-random"], "--alsp", files["alsp-random"],
                       "--rh", files["rh-planted"], "--repeats", 2, "--seed", 0, "--format", "machine")
    assert code == 0
    doc = parse_machine_report(out)
    assert [g.kind for g in doc.groups] == ["tsp", "alsp", "rh"]
    assert all(g.counts["R2"] > 0 for g in doc.groups)


def test_solve_table_repeats(files, capsys):
    code, out, _ = run(capsys, "solve", "--tsp", files["tsp-random"], "--repeats", 3, "--seed", 2)
    assert code == 0
    row = [line for line in out.splitlines() if "tour length" in line][0]
    assert "(" in row and ")" in row


def test_solve_parallel_matches_serial(files, capsys):
    base = ["solve", "--tsp", files["tsp-random"], "--repeats", 3, "--seed", 1, "--format", "machine"]
    serial = run(capsys, *base)[1]
    parallel = run(capsys, *base, "--jobs", 2)[1]
    assert serial == parallel


def test_solve_config_file(files, tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"[reactor]\nseed = 3\nmax_epochs = 50\n[instances]\nrh = {files['rh-planted'].name}\n"
                   "repeats = 2\nrh_capacity = 10\n")
    code, out, _ = run(capsys, "solve", "--config", cfg, "--format", "machine")
    assert code == 0
    doc = parse_machine_report(out)
    assert doc.seed == 3 and doc.repeats == 2 and doc.groups[0].kind == "rh"


def test_parse_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.rh"
    bad.write_text("M1 101\nM2 0019\n")
    code, _, err = run(capsys, "solve", "--rh", bad)
    assert code == 2 and "bad.rh:2:" in err
    code, _, err = run(capsys, "solve", "--tsp", tmp_path / "missing.tsp")
    assert code == 2


def test_oracle_check_all_equal_triangle(tmp_path, capsys):
    path = tmp_path / "tri.tsp"
    path.write_text(write_tsplib(TspInstance(np.ones((3, 3)) - np.eye(3), symmetric=True, name="tri")))
    code, out, _ = run(capsys, "oracle-check", "--tsp", path, "--format", "machine")
    assert code == 0
    assert "group.0.gap=0.0" in out


def test_oracle_check_eight_cities(tmp_path, capsys):
    hits = 0
    for seed in range(5):
        path = tmp_path / f"c{seed}.tsp"
        run(capsys, "gen", "tsp-random", "--n", 8, "--seed", seed, "--out", path)
        code, out, _ = run(capsys, "oracle-check", "--tsp", path, "--capacity", 40, "--reactions", 200,
                           "--seed", seed, "--format", "machine")
        assert code == 0
        hits += "group.0.gap=0.0\n" in out
    assert hits >= 3


def test_oracle_check_refuses_twelve_cities(tmp_path, capsys):
    path = tmp_path / "c12.tsp"
    run(capsys, "gen", "tsp-random", "--n", 12, "--out", path)
    code, _, err = run(capsys, "oracle-check", "--tsp", path)
    assert code == 1 and "refused" in err


def test_oracle_check_mixed_groups(files, capsys):
    code, out, _ = run(capsys, "oracle-check", "--alsp", files["alsp-random"], "--rh", files["rh-planted"],
                       "--seed", 0, "--format", "machine")
    assert code == 0
    assert "group.1.kind=rh" in out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "acreactor", "gen", "rh-planted", "--m", "3", "--k", "4"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert parse_rh_panel(proc.stdout).markers == 3
