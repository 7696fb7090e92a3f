import numpy as np
import pytest

from msdiff.cli import main

SMALL = """
[grid]
dim = 1
cells = 20
initial_condition = paper-1d

[mixture]
species = 3
b.1.2 = 1/0.833
b.1.3 = 1/0.833
b.2.3 = 1/0.168

[solver]
dt = 0.001
steps = 10

[output]
dir = {out}
"""


def _write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_run_subcommand(tmp_path, capsys):
    out = tmp_path / "run_out"
    cfg = _write(tmp_path, SMALL.format(out=out))
    assert main(["run", "--config", cfg]) == 0
    for name in ("config.ini", "history.csv", "snapshot_initial.csv",
                 "snapshot_final.csv", "audit.txt", "history.png",
                 "snapshot_final.png"):
        assert (out / name).exists(), name
    assert "audit:                     PASS" in (out / "audit.txt").read_text()


def test_run_deterministic(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    cfg = _write(tmp_path, SMALL.format(out=tmp_path / "ignored"))
    assert main(["run", "--config", cfg, "--out", str(out1), "--quiet"]) == 0
    assert main(["run", "--config", cfg, "--out", str(out2), "--quiet"]) == 0
    for name in ("history.csv", "snapshot_final.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_run_zero_steps_snapshot_only(tmp_path):
    out = tmp_path / "zero_out"
    cfg = _write(tmp_path, SMALL.format(out=out).replace("steps = 10", "steps = 0"))
    assert main(["run", "--config", cfg, "--quiet"]) == 0
    initial = (out / "snapshot_initial.csv").read_bytes()
    final = (out / "snapshot_final.csv").read_bytes()
    assert initial == final


def test_emit_fields_every(tmp_path):
    out = tmp_path / "periodic_out"
    text = SMALL.format(out=out).replace(
        "[output]", "[output]\nemit_fields_every = 4")
    cfg = _write(tmp_path, text)
    assert main(["run", "--config", cfg, "--quiet"]) == 0
    assert (out / "snapshot_000004.csv").exists()
    assert (out / "snapshot_000008.csv").exists()
    assert (out / "snapshot_000010.csv").exists()


def test_bad_config_exit_code(tmp_path, capsys):
    bad = SMALL.format(out=tmp_path).replace("b.2.3 = 1/0.168", "b.2.3 = -4")
    cfg = _write(tmp_path, bad)
    assert main(["run", "--config", cfg]) == 2
    assert "config error" in capsys.readouterr().err


def test_zero_dt_rejected_at_parse(tmp_path):
    bad = SMALL.format(out=tmp_path).replace("dt = 0.001", "dt = 0")
    cfg = _write(tmp_path, bad)
    assert main(["verify", "--config", cfg]) == 2


def test_verify_subcommand(tmp_path, capsys):
    assert main(["verify", "--seed", "20240817"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert sum(1 for ln in lines if ln.startswith("[PASS]")) == 8


def test_truncation_subcommand(tmp_path):
    out = tmp_path / "trunc"
    assert main(["truncation", "--out", str(out), "--quiet"]) == 0
    assert (out / "truncation.csv").exists()
    assert (out / "truncation.png").exists()


def test_converge_time_subcommand(tmp_path, capsys):
    out = tmp_path / "ct"
    assert main(["converge-time", "--out", str(out)]) == 0
    assert (out / "convergence_time.csv").exists()
    assert (out / "convergence_time.png").exists()
    assert "fitted slope" in capsys.readouterr().out


def test_config_echo_reparses(tmp_path):
    out = tmp_path / "echo_out"
    cfg = _write(tmp_path, SMALL.format(out=out))
    assert main(["run", "--config", cfg, "--quiet"]) == 0
    from msdiff.config import load_config, parse_config
    original = load_config(cfg)
    echoed = parse_config((out / "config.ini").read_text())
    assert echoed.grid == original.grid
    assert np.array_equal(echoed.friction.b, original.friction.b)
    assert echoed.dt == original.dt and echoed.steps == original.steps
