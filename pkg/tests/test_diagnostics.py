import csv
import dataclasses

import numpy as np
import pytest

from msdiff.diagnostics import (TwoSpeciesHeatMode, audit_run, constant_reference,
                                fit_slope, grid_for_h, heat_mode_error,
                                spatial_convergence, temporal_convergence,
                                truncation_probe, truncation_residuals,
                                write_convergence_csv, write_history_csv,
                                write_snapshot_csv)
from msdiff.grid import GridSpec
from msdiff.initial_conditions import sample_builtin
from msdiff.stepper import StepConfig, advance, initial_state


def test_fit_slope_exact_power_law():
    h = np.array([0.1, 0.05, 0.025, 0.0125])
    slope, stderr = fit_slope(h, 3.0 * h ** 2)
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert stderr == pytest.approx(0.0, abs=1e-10)


def test_fit_slope_rejects_duplicates():
    with pytest.raises(ValueError, match="degenerate"):
        fit_slope([0.1, 0.1, 0.2, 0.4], [1, 1, 2, 3])


def test_grid_for_h():
    assert grid_for_h(0.01).cells_per_axis == 100
    with pytest.raises(ValueError):
        grid_for_h(0.3)


def test_audit_zero_step_run(paper_friction):
    g = GridSpec(dim=1, cells_per_axis=20)
    state = initial_state(g, paper_friction, sample_builtin("paper-1d", g))
    summary = audit_run(state)
    assert summary.steps == 0
    assert summary.max_pointwise_mass_drift == 0.0
    assert summary.max_species_mass_drift == 0.0
    assert summary.energy_violations == 0
    assert summary.passed


def test_audit_flags_corrupted_history(short_paper_run):
    bad_diag = dataclasses.replace(short_paper_run.history[-1], min_density=-1e-3)
    corrupted = dataclasses.replace(
        short_paper_run, history=short_paper_run.history[:-1] + (bad_diag,))
    summary = audit_run(corrupted)
    assert summary.min_density < 0
    assert not summary.passed


def test_audit_counts_energy_violations(short_paper_run):
    bad_diag = dataclasses.replace(short_paper_run.history[-1],
                                   energy=short_paper_run.history[0].energy + 1.0)
    corrupted = dataclasses.replace(
        short_paper_run, history=short_paper_run.history[:-1] + (bad_diag,))
    assert audit_run(corrupted).energy_violations == 1


def test_constant_reference_matches_profile_mean():
    ref = constant_reference(lambda g: sample_builtin("paper-1d", g))
    assert ref == pytest.approx([0.7, 1e-4, 0.2999], abs=1e-12)


def test_single_value_study_omits_slope(paper_friction):
    ic = lambda g: sample_builtin("paper-1d", g)
    rep = spatial_convergence(ic, paper_friction, [0.1], t_final=0.05)
    assert rep.slope_linf is None
    assert len(rep.err_linf) == 1


def test_duplicate_dt_values_degenerate(paper_friction):
    ic = lambda g: sample_builtin("paper-1d", g)
    with pytest.raises(ValueError, match="degenerate"):
        temporal_convergence(ic, paper_friction, [0.05, 0.05], t_final=0.1)


def test_heat_mode_solves_continuum_system():
    # residuals of the manufactured solution shrink like dt + h^2, so it
    # really does solve the continuum equations
    sol = TwoSpeciesHeatMode()
    coarse = truncation_residuals(sol, grid_for_h(0.02), 0.002)
    fine = truncation_residuals(sol, grid_for_h(0.01), 0.001)
    assert all(f < c for c, f in zip(coarse, fine))
    assert max(fine) < 0.2


def test_truncation_trivial_constant_state():
    sol = TwoSpeciesHeatMode(amplitude=0.0)  # constant P, zero V
    taus = truncation_residuals(sol, grid_for_h(0.05), 0.01)
    assert taus == (0.0, 0.0, 0.0)


def test_truncation_probe_report():
    rep = truncation_probe([0.02, 0.01], [0.002, 0.001])
    assert rep.tau1.shape == (2, 2)
    assert np.all(rep.tau1 >= 0) and np.isfinite(rep.joint_fit_constant)
    # sup norms bounded by the fitted C * (dt + h^2) by construction
    scale = rep.dt_values[None, :] + rep.h_values[:, None] ** 2
    assert np.all(rep.tau1 <= rep.joint_fit_constant * scale + 1e-15)


def test_heat_mode_error_decreases_under_refinement():
    sol = TwoSpeciesHeatMode()
    e_coarse = heat_mode_error(sol, 0.05, 0.005)
    e_fine = heat_mode_error(sol, 0.025, 0.0025)
    assert e_fine < e_coarse


def test_history_csv_round_trip(tmp_path, short_paper_run):
    path = tmp_path / "history.csv"
    write_history_csv(short_paper_run, path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(short_paper_run.history)
    last = short_paper_run.history[-1]
    assert float(rows[-1]["energy"]) == last.energy  # 17 digits round-trip
    assert float(rows[-1]["min_rho"]) == last.min_density


def test_snapshot_csv_shapes(tmp_path, paper_friction):
    g1 = GridSpec(dim=1, cells_per_axis=10)
    rho1 = sample_builtin("paper-1d", g1)
    p1 = tmp_path / "snap1.csv"
    write_snapshot_csv(rho1, g1, p1)
    with open(p1, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x", "rho_1", "rho_2", "rho_3"]
    assert len(rows) == 11

    g2 = GridSpec(dim=2, cells_per_axis=5)
    rho2 = sample_builtin("paper-2d", g2)
    p2 = tmp_path / "snap2.csv"
    write_snapshot_csv(rho2, g2, p2)
    with open(p2, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:2] == ["x", "y"]
    assert len(rows) == 26


def test_convergence_csv(tmp_path, paper_friction):
    ic = lambda g: sample_builtin("paper-1d", g)
    rep = spatial_convergence(ic, paper_friction, [0.1, 0.2], t_final=0.05)
    path = tmp_path / "conv.csv"
    write_convergence_csv(rep, path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert float(rows[0]["param"]) == pytest.approx(0.1)
