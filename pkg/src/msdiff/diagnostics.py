"""Verification harness: run audits, convergence-order studies, and the
truncation-error probe for a manufactured two-species solution.

Error norms: both the sup norm and the grid-weighted L2 norm are reported,
aggregated by the maximum over species.  Fitted slopes come from ordinary
least squares on (log parameter, log error); at least four points are
required before a slope is asserted.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import GridSpec, average_to_edges, divergence_to_cells
from .initial_conditions import cosine_profile_two_species
from .mixture import FrictionMatrix
from .stepper import SimulationState, StepConfig, advance, initial_state

ENERGY_SLACK = 1e-10


@dataclass(frozen=True)
class AuditSummary:
    max_pointwise_mass_drift: float
    max_species_mass_drift: float
    min_density: float
    energy_violations: int
    steps: int

    @property
    def passed(self) -> bool:
        return (self.min_density > 0 and self.energy_violations == 0
                and self.max_pointwise_mass_drift <= 1e-10
                and self.max_species_mass_drift <= 1e-10)


@dataclass(frozen=True)
class ConvergenceReport:
    params: np.ndarray
    err_linf: np.ndarray
    err_l2: np.ndarray
    slope_linf: float | None
    slope_l2: float | None
    slope_stderr: float | None
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TruncationReport:
    h_values: np.ndarray
    dt_values: np.ndarray
    tau1: np.ndarray  # sup norms, indexed (h, dt)
    tau2: np.ndarray
    tau3: np.ndarray
    joint_fit_constant: float


def audit_run(state: SimulationState) -> AuditSummary:
    """Conservation / positivity / energy audit over a completed run's history."""
    hist = state.history
    if not hist:
        raise ValueError("state carries no history")
    mass0 = hist[0].species_mass
    max_species = max(float(np.max(np.abs(d.species_mass - mass0))) for d in hist)
    max_pointwise = max(d.pointwise_mass_drift for d in hist)
    min_density = min(d.min_density for d in hist)
    violations = 0
    for prev, cur in zip(hist, hist[1:]):
        lhs = cur.energy
        if np.isfinite(cur.dual_increment_sq) and np.isfinite(cur.dt):
            lhs += cur.dual_increment_sq / (2.0 * cur.dt)
        if lhs > prev.energy + ENERGY_SLACK:
            violations += 1
    return AuditSummary(
        max_pointwise_mass_drift=max_pointwise,
        max_species_mass_drift=max_species,
        min_density=min_density,
        energy_violations=violations,
        steps=len(hist) - 1,
    )


def fit_slope(params: np.ndarray, errors: np.ndarray) -> tuple[float, float]:
    """OLS slope of log(error) vs log(param) and its standard error."""
    x = np.log(np.asarray(params, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    if len(x) < 2 or len(np.unique(x)) != len(x):
        raise ValueError("degenerate slope fit: need distinct parameter values")
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope = float(coef[0])
    if len(x) > 2 and res.size:
        sigma2 = float(res[0]) / (len(x) - 2)
        stderr = math.sqrt(sigma2 / float(np.sum((x - x.mean()) ** 2)))
    else:
        stderr = float("nan")
    return slope, stderr


def _field_errors(rho: np.ndarray, reference: np.ndarray, g: GridSpec) -> tuple[float, float]:
    """(max-over-species sup error, max-over-species grid-L2 error)."""
    if reference.ndim == 1:
        reference = reference.reshape((-1,) + (1,) * g.dim)
    diff = rho - reference
    linf = float(np.max(np.abs(diff)))
    l2 = float(np.max(np.sqrt(g.h ** g.dim * np.sum(diff ** 2, axis=tuple(range(1, diff.ndim))))))
    return linf, l2


def _run_to_time(g: GridSpec, friction: FrictionMatrix, rho0: np.ndarray,
                 dt: float, t_final: float, cfg: StepConfig | None = None) -> SimulationState:
    steps = round(t_final / dt)
    if abs(steps * dt - t_final) > 1e-12 * max(1.0, t_final):
        raise ValueError(f"dt={dt} does not divide t_final={t_final}")
    base = cfg or StepConfig(dt=dt, certify_energy=False)
    if base.dt != dt:
        base = StepConfig(dt=dt, newton_tol=base.newton_tol,
                          max_newton_iters=base.max_newton_iters,
                          interior_margin=base.interior_margin,
                          linear_tol=base.linear_tol, certify_energy=base.certify_energy)
    return advance(initial_state(g, friction, rho0), base, steps)


def grid_for_h(h: float, L: float = 1.0, dim: int = 1) -> GridSpec:
    N = round(L / h)
    if abs(N * h - L) > 1e-9 * L:
        raise ValueError(f"h={h} does not divide the domain length {L}")
    return GridSpec(dim=dim, cells_per_axis=N, domain_length=L)


def constant_reference(ic, L: float = 1.0, dim: int = 1,
                       probe_cells: int | None = None) -> np.ndarray:
    """Estimate the continuum mean of an initial profile on a fine probe grid.

    The equilibrium the flow relaxes toward is the spatial mean of the
    initial data; sampling it on a grid much finer than any grid in a study
    keeps the reference's own sampling error negligible.
    """
    if probe_cells is None:
        probe_cells = 8192 if dim == 1 else 512
    g = GridSpec(dim=dim, cells_per_axis=probe_cells, domain_length=L)
    rho0 = ic(g)
    return rho0.mean(axis=tuple(range(1, rho0.ndim)))


def _resolve_reference(reference, ic, g: GridSpec, t_final: float, L: float, dim: int):
    """Constant array, exact-solution callable (grid, t) -> field, or None
    meaning the fine-probe mean of the initial data."""
    if reference is None:
        return constant_reference(ic, L=L, dim=dim), "fine-probe mean of initial data"
    if callable(reference):
        return np.asarray(reference(g, t_final), dtype=float), "exact solution"
    return np.asarray(reference, dtype=float), "given constant"


def spatial_convergence(ic, friction: FrictionMatrix, h_values, dt: float = 0.01,
                        t_final: float = 0.5, L: float = 1.0, dim: int = 1,
                        reference=None, dt_for_h=None) -> ConvergenceReport:
    """Errors at t_final against a fixed reference, per mesh size.

    `ic` maps a GridSpec to sampled initial densities.  `reference` may be a
    constant state, a callable (grid, t) -> cell field for an exact solution,
    or None to recompute the constant equilibrium from the mean of the
    initial data on a fine probe grid.  `dt_for_h` optionally ties the time
    step to the mesh size (e.g. dt proportional to h^2) so the temporal
    error stays subordinate across the sweep.
    """
    h_values = np.asarray(sorted(h_values), dtype=float)
    errs_linf, errs_l2, used_h = [], [], []
    ref_desc = None
    for h in h_values:
        g = grid_for_h(h, L=L, dim=dim)
        rho0 = ic(g)
        ref, ref_desc = _resolve_reference(reference, ic, g, t_final, L, dim)
        dt_h = dt_for_h(g.h) if dt_for_h is not None else dt
        final = _run_to_time(g, friction, rho0, dt_h, t_final)
        linf, l2 = _field_errors(final.rho, ref, g)
        errs_linf.append(linf)
        errs_l2.append(l2)
        used_h.append(g.h)
    meta = {"norm": "sup and grid-weighted L2, max over species",
            "reference": ref_desc, "t_final": t_final}
    return _make_report(np.asarray(used_h), errs_linf, errs_l2, meta)


def temporal_convergence(ic, friction: FrictionMatrix, dt_values, h: float = 0.01,
                         t_final: float = 0.1, L: float = 1.0, dim: int = 1,
                         reference="self", ref_dt: float | None = None) -> ConvergenceReport:
    """Errors at t_final per time step, mesh size fixed.

    The default reference ("self") is a run on the same grid with a much
    finer time step, which isolates the temporal discretization error; it is
    measured while the solution is still evolving, since the error against
    the long-time equilibrium carries no first-order-in-dt signal once the
    transients have decayed.  A constant array or an exact-solution callable
    (grid, t) -> cell field may be supplied instead.
    """
    dt_values = np.asarray(sorted(dt_values), dtype=float)
    g = grid_for_h(h, L=L, dim=dim)
    rho0 = ic(g)
    if isinstance(reference, str) and reference == "self":
        if ref_dt is None:
            ref_dt = float(dt_values[0]) / 8.0
        ref = _run_to_time(g, friction, rho0, ref_dt, t_final).rho
        ref_desc = f"fine-dt run (dt={ref_dt:g})"
    else:
        ref, ref_desc = _resolve_reference(reference, ic, g, t_final, L, dim)
    errs_linf, errs_l2 = [], []
    for dt in dt_values:
        final = _run_to_time(g, friction, rho0, dt, t_final)
        linf, l2 = _field_errors(final.rho, ref, g)
        errs_linf.append(linf)
        errs_l2.append(l2)
    meta = {"norm": "sup and grid-weighted L2, max over species",
            "reference": ref_desc, "t_final": t_final}
    return _make_report(dt_values, errs_linf, errs_l2, meta)


def _make_report(params: np.ndarray, errs_linf, errs_l2, meta) -> ConvergenceReport:
    errs_linf = np.asarray(errs_linf)
    errs_l2 = np.asarray(errs_l2)
    if len(params) >= 4:
        slope_linf, stderr = fit_slope(params, errs_linf)
        slope_l2, _ = fit_slope(params, errs_l2)
    elif len(params) >= 2 and len(np.unique(params)) != len(params):
        raise ValueError("degenerate slope fit: duplicated parameter values")
    else:
        slope_linf = slope_l2 = stderr = None
    return ConvergenceReport(params=params, err_linf=errs_linf, err_l2=errs_l2,
                             slope_linf=slope_linf, slope_l2=slope_l2,
                             slope_stderr=stderr, metadata=meta)


# --- manufactured two-species heat-mode solution -------------------------------

@dataclass(frozen=True)
class TwoSpeciesHeatMode:
    """Exact solution of the two-species system: a decaying cosine mode.

    rho_1 = 1/2 + A exp(-4 pi^2 t / b12) cos(2 pi x); the first species
    obeys the heat equation with diffusivity 1/b12, and the velocities
    follow from the flux law with zero mean momentum.
    """

    b12: float = 1.0 / 0.833
    amplitude: float = 0.1

    def rho1(self, x, t):
        return 0.5 + self.amplitude * np.exp(-4 * np.pi ** 2 * t / self.b12) * np.cos(2 * np.pi * x)

    def rho(self, x, t):
        r1 = self.rho1(x, t)
        return np.stack([r1, 1.0 - r1])

    def velocities(self, x, t):
        r1 = self.rho1(x, t)
        drho1 = -2 * np.pi * self.amplitude * np.exp(-4 * np.pi ** 2 * t / self.b12) \
            * np.sin(2 * np.pi * x)
        flux1 = -drho1 / self.b12  # rho_1 v_1 = -(1/b12) d_x rho_1
        v1 = flux1 / r1
        v2 = -flux1 / (1.0 - r1)
        return np.stack([v1, v2])

    def friction(self) -> FrictionMatrix:
        return FrictionMatrix(np.array([[0.0, self.b12], [self.b12, 0.0]]))


def heat_mode_error(sol: TwoSpeciesHeatMode, h: float, dt: float,
                    t_final: float = 0.1) -> float:
    """Sup-norm distance of the computed two-species state to the exact
    decaying-mode solution at t_final."""
    g = grid_for_h(h)
    rho0 = sol.rho(g.cell_centers(), 0.0)
    final = _run_to_time(g, sol.friction(), rho0, dt, t_final)
    exact = sol.rho(g.cell_centers(), t_final)
    return float(np.max(np.abs(final.rho - exact)))


def truncation_residuals(sol: TwoSpeciesHeatMode, g: GridSpec, dt: float,
                         t0: float = 0.0) -> tuple[float, float, float]:
    """Sup norms of the three discrete residuals of the scheme on samples of
    the manufactured solution, over one step from t0 to t0 + dt."""
    b = sol.friction().b
    xc = g.cell_centers()
    xe = g.edge_centers()
    P_k = sol.rho(xc, t0)
    P_k1 = sol.rho(xc, t0 + dt)
    V_k1_edge = sol.velocities(xe, t0 + dt)[:, None, :]  # edge field layout
    P_hat = average_to_edges(P_k, g)
    # tau1: discrete continuity residual at cells
    tau1 = (P_k1 - P_k) / dt + divergence_to_cells(P_hat * V_k1_edge, g)
    # tau2: friction balance residual at edges
    logP = np.log(P_k1)
    DlogP = (np.roll(logP, -1, axis=1) - logP) / g.h
    Phat = P_hat[:, 0]
    V = V_k1_edge[:, 0]
    weighted = (Phat * DlogP).sum(axis=0) / Phat.sum(axis=0)
    friction_term = np.zeros_like(DlogP)
    n = P_k.shape[0]
    for i in range(n):
        for j in range(n):
            friction_term[i] += b[i, j] * Phat[j] * (V[i] - V[j])
    tau2 = DlogP - weighted + friction_term
    # tau3: mean-momentum residual at edges
    tau3 = (Phat * V).sum(axis=0)
    return (float(np.max(np.abs(tau1))), float(np.max(np.abs(tau2))),
            float(np.max(np.abs(tau3))))


def truncation_probe(h_values, dt_values, sol: TwoSpeciesHeatMode | None = None) -> TruncationReport:
    """Evaluate the three truncation residuals on a (h, dt) grid and fit
    the joint constant in tau <= C (dt + h^2)."""
    sol = sol or TwoSpeciesHeatMode()
    h_values = np.asarray(h_values, dtype=float)
    dt_values = np.asarray(dt_values, dtype=float)
    shape = (len(h_values), len(dt_values))
    tau1 = np.zeros(shape)
    tau2 = np.zeros(shape)
    tau3 = np.zeros(shape)
    for a, h in enumerate(h_values):
        g = grid_for_h(h)
        for c, dt in enumerate(dt_values):
            tau1[a, c], tau2[a, c], tau3[a, c] = truncation_residuals(sol, g, dt)
    scale = dt_values[None, :] + h_values[:, None] ** 2
    worst = np.maximum(tau1, np.maximum(tau2, tau3))
    C = float(np.max(worst / scale))
    return TruncationReport(h_values=h_values, dt_values=dt_values,
                            tau1=tau1, tau2=tau2, tau3=tau3, joint_fit_constant=C)


# --- CSV emission --------------------------------------------------------------

def _fmt(x) -> str:
    return f"{float(x):.17g}"


def write_history_csv(state: SimulationState, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "time", "energy", "min_rho", "mass_drift_pointwise",
                    "mass_drift_species", "dual_increment_sq"])
        mass0 = state.history[0].species_mass
        for k, d in enumerate(state.history):
            w.writerow([k, _fmt(d.time), _fmt(d.energy), _fmt(d.min_density),
                        _fmt(d.pointwise_mass_drift),
                        _fmt(np.max(np.abs(d.species_mass - mass0))),
                        _fmt(d.dual_increment_sq)])


def write_snapshot_csv(rho: np.ndarray, g: GridSpec, path) -> None:
    n = rho.shape[0]
    xs = g.cell_centers()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        if g.dim == 1:
            w.writerow(["x"] + [f"rho_{i + 1}" for i in range(n)])
            for l in range(g.cells_per_axis):
                w.writerow([_fmt(xs[l])] + [_fmt(rho[i, l]) for i in range(n)])
        else:
            w.writerow(["x", "y"] + [f"rho_{i + 1}" for i in range(n)])
            for lx in range(g.cells_per_axis):
                for ly in range(g.cells_per_axis):
                    w.writerow([_fmt(xs[lx]), _fmt(xs[ly])]
                               + [_fmt(rho[i, lx, ly]) for i in range(n)])


def write_convergence_csv(report: ConvergenceReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "err_linf", "err_l2"])
        for p, e1, e2 in zip(report.params, report.err_linf, report.err_l2):
            w.writerow([_fmt(p), _fmt(e1), _fmt(e2)])
