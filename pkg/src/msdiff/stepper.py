"""One implicit-explicit time step and the surrounding simulation loop.

Each step freezes the edge diffusion tensor at the old densities, then solves
the nonlinear reduced system

    (rho_t - rho_t_prev)/dt + L_Dhat(grad_entropy(rho_t)) = 0

for the first n-1 densities by damped Newton with a fraction-to-boundary
safeguard (the entropy gradient is a natural log barrier, so iterates must
stay strictly inside the simplex).  The last density is recovered from the
pointwise total, which makes pointwise total-mass conservation exact by
construction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .entropy import (apply_edge_tensor, apply_L_Phi, dual_norm_sq, entropy_full,
                      entropy_grad_reduced, entropy_hess_reduced)
from .grid import GridSpec, average_to_edges, gradient_to_edges
from .mixture import FrictionMatrix, assemble_D_hat


class NewtonError(RuntimeError):
    """Nonlinear solve failed; the simulation state is left unchanged."""

    def __init__(self, message: str, step_index: int | None = None):
        if step_index is not None:
            message = f"step {step_index}: {message}"
        super().__init__(message)
        self.step_index = step_index


@dataclass(frozen=True)
class StepConfig:
    dt: float
    newton_tol: float = 1e-10
    max_newton_iters: int = 50
    interior_margin: float = 0.99
    linear_tol: float = 1e-12
    certify_energy: bool = True

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if not 0 < self.interior_margin < 1:
            raise ValueError("interior_margin must lie in (0, 1)")


@dataclass(frozen=True)
class StepResult:
    rho_next: np.ndarray
    velocities: np.ndarray
    newton_iters: int
    residual_norm: float
    energy_next: float
    dual_increment_sq: float


@dataclass(frozen=True)
class StepDiagnostics:
    time: float
    energy: float
    min_density: float
    species_mass: np.ndarray
    pointwise_mass_drift: float
    dual_increment_sq: float
    newton_iters: int
    residual_norm: float
    dt: float


@dataclass(frozen=True)
class SimulationState:
    grid: GridSpec
    friction: FrictionMatrix
    rho: np.ndarray
    time: float = 0.0
    step_index: int = 0
    history: tuple = ()

    @property
    def species_count(self) -> int:
        return self.rho.shape[0]


def validate_initial(rho0: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Check rho0 > 0 and pointwise total within tol of 1; renormalize exactly."""
    rho0 = np.asarray(rho0, dtype=float)
    if np.any(rho0 <= 0):
        raise ValueError("initial densities must be strictly positive")
    total = rho0.sum(axis=0)
    if np.max(np.abs(total - 1.0)) > tol:
        raise ValueError("initial pointwise total mass deviates from 1 beyond 1e-8")
    return rho0 / total


def initial_state(grid: GridSpec, friction: FrictionMatrix, rho0: np.ndarray) -> SimulationState:
    rho0 = validate_initial(rho0)
    diag = StepDiagnostics(
        time=0.0,
        energy=entropy_full(rho0, grid),
        min_density=float(rho0.min()),
        species_mass=grid.h ** grid.dim * rho0.sum(axis=tuple(range(1, rho0.ndim))),
        pointwise_mass_drift=0.0,
        dual_increment_sq=0.0,
        newton_iters=0,
        residual_norm=0.0,
        dt=np.nan,
    )
    return SimulationState(grid=grid, friction=friction, rho=rho0, history=(diag,))


def scheme_residual(rho_t: np.ndarray, rho_prev: np.ndarray, Dhat: np.ndarray,
                    g: GridSpec, dt: float) -> np.ndarray:
    """Residual of the reduced scheme at a trial interior point."""
    m = rho_t.shape[0]
    glog = entropy_grad_reduced(rho_t)
    return (rho_t - rho_prev[:m]) / dt + apply_L_Phi(Dhat, glog, g)


def l_phi_sparse(Phi: np.ndarray, g: GridSpec) -> sp.csr_matrix:
    """Assemble L_Phi = -d_h(Phi D_h .) as a sparse matrix on (n-1)*N^d unknowns.

    Unknown ordering: species-major, cells in C order.
    """
    m = Phi.shape[-1]
    M = g.n_cells
    cells = np.arange(M).reshape((g.cells_per_axis,) * g.dim)
    h2 = g.h ** 2
    rows, cols, vals = [], [], []
    for s in range(g.dim):
        nxt = np.roll(cells, -1, axis=s).ravel()
        cur = cells.ravel()
        for i in range(m):
            for j in range(m):
                w = Phi[s][..., i, j].ravel() / h2  # weight of edge between cur and nxt
                ri, cj = i * M, j * M
                # flux through this edge feeds the two adjacent cells
                rows.append(ri + cur); cols.append(cj + cur); vals.append(w)
                rows.append(ri + cur); cols.append(cj + nxt); vals.append(-w)
                rows.append(ri + nxt); cols.append(cj + nxt); vals.append(w)
                rows.append(ri + nxt); cols.append(cj + cur); vals.append(-w)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(m * M, m * M))


def _hess_block_sparse(rho_t: np.ndarray) -> sp.csr_matrix:
    """Per-cell entropy Hessian as a sparse block-diagonal matrix."""
    m = rho_t.shape[0]
    M = rho_t[0].size
    hess = entropy_hess_reduced(rho_t)  # (m, m, cells...)
    cells = np.arange(M)
    rows, cols, vals = [], [], []
    for i in range(m):
        for j in range(m):
            rows.append(i * M + cells)
            cols.append(j * M + cells)
            vals.append(hess[i, j].ravel())
    return sp.csr_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(m * M, m * M))


def _fraction_to_boundary(rho_t: np.ndarray, delta: np.ndarray, theta: float) -> float:
    """Largest alpha <= 1 with rho_i + alpha*delta_i >= (1-theta)*rho_i, incl. rho_n."""
    rho_n = 1.0 - rho_t.sum(axis=0)
    delta_n = -delta.sum(axis=0)
    alpha = 1.0
    for r, d in ((rho_t, delta), (rho_n, delta_n)):
        neg = d < 0
        if np.any(neg):
            alpha = min(alpha, float(np.min(theta * r[neg] / -d[neg])))
    return alpha


def newton_solve(rho_prev: np.ndarray, Dhat: np.ndarray, g: GridSpec,
                 cfg: StepConfig) -> tuple[np.ndarray, int, float]:
    """Solve the reduced implicit system; returns (rho_t_next, iters, residual)."""
    m = rho_prev.shape[0] - 1
    M = g.n_cells
    rho_t = rho_prev[:m].copy()
    L = l_phi_sparse(Dhat, g)
    eye = sp.identity(m * M, format="csr") / cfg.dt
    R = scheme_residual(rho_t, rho_prev, Dhat, g, cfg.dt)
    res = float(np.max(np.abs(R)))
    for it in range(1, cfg.max_newton_iters + 1):
        if res <= cfg.newton_tol:
            return rho_t, it - 1, res
        J = (eye + L @ _hess_block_sparse(rho_t)).tocsc()
        delta = splu(J).solve(-R.ravel()).reshape(rho_t.shape)
        alpha = _fraction_to_boundary(rho_t, delta, cfg.interior_margin)
        # backtrack by halving until the sup-norm of the residual decreases
        while True:
            trial = rho_t + alpha * delta
            R_trial = scheme_residual(trial, rho_prev, Dhat, g, cfg.dt)
            res_trial = float(np.max(np.abs(R_trial)))
            if res_trial < res:
                break
            alpha *= 0.5
            if alpha < 1e-14:
                raise NewtonError("line search collapsed (step below 1e-14)")
        rho_t, R, res = trial, R_trial, res_trial
    if res <= cfg.newton_tol:
        return rho_t, cfg.max_newton_iters, res
    raise NewtonError(
        f"no convergence in {cfg.max_newton_iters} iterations (residual {res:.3e})")


def recover_velocities(rho_next: np.ndarray, rho_prev: np.ndarray, Dhat: np.ndarray,
                       g: GridSpec) -> np.ndarray:
    """Edge velocities from the explicit flux law; last species balances the rest."""
    if np.any(rho_next <= 0) or np.any(rho_prev <= 0):
        raise ValueError("densities must be strictly positive")
    n = rho_next.shape[0]
    m = n - 1
    glog = np.log(rho_next[:m]) - np.log(rho_next[m])
    fluxes_t = -apply_edge_tensor(Dhat, gradient_to_edges(glog, g))
    flux_n = -fluxes_t.sum(axis=0, keepdims=True)
    fluxes = np.concatenate([fluxes_t, flux_n], axis=0)
    rho_hat = average_to_edges(rho_prev, g)
    return fluxes / rho_hat


def take_step(state: SimulationState, cfg: StepConfig) -> StepResult:
    """Advance one step from the current state; does not mutate it."""
    g = state.grid
    n = state.species_count
    Dhat = assemble_D_hat(state.rho, state.friction, g)
    rho_t_next, iters, res = newton_solve(state.rho, Dhat, g, cfg)
    total_prev = state.rho.sum(axis=0)
    rho_n_next = total_prev - rho_t_next.sum(axis=0)
    if np.any(rho_t_next <= 0) or np.any(rho_n_next <= 0):
        raise NewtonError("converged iterate left the interior")
    rho_next = np.concatenate([rho_t_next, rho_n_next[None]], axis=0)
    velocities = recover_velocities(rho_next, state.rho, Dhat, g)
    if cfg.certify_energy:
        increment = rho_t_next - state.rho[: n - 1]
        dual_inc = dual_norm_sq(Dhat, increment, g, tol=cfg.linear_tol)
    else:
        dual_inc = np.nan
    return StepResult(
        rho_next=rho_next,
        velocities=velocities,
        newton_iters=iters,
        residual_norm=res,
        energy_next=entropy_full(rho_next, g),
        dual_increment_sq=dual_inc,
    )


def advance(state: SimulationState, cfg: StepConfig, steps: int) -> SimulationState:
    """Apply the scheme `steps` times, appending diagnostics for each step."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    g = state.grid
    initial_total = state.rho.sum(axis=0)
    current = state
    for k in range(steps):
        try:
            result = take_step(current, cfg)
        except NewtonError as err:
            raise NewtonError(str(err), step_index=current.step_index) from err
        rho = result.rho_next
        diag = StepDiagnostics(
            time=current.time + cfg.dt,
            energy=result.energy_next,
            min_density=float(rho.min()),
            species_mass=g.h ** g.dim * rho.sum(axis=tuple(range(1, rho.ndim))),
            pointwise_mass_drift=float(np.max(np.abs(rho.sum(axis=0) - initial_total))),
            dual_increment_sq=result.dual_increment_sq,
            newton_iters=result.newton_iters,
            residual_norm=result.residual_norm,
            dt=cfg.dt,
        )
        current = replace(
            current,
            rho=rho,
            time=current.time + cfg.dt,
            step_index=current.step_index + 1,
            history=current.history + (diag,),
        )
    return current
