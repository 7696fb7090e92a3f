"""Property suite: structural identities of the discretization, oracle
comparisons, and the variational characterization of the implicit step.

Each check returns a PropertyResult; run_all drives the whole suite with a
fixed seed so reruns are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagnostics import (TwoSpeciesHeatMode, grid_for_h, heat_mode_error,
                          truncation_residuals)
from .entropy import (dual_norm_sq, dual_norm_sq_via_inner, entropy_grad_reduced,
                      entropy_reduced)
from .grid import GridSpec, gradient_to_edges, inner_cells, inner_edges, divergence_to_cells
from .initial_conditions import sample_builtin
from .mixture import (FrictionMatrix, assemble_D_hat, assemble_Q, assemble_Qinv,
                      edge_diffusion_from_rho_hat)
from .stepper import StepConfig, advance, initial_state


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    worst: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: worst {self.worst:.3e} (tol {self.tolerance:.1e})"


def _paper_friction() -> FrictionMatrix:
    return FrictionMatrix(np.array([
        [0.0, 1 / 0.833, 1 / 0.833],
        [1 / 0.833, 0.0, 1 / 0.168],
        [1 / 0.833, 1 / 0.168, 0.0]]))


def check_sbp(seed: int, trials: int = 100, tol: float = 1e-13) -> PropertyResult:
    """<f, d_h phi> + [D_h f, phi] = 0 for random fields, 1D and 2D."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        for dim, N in ((1, 17), (2, 9)):
            g = GridSpec(dim=dim, cells_per_axis=N)
            f = rng.standard_normal(g.cell_shape(2))
            phi = rng.standard_normal(g.edge_shape(2))
            lhs = inner_cells(f, divergence_to_cells(phi, g), g)
            rhs = inner_edges(gradient_to_edges(f, g), phi, g)
            scale = max(abs(lhs), abs(rhs), 1.0)
            worst = max(worst, abs(lhs + rhs) / scale)
    return PropertyResult("summation-by-parts", worst <= tol, worst, tol)


def check_q_qinv(seed: int, trials: int = 100, tol: float = 1e-12) -> PropertyResult:
    """Q(r) Qinv(r) = I at random positive states, n in {2,...,5}."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        for n in (2, 3, 4, 5):
            r = rng.uniform(0.05, 1.0, size=n)
            err = np.max(np.abs(assemble_Q(r) @ assemble_Qinv(r) - np.eye(n - 1)))
            worst = max(worst, float(err))
    return PropertyResult("Q Qinv identity", worst <= tol, worst, tol)


def check_dual_norm(seed: int, trials: int = 5, tol: float = 1e-10) -> PropertyResult:
    """The two evaluation routes for the inverse-operator norm agree."""
    rng = np.random.default_rng(seed)
    fr = _paper_friction()
    worst = 0.0
    for _ in range(trials):
        for dim, N in ((1, 32), (2, 12)):
            g = GridSpec(dim=dim, cells_per_axis=N)
            rho = sample_builtin("paper-1d" if dim == 1 else "paper-2d", g)
            Dhat = assemble_D_hat(rho, fr, g)
            rhs = rng.standard_normal((2,) + rho.shape[1:])
            rhs -= rhs.mean(axis=tuple(range(1, rhs.ndim)), keepdims=True)
            a = dual_norm_sq(Dhat, rhs, g)
            b = dual_norm_sq_via_inner(Dhat, rhs, g)
            worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-30))
    return PropertyResult("dual-norm two-route agreement", worst <= tol, worst, tol)


def check_entropy_gradient(seed: int, tol: float = 1e-6) -> PropertyResult:
    """Reduced entropy gradient vs central finite differences."""
    rng = np.random.default_rng(seed)
    g = GridSpec(dim=1, cells_per_axis=16)
    rho_t = rng.uniform(0.1, 0.4, size=(2, 16))
    grad = entropy_grad_reduced(rho_t) * g.h  # gradient of the h-weighted sum
    eps = 1e-6
    worst = 0.0
    for i in range(2):
        for l in range(16):
            plus = rho_t.copy(); plus[i, l] += eps
            minus = rho_t.copy(); minus[i, l] -= eps
            fd = (entropy_reduced(plus, g) - entropy_reduced(minus, g)) / (2 * eps)
            worst = max(worst, abs(fd - grad[i, l]))
    return PropertyResult("entropy gradient vs finite differences", worst <= tol, worst, tol)


def check_minimizer(seed: int, trials: int = 100, tol: float = 1e-9) -> PropertyResult:
    """The implicit step minimizes entropy + (1/2dt) * squared step cost:
    random feasible perturbations never decrease the objective beyond tol."""
    rng = np.random.default_rng(seed)
    fr = _paper_friction()
    g = GridSpec(dim=1, cells_per_axis=50)
    dt = 0.001
    state = advance(initial_state(g, fr, sample_builtin("paper-1d", g)),
                    StepConfig(dt=dt, certify_energy=False), 3)
    rho_prev = state.rho
    Dhat = assemble_D_hat(rho_prev, fr, g)
    nxt = advance(state, StepConfig(dt=dt, certify_energy=False), 1)
    rho_star = nxt.rho[:2]

    def objective(rho_t):
        inc = rho_t - rho_prev[:2]
        return entropy_reduced(rho_t, g) + dual_norm_sq(Dhat, inc, g) / (2 * dt)

    J_star = objective(rho_star)
    # scale keeps every perturbed state strictly feasible (the trace species
    # sits near 1e-4, so the scale must stay well below that)
    scale = 0.3 * float(rho_star.min())
    worst = 0.0
    evaluated = 0
    for _ in range(trials):
        delta = rng.standard_normal(rho_star.shape)
        delta -= delta.mean(axis=1, keepdims=True)  # keep species masses fixed
        delta *= scale / np.max(np.abs(delta))
        trial = rho_star + delta
        if np.any(trial <= 0) or np.any(1.0 - trial.sum(axis=0) <= 0):
            continue
        evaluated += 1
        worst = min(worst, objective(trial) - J_star)
    return PropertyResult("implicit step minimizes the step objective",
                          evaluated == trials and worst >= -tol, worst, tol)


def brute_force_fluxes(rho_hat_point: np.ndarray, friction: FrictionMatrix,
                       G: np.ndarray) -> np.ndarray:
    """Reference fluxes at one edge state by solving the full friction system.

    Given per-species log-density gradients G_i, solve for velocities v:
        sum_j b_ij rho_j (v_i - v_j) = -(G_i - sum_j rho_j G_j / sum_j rho_j)
    with the zero-mean-momentum constraint sum_i rho_i v_i = 0 appended,
    then return the fluxes rho_i v_i.
    """
    r = np.asarray(rho_hat_point, dtype=float)
    b = friction.b
    n = r.shape[0]
    M = -b * r[None, :]
    np.fill_diagonal(M, b @ r)
    rhs = -(G - float(r @ G) / float(r.sum()))
    A = np.vstack([M, r[None, :]])
    v, *_ = np.linalg.lstsq(A, np.concatenate([rhs, [0.0]]), rcond=None)
    return r * v


def _make_friction(rng, n: int) -> FrictionMatrix:
    b = rng.uniform(0.5, 5.0, size=(n, n))
    b = 0.5 * (b + b.T)
    return FrictionMatrix(b)


def reduced_fluxes(rho_hat_point: np.ndarray, friction: FrictionMatrix,
                   G: np.ndarray) -> np.ndarray:
    """Fluxes through the reduced tensor: F_tilde = -D (G_i - G_n), with the
    last flux balancing the rest."""
    r = np.asarray(rho_hat_point, dtype=float)
    n = r.shape[0]
    # a single point viewed as a one-edge field of shape (n, 1, 1)
    D = edge_diffusion_from_rho_hat(r.reshape(n, 1, 1), friction)[0, 0]
    f_t = -D @ (G[: n - 1] - G[n - 1])
    return np.concatenate([f_t, [-f_t.sum()]])


def check_flux_oracle(seed: int, samples: int = 1000, tol: float = 1e-10) -> PropertyResult:
    """Reduced tensor fluxes vs the brute-force constrained friction solve
    at random positive edge states, n in {2, 3, 4}."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        n = int(rng.integers(2, 5))
        r = rng.uniform(0.05, 1.0, size=n)
        G = rng.standard_normal(n)
        fr = _make_friction(rng, n)
        ref = brute_force_fluxes(r, fr, G)
        got = reduced_fluxes(r, fr, G)
        scale = max(float(np.max(np.abs(ref))), 1e-30)
        worst = max(worst, float(np.max(np.abs(got - ref))) / scale)
    return PropertyResult("reduced flux vs brute-force friction solve",
                          worst <= tol, worst, tol)


def check_heat_oracle(tol_factor: float = 5.0) -> PropertyResult:
    """n=2 solver output vs the exact decaying mode at t=0.1; the error obeys
    err <= tol_factor * (dt + h^2) * C with C fitted from the two coarsest
    levels and stable within +-50% under two further refinements."""
    sol = TwoSpeciesHeatMode()
    levels = [(0.05, 0.005), (0.025, 0.0025), (0.0125, 0.00125), (0.00625, 0.000625)]
    errs = [heat_mode_error(sol, h, dt) for h, dt in levels]
    consts = [e / (dt + h * h) for e, (h, dt) in zip(errs, levels)]
    C_fit = 0.5 * (consts[0] + consts[1])
    bound_ok = all(e <= tol_factor * (dt + h * h) * C_fit
                   for e, (h, dt) in zip(errs, levels))
    stable = all(0.5 * C_fit <= c <= 1.5 * C_fit for c in consts)
    worst = max(abs(c / C_fit - 1.0) for c in consts)
    return PropertyResult("two-species heat-mode oracle", bound_ok and stable, worst, 0.5)


def check_truncation() -> PropertyResult:
    """Richardson ratios of the local residuals: halving dt about halves
    tau1; halving h about quarters tau2."""
    sol = TwoSpeciesHeatMode()
    g_fine = grid_for_h(1e-3)
    t1a = truncation_residuals(sol, g_fine, 0.002)[0]
    t1b = truncation_residuals(sol, g_fine, 0.001)[0]
    ratio_dt = t1a / t1b
    t2a = truncation_residuals(sol, grid_for_h(0.02), 1e-6)[1]
    t2b = truncation_residuals(sol, grid_for_h(0.01), 1e-6)[1]
    ratio_h = t2a / t2b
    ok = 1.7 <= ratio_dt <= 2.3 and 3.5 <= ratio_h <= 4.5
    worst = max(abs(ratio_dt - 2.0), abs(ratio_h - 4.0))
    return PropertyResult("truncation Richardson ratios", ok, worst, 0.5)


def run_all(seed: int = 12345) -> list[PropertyResult]:
    return [
        check_sbp(seed),
        check_q_qinv(seed + 1),
        check_dual_norm(seed + 2),
        check_entropy_gradient(seed + 3),
        check_minimizer(seed + 4),
        check_flux_oracle(seed + 5),
        check_heat_oracle(),
        check_truncation(),
    ]
