"""Discrete mixing entropy, its reduced derivatives, and the weighted
elliptic operator whose inverse defines the variational step cost.

The reduced entropy works on the first n-1 densities with the last one
eliminated through the pointwise constraint sum(rho) = 1.  The operator
L_Phi f = -d_h(Phi D_h f) is symmetric positive definite on fields with
per-species zero mean; its inverse is computed by preconditioned conjugate
gradients projected to that subspace, and induces the dual (semi-)norm
||g||^2 = [D_h f, Phi D_h f] with f = L_Phi^{-1} g.
"""

from __future__ import annotations

import numpy as np

from .grid import GridSpec, divergence_to_cells, gradient_to_edges, inner_cells

# Positivity is a theorem of the scheme: densities at or below this floor are
# rejected as corrupted state, never clamped.
_DENSITY_FLOOR = 1e-300


class LinearSolveError(RuntimeError):
    """Conjugate gradient iteration failed to reach the requested residual."""


def _require_interior(rho_t: np.ndarray) -> np.ndarray:
    """Check rho_t lies strictly inside the simplex; return rho_n."""
    if np.any(rho_t <= _DENSITY_FLOOR):
        raise ValueError("reduced densities must be strictly positive")
    rho_n = 1.0 - rho_t.sum(axis=0)
    if np.any(rho_n <= _DENSITY_FLOOR):
        raise ValueError("reduced densities must sum below 1 at every cell")
    return rho_n


def entropy_full(rho: np.ndarray, g: GridSpec) -> float:
    """h^d * sum of rho_i log rho_i over all species and cells."""
    if np.any(rho <= _DENSITY_FLOOR):
        raise ValueError("densities must be strictly positive")
    return g.h ** g.dim * float(np.sum(rho * np.log(rho)))


def entropy_reduced(rho_t: np.ndarray, g: GridSpec) -> float:
    """Entropy with rho_n := 1 - sum of the first n-1 densities."""
    rho_n = _require_interior(rho_t)
    val = np.sum(rho_t * np.log(rho_t)) + np.sum(rho_n * np.log(rho_n))
    return g.h ** g.dim * float(val)


def entropy_grad_reduced(rho_t: np.ndarray) -> np.ndarray:
    """Component i: log rho_i - log rho_n, per cell."""
    rho_n = _require_interior(rho_t)
    return np.log(rho_t) - np.log(rho_n)


def entropy_hess_reduced(rho_t: np.ndarray) -> np.ndarray:
    """Per-cell Hessian delta_ij / rho_i + 1 / rho_n, shape (n-1, n-1, cells...)."""
    rho_n = _require_interior(rho_t)
    m = rho_t.shape[0]
    hess = np.broadcast_to(1.0 / rho_n, (m, m) + rho_n.shape).copy()
    idx = np.arange(m)
    hess[idx, idx] += 1.0 / rho_t
    return hess


def apply_edge_tensor(Phi: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Per-edge matrix times per-edge species vector: (s...ij, js... -> is...)."""
    return np.einsum("s...ij,js...->is...", Phi, u)


def apply_L_Phi(Phi: np.ndarray, f: np.ndarray, g: GridSpec) -> np.ndarray:
    """-d_h(Phi D_h f); output has per-species zero sum to roundoff."""
    Df = gradient_to_edges(f, g)
    return -divergence_to_cells(apply_edge_tensor(Phi, Df), g)


def _project_mean_zero(f: np.ndarray) -> np.ndarray:
    axes = tuple(range(1, f.ndim))
    return f - f.mean(axis=axes, keepdims=True)


def _jacobi_diagonal(Phi: np.ndarray, g: GridSpec) -> np.ndarray:
    """Diagonal of L_Phi: per cell, sum over axes of adjacent Phi_ii over h^2."""
    m = Phi.shape[-1]
    idx = np.arange(m)
    diag = np.zeros((m,) + Phi.shape[1:-2])
    for s in range(Phi.shape[0]):
        dii = np.moveaxis(Phi[s][..., idx, idx], -1, 0)  # (m, cells...)
        diag += (dii + np.roll(dii, 1, axis=1 + s)) / g.h ** 2
    return diag


def solve_L_Phi(Phi: np.ndarray, rhs: np.ndarray, g: GridSpec, tol: float = 1e-11,
                max_iters: int | None = None) -> np.ndarray:
    """Invert L_Phi on the mean-zero subspace by Jacobi-preconditioned CG.

    rhs must have per-species zero sum; the result has per-species zero mean
    and satisfies ||L_Phi f - rhs|| <= tol * ||rhs||.
    """
    axes = tuple(range(1, rhs.ndim))
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs)
    if np.max(np.abs(rhs.sum(axis=axes))) > 1e-12 * rhs.size * max(1.0, np.max(np.abs(rhs))):
        raise ValueError("right-hand side must have per-species zero sum")
    if max_iters is None:
        max_iters = 10 * g.n_cells * rhs.shape[0]

    dinv = 1.0 / _jacobi_diagonal(Phi, g)
    b = _project_mean_zero(rhs)
    x = np.zeros_like(b)
    r = b.copy()
    z = _project_mean_zero(dinv * r)
    p = z.copy()
    rz = float(np.sum(r * z))
    for _ in range(max_iters):
        if np.linalg.norm(r) <= tol * rhs_norm:
            return _project_mean_zero(x)
        Ap = apply_L_Phi(Phi, p, g)
        alpha = rz / float(np.sum(p * Ap))
        x += alpha * p
        r -= alpha * Ap
        z = _project_mean_zero(dinv * r)
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    if np.linalg.norm(r) <= tol * rhs_norm:
        return _project_mean_zero(x)
    raise LinearSolveError(
        f"CG did not reach tol={tol} in {max_iters} iterations "
        f"(relative residual {np.linalg.norm(r) / rhs_norm:.3e})")


def dual_norm_sq(Phi: np.ndarray, rhs: np.ndarray, g: GridSpec, tol: float = 1e-11) -> float:
    """||rhs||^2 in the inverse-operator norm: [D_h f, Phi D_h f], f = L_Phi^{-1} rhs."""
    f = solve_L_Phi(Phi, rhs, g, tol=tol)
    Df = gradient_to_edges(f, g)
    val = g.h ** g.dim * float(np.sum(Df * apply_edge_tensor(Phi, Df)))
    return val


def dual_norm_sq_via_inner(Phi: np.ndarray, rhs: np.ndarray, g: GridSpec,
                           tol: float = 1e-11) -> float:
    """Same quantity through the identity <f, rhs>; used as a cross-check route."""
    f = solve_L_Phi(Phi, rhs, g, tol=tol)
    return inner_cells(f, rhs, g)
