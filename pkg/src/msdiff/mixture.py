"""Friction coefficients and per-edge assembly of the reduced diffusion tensor.

For an n-species mixture with symmetric positive friction coefficients b_ij,
the velocity system at one point reduces (after eliminating the last species
through the zero-mean-momentum constraint) to an (n-1)x(n-1) flux law with
tensor D = Qinv^T B^{-1} Qinv.  B is symmetric strictly diagonally dominant
with positive diagonal, hence SPD, so D is SPD as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, average_to_edges


@dataclass(frozen=True)
class FrictionMatrix:
    """Symmetric interspecies friction coefficients, diagonal fixed to zero."""

    b: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.b, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] < 2:
            raise ValueError(f"friction matrix must be square n>=2, got shape {b.shape}")
        off = ~np.eye(b.shape[0], dtype=bool)
        if not np.allclose(b, b.T):
            raise ValueError("friction matrix must be symmetric")
        if np.any(b[off] <= 0):
            raise ValueError("off-diagonal friction coefficients must be positive")
        b = b.copy()
        np.fill_diagonal(b, 0.0)  # diagonal is never read: it multiplies v_i - v_i
        b.setflags(write=False)
        object.__setattr__(self, "b", b)

    @property
    def n_species(self) -> int:
        return self.b.shape[0]


def _check_positive(rho_hat: np.ndarray) -> None:
    if np.any(rho_hat <= 0):
        raise ValueError("densities must be strictly positive")


def assemble_B(rho_hat_point: np.ndarray, friction: FrictionMatrix) -> np.ndarray:
    """Leading (n-1)x(n-1) block of B_ij = delta_ij sum_m b_im r_i r_m - b_ij r_i r_j."""
    r = np.asarray(rho_hat_point, dtype=float)
    _check_positive(r)
    b = friction.b
    n = friction.n_species
    S = b @ r  # S_i = sum_m b_im r_m
    B = np.diag(r[: n - 1] * S[: n - 1]) - b[: n - 1, : n - 1] * np.outer(r[: n - 1], r[: n - 1])
    return B


def assemble_Q(rho_hat_point: np.ndarray) -> np.ndarray:
    """Q_ij = delta_ij / r_i + 1 / r_n, (n-1)x(n-1), symmetric."""
    r = np.asarray(rho_hat_point, dtype=float)
    _check_positive(r)
    n = r.shape[0]
    return np.diag(1.0 / r[: n - 1]) + 1.0 / r[n - 1]


def assemble_Qinv(rho_hat_point: np.ndarray) -> np.ndarray:
    """Qinv_ij = delta_ij r_i - r_i r_j / sum(r); the actual sum, not assumed 1."""
    r = np.asarray(rho_hat_point, dtype=float)
    _check_positive(r)
    n = r.shape[0]
    rt = r[: n - 1]
    return np.diag(rt) - np.outer(rt, rt) / r.sum()


def edge_diffusion_from_rho_hat(rho_hat: np.ndarray, friction: FrictionMatrix) -> np.ndarray:
    """Vectorized D = Qinv B^{-1} Qinv at every edge point.

    rho_hat: edge field of shape (n, d, N, ..., N).  Returns array of shape
    (d, N, ..., N, n-1, n-1), SPD at every point (certified by Cholesky).
    """
    _check_positive(rho_hat)
    b = friction.b
    n = friction.n_species
    m = n - 1
    # move species axis last: (d, N..., n)
    r = np.moveaxis(rho_hat, 0, -1)
    rt = r[..., :m]
    S = r @ b.T  # S[..., i] = sum_j b_ij r_j
    B = np.zeros(r.shape[:-1] + (m, m))
    diag = rt * S[..., :m]
    idx = np.arange(m)
    B[..., idx, idx] = diag
    B -= b[:m, :m] * (rt[..., :, None] * rt[..., None, :])
    Qinv = np.zeros_like(B)
    Qinv[..., idx, idx] = rt
    Qinv -= (rt[..., :, None] * rt[..., None, :]) / r.sum(axis=-1)[..., None, None]
    # Cholesky certifies SPD of B at every edge point; raises on failure.
    np.linalg.cholesky(B)
    D = Qinv @ np.linalg.solve(B, Qinv)
    D = 0.5 * (D + np.swapaxes(D, -1, -2))
    return D


def assemble_D_hat(rho_prev: np.ndarray, friction: FrictionMatrix, g: GridSpec,
                   mass_tol: float = 1e-8) -> np.ndarray:
    """Edge diffusion tensor from the previous-step cell densities.

    Averages rho to edges, then assembles D = Qinv B^{-1} Qinv pointwise.
    Requires rho > 0 and pointwise total mass 1 within mass_tol.
    """
    _check_positive(rho_prev)
    total = rho_prev.sum(axis=0)
    if np.max(np.abs(total - 1.0)) > mass_tol:
        raise ValueError("pointwise total mass deviates from 1 beyond tolerance")
    rho_hat = average_to_edges(rho_prev, g)
    return edge_diffusion_from_rho_hat(rho_hat, friction)
