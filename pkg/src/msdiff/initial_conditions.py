"""Builtin initial density profiles, sampled at cell centers x_l = l*h."""

from __future__ import annotations

import numpy as np

from .grid import GridSpec


def tent_profile_1d(x: np.ndarray) -> np.ndarray:
    """Three-species 1D profile: piecewise-linear dip in species 1, trace species 2."""
    x = np.mod(x, 1.0)
    r1 = np.where(
        x < 0.25, 0.8,
        np.where(x < 0.5, 1.6 * (0.75 - x),
                 np.where(x < 0.75, 1.6 * (x - 0.25), 0.8)))
    r2 = np.full_like(r1, 1e-4)
    return np.stack([r1, r2, 1.0 - r1 - r2])


def radial_profile_2d(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Three-species 2D profile: radial bump of species 1 inside radius 1/8."""
    r = np.sqrt((x - 0.5) ** 2 + (y - 0.5) ** 2)
    r1 = np.where(r <= 0.125, r / 2.0 + 0.1, 0.6)
    r2 = np.full_like(r1, 1e-4)
    return np.stack([r1, r2, 1.0 - r1 - r2])


def cosine_profile_two_species(x: np.ndarray, amplitude: float = 0.1) -> np.ndarray:
    """Two-species single-mode profile; reduces to the heat equation."""
    r1 = 0.5 + amplitude * np.cos(2 * np.pi * x)
    return np.stack([r1, 1.0 - r1])


def sample_builtin(name: str, g: GridSpec) -> np.ndarray:
    """Sample a builtin profile on the grid's cell centers."""
    xs = g.cell_centers()
    if name == "paper-1d":
        if g.dim != 1:
            raise ValueError("paper-1d initial condition requires a 1D grid")
        return tent_profile_1d(xs)
    if name == "paper-2d":
        if g.dim != 2:
            raise ValueError("paper-2d initial condition requires a 2D grid")
        X, Y = np.meshgrid(xs, xs, indexing="ij")
        return radial_profile_2d(X, Y)
    if name == "two-species-cosine":
        if g.dim != 1:
            raise ValueError("two-species-cosine initial condition requires a 1D grid")
        return cosine_profile_two_species(xs)
    raise ValueError(f"unknown builtin initial condition {name!r}")


def load_tabulated(path: str, g: GridSpec, n_species: int) -> np.ndarray:
    """Load densities tabulated at the grid's cell centers from a CSV file.

    Expected columns: x [, y], rho_1 ... rho_n; one row per cell in C order.
    """
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    expected_cols = g.dim + n_species
    if data.shape != (g.n_cells, expected_cols):
        raise ValueError(
            f"tabulated initial condition has shape {data.shape}, "
            f"expected ({g.n_cells}, {expected_cols})")
    rho = data[:, g.dim:].T
    return rho.reshape((n_species,) + (g.cells_per_axis,) * g.dim)
