"""Periodic staggered grids and the discrete calculus operators built on them.

Two lattices live on the torus [0, L]^d: cell centers at x = l*h (l = 1..N)
and edge midpoints at x = (l + 1/2)*h, one edge set per axis.  Cell fields
are arrays of shape (n_species, N, ..., N); edge fields carry an extra axis
for the direction, shape (n_species, d, N, ..., N).  Edge index j along an
axis sits between cells j and j+1 (0-based), with edge N-1 wrapping between
cells N-1 and 0.

The pair of difference operators here satisfies the summation-by-parts
identity <f, d_h phi> = -[D_h f, phi] exactly (to roundoff), which is the
backbone of every conservation and stability statement downstream.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Square periodic lattice: N cells per axis, spacing h = L/N."""

    dim: int
    cells_per_axis: int
    domain_length: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if self.cells_per_axis < 4:
            raise ValueError(f"need at least 4 cells per axis, got {self.cells_per_axis}")
        if self.domain_length <= 0:
            raise ValueError("domain length must be positive")

    @property
    def h(self) -> float:
        return self.domain_length / self.cells_per_axis

    @property
    def n_cells(self) -> int:
        return self.cells_per_axis ** self.dim

    def cell_shape(self, n_species: int) -> tuple:
        return (n_species,) + (self.cells_per_axis,) * self.dim

    def edge_shape(self, n_species: int) -> tuple:
        return (n_species, self.dim) + (self.cells_per_axis,) * self.dim

    def cell_centers(self) -> np.ndarray:
        """Coordinates l*h, l = 1..N (one axis)."""
        return self.h * np.arange(1, self.cells_per_axis + 1)

    def edge_centers(self) -> np.ndarray:
        """Coordinates (l + 1/2)*h aligned with edge storage: first entry 3h/2."""
        return self.h * (np.arange(1, self.cells_per_axis + 1) + 0.5)


def _check_cell(f: np.ndarray, g: GridSpec) -> None:
    if f.ndim != 1 + g.dim or f.shape[1:] != (g.cells_per_axis,) * g.dim:
        raise ValueError(f"cell field shape {f.shape} does not match grid {g}")


def _check_edge(f: np.ndarray, g: GridSpec) -> None:
    if f.ndim != 2 + g.dim or f.shape[1] != g.dim or f.shape[2:] != (g.cells_per_axis,) * g.dim:
        raise ValueError(f"edge field shape {f.shape} does not match grid {g}")


def gradient_to_edges(f: np.ndarray, g: GridSpec) -> np.ndarray:
    """Forward difference D_h: (D_h f)_{l+1/2} = (f_{l+1} - f_l)/h per axis."""
    _check_cell(f, g)
    out = np.empty(g.edge_shape(f.shape[0]))
    for s in range(g.dim):
        ax = 1 + s
        out[:, s] = (np.roll(f, -1, axis=ax) - f) / g.h
    return out


def divergence_to_cells(phi: np.ndarray, g: GridSpec) -> np.ndarray:
    """d_h: sum over axes of (phi_{l+1/2} - phi_{l-1/2})/h at each cell."""
    _check_edge(phi, g)
    out = np.zeros(g.cell_shape(phi.shape[0]))
    for s in range(g.dim):
        ax = 1 + s
        p = phi[:, s]
        out += (p - np.roll(p, 1, axis=ax)) / g.h
    return out


def average_to_edges(f: np.ndarray, g: GridSpec) -> np.ndarray:
    """Two-point average onto edge midpoints, periodic."""
    _check_cell(f, g)
    out = np.empty(g.edge_shape(f.shape[0]))
    for s in range(g.dim):
        ax = 1 + s
        out[:, s] = 0.5 * (f + np.roll(f, -1, axis=ax))
    return out


def inner_cells(f: np.ndarray, gfield: np.ndarray, g: GridSpec) -> float:
    """<f, g> = h^d * sum over species and cells."""
    _check_cell(f, g)
    if f.shape != gfield.shape:
        raise ValueError("cell fields have mismatched shapes")
    return g.h ** g.dim * float(np.sum(f * gfield))


def inner_edges(f: np.ndarray, gfield: np.ndarray, g: GridSpec) -> float:
    """[f, g] = h^d * sum over species, axes and edges."""
    _check_edge(f, g)
    if f.shape != gfield.shape:
        raise ValueError("edge fields have mismatched shapes")
    return g.h ** g.dim * float(np.sum(f * gfield))
