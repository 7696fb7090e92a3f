import numpy as np
import pytest

from msdiff.grid import (GridSpec, average_to_edges, divergence_to_cells,
                         gradient_to_edges, inner_cells, inner_edges)


def test_gridspec_validation():
    g = GridSpec(dim=1, cells_per_axis=4, domain_length=1.0)
    assert g.h == 0.25
    assert g.n_cells == 4
    with pytest.raises(ValueError):
        GridSpec(dim=3, cells_per_axis=8)
    with pytest.raises(ValueError):
        GridSpec(dim=1, cells_per_axis=3)
    with pytest.raises(ValueError):
        GridSpec(dim=1, cells_per_axis=8, domain_length=-1.0)


def test_gradient_small_example():
    # f = (1,2,4,1), h = 0.25; edges ordered 3/2, 5/2, 7/2, 1/2-wrap
    g = GridSpec(dim=1, cells_per_axis=4)
    f = np.array([[1.0, 2.0, 4.0, 1.0]])
    Df = gradient_to_edges(f, g)
    assert np.allclose(Df[0, 0], [4.0, 8.0, -12.0, 0.0])


def test_gradient_of_constant_is_zero():
    g = GridSpec(dim=2, cells_per_axis=5)
    f = np.full(g.cell_shape(3), 2.7)
    assert np.all(gradient_to_edges(f, g) == 0.0)


def test_divergence_small_example():
    # phi = (1,0,0,0) on edges (3/2,5/2,7/2,1/2) -> cells (4,-4,0,0)
    g = GridSpec(dim=1, cells_per_axis=4)
    phi = np.zeros(g.edge_shape(1))
    phi[0, 0, 0] = 1.0
    div = divergence_to_cells(phi, g)
    assert np.allclose(div[0], [4.0, -4.0, 0.0, 0.0])


def test_divergence_of_constant_is_zero():
    g = GridSpec(dim=2, cells_per_axis=6)
    phi = np.full(g.edge_shape(2), -1.3)
    assert np.allclose(divergence_to_cells(phi, g), 0.0)


def test_average_small_example():
    g = GridSpec(dim=1, cells_per_axis=4)
    f = np.array([[1.0, 3.0, 5.0, 7.0]])
    assert np.allclose(average_to_edges(f, g)[0, 0], [2.0, 4.0, 6.0, 4.0])


def test_average_preserves_constants_and_positivity():
    rng = np.random.default_rng(7)
    g = GridSpec(dim=2, cells_per_axis=5)
    c = np.full(g.cell_shape(2), 0.4)
    assert np.allclose(average_to_edges(c, g), 0.4)
    f = rng.uniform(1e-6, 1.0, size=g.cell_shape(3))
    assert np.all(average_to_edges(f, g) > 0.0)


def test_inner_product_unit_field():
    g = GridSpec(dim=1, cells_per_axis=4)
    f = np.ones(g.cell_shape(1))
    assert inner_cells(f, f, g) == pytest.approx(1.0)


def test_inner_product_positive_definite():
    rng = np.random.default_rng(11)
    g = GridSpec(dim=1, cells_per_axis=9)
    f = rng.standard_normal(g.cell_shape(2))
    assert inner_cells(f, f, g) > 0.0
    assert inner_cells(np.zeros_like(f), np.zeros_like(f), g) == 0.0


@pytest.mark.parametrize("dim,N", [(1, 17), (2, 8)])
def test_summation_by_parts(dim, N):
    rng = np.random.default_rng(100 + dim)
    g = GridSpec(dim=dim, cells_per_axis=N)
    for _ in range(100):
        f = rng.standard_normal(g.cell_shape(2))
        phi = rng.standard_normal(g.edge_shape(2))
        lhs = inner_cells(f, divergence_to_cells(phi, g), g)
        rhs = inner_edges(gradient_to_edges(f, g), phi, g)
        scale = max(abs(lhs), abs(rhs), 1.0)
        assert abs(lhs + rhs) <= 1e-13 * scale


def test_operators_linear():
    rng = np.random.default_rng(3)
    g = GridSpec(dim=2, cells_per_axis=6)
    f1 = rng.standard_normal(g.cell_shape(2))
    f2 = rng.standard_normal(g.cell_shape(2))
    a, b = 2.5, -1.25
    assert np.allclose(gradient_to_edges(a * f1 + b * f2, g),
                       a * gradient_to_edges(f1, g) + b * gradient_to_edges(f2, g))
    p1 = rng.standard_normal(g.edge_shape(2))
    p2 = rng.standard_normal(g.edge_shape(2))
    assert np.allclose(divergence_to_cells(a * p1 + b * p2, g),
                       a * divergence_to_cells(p1, g) + b * divergence_to_cells(p2, g))


def test_periodic_shift_equivariance():
    rng = np.random.default_rng(5)
    g = GridSpec(dim=1, cells_per_axis=12)
    f = rng.standard_normal(g.cell_shape(1))
    shifted = np.roll(f, 4, axis=1)
    assert np.allclose(gradient_to_edges(shifted, g),
                       np.roll(gradient_to_edges(f, g), 4, axis=2))


def test_gradient_second_order_accuracy():
    # D_h of a sampled sine approximates the midpoint derivative at O(h^2)
    errors = []
    for N in (64, 128):
        g = GridSpec(dim=1, cells_per_axis=N)
        f = np.sin(2 * np.pi * g.cell_centers())[None]
        exact = 2 * np.pi * np.cos(2 * np.pi * g.edge_centers())
        err = np.max(np.abs(gradient_to_edges(f, g)[0, 0] - exact))
        errors.append(err)
    assert errors[0] / errors[1] == pytest.approx(4.0, rel=0.1)


def test_shape_mismatch_errors():
    g = GridSpec(dim=1, cells_per_axis=8)
    with pytest.raises(ValueError):
        gradient_to_edges(np.ones((2, 7)), g)
    with pytest.raises(ValueError):
        divergence_to_cells(np.ones((2, 2, 8)), g)
    with pytest.raises(ValueError):
        average_to_edges(np.ones((8,)), g)
