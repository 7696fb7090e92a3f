import numpy as np
import pytest

from msdiff.grid import GridSpec
from msdiff.initial_conditions import (load_tabulated, sample_builtin,
                                       tent_profile_1d)


def test_paper_1d_profile_values():
    x = np.array([0.1, 0.3, 0.5, 0.6, 0.9])
    r = tent_profile_1d(x)
    assert np.allclose(r[0], [0.8, 1.6 * 0.45, 0.4, 1.6 * 0.35, 0.8])
    assert np.allclose(r[1], 1e-4)
    assert np.allclose(r.sum(axis=0), 1.0)


def test_builtin_profiles_positive_and_normalized():
    g1 = GridSpec(dim=1, cells_per_axis=50)
    g2 = GridSpec(dim=2, cells_per_axis=12)
    for name, g in (("paper-1d", g1), ("two-species-cosine", g1), ("paper-2d", g2)):
        rho = sample_builtin(name, g)
        assert np.all(rho > 0)
        assert np.allclose(rho.sum(axis=0), 1.0)


def test_builtin_dimension_mismatch():
    with pytest.raises(ValueError):
        sample_builtin("paper-1d", GridSpec(dim=2, cells_per_axis=8))
    with pytest.raises(ValueError):
        sample_builtin("paper-2d", GridSpec(dim=1, cells_per_axis=8))
    with pytest.raises(ValueError):
        sample_builtin("no-such-profile", GridSpec(dim=1, cells_per_axis=8))


def test_load_tabulated_round_trip(tmp_path):
    g = GridSpec(dim=1, cells_per_axis=8)
    rho = sample_builtin("paper-1d", g)
    path = tmp_path / "ic.csv"
    xs = g.cell_centers()
    rows = np.column_stack([xs] + [rho[i] for i in range(3)])
    np.savetxt(path, rows, delimiter=",")
    loaded = load_tabulated(str(path), g, 3)
    assert np.allclose(loaded, rho)


def test_load_tabulated_shape_mismatch(tmp_path):
    g = GridSpec(dim=1, cells_per_axis=8)
    path = tmp_path / "bad.csv"
    np.savetxt(path, np.ones((5, 4)), delimiter=",")
    with pytest.raises(ValueError, match="shape"):
        load_tabulated(str(path), g, 3)
