import numpy as np
import pytest

from msdiff.grid import GridSpec
from msdiff.initial_conditions import sample_builtin
from msdiff.mixture import FrictionMatrix
from msdiff.stepper import StepConfig, advance, initial_state


@pytest.fixture(scope="session")
def paper_friction():
    b12 = b13 = 1 / 0.833
    b23 = 1 / 0.168
    return FrictionMatrix(np.array([
        [0.0, b12, b13],
        [b12, 0.0, b23],
        [b13, b23, 0.0]]))


@pytest.fixture(scope="session")
def short_paper_run(paper_friction):
    """paper-1d configuration advanced 20 steps with energy certificates."""
    g = GridSpec(dim=1, cells_per_axis=100)
    state = initial_state(g, paper_friction, sample_builtin("paper-1d", g))
    return advance(state, StepConfig(dt=0.001), 20)
