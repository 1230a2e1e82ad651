import numpy as np
import pytest

import patchkpp.engine.pde.service as engine
from patchkpp.engine.landscape.contracts import Landscape, LogisticReaction
from patchkpp.engine.landscape.service import build_landscape
from patchkpp.engine.pde.contracts import Field, Grid, StepperConfig
from patchkpp.utility.exceptions import NegativeInitialData, WindowTooSmall

unit: Landscape = build_landscape(l1=1, l2=1, d1=1, d2=1, alpha=0.5)


@pytest.fixture
def grid() -> Grid:
    return engine.build_grid(unit, n_tiles=2, nodes_per_patch=8)


def test_cutoff_is_one_inside_and_zero_at_the_ends(grid):
    # Act
    chi: np.ndarray = engine.cutoff(grid)
    # Assert
    x: np.ndarray = grid.node_positions
    assert chi[0] == 0.0 and chi[-1] == 0.0
    np.testing.assert_allclose(chi[np.abs(x) <= 3.25], 1.0)
    assert np.all((chi >= 0) & (chi <= 1))


def test_apply_cutoff_samples_callables(grid):
    # Act
    field: Field = engine.apply_cutoff(lambda x: np.full_like(x, 0.5), grid)
    # Assert
    assert field.time == 0.0
    np.testing.assert_allclose(field.values, 0.5 * engine.cutoff(grid))


def test_apply_cutoff_rejects_negative_data(grid):
    with pytest.raises(NegativeInitialData):
        engine.apply_cutoff(np.full(grid.size, -1.0), grid)


def test_translate_shifts_by_one_period(grid):
    # Arrange
    x: np.ndarray = grid.node_positions
    field = Field(values=x + 10.0, grid=grid)
    # Act
    shifted: Field = engine.translate(field)
    # Assert
    inner: np.ndarray = np.arange(1, grid.size - grid.nodes_per_period)
    np.testing.assert_allclose(shifted.values[inner], x[inner] + 12.0, atol=1e-12)
    assert np.all(shifted.values[grid.size - grid.nodes_per_period :] == 0.0)
    assert shifted.values[0] == 0.0


def test_periodicity_defect_of_periodic_and_linear_data(grid):
    # Arrange
    x: np.ndarray = grid.node_positions
    periodic = Field(values=1 + np.cos(np.pi * x), grid=grid)
    linear = Field(values=x + 5.0, grid=grid)
    # Act / Assert
    assert engine.periodicity_defect(periodic, 3.0) < 1e-12
    assert engine.periodicity_defect(linear, 3.0) == pytest.approx(2.0)


def test_semiflow_at_time_zero_is_the_identity(grid):
    field: Field = engine.apply_cutoff(lambda x: np.full_like(x, 0.5), grid)
    result: Field = engine.semiflow_apply(
        field, 0.0, unit, LogisticReaction(mu1=1, mu2=1), StepperConfig()
    )
    np.testing.assert_array_equal(result.values, field.values)


def test_semiflow_needs_room_beyond_the_assertion_region(grid):
    field: Field = engine.apply_cutoff(lambda x: np.full_like(x, 0.5), grid)
    with pytest.raises(WindowTooSmall):
        engine.semiflow_apply(
            field, 1.0, unit, LogisticReaction(mu1=1, mu2=1), StepperConfig()
        )
