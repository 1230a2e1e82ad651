import numpy as np
import pytest

import patchkpp.engine.landscape.service as engine
from patchkpp.engine.landscape.contracts import (
    Landscape,
    LogisticReaction,
    PhysicalField,
    TabulatedReaction,
)
from patchkpp.engine.pde.contracts import Field, Grid
from patchkpp.engine.pde.service import build_grid
from patchkpp.utility.exceptions import InconsistentInterfaceValues

landscape: Landscape = engine.build_landscape(l1=2, l2=1, d1=1, d2=0.5, alpha=0.4)


@pytest.fixture
def grid() -> Grid:
    return build_grid(landscape, n_tiles=1, nodes_per_patch=8)


@pytest.fixture
def field(grid) -> Field:
    values: np.ndarray = 1 + 0.5 * np.cos(grid.node_positions)
    values[grid.boundary] = 0.0
    return Field(values=values, grid=grid)


def test_physical_density_jumps_by_k(field):
    # Act
    v_field: PhysicalField = engine.rescale_continuous_to_physical(field, landscape)
    # Assert
    u_faces: np.ndarray = field.values[field.grid.interface_nodes]
    left_types, right_types = field.grid.interface_sides()
    for u, left, right, lt, rt in zip(
        u_faces, v_field.left_limits, v_field.right_limits, left_types, right_types
    ):
        assert left == pytest.approx(u if lt == 1 else u / landscape.k)
        assert right == pytest.approx(u if rt == 1 else u / landscape.k)
    type_two: np.ndarray = field.grid.node_types == 2
    np.testing.assert_allclose(
        v_field.values[type_two], field.values[type_two] / landscape.k
    )


def test_physical_to_continuous_inverts(field):
    # Arrange
    v_field: PhysicalField = engine.rescale_continuous_to_physical(field, landscape)
    # Act
    restored: Field = engine.rescale_physical_to_continuous(v_field, landscape)
    # Assert
    np.testing.assert_allclose(restored.values, field.values, rtol=1e-14)


def test_inconsistent_interface_limits_are_rejected(field):
    # Arrange
    v_field: PhysicalField = engine.rescale_continuous_to_physical(field, landscape)
    right: np.ndarray = v_field.right_limits.copy()
    right[0] *= 1.01
    broken = v_field.model_copy(update=dict(right_limits=right))
    # Act / Assert
    with pytest.raises(InconsistentInterfaceValues):
        engine.rescale_physical_to_continuous(broken, landscape)


def test_logistic_rates_for_density_scale_the_type_two_cap():
    # Arrange
    reaction = LogisticReaction(mu1=1.0, mu2=0.5)
    # Act
    rescaled = engine.rescale_reaction_to_continuous(reaction, landscape)
    # Assert
    assert rescaled.K2 == pytest.approx(landscape.k * 0.5)
    assert rescaled.f2_prime0 == reaction.f2_prime0
    u = np.linspace(0, 1, 11)
    np.testing.assert_allclose(
        rescaled.f(2, u), landscape.k * reaction.f(2, u / landscape.k), atol=1e-15
    )


def test_tabulated_rates_for_density_are_conjugated():
    # Arrange
    reaction = TabulatedReaction(
        f1_fn=lambda u: u * (1 - u),
        f2_fn=lambda u: u * (0.5 - u),
        f1_prime0_value=1.0,
        f2_prime0_value=0.5,
        K1=1.0,
        K2=0.5,
    )
    # Act
    rescaled = engine.rescale_reaction_to_continuous(reaction, landscape)
    # Assert
    u = np.linspace(0, 1, 11)
    k: float = landscape.k
    np.testing.assert_allclose(rescaled.f(2, u), k * (u / k) * (0.5 - u / k))
    np.testing.assert_allclose(rescaled.df(2, u), 0.5 - 2 * u / k, atol=1e-6)
