import numpy as np
import pytest

import patchkpp.engine.pde.service as engine
from patchkpp.engine.landscape.contracts import Landscape
from patchkpp.engine.landscape.service import build_landscape
from patchkpp.engine.pde.contracts import DiscreteOperator, Grid

reference: Landscape = build_landscape(l1=2, l2=1, d1=1, d2=0.5, alpha=0.4)


@pytest.fixture
def grid() -> Grid:
    return engine.build_grid(reference, n_tiles=1, nodes_per_patch=8)


@pytest.fixture
def operator(grid) -> DiscreteOperator:
    return engine.assemble_operator(grid, reference)


def test_diffusion_is_exact_on_quadratics(grid, operator):
    # Arrange
    x: np.ndarray = grid.node_positions
    d: np.ndarray = np.where(grid.node_types == 1, reference.d1, reference.d2)
    # Act
    applied: np.ndarray = operator.diffusion @ (x**2)
    # Assert
    np.testing.assert_allclose(applied[grid.interior], 2 * d[grid.interior], rtol=1e-10)


def test_constants_satisfy_every_flux_row(grid, operator):
    applied: np.ndarray = operator.flux @ np.full(grid.size, 3.0)
    np.testing.assert_allclose(applied[grid.interface_nodes], 0.0, atol=1e-12)


def test_flux_row_on_linear_data(grid, operator):
    # Arrange
    x: np.ndarray = grid.node_positions
    widths: np.ndarray = grid.widths
    nodes: np.ndarray = grid.interface_nodes
    left_types, right_types = grid.interface_sides()
    wl: np.ndarray = np.where(left_types == 1, 1.0, reference.sigma)
    wr: np.ndarray = np.where(right_types == 1, 1.0, reference.sigma)
    scale: np.ndarray = 1 / (wl / widths[nodes - 1] + wr / widths[nodes])
    # Act
    applied: np.ndarray = (operator.flux @ x)[nodes]
    # Assert
    np.testing.assert_allclose(applied, scale * (wl - wr), rtol=1e-10)
    np.testing.assert_allclose(operator.flux_scale[nodes], scale)


def test_flux_rows_vanish_on_a_matched_kink(grid, operator):
    # Arrange: slopes 1 on type-1 and 1/sigma on type-2 keep w u' continuous
    x: np.ndarray = grid.node_positions
    nodes: np.ndarray = grid.interface_nodes
    u: np.ndarray = np.zeros(grid.size)
    for i in range(1, grid.size):
        rate: float = 1.0 if grid.patch_type[i - 1] == 1 else 1 / reference.sigma
        u[i] = u[i - 1] + rate * (x[i] - x[i - 1])
    # Act
    applied: np.ndarray = (operator.flux @ u)[nodes]
    # Assert
    np.testing.assert_allclose(applied, 0.0, atol=1e-12)


def test_drift_terms_annihilate_exponentials(grid):
    # Arrange: e^{mu x} solves u'' - 2 mu u' + mu^2 u = 0 and u' - mu u = 0
    mu: float = 0.7
    u: np.ndarray = np.exp(mu * grid.node_positions)
    operator: DiscreteOperator = engine.assemble_operator(grid, reference, mu)
    # Act
    interior: np.ndarray = (operator.diffusion @ u)[grid.interior]
    flux: np.ndarray = (operator.flux @ u)[grid.interface_nodes]
    # Assert: second-order accurate, so only small
    assert np.abs(interior).max() < 0.2
    assert np.abs(flux).max() < 2e-2


def test_periodic_operator_wraps_around():
    # Arrange
    grid: Grid = engine.build_period_grid(reference, nodes_per_patch=8)
    operator: DiscreteOperator = engine.assemble_operator(grid, reference)
    # Act
    row_sums: np.ndarray = np.asarray(operator.diffusion.sum(axis=1)).ravel()
    # Assert
    np.testing.assert_allclose(row_sums, 0.0, atol=1e-10)
    assert operator.flux[0, grid.size - 1] != 0
