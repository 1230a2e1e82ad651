import math

import numpy as np
import pytest
from scipy.linalg import expm

import patchkpp.engine.eigen.service as engine
from patchkpp.engine.eigen.contracts import EigenMethod, MuFamilySample
from patchkpp.engine.landscape.contracts import Landscape, LogisticReaction
from patchkpp.engine.landscape.service import build_landscape
from patchkpp.utility.exceptions import NonPositiveParameter

reference: Landscape = build_landscape(l1=2, l2=1, d1=1, d2=0.5, alpha=0.4)
source_sink = LogisticReaction(mu1=1.0, mu2=-1.0)


@pytest.mark.parametrize(
    "mu, growth, lam, d, x",
    [
        (0.0, 1.0, -0.5, 1.0, 2.0),  # oscillatory
        (0.8, -1.0, 0.2, 0.5, 1.0),  # exponential
        (-1.3, 1.0, -0.3, 1.0, 0.7),
        (0.5, 1.0, -1.0, 2.0, 1.5),  # w = 0
    ],
)
def test_propagator_matches_matrix_exponential(mu, growth, lam, d, x):
    # Arrange
    companion = np.array([[0.0, 1.0], [-(mu**2 + (growth + lam) / d), 2 * mu]])
    # Act
    propagator: np.ndarray = engine._propagator(mu, growth, lam, d, x)
    # Assert
    np.testing.assert_allclose(
        propagator, expm(companion * x) * math.exp(-mu * x), rtol=1e-10, atol=1e-12
    )


@pytest.mark.parametrize("d, m", [(1.0, 1.0), (0.25, 0.5), (4.0, 1.0)])
@pytest.mark.parametrize("mu", [0.0, 0.3, 1.0, -2.0])
def test_homogeneous_family_is_a_parabola(d, m, mu):
    # Arrange
    homogeneous: Landscape = build_landscape(l1=1, l2=1, d1=d, d2=d, alpha=0.5)
    reaction = LogisticReaction(mu1=m, mu2=m)
    # Act
    sample: MuFamilySample = engine.lambda_mu(homogeneous, reaction, mu)
    # Assert
    assert sample.lambda_mu == pytest.approx(-d * mu**2 - m, abs=1e-10)
    np.testing.assert_allclose(sample.psi, 1.0, atol=1e-8)


def test_zero_drift_reproduces_the_dispersion_root():
    lam0: float = engine.lambda_mu(reference, source_sink, 0.0).lambda_mu
    lam1: float = engine.lambda1_dispersion(reference, source_sink).lambda_
    assert lam0 == pytest.approx(lam1, abs=1e-9)


@pytest.mark.parametrize(
    "mu", np.random.default_rng(1).uniform(0.0, 3.0, size=20).round(6).tolist()
)
def test_family_is_even_in_mu(mu):
    right: float = engine.lambda_mu(reference, source_sink, mu).lambda_mu
    left: float = engine.lambda_mu(reference, source_sink, -mu).lambda_mu
    assert right == pytest.approx(left, abs=1e-9)


def test_family_is_concave():
    # Arrange
    rng = np.random.default_rng(0)
    pairs = rng.uniform(-3, 3, size=(50, 2))

    def lam(mu: float) -> float:
        return engine.lambda_mu(reference, source_sink, mu).lambda_mu

    # Act / Assert
    for a, b in pairs:
        assert lam(0.5 * (a + b)) >= 0.5 * (lam(a) + lam(b)) - 1e-8


def test_eigenfunction_is_positive_and_normalized():
    sample: MuFamilySample = engine.lambda_mu(reference, source_sink, 0.8)
    assert sample.method == EigenMethod.TRANSFER_MATRIX
    assert sample.psi.min() > 0
    assert sample.psi.max() == pytest.approx(1.0)
    assert sample.residual < 1e-8


def test_discriminant_changes_sign_at_the_principal_value():
    # Arrange
    mu: float = 0.8
    lam: float = engine.lambda_mu(reference, source_sink, mu).lambda_mu
    # Act
    below: float = engine.floquet_discriminant(reference, source_sink, mu, lam - 0.01)
    above: float = engine.floquet_discriminant(reference, source_sink, mu, lam + 0.01)
    # Assert
    assert below < 0 < above


def test_grid_method_agrees_after_extrapolation():
    # Act
    check = engine.cross_check_lambda_mu(reference, source_sink, 0.7, 64)
    # Assert
    assert check.tolerance == 1e-6
    assert check.difference <= 1e-6
    assert abs(check.grid_fine - check.transfer_matrix) < abs(
        check.grid_coarse - check.transfer_matrix
    )


def test_non_finite_drift_is_rejected():
    with pytest.raises(NonPositiveParameter):
        engine.lambda_mu(reference, source_sink, math.inf)
