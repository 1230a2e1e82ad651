import numpy as np
import pytest

import patchkpp.engine.eigen.service as engine
from patchkpp.engine.eigen.contracts import (
    CriticalLengths,
    EigenMethod,
    EigenResult,
    SigmaSweep,
)
from patchkpp.engine.landscape.contracts import Landscape, LogisticReaction
from patchkpp.engine.landscape.service import (
    build_landscape,
    build_landscape_from_sigma,
)
from patchkpp.utility.exceptions import NotSourceSink

reference: Landscape = build_landscape(l1=2, l2=1, d1=1, d2=0.5, alpha=0.4)
source_sink = LogisticReaction(mu1=1.0, mu2=-1.0)


@pytest.fixture(scope="module")
def principal() -> EigenResult:
    return engine.lambda1_dispersion(reference, source_sink)


def test_equal_rates_give_minus_the_rate():
    # Arrange
    reaction = LogisticReaction(mu1=0.7, mu2=0.7)
    # Act
    result: EigenResult = engine.lambda1_dispersion(reference, reaction)
    # Assert
    assert result.lambda_ == -0.7
    np.testing.assert_array_equal(result.eigenfunction, 1.0)


def test_root_lies_in_the_admissible_bracket(principal):
    assert -1.0 < principal.lambda_ < 1.0
    # type-1 patches of length 2 exceed the critical length, so persistence
    assert principal.lambda_ < 0
    assert principal.method == EigenMethod.DISPERSION_ROOT
    assert principal.residual < 1e-10


def test_eigenfunction_is_positive_and_even_in_each_patch(principal):
    # Arrange: samples -2 + k / 32; the mirror of sample k about -1 is 64 - k
    phi: np.ndarray = principal.eigenfunction
    # Assert
    assert phi.min() > 0
    assert phi.max() == pytest.approx(1.0)
    np.testing.assert_allclose(phi[1:64], phi[63:0:-1], rtol=1e-12)
    assert np.argmax(phi) == 32


def test_critical_length_makes_lambda_vanish():
    # Arrange
    critical: CriticalLengths = engine.critical_patch_length(reference, source_sink)
    at_threshold: Landscape = build_landscape(
        l1=critical.l1c, l2=1, d1=1, d2=0.5, alpha=0.4
    )
    # Act
    lam: float = engine.lambda1_dispersion(at_threshold, source_sink).lambda_
    # Assert
    assert abs(lam) < 1e-8
    assert critical.l1c < critical.L1c


@pytest.mark.parametrize("mu2, persists", [(-0.5, True), (-0.6, False)])
def test_critical_sink_rate_separates_outcomes(mu2, persists):
    # Arrange: a long sink approaches the large-l2 threshold
    critical: CriticalLengths = engine.critical_patch_length(reference, source_sink)
    long_sink: Landscape = build_landscape(l1=2, l2=20, d1=1, d2=0.5, alpha=0.4)
    # Act
    lam: float = engine.lambda1_dispersion(
        long_sink, LogisticReaction(mu1=1.0, mu2=mu2)
    ).lambda_
    # Assert
    assert -0.6 < critical.f2_prime0_critical < -0.5
    assert (lam < 0) == persists


def test_critical_lengths_need_source_and_sink():
    with pytest.raises(NotSourceSink):
        engine.critical_patch_length(reference, LogisticReaction(mu1=1.0, mu2=0.5))


def test_sigma_sweep_increases_with_sigma():
    # Act
    sweep: SigmaSweep = engine.sigma_sweep(
        reference, source_sink, [0.1, 0.5, 1.0, 2.0, 10.0]
    )
    # Assert
    assert sweep.strictly_increasing
    np.testing.assert_allclose(sweep.alphas, 1 / (1 + np.array(sweep.sigmas)))


@pytest.mark.parametrize(
    "sigma, limit",
    [
        # all flux into the source: lambda1 -> -f1'(0)
        (1e-6, -1.0),
        # the source becomes a Dirichlet patch: min(d1 pi^2 / l1^2 - f1'(0), -f2'(0))
        (1e6, min(np.pi**2 / 4 - 1.0, 1.0)),
    ],
)
def test_extreme_interface_preferences(sigma, limit):
    # Arrange
    landscape: Landscape = build_landscape_from_sigma(2, 1, 1, 0.5, sigma)
    # Act
    result: EigenResult = engine.lambda1_dispersion(landscape, source_sink)
    # Assert
    assert result.lambda_ == pytest.approx(limit, abs=1e-3)
