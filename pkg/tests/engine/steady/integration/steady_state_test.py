import numpy as np
import pandas as pd
import pytest

import patchkpp.engine.steady.service as engine
from patchkpp.engine.eigen.service import critical_patch_length
from patchkpp.engine.landscape.contracts import Landscape, LogisticReaction
from patchkpp.engine.landscape.service import build_landscape
from patchkpp.engine.pde.contracts import StepperConfig
from patchkpp.engine.steady.contracts import (
    AttractionReport,
    SteadyState,
    UniquenessReport,
)
from patchkpp.utility.exceptions import NotPersistent

homogeneous: Landscape = build_landscape(l1=1, l2=1, d1=1, d2=1, alpha=0.5)
reference: Landscape = build_landscape(l1=2, l2=1, d1=1, d2=0.5, alpha=0.4)
source_sink = LogisticReaction(mu1=1.0, mu2=-1.0)


@pytest.fixture(scope="module")
def persistent() -> SteadyState:
    return engine.compute_steady_state(reference, source_sink, nodes_per_patch=16)


def test_homogeneous_state_is_the_carrying_capacity():
    # Act
    state: SteadyState = engine.compute_steady_state(
        homogeneous, LogisticReaction(mu1=1.0, mu2=1.0), nodes_per_patch=16
    )
    # Assert
    assert state.exists
    np.testing.assert_allclose(state.p, 1.0, atol=1e-10)
    assert state.residual < 1e-10
    assert state.lambda1 == -1.0


def test_source_sink_state_is_positive_and_below_the_cap(persistent):
    assert persistent.exists
    assert persistent.converged
    assert not persistent.near_critical
    assert persistent.lambda1 < 0
    assert 0 < persistent.min_p < persistent.max_p <= source_sink.cap
    assert persistent.residual < 1e-8


def test_state_peaks_inside_the_source_patch(persistent):
    peak: float = persistent.positions[np.argmax(persistent.p)]
    assert -2.0 < peak < 0.0
    assert peak == pytest.approx(-1.0, abs=0.15)


def test_tile_extends_periodically(persistent):
    x: np.ndarray = persistent.positions[:5]
    np.testing.assert_allclose(persistent.tile(x + 3.0), persistent.p[:5], atol=1e-12)


def test_short_source_goes_extinct():
    # Arrange
    harsh = LogisticReaction(mu1=1.0, mu2=-3.0)
    short: Landscape = build_landscape(l1=1, l2=1, d1=1, d2=0.5, alpha=0.4)
    # Act
    state: SteadyState = engine.compute_steady_state(short, harsh, nodes_per_patch=16)
    # Assert
    assert not state.exists
    assert state.lambda1 > 0
    assert len(state.p) == 0
    np.testing.assert_array_equal(state.tile(np.linspace(-1, 1, 5)), 0.0)


def test_every_start_reaches_the_same_state(persistent):
    # Act
    report: UniquenessReport = engine.verify_uniqueness(
        persistent, reference, source_sink, seed=4
    )
    # Assert
    assert report.unique
    assert [record.start for record in report.records] == [
        "kappa_phi",
        "constant_M",
        "random_periodic",
    ]
    assert all(record.monotone_defect <= 1e-10 for record in report.records)


def test_uniqueness_needs_a_persistent_state():
    sink = LogisticReaction(mu1=-0.5, mu2=-0.5)
    extinct: SteadyState = engine.compute_steady_state(homogeneous, sink, 16)
    with pytest.raises(NotPersistent):
        engine.verify_uniqueness(extinct, homogeneous, sink)


def test_subsolution_scale_for_logistic_growth():
    kappa: float = engine.subsolution_scale(source_sink, np.ones(4), -0.2)
    assert kappa == pytest.approx(0.1)
    with pytest.raises(NotPersistent):
        engine.subsolution_scale(source_sink, np.ones(4), 0.1)


def test_bounded_data_are_attracted_to_the_steady_state():
    # Arrange
    logistic = LogisticReaction(mu1=1.0, mu2=1.0)
    state: SteadyState = engine.compute_steady_state(homogeneous, logistic, 16)
    # Act
    report: AttractionReport = engine.attraction_check(
        homogeneous,
        logistic,
        lambda x: np.full_like(x, 0.5),
        horizon=10.0,
        steady_state=state,
        config=StepperConfig(dt=0.01),
    )
    # Assert
    assert report.target == "steady_state"
    assert report.distance < 1e-3


def test_data_die_out_when_zero_is_stable():
    # Arrange
    sink = LogisticReaction(mu1=-0.5, mu2=-0.5)
    state: SteadyState = engine.compute_steady_state(homogeneous, sink, 16)
    # Act
    report: AttractionReport = engine.attraction_check(
        homogeneous,
        sink,
        lambda x: np.full_like(x, 0.5),
        horizon=20.0,
        steady_state=state,
        config=StepperConfig(dt=0.01),
    )
    # Assert
    assert report.target == "zero"
    assert report.sup_norm < 1e-4


def test_profile_frame_columns(persistent):
    frame: pd.DataFrame = engine.profile_frame(persistent)
    assert list(frame.columns) == ["x", "p", "patch_type"]
    assert len(frame) == len(persistent.positions)
    assert set(frame.patch_type) == {1, 2}


@pytest.mark.parametrize("f2", [-0.5, -1.0, -2.0])
@pytest.mark.parametrize("factor", [0.5, 0.9, 1.1, 2.0])
def test_verdict_follows_the_sign_of_lambda1(f2, factor):
    # Arrange
    reaction = LogisticReaction(mu1=1.0, mu2=f2)
    l1c: float = critical_patch_length(reference, reaction).l1c
    landscape: Landscape = build_landscape(
        l1=factor * l1c, l2=1, d1=1, d2=0.5, alpha=0.4
    )
    # Act
    state: SteadyState = engine.compute_steady_state(landscape, reaction, 16)
    # Assert
    assert state.exists == (state.lambda1 < 0)
    assert state.exists == (factor > 1)
    if state.exists:
        assert state.min_p > 0
        assert state.residual < 1e-8


def test_compact_bump_is_attracted_to_the_source_sink_state(persistent):
    # Arrange
    def bump(x: np.ndarray) -> np.ndarray:
        return 0.5 * np.maximum(0.0, 1 - np.abs(x) / 3)

    # Act
    report: AttractionReport = engine.attraction_check(
        reference,
        source_sink,
        bump,
        horizon=150.0,
        steady_state=persistent,
        config=StepperConfig(dt=0.05),
    )
    # Assert
    assert report.target == "steady_state"
    assert report.distance < 1e-3
