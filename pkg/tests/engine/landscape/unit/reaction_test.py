import numpy as np
import pytest
from pydantic import ValidationError

import patchkpp.engine.landscape.service as engine
from patchkpp.engine.landscape.contracts import (
    HypothesisReport,
    LogisticReaction,
    TabulatedReaction,
)

s = np.linspace(0.0, 3.0, 31)


def test_logistic_caps_default_to_positive_roots():
    # Act
    reaction = LogisticReaction(mu1=2.0, mu2=0.5, kappa2=4.0)
    # Assert
    assert reaction.K1 == 2.0
    assert reaction.K2 == 2.0
    assert reaction.cap == 2.0


def test_sink_patch_borrows_the_source_cap():
    reaction = LogisticReaction(mu1=1.5, mu2=-1.0)
    assert reaction.K1 == 1.5
    assert reaction.K2 == 1.5


def test_sink_only_reaction_uses_unit_cap():
    reaction = LogisticReaction(mu1=-0.5, mu2=-1.0)
    assert reaction.cap == 1.0


def test_logistic_values_and_derivatives():
    # Arrange
    reaction = LogisticReaction(mu1=1.0, mu2=-1.0)
    node_types = np.array([1, 2, 0, -1])
    values = np.full(4, 0.5)
    # Act
    f = reaction.values(node_types, values)
    df = reaction.derivatives(node_types, values)
    # Assert
    assert f.tolist() == [0.25, -0.75, 0.0, 0.0]
    assert df.tolist() == [0.0, -2.0, 0.0, 0.0]
    assert reaction.prime0(1) == 1.0
    assert reaction.prime0(2) == -1.0


def test_lipschitz_constant_on_unit_interval():
    reaction = LogisticReaction(mu1=1.0, mu2=-1.0)
    # |f2'(1)| = |-1 - 2|
    assert reaction.lipschitz(1.0) == pytest.approx(3.0)


def test_type_two_cannot_be_more_favorable():
    with pytest.raises(ValidationError):
        LogisticReaction(mu1=0.5, mu2=1.0)


@pytest.mark.parametrize(
    "data", [{"mu2": 1.0}, {"mu1": 1.0}, {"mu1": "fast", "mu2": 0.5}, {}]
)
def test_missing_or_malformed_rates_fail_validation(data):
    with pytest.raises(ValidationError):
        LogisticReaction.model_validate(data)


def test_tabulated_reaction_differentiates_numerically():
    # Arrange
    reaction = TabulatedReaction(
        f1_fn=lambda u: u * (1 - u),
        f2_fn=lambda u: -u - u**2,
        f1_prime0_value=1.0,
        f2_prime0_value=-1.0,
        K1=1.0,
        K2=1.0,
    )
    # Act
    df1 = reaction.df(1, s)
    # Assert
    np.testing.assert_allclose(df1, 1 - 2 * s, atol=1e-6)


def test_logistic_satisfies_hypotheses():
    # Act
    report: HypothesisReport = engine.validate_hypotheses(
        LogisticReaction(mu1=1.0, mu2=-1.0)
    )
    # Assert
    assert report.existence_holds
    assert report.kpp_holds
    assert report.type_one_more_favorable
    assert report.messages == []


def test_allee_effect_breaks_kpp_condition(caplog):
    # Arrange: f1(u) = u^2 (1 - u) has an increasing per-capita rate near 0
    reaction = TabulatedReaction(
        f1_fn=lambda u: u**2 * (1 - u),
        f2_fn=lambda u: -u,
        f1_prime0_value=0.0,
        f2_prime0_value=-1.0,
        K1=1.0,
        K2=1.0,
    )
    # Act
    report: HypothesisReport = engine.validate_hypotheses(reaction)
    # Assert
    assert report.existence_holds
    assert not report.per_capita_non_increasing
    assert not report.kpp_holds
    assert "not of KPP type" in caplog.text


def test_growth_beyond_cap_is_flagged():
    reaction = TabulatedReaction(
        f1_fn=lambda u: u * (2 - u),
        f2_fn=lambda u: -u,
        f1_prime0_value=2.0,
        f2_prime0_value=-1.0,
        K1=1.0,
        K2=1.0,
    )
    report = engine.validate_hypotheses(reaction)
    assert not report.bounded_by_caps
    assert not report.existence_holds
