import pytest

import patchkpp.engine.pde.service as engine
from patchkpp.engine.landscape.contracts import Landscape, LogisticReaction
from patchkpp.engine.landscape.service import build_landscape
from patchkpp.engine.pde.contracts import PropertyReport, StepperConfig

# dt d / h^2 = 0.01 * 0.8 * 81 stays above 1/2
landscape: Landscape = build_landscape(l1=1, l2=1, d1=1, d2=0.8, alpha=0.4)
reaction = LogisticReaction(mu1=1.0, mu2=-0.5)
config = StepperConfig(dt=0.01)


@pytest.fixture(scope="module")
def report() -> PropertyReport:
    return engine.run_property_suite(landscape, reaction, config, cases=5, seed=3)


def test_every_property_holds(report):
    failed = [check.name for check in report.checks if not check.passed]
    assert failed == []
    assert report.passed


def test_every_check_ran_every_case(report):
    names = {check.name for check in report.checks}
    assert names == {
        "comparison",
        "strict_ordering",
        "positivity",
        "global_bound",
        "subhomogeneity",
        "composition",
        "translation",
        "lipschitz",
    }
    assert all(check.cases == 5 for check in report.checks)
    assert report.seed == 3


def test_periodic_data_stay_periodic(report):
    assert report.periodicity_defect is not None
    assert report.periodicity_defect < 1e-10


def test_same_seed_reproduces_the_report():
    first = engine.run_property_suite(landscape, reaction, config, cases=1, seed=11)
    second = engine.run_property_suite(landscape, reaction, config, cases=1, seed=11)
    assert first.model_dump() == second.model_dump()


@pytest.mark.slow
def test_properties_hold_over_fifty_random_cases():
    # Act
    report: PropertyReport = engine.run_property_suite(
        landscape, reaction, config, cases=50, seed=11
    )
    # Assert
    assert [check.name for check in report.checks if not check.passed] == []
    assert all(check.cases == 50 for check in report.checks)
