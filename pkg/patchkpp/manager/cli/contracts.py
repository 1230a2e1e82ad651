from typing import Optional

from pydantic import BaseModel

from patchkpp.engine.dynamics.contracts import PulsatingReport
from patchkpp.engine.eigen.contracts import CriticalLengths, CrossCheck, DirichletLadder
from patchkpp.engine.landscape.contracts import HypothesisReport
from patchkpp.engine.pde.contracts import PropertyReport
from patchkpp.engine.steady.contracts import UniquenessReport


class EigenSummary(BaseModel):
    lambda1_dispersion: float
    lambda1_transfer_matrix: float
    lambda1_grid: float
    max_disagreement: float
    hypotheses: HypothesisReport
    ladder: DirichletLadder
    ladder_strictly_decreasing: bool
    critical: Optional[CriticalLengths] = None
    sigma_sweep_increasing: Optional[bool] = None


class SpeedSummary(BaseModel):
    c_star: float
    mu_star: float
    lambda1: float
    c_star_left: float
    lambda_at_mu_star: float
    first_order_defect: float
    quasi_convex: bool
    grid_check: Optional[CrossCheck] = None
    c_fitted_right: Optional[float] = None
    c_fitted_left: Optional[float] = None
    c_raw_right: Optional[float] = None
    rel_err: Optional[float] = None


class FrontSummary(BaseModel):
    level: float
    speed_right: float
    stderr_right: float
    speed_left: float
    stderr_left: float
    raw_speed_right: float
    raw_speed_left: float
    log_shift: float


class SimulateSummary(BaseModel):
    T: float
    halfwidth: float
    nodes: int
    lambda1: float
    final_sup: float
    bound: float
    periodicity_defect: Optional[float] = None
    front: Optional[FrontSummary] = None
    pulsating: Optional[PulsatingReport] = None
    property_suite: Optional[PropertyReport] = None


class SteadySummary(BaseModel):
    exists: bool
    lambda1: float
    min_p: float
    max_p: float
    residual: float
    near_critical: bool
    converged: bool
    uniqueness: Optional[UniquenessReport] = None


class SelftestCase(BaseModel):
    name: str
    value: float
    expected: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.value - self.expected) <= self.tolerance


class SelftestReport(BaseModel):
    cases: list[SelftestCase]
    passed: bool
