from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from patchkpp.access.config.constants import DEFAULT_DT, FIT_FRACTION
from patchkpp.engine.eigen.contracts import CrossCheck
from patchkpp.engine.pde.contracts import Field as GridField
from patchkpp.engine.pde.contracts import Scheme


class SpeedSample(BaseModel):
    mu: float
    lambda_mu: float
    phi: float  # -lambda(mu) / mu


class SpeedResult(BaseModel):
    """Minimizer of phi(mu) = -lambda(mu) / mu over mu > 0, both directions."""

    c_star: float
    mu_star: float
    lambda_at_mu_star: float
    lambda1: float
    c_star_left: float
    mu_star_left: float
    first_order_defect: float
    samples: list[SpeedSample]
    bracket_history: list[tuple[float, float]]
    grid_check: Optional[CrossCheck] = None

    @property
    def quasi_convex(self) -> bool:
        """The sampled phi slope changes sign at most once, from - to +.

        Differences below 1e-12 relative to phi are round-off and carry no sign.
        """
        ordered: list[SpeedSample] = sorted(self.samples, key=lambda s: s.mu)
        phis: np.ndarray = np.array([sample.phi for sample in ordered])
        steps: np.ndarray = np.diff(phis)
        steps[np.abs(steps) <= 1e-12 * np.abs(phis[1:])] = 0.0
        slopes: np.ndarray = np.sign(steps)
        slopes = slopes[slopes != 0]
        return bool(np.all(np.diff(slopes) >= 0))


class SimParams(BaseModel):
    T: float = Field(gt=0)
    nodes_per_patch: int = Field(default=32, ge=4)
    dt: float = Field(default=DEFAULT_DT, gt=0)
    scheme: Scheme = Scheme.IMPLICIT_EULER_NEWTON
    level: Optional[float] = Field(default=None, gt=0)
    window_halfwidth: Optional[float] = Field(default=None, gt=0)
    record_every: float = Field(default=0.5, gt=0)
    fit_fraction: float = Field(default=FIT_FRACTION, gt=0, le=1)
    log_correction: bool = True
    late_fractions: list[float] = [0.6, 0.75, 0.9]

    @field_validator("late_fractions")
    @classmethod
    def fractions_must_lie_in_unit_interval(cls, values: list[float]) -> list[float]:
        for value in values:
            if not 0 < value < 1:
                raise ValueError(f"late fraction must lie in (0, 1): {value}")
        return sorted(values)


class FrontTrace(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    level: float
    times: list[float]
    right: list[float]  # NaN where no crossing exists
    left: list[float]
    t_transient: float
    speed_right: float
    stderr_right: float
    speed_left: float
    stderr_left: float
    raw_speed_right: float  # plain least-squares slopes
    raw_speed_left: float
    log_shift: float = 0.0  # 3 / (2 mu*) when the logarithmic lag is removed
    halfwidth: float
    final: GridField

    def spread_excess(self, c: float) -> float:
        """max of u(T, x) over |x| >= c T."""
        x: np.ndarray = self.final.positions
        outside: np.ndarray = np.abs(x) >= c * self.times[-1]
        return float(self.final.values[outside].max(initial=0.0))

    @property
    def symmetric_within(self) -> float:
        """Allowed |speed_right - speed_left|: 2% plus both fit errors."""
        mean: float = 0.5 * (self.speed_right + self.speed_left)
        return 0.02 * mean + self.stderr_right + self.stderr_left


class PulsatingReport(BaseModel):
    c_fitted: float
    T_period: float
    times: list[float]
    arrivals: list[float]  # measured time for the front to advance by l
    defects: list[float]  # max |u(t + arrival, x + l) - u(t, x)| near the front
    monotonicity_defect: float  # worst decrease in t at fixed x behind the front
    p_sup: float

    @property
    def max_defect(self) -> float:
        return max(self.defects)
