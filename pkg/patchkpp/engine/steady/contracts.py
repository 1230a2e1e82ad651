from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator


class SteadyState(BaseModel):
    """Periodic steady state on one period [-l1, l2), or an extinction verdict."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    exists: bool
    lambda1: float
    positions: np.ndarray
    patch_type: np.ndarray
    p: np.ndarray  # empty when extinct
    residual: float
    min_p: float = 0.0
    max_p: float = 0.0
    near_critical: bool = False
    converged: bool = True
    nodes_per_patch: int
    period: float

    @model_validator(mode="after")
    def persistent_state_must_be_positive(self) -> "SteadyState":
        if self.exists and not self.min_p > 0:
            raise ValueError(f"a persistent state needs min p > 0, got {self.min_p}")
        if self.exists and len(self.p) != len(self.positions):
            raise ValueError("p must be sampled at every node of the period")
        return self

    def tile(self, x: np.ndarray) -> np.ndarray:
        """p extended periodically to the points x."""
        if not self.exists:
            return np.zeros_like(x, dtype=float)
        return np.interp(x, self.positions, self.p, period=self.period)


class MarchRecord(BaseModel):
    start: str
    steps: int
    distance: float  # sup distance of the limit to the reference p
    monotone: Literal["non-increasing", "non-decreasing", "none"]
    monotone_defect: float  # worst step against the expected direction


class UniquenessReport(BaseModel):
    tolerance: float
    records: list[MarchRecord]

    @property
    def max_distance(self) -> float:
        return max(record.distance for record in self.records)

    @property
    def unique(self) -> bool:
        return self.max_distance <= self.tolerance


class AttractionReport(BaseModel):
    target: Literal["steady_state", "zero"]
    horizon: float
    assertion_halfwidth: float
    distance: float  # sup over the assertion region of |u - target|
    sup_norm: float  # sup over the whole window of u
