from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class EigenMethod(str, Enum):
    DISPERSION_ROOT = "dispersion_root"
    TRANSFER_MATRIX = "transfer_matrix"
    GRID_DISCRETIZATION = "grid_discretization"


class EigenResult(BaseModel):
    """Principal eigenpair; the eigenfunction has sup-norm 1."""

    model_config = ConfigDict(arbitrary_types_allowed=True, populate_by_name=True)

    lambda_: float = Field(alias="lambda")
    positions: np.ndarray
    eigenfunction: np.ndarray
    method: EigenMethod
    residual: float
    nodes_per_patch: Optional[int] = None

    @field_validator("eigenfunction")
    @classmethod
    def eigenfunction_must_be_normalized(cls, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if abs(np.abs(values).max() - 1) > 1e-12:
            raise ValueError("eigenfunction must have sup-norm 1")
        return values


class MuFamilySample(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mu: float
    lambda_mu: float
    positions: np.ndarray
    psi: np.ndarray
    method: EigenMethod
    residual: float


class CrossCheck(BaseModel):
    mu: float
    transfer_matrix: float
    grid_coarse: float
    grid_fine: float
    grid_extrapolated: float
    tolerance: float

    @property
    def difference(self) -> float:
        return abs(self.transfer_matrix - self.grid_extrapolated)


class CriticalLengths(BaseModel):
    l1c: float  # lambda1 = 0 at l1 = l1c
    L1c: float  # limit of l1c as l2 grows
    f2_prime0_critical: float  # -inf when no sink rate can make the landscape stable


class DirichletLadder(BaseModel):
    y_shift: float
    radii: list[float]
    values: list[float]

    @property
    def strictly_decreasing(self) -> bool:
        return all(a > b for a, b in zip(self.values, self.values[1:]))


class SigmaSweep(BaseModel):
    sigmas: list[float]
    alphas: list[float]
    lambdas: list[float]

    @property
    def strictly_increasing(self) -> bool:
        return all(a < b for a, b in zip(self.lambdas, self.lambdas[1:]))
