from enum import Enum
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field as PydanticField, field_validator
from scipy import sparse

from patchkpp.access.config.constants import (
    BOUND_TOL,
    DEFAULT_DT,
    DEFAULT_NEWTON_MAX_ITER,
    DEFAULT_NEWTON_TOL,
)

# Node tags
BOUNDARY: int = -1
INTERFACE: int = 0


class Grid(BaseModel):
    """Finite-difference nodes with every interface point of S as a node.

    Interval j spans node_positions[j] to node_positions[j + 1] (wrapping to
    node_positions[0] + period for periodic grids) and has patch type
    patch_type[j].
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: Literal["truncated", "periodic", "window"]
    n_tiles: int
    nodes_per_patch: int
    node_positions: np.ndarray
    patch_type: np.ndarray
    node_types: np.ndarray  # 1, 2 inside patches; 0 interfaces; -1 boundaries
    interface_nodes: np.ndarray
    interface_kinds: np.ndarray  # 1 for S1, 2 for S2
    h1: float
    h2: float
    period: float
    shift: float = 0.0

    @property
    def periodic(self) -> bool:
        return self.kind == "periodic"

    @property
    def size(self) -> int:
        return len(self.node_positions)

    @property
    def widths(self) -> np.ndarray:
        x: np.ndarray = self.node_positions
        if self.periodic:
            return np.diff(np.append(x, x[0] + self.period))
        return np.diff(x)

    @property
    def nodes_per_period(self) -> int:
        return 2 * (self.nodes_per_patch + 1)

    @property
    def interior(self) -> np.ndarray:
        return self.node_types > 0

    @property
    def boundary(self) -> np.ndarray:
        return self.node_types == BOUNDARY

    @property
    def halfwidth(self) -> float:
        return 0.5 * (self.node_positions[-1] - self.node_positions[0])

    def interface_sides(self) -> tuple[np.ndarray, np.ndarray]:
        """Patch types on the left and right of each interface node."""
        nodes: np.ndarray = self.interface_nodes
        return self.patch_type[nodes - 1], self.patch_type[nodes]

    def node_patch_types(self) -> np.ndarray:
        """Patch type of each node, interfaces taking the type-1 side."""
        types: np.ndarray = self.node_types.copy()
        types[self.node_types == INTERFACE] = 1
        if not self.periodic:
            types[0] = self.patch_type[0]
            types[-1] = self.patch_type[-1]
        return types


class Field(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    time: float = 0.0
    values: np.ndarray
    grid: Grid

    @field_validator("values")
    @classmethod
    def values_must_be_finite(cls, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=float)
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        return values

    @property
    def positions(self) -> np.ndarray:
        return self.grid.node_positions

    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())


class Scheme(str, Enum):
    IMPLICIT_EULER_NEWTON = "implicit_euler_newton"
    IMEX = "imex"
    CRANK_NICOLSON_NEWTON = "crank_nicolson_newton"


class StepperConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dt: float = PydanticField(default=DEFAULT_DT, gt=0)
    scheme: Scheme = Scheme.IMPLICIT_EULER_NEWTON
    newton_tol: float = PydanticField(default=DEFAULT_NEWTON_TOL, gt=0)
    newton_max_iter: int = PydanticField(default=DEFAULT_NEWTON_MAX_ITER, gt=0)
    snapshot_every: int = PydanticField(default=0, ge=0)  # 0: first and last only
    bound_tol: float = PydanticField(default=BOUND_TOL, gt=0)


class Trajectory(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    grid: Grid
    times: list[float]
    snapshots: list[np.ndarray]
    bound: float

    @property
    def final(self) -> Field:
        return Field(time=self.times[-1], values=self.snapshots[-1], grid=self.grid)


class DiscreteOperator(BaseModel):
    """Rows of the interface problem on a grid.

    diffusion: (D u)_j = d_j (u'' - 2 mu u' + mu^2 u) at interior nodes.
    flux: (F u)_j = w_left (u' - mu u)(x_j-) - w_right (u' - mu u)(x_j+) at
    interface nodes, with second-order one-sided differences.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    diffusion: sparse.csr_matrix
    flux: sparse.csr_matrix
    flux_scale: np.ndarray  # per-node spacing used to make flux rows O(u)


class PropertyCheck(BaseModel):
    name: str
    cases: int
    worst: float
    tolerance: float
    passed: bool


class PropertyReport(BaseModel):
    seed: int
    checks: list[PropertyCheck]
    periodicity_defect: Optional[float] = None

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)
