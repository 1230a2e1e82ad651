from typing import Callable, Literal, Optional, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    computed_field,
    field_validator,
    model_validator,
)

from patchkpp.access.config.constants import SINK_CAP
from patchkpp.engine.pde.contracts import Grid


class Landscape(BaseModel):
    """Periodic two-patch tile: type-1 patches (nl - l1, nl), type-2 (nl, nl + l2)."""

    model_config = ConfigDict(frozen=True)

    l1: float = Field(gt=0)
    l2: float = Field(gt=0)
    d1: float = Field(gt=0)
    d2: float = Field(gt=0)
    alpha: float = Field(gt=0, lt=1)

    @computed_field
    @property
    def sigma(self) -> float:
        return (1 - self.alpha) / self.alpha

    @computed_field
    @property
    def k(self) -> float:
        # Written through sigma so that k * d1 * sigma reproduces d2.
        return self.d2 / (self.sigma * self.d1)

    @computed_field
    @property
    def period(self) -> float:
        return self.l1 + self.l2

    @property
    def d_max(self) -> float:
        return max(self.d1, self.d2)

    def diffusivity(self, patch_type: int) -> float:
        return self.d1 if patch_type == 1 else self.d2

    def flux_weight(self, patch_type: int) -> float:
        """Weight w_i in w_left (u' - mu u)(x-) = w_right (u' - mu u)(x+)."""
        return 1.0 if patch_type == 1 else self.sigma

    def patch_type_at(self, x: np.ndarray) -> np.ndarray:
        """Patch type at points strictly inside patches (1 or 2)."""
        phase: np.ndarray = np.mod(np.asarray(x, dtype=float), self.period)
        return np.where(phase < self.l2, 2, 1)


class InterfaceSet(BaseModel):
    model_config = ConfigDict(frozen=True)

    s1_points: list[float]  # nl
    s2_points: list[float]  # nl + l2

    @model_validator(mode="after")
    def points_must_alternate(self) -> "InterfaceSet":
        merged = sorted(
            [(x, 1) for x in self.s1_points] + [(x, 2) for x in self.s2_points]
        )
        for (x0, kind0), (x1, kind1) in zip(merged, merged[1:]):
            if not x0 < x1:
                raise ValueError("interface points must be strictly increasing")
            if kind0 == kind1:
                raise ValueError("S1 and S2 points must alternate")
        return self

    @property
    def points(self) -> list[float]:
        return sorted(self.s1_points + self.s2_points)


class _ReactionBase(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    K1: float = Field(gt=0)
    K2: float = Field(gt=0)

    @property
    def f1_prime0(self) -> float:
        raise NotImplementedError

    @property
    def f2_prime0(self) -> float:
        raise NotImplementedError

    @property
    def cap(self) -> float:
        """M = max(K1, K2)."""
        return max(self.K1, self.K2)

    def prime0(self, patch_type: int) -> float:
        return self.f1_prime0 if patch_type == 1 else self.f2_prime0

    def f(self, patch_type: int, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def df(self, patch_type: int, s: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def values(self, node_types: np.ndarray, s: np.ndarray) -> np.ndarray:
        """f(x, s) per node; nodes tagged 0 (interfaces, boundaries) get 0."""
        return np.where(
            node_types == 1,
            self.f(1, s),
            np.where(node_types == 2, self.f(2, s), 0.0),
        )

    def derivatives(self, node_types: np.ndarray, s: np.ndarray) -> np.ndarray:
        return np.where(
            node_types == 1,
            self.df(1, s),
            np.where(node_types == 2, self.df(2, s), 0.0),
        )

    def lipschitz(self, upper: float, samples: int = 2001) -> float:
        """max over [0, upper] of |f_i'|, sampled."""
        s: np.ndarray = np.linspace(0.0, upper, samples)
        return float(max(np.abs(self.df(1, s)).max(), np.abs(self.df(2, s)).max()))

    @model_validator(mode="after")
    def type_one_must_be_more_favorable(self):
        if self.f1_prime0 < self.f2_prime0:
            message: str
            message = f"f1'(0)={self.f1_prime0} < f2'(0)={self.f2_prime0}; "
            message += "type-1 patches must be at least as favorable as type-2"
            raise ValueError(message)
        return self


class LogisticReaction(_ReactionBase):
    """f_i(s) = s (mu_i - s / kappa_i); kappa_i = 1 gives s (mu_i - s)."""

    kind: Literal["logistic"] = "logistic"
    mu1: float
    mu2: float
    kappa1: float = Field(default=1.0, gt=0)
    kappa2: float = Field(default=1.0, gt=0)

    @model_validator(mode="before")
    @classmethod
    def caps_default_to_positive_root(cls, data: dict) -> dict:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        try:
            roots: dict[str, float] = {
                "K1": float(data["mu1"]) * float(data.get("kappa1", 1.0)),
                "K2": float(data["mu2"]) * float(data.get("kappa2", 1.0)),
            }
        except (KeyError, TypeError, ValueError):
            # Field validation reports the missing or malformed rate.
            return data
        positive: list[float] = [root for root in roots.values() if root > 0]
        fallback: float = max(positive) if positive else SINK_CAP
        for name, root in roots.items():
            if data.get(name) is None:
                data[name] = root if root > 0 else fallback
        return data

    @property
    def f1_prime0(self) -> float:
        return self.mu1

    @property
    def f2_prime0(self) -> float:
        return self.mu2

    def _params(self, patch_type: int) -> tuple[float, float]:
        if patch_type == 1:
            return self.mu1, self.kappa1
        return self.mu2, self.kappa2

    def f(self, patch_type: int, s: np.ndarray) -> np.ndarray:
        mu, kappa = self._params(patch_type)
        return s * (mu - s / kappa)

    def df(self, patch_type: int, s: np.ndarray) -> np.ndarray:
        mu, kappa = self._params(patch_type)
        return mu - 2 * s / kappa


class TabulatedReaction(_ReactionBase):
    """User-supplied smooth nonlinearities with exact linearizations."""

    kind: Literal["tabulated"] = "tabulated"
    f1_fn: Callable[[np.ndarray], np.ndarray]
    f2_fn: Callable[[np.ndarray], np.ndarray]
    f1_prime0_value: float
    f2_prime0_value: float
    df1_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None
    df2_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def f1_prime0(self) -> float:
        return self.f1_prime0_value

    @property
    def f2_prime0(self) -> float:
        return self.f2_prime0_value

    def f(self, patch_type: int, s: np.ndarray) -> np.ndarray:
        fn = self.f1_fn if patch_type == 1 else self.f2_fn
        return np.asarray(fn(np.asarray(s, dtype=float)), dtype=float)

    def df(self, patch_type: int, s: np.ndarray) -> np.ndarray:
        fn = self.df1_fn if patch_type == 1 else self.df2_fn
        s = np.asarray(s, dtype=float)
        if fn is not None:
            return np.asarray(fn(s), dtype=float)
        step: np.ndarray = 1e-7 * np.maximum(1.0, np.abs(s))
        return (self.f(patch_type, s + step) - self.f(patch_type, s - step)) / (
            2 * step
        )


Reaction = Union[LogisticReaction, TabulatedReaction]


class HypothesisReport(BaseModel):
    f_vanishes_at_zero: bool
    bounded_by_caps: bool  # f_i <= 0 on [K_i, +inf)
    per_capita_non_increasing: bool  # s -> f_i(s) / s for both patches
    per_capita_decreasing_somewhere: bool  # strictly, for at least one patch
    type_one_more_favorable: bool
    samples: int
    messages: list[str] = []

    @property
    def existence_holds(self) -> bool:
        return self.f_vanishes_at_zero and self.bounded_by_caps

    @property
    def kpp_holds(self) -> bool:
        return self.per_capita_non_increasing and self.per_capita_decreasing_somewhere


class PhysicalField(BaseModel):
    """Physical density v; interface nodes carry the one-sided limits."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    time: float = 0.0
    grid: Grid
    values: np.ndarray  # v at patch and boundary nodes; ignored at interfaces
    left_limits: np.ndarray  # v(x-) per entry of grid.interface_nodes
    right_limits: np.ndarray  # v(x+) per entry of grid.interface_nodes

    @field_validator("values", "left_limits", "right_limits")
    @classmethod
    def must_be_float_array(cls, value: np.ndarray) -> np.ndarray:
        return np.asarray(value, dtype=float)

    @model_validator(mode="after")
    def limits_must_match_interfaces(self) -> "PhysicalField":
        count: int = len(self.grid.interface_nodes)
        if len(self.left_limits) != count or len(self.right_limits) != count:
            raise ValueError(f"expected {count} one-sided limits per side")
        if len(self.values) != self.grid.size:
            raise ValueError(f"expected {self.grid.size} nodal values")
        return self
