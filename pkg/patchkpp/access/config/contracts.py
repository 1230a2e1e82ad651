from pathlib import Path
from typing import Annotated, Literal, Optional, Union

from pydantic import BaseModel, Field, field_validator, model_validator

from patchkpp.access.config.constants import (
    DEFAULT_DT,
    DEFAULT_NEWTON_MAX_ITER,
    DEFAULT_NEWTON_TOL,
    FIT_FRACTION,
)
from patchkpp.engine.pde.contracts import Scheme


class LandscapeBlock(BaseModel):
    l1: float = Field(gt=0)
    l2: float = Field(gt=0)
    d1: float = Field(gt=0)
    d2: float = Field(gt=0)
    alpha: Optional[float] = None
    sigma: Optional[float] = None

    @model_validator(mode="after")
    def exactly_one_of_alpha_and_sigma(self) -> "LandscapeBlock":
        if (self.alpha is None) == (self.sigma is None):
            raise ValueError("give exactly one of alpha and sigma")
        if self.alpha is not None and not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1): {self.alpha}")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError(f"sigma must be positive: {self.sigma}")
        return self


class ReactionBlock(BaseModel):
    kind: Literal["logistic"] = "logistic"
    mu1: float
    mu2: float
    kappa1: float = Field(default=1.0, gt=0)
    kappa2: float = Field(default=1.0, gt=0)
    K1: Optional[float] = Field(default=None, gt=0)
    K2: Optional[float] = Field(default=None, gt=0)
    physical: bool = False  # rates given for the physical density v


class NumericsBlock(BaseModel):
    nodes_per_patch: int = Field(default=32, gt=0)
    eigen_nodes_per_patch: int = Field(default=64, gt=0)
    dt: float = Field(default=DEFAULT_DT, gt=0)
    scheme: Scheme = Scheme.IMPLICIT_EULER_NEWTON
    newton_tol: float = Field(default=DEFAULT_NEWTON_TOL, gt=0)
    newton_max_iter: int = Field(default=DEFAULT_NEWTON_MAX_ITER, gt=0)


class BumpData(BaseModel):
    kind: Literal["bump"] = "bump"
    center: float = 0.0
    width: float = Field(default=2.0, gt=0)
    height: float = Field(default=1.0, ge=0)


class ConstantData(BaseModel):
    kind: Literal["constant"] = "constant"
    value: float = Field(ge=0)


class PeriodicData(BaseModel):
    """Equally spaced samples over one period, starting at x = -l1."""

    kind: Literal["periodic"] = "periodic"
    samples: list[float]

    @field_validator("samples")
    @classmethod
    def samples_must_be_nonnegative(cls, samples: list[float]) -> list[float]:
        if len(samples) < 2:
            raise ValueError("periodic data need at least two samples")
        if min(samples) < 0:
            raise ValueError(f"periodic samples must be nonnegative: {min(samples)}")
        return samples


class FileData(BaseModel):
    """CSV with columns x, u; zero outside the sampled range."""

    kind: Literal["file"] = "file"
    path: Path


InitialDataBlock = Annotated[
    Union[BumpData, ConstantData, PeriodicData, FileData],
    Field(discriminator="kind"),
]


class PersistenceMapBlock(BaseModel):
    l1: list[float]
    l2: Optional[list[float]] = None
    f2_prime0: Optional[list[float]] = None
    simulate: bool = False  # add a steady-state verdict per cell

    @model_validator(mode="after")
    def exactly_one_second_axis(self) -> "PersistenceMapBlock":
        if (self.l2 is None) == (self.f2_prime0 is None):
            raise ValueError("give exactly one of l2 and f2_prime0 as second axis")
        values: list[float] = self.l1 + (self.l2 or [])
        if not values or min(values) <= 0:
            raise ValueError("patch lengths must be positive")
        return self


class ScenarioBlock(BaseModel):
    T: float = Field(default=20.0, gt=0)
    halfwidth: Optional[float] = Field(default=None, gt=0)
    initial: InitialDataBlock = BumpData()
    record_every: float = Field(default=0.5, gt=0)
    fit_fraction: float = Field(default=FIT_FRACTION, gt=0, le=1)
    front: bool = True
    measure_front: bool = False  # speed: also fit a simulated front
    pulsating: bool = False
    property_suite: bool = False
    cases: int = Field(default=50, gt=0)
    seed: int = Field(default=0, ge=0)
    sigmas: list[float] = []
    ladder: list[float] = [1, 2, 5, 10, 40]  # multiples of the period
    uniqueness: bool = True
    persistence_map: Optional[PersistenceMapBlock] = None

    @field_validator("sigmas", "ladder")
    @classmethod
    def values_must_be_positive(cls, values: list[float]) -> list[float]:
        if values and min(values) <= 0:
            raise ValueError(f"values must be positive: {values}")
        return values


class OutputBlock(BaseModel):
    directory: Path = Path("out")
    formats: list[Literal["csv", "json"]] = ["csv", "json"]


class RunConfig(BaseModel):
    landscape: LandscapeBlock
    reaction: ReactionBlock
    numerics: NumericsBlock = NumericsBlock()
    scenario: ScenarioBlock = ScenarioBlock()
    output: OutputBlock = OutputBlock()


class Manifest(BaseModel):
    command: str
    seed: int
    config: Optional[RunConfig] = None  # None for commands run without a config
    versions: dict[str, str]
    outputs: list[str]
