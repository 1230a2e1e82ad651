import numpy as np

from patchkpp.access.config.contracts import (
    BumpData,
    ConstantData,
    FileData,
    InitialDataBlock,
    LandscapeBlock,
    NumericsBlock,
    PeriodicData,
    ReactionBlock,
    RunConfig,
    ScenarioBlock,
)
from patchkpp.access.config.service import read_initial_file
from patchkpp.engine.dynamics.contracts import SimParams
from patchkpp.engine.landscape.contracts import Landscape, LogisticReaction, Reaction
from patchkpp.engine.landscape.service import (
    build_landscape,
    build_landscape_from_sigma,
    rescale_reaction_to_continuous,
)
from patchkpp.engine.pde.contracts import StepperConfig
from patchkpp.engine.pde.service import InitialData


class ContractsBuilder:
    """Engine contracts from the blocks of a RunConfig."""

    def landscape(self, block: LandscapeBlock) -> Landscape:
        kwargs: dict[str, float] = dict(
            l1=block.l1,
            l2=block.l2,
            d1=block.d1,
            d2=block.d2,
        )
        if block.sigma is not None:
            return build_landscape_from_sigma(sigma=block.sigma, **kwargs)
        return build_landscape(alpha=block.alpha, **kwargs)

    def reaction(self, block: ReactionBlock, landscape: Landscape) -> Reaction:
        reaction = LogisticReaction(**block.model_dump(exclude={"kind", "physical"}))
        if block.physical:
            return rescale_reaction_to_continuous(reaction, landscape)
        return reaction

    def stepper(
        self,
        numerics: NumericsBlock,
        snapshot_every: int = 0,
    ) -> StepperConfig:
        kwargs = dict(
            dt=numerics.dt,
            scheme=numerics.scheme,
            newton_tol=numerics.newton_tol,
            newton_max_iter=numerics.newton_max_iter,
            snapshot_every=snapshot_every,
        )
        return StepperConfig(**kwargs)

    def sim_params(self, numerics: NumericsBlock, scenario: ScenarioBlock) -> SimParams:
        kwargs = dict(
            T=scenario.T,
            nodes_per_patch=numerics.nodes_per_patch,
            dt=numerics.dt,
            scheme=numerics.scheme,
            window_halfwidth=scenario.halfwidth,
            record_every=scenario.record_every,
            fit_fraction=scenario.fit_fraction,
        )
        return SimParams(**kwargs)

    @staticmethod
    def _bump(block: BumpData) -> InitialData:
        def bump(x: np.ndarray) -> np.ndarray:
            z: np.ndarray = (x - block.center) / block.width
            return np.where(np.abs(z) < 0.5, block.height * np.cos(np.pi * z) ** 2, 0.0)

        return bump

    @staticmethod
    def _periodic(block: PeriodicData, landscape: Landscape) -> InitialData:
        samples: np.ndarray = np.asarray(block.samples, dtype=float)
        spacing: float = landscape.period / len(samples)
        xp: np.ndarray = -landscape.l1 + spacing * np.arange(len(samples))

        def periodic(x: np.ndarray) -> np.ndarray:
            return np.interp(x, xp, samples, period=landscape.period)

        return periodic

    @staticmethod
    def _from_file(block: FileData) -> InitialData:
        xp, up = read_initial_file(block.path)

        def tabulated(x: np.ndarray) -> np.ndarray:
            return np.interp(x, xp, up, left=0.0, right=0.0)

        return tabulated

    def initial_data(
        self,
        block: InitialDataBlock,
        landscape: Landscape,
    ) -> InitialData:
        if isinstance(block, BumpData):
            return self._bump(block)
        if isinstance(block, ConstantData):
            value: float = block.value
            return lambda x: np.full_like(x, value, dtype=float)
        if isinstance(block, PeriodicData):
            return self._periodic(block, landscape)
        return self._from_file(block)

    def run(self, config: RunConfig) -> tuple[Landscape, Reaction, InitialData]:
        landscape: Landscape = self.landscape(config.landscape)
        reaction: Reaction = self.reaction(config.reaction, landscape)
        initial: InitialData = self.initial_data(config.scenario.initial, landscape)
        return landscape, reaction, initial
