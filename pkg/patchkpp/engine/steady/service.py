import logging
from typing import Optional

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.sparse.linalg import spsolve

from patchkpp.access.config.constants import (
    EXTINCTION_THRESHOLD,
    MARCH_TOL,
    MAX_HORIZON_DOUBLINGS,
    MAX_MARCH_STEPS,
    NEAR_CRITICAL,
    PROFILE_COLUMNS,
    UNIQUENESS_TOL,
)
from patchkpp.engine.eigen.service import lambda1_dispersion, principal_eigenpair
from patchkpp.engine.landscape.contracts import Landscape, LogisticReaction, Reaction
from patchkpp.engine.pde.contracts import (
    DiscreteOperator,
    Field,
    Grid,
    Scheme,
    StepperConfig,
    Trajectory,
)
from patchkpp.engine.pde.service import (
    InitialData,
    StepSystem,
    apply_cutoff,
    assemble_operator,
    build_period_grid,
    evolve,
    semiflow_grid,
)
from patchkpp.engine.steady.contracts import (
    AttractionReport,
    MarchRecord,
    SteadyState,
    UniquenessReport,
)
from patchkpp.utility.exceptions import (
    ConvergenceStalled,
    EigenInconsistent,
    LinearSolveFailed,
    NewtonDiverged,
    NonUniqueLimit,
    NotPersistent,
)

logger = logging.getLogger(__name__)

# Marching starts below one step per unit growth rate and grows geometrically.
_DT_START: float = 0.1
_DT_GROWTH: float = 1.5
_DT_CAP: float = 100.0
_STEP_BUDGET: int = 500
_PERSISTENT_FLOOR: float = 1e-6
_MONOTONE_SLACK: float = 1e-10
_POLISH_TOL: float = 1e-12
_POLISH_STEP_TOL: float = 1e-10
_POLISH_MAX_ITER: int = 30


def _march(
    grid: Grid,
    landscape: Landscape,
    reaction: Reaction,
    start: np.ndarray,
) -> tuple[np.ndarray, int, float, float, str]:
    """Pseudo-transient implicit Euler on the periodic grid.

    Returns the final state, the number of accepted steps, the largest
    increase and the largest decrease seen between steps, and the outcome:
    "converged", "extinct" or "stalled".
    """
    cap: float = max(reaction.cap, float(start.max()))
    dt_cap: float = _DT_CAP / max(reaction.lipschitz(cap), 1.0)
    dt: float = min(_DT_START, dt_cap)
    systems: dict[float, tuple[StepSystem, StepperConfig]] = {}
    u: np.ndarray = start.copy()
    increase: float = 0.0
    decrease: float = 0.0
    accepted: int = 0
    budget: int = _STEP_BUDGET
    for _ in range(MAX_HORIZON_DOUBLINGS + 1):
        while accepted < min(budget, MAX_MARCH_STEPS):
            if dt not in systems:
                scheme: Scheme = Scheme.IMPLICIT_EULER_NEWTON
                system = StepSystem(grid, landscape, reaction, dt, scheme, warn=False)
                systems[dt] = (system, StepperConfig(dt=dt, scheme=scheme))
            system, config = systems[dt]
            try:
                candidate: np.ndarray = system.advance(u, config)
            except (NewtonDiverged, LinearSolveFailed):
                dt /= 2
                logger.debug("step rejected, dt halved to %.3g", dt)
                continue
            candidate = np.clip(candidate, 0.0, cap)
            change: np.ndarray = candidate - u
            increase = max(increase, float(change.max()))
            decrease = max(decrease, float(-change.min()))
            u = candidate
            accepted += 1
            if u.max() < EXTINCTION_THRESHOLD:
                return u, accepted, increase, decrease, "extinct"
            if np.abs(change).max() < MARCH_TOL and u.max() > _PERSISTENT_FLOOR:
                return u, accepted, increase, decrease, "converged"
            if u.max() < _PERSISTENT_FLOOR and change.max() <= 0:
                # A small state that no longer grows is decaying to zero.
                return u, accepted, increase, decrease, "extinct"
            dt = min(dt * _DT_GROWTH, dt_cap)
        budget *= 2
        logger.debug("doubling the marching horizon to %d steps", budget)
    return u, accepted, increase, decrease, "stalled"


def _elliptic_residual(
    grid: Grid,
    landscape: Landscape,
    reaction: Reaction,
    p: np.ndarray,
) -> float:
    """max of |d p'' + f(p)| at patch nodes and of the unscaled flux rows."""
    operator: DiscreteOperator = assemble_operator(grid, landscape)
    interior: np.ndarray = operator.diffusion @ p + reaction.values(grid.node_types, p)
    faces: np.ndarray = grid.interface_nodes
    flux: np.ndarray = (operator.flux @ p)[faces] / operator.flux_scale[faces]
    worst_interior: float = float(np.abs(interior[grid.interior]).max())
    return max(worst_interior, float(np.abs(flux).max(initial=0.0)))


def _polish(
    grid: Grid,
    landscape: Landscape,
    reaction: Reaction,
    u: np.ndarray,
) -> np.ndarray:
    """Newton on -(D p + f(p)) = 0 at patch nodes, F p = 0 at interfaces."""
    operator: DiscreteOperator = assemble_operator(grid, landscape)
    for iteration in range(1, _POLISH_MAX_ITER + 1):
        residual: np.ndarray = operator.flux @ u - (
            operator.diffusion @ u + reaction.values(grid.node_types, u)
        )
        if np.abs(residual).max() <= _POLISH_TOL:
            break
        jacobian = operator.flux - operator.diffusion - sparse.diags(
            reaction.derivatives(grid.node_types, u)
        )
        delta: np.ndarray = spsolve(jacobian.tocsc(), -residual)
        if not np.all(np.isfinite(delta)):
            raise LinearSolveFailed("singular elliptic Jacobian in the Newton polish")
        u = u + delta
        if np.abs(delta).max() <= _POLISH_STEP_TOL * (1 + np.abs(u).max()):
            break
    else:
        message: str = f"Newton polish did not converge in {_POLISH_MAX_ITER} steps"
        raise ConvergenceStalled(message)
    logger.debug("Newton polish finished after %d iterations", iteration)
    return u


def compute_steady_state(
    landscape: Landscape,
    reaction: Reaction,
    nodes_per_patch: int = 32,
    start: Optional[np.ndarray] = None,
) -> SteadyState:
    """March the periodic problem from M = max(K1, K2) and polish by Newton."""
    lambda1: float = lambda1_dispersion(landscape, reaction).lambda_
    near_critical: bool = abs(lambda1) < NEAR_CRITICAL
    if near_critical:
        logger.warning("lambda1=%.3e is near 0; the verdict may be unreliable", lambda1)
    grid: Grid = build_period_grid(landscape, nodes_per_patch)
    initial: np.ndarray = np.full(grid.size, reaction.cap) if start is None else start
    u, steps, _, _, outcome = _march(grid, landscape, reaction, initial)
    logger.info("periodic marching %s after %d steps", outcome, steps)

    kwargs = dict(
        lambda1=lambda1,
        positions=grid.node_positions,
        patch_type=grid.node_patch_types(),
        near_critical=near_critical,
        nodes_per_patch=nodes_per_patch,
        period=landscape.period,
    )
    if outcome == "stalled":
        if near_critical:
            residual: float = _elliptic_residual(grid, landscape, reaction, u)
            return SteadyState(
                exists=False, p=u, residual=residual, converged=False, **kwargs
            )
        message: str = f"no convergence or extinction after {steps} marching steps "
        message += f"(lambda1={lambda1:.3e})"
        raise ConvergenceStalled(message)

    if outcome == "extinct":
        if lambda1 < 0 and not near_critical:
            message = f"solution died out although lambda1={lambda1:.6g} < 0"
            raise EigenInconsistent(message)
        return SteadyState(exists=False, p=np.array([]), residual=0.0, **kwargs)

    p: np.ndarray = _polish(grid, landscape, reaction, u)
    if lambda1 >= 0 and not near_critical:
        message = f"positive steady state found although lambda1={lambda1:.6g} >= 0"
        raise EigenInconsistent(message)
    residual = _elliptic_residual(grid, landscape, reaction, p)
    return SteadyState(
        exists=True,
        p=p,
        residual=residual,
        min_p=float(p.min()),
        max_p=float(p.max()),
        **kwargs,
    )


def subsolution_scale(
    reaction: Reaction,
    phi: np.ndarray,
    lambda1: float,
) -> float:
    """kappa with f(x, kappa phi) >= (f'(x, 0) + lambda1 / 2) kappa phi.

    Then kappa phi is a strict subsolution and the flow from it increases in t.
    """
    if not lambda1 < 0:
        message: str = f"kappa phi is a subsolution only when lambda1 < 0: {lambda1}"
        raise NotPersistent(message)
    if isinstance(reaction, LogisticReaction):
        return min(reaction.cap, -0.5 * lambda1 * min(reaction.kappa1, reaction.kappa2))
    kappa: float = reaction.cap
    samples: np.ndarray = np.linspace(0.0, 1.0, 65)[1:] * float(np.max(phi))
    for _ in range(60):
        s: np.ndarray = kappa * samples
        holds: bool = all(
            np.all(reaction.f(i, s) >= (reaction.prime0(i) + lambda1 / 2) * s)
            for i in (1, 2)
        )
        if holds:
            return kappa
        kappa /= 2
    raise ConvergenceStalled("no admissible subsolution scale found")


def _starts(
    grid: Grid,
    landscape: Landscape,
    reaction: Reaction,
    lambda1: float,
    seed: int,
) -> dict[str, tuple[np.ndarray, str]]:
    _, phi, _ = principal_eigenpair(grid, landscape, reaction)
    kappa: float = subsolution_scale(reaction, phi, lambda1)
    rng: np.random.Generator = np.random.default_rng(seed)
    cap: float = reaction.cap
    return {
        "kappa_phi": (kappa * phi, "non-decreasing"),
        "constant_M": (np.full(grid.size, cap), "non-increasing"),
        "random_periodic": (rng.uniform(0.05, 1.0, grid.size) * cap, "none"),
    }


def verify_uniqueness(
    steady_state: SteadyState,
    landscape: Landscape,
    reaction: Reaction,
    seed: int = 0,
    tolerance: float = UNIQUENESS_TOL,
) -> UniquenessReport:
    """Converge from kappa phi, M and random positive data to the same p."""
    if not steady_state.exists:
        raise NotPersistent("uniqueness is only checked for a persistent state")
    grid: Grid = build_period_grid(landscape, steady_state.nodes_per_patch)
    records: list[MarchRecord] = []
    for name, (start, direction) in _starts(
        grid, landscape, reaction, steady_state.lambda1, seed
    ).items():
        u, steps, increase, decrease, outcome = _march(grid, landscape, reaction, start)
        if outcome != "converged":
            raise NonUniqueLimit(f"start {name} ended {outcome} instead of converging")
        p: np.ndarray = _polish(grid, landscape, reaction, u)
        defect: float = 0.0
        if direction == "non-increasing":
            defect = increase
        elif direction == "non-decreasing":
            defect = decrease
        record = MarchRecord(
            start=name,
            steps=steps,
            distance=float(np.abs(p - steady_state.p).max()),
            monotone=direction,
            monotone_defect=defect,
        )
        logger.debug("start %s: distance %.3e", name, record.distance)
        if record.distance > tolerance:
            message: str = f"start {name} converged {record.distance:.3e} away from p"
            raise NonUniqueLimit(message)
        if defect > _MONOTONE_SLACK:
            message = f"start {name} is not {direction} in time (defect {defect:.3e})"
            raise NonUniqueLimit(message)
        records.append(record)
    return UniquenessReport(tolerance=tolerance, records=records)


def attraction_check(
    landscape: Landscape,
    reaction: Reaction,
    u0: InitialData,
    horizon: float,
    steady_state: Optional[SteadyState] = None,
    config: Optional[StepperConfig] = None,
    assertion_halfwidth: Optional[float] = None,
) -> AttractionReport:
    """Distance at the horizon to p (persistence) or to 0 (extinction)."""
    if steady_state is None:
        steady_state = compute_steady_state(landscape, reaction)
    config = config or StepperConfig()
    if assertion_halfwidth is None:
        assertion_halfwidth = 2 * landscape.period
    grid: Grid = semiflow_grid(
        landscape, horizon, assertion_halfwidth, steady_state.nodes_per_patch
    )
    field: Field = apply_cutoff(u0, grid)
    trajectory: Trajectory = evolve(field, horizon, landscape, reaction, config)
    final: np.ndarray = trajectory.final.values
    x: np.ndarray = grid.node_positions
    region: np.ndarray = np.abs(x) <= assertion_halfwidth
    target: np.ndarray = steady_state.tile(x)
    report = AttractionReport(
        target="steady_state" if steady_state.exists else "zero",
        horizon=horizon,
        assertion_halfwidth=assertion_halfwidth,
        distance=float(np.abs(final - target)[region].max()),
        sup_norm=float(final.max()),
    )
    logger.info("attraction: distance %.3e at t=%g", report.distance, horizon)
    return report


def profile_frame(steady_state: SteadyState) -> pd.DataFrame:
    p: np.ndarray = steady_state.p if steady_state.exists else np.zeros(0)
    count: int = len(p)
    return pd.DataFrame(
        dict(
            x=steady_state.positions[:count],
            p=p,
            patch_type=steady_state.patch_type[:count],
        )
    )[PROFILE_COLUMNS]
