import logging
import math
from typing import Callable, Optional

import numpy as np
import pandas as pd
from scipy import stats

from patchkpp.access.config.constants import (
    FRONT_COLUMNS,
    GOLDEN_TOL,
    MAX_DOUBLINGS,
    MU_MIN,
    MU_START,
    PHI_COLUMNS,
    POSITIVITY_SAMPLES_PER_PATCH,
)
from patchkpp.engine.dynamics.contracts import (
    FrontTrace,
    PulsatingReport,
    SimParams,
    SpeedResult,
    SpeedSample,
)
from patchkpp.engine.eigen.contracts import CrossCheck
from patchkpp.engine.eigen.service import (
    DEFAULT_GRID_NODES,
    cross_check_lambda_mu,
    lambda1_dispersion,
    lambda_mu,
)
from patchkpp.engine.landscape.contracts import Landscape, Reaction
from patchkpp.engine.pde.contracts import Field, Grid, StepperConfig, Trajectory
from patchkpp.engine.pde.service import (
    InitialData,
    StepSystem,
    build_grid,
    enforce_bounds,
    evolve,
)
from patchkpp.engine.steady.contracts import SteadyState
from patchkpp.engine.steady.service import compute_steady_state
from patchkpp.utility.exceptions import (
    AsymmetricSpeeds,
    BracketNotFound,
    FrontHitBoundary,
    NegativeInitialData,
    NoCrossingFound,
    NotPersistent,
)

logger = logging.getLogger(__name__)

INV_PHI: float = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE: float = (3 - math.sqrt(5)) / 2  # 1 / phi^2

SYMMETRY_TOL: float = 1e-8
# Central-difference step for the first-order condition, relative to mu*.
DERIVATIVE_STEP: float = 1e-4
# Fronts must stay this many periods away from the Dirichlet ends.
BOUNDARY_PERIODS: int = 2
# Quasi-periodicity is measured on [x_front - 4 l, x_front + 2 l].
BEHIND_PERIODS: int = 4
AHEAD_PERIODS: int = 2


# Spreading speed


def _golden_section(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = GOLDEN_TOL,
) -> tuple[float, float]:
    """Interval of width <= tol holding the minimum of a unimodal f on [a, b]."""
    a, b = min(a, b), max(a, b)
    h: float = b - a
    if h <= tol:
        return a, b

    n: int = int(math.ceil(math.log(tol / h) / math.log(INV_PHI)))
    c: float = a + INV_PHI_SQUARE * h
    d: float = a + INV_PHI * h
    yc: float = f(c)
    yd: float = f(d)
    for _ in range(n - 1):
        if yc < yd:
            b, d, yd = d, c, yc
            h *= INV_PHI
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a, c, yc = c, d, yd
            h *= INV_PHI
            d = a + INV_PHI * h
            yd = f(d)
    if yc < yd:
        return a, d
    return c, b


class _PhiTable:
    """phi(mu) = -lambda(sign mu) / mu, memoized in a sample table."""

    def __init__(self, landscape: Landscape, reaction: Reaction, sign: int) -> None:
        self.landscape = landscape
        self.reaction = reaction
        self.sign = sign
        self.samples: dict[float, SpeedSample] = {}

    def __call__(self, mu: float) -> float:
        if mu not in self.samples:
            lam: float = lambda_mu(
                self.landscape,
                self.reaction,
                self.sign * mu,
                samples_per_patch=POSITIVITY_SAMPLES_PER_PATCH,
            ).lambda_mu
            self.samples[mu] = SpeedSample(mu=mu, lambda_mu=lam, phi=-lam / mu)
        return self.samples[mu].phi

    def on_log(self, s: float) -> float:
        return self(math.exp(s))


def _bracket(phi: _PhiTable) -> list[tuple[float, float]]:
    """Brackets [mu_lo, mu_hi] by doubling (or halving) from MU_START."""
    history: list[tuple[float, float]] = []
    lo, mid = MU_START, 2 * MU_START
    if phi(mid) >= phi(lo):
        # minimum lies below MU_START
        mid, lo = lo, lo / 2
        while phi(lo) <= phi(mid):
            history.append((lo, 2 * mid))
            if lo < MU_MIN:
                raise BracketNotFound(f"phi still decreasing toward mu={lo:.3e}")
            mid, lo = lo, lo / 2
        history.append((lo, 2 * mid))
        return history
    for _ in range(MAX_DOUBLINGS):
        hi: float = 2 * mid
        history.append((lo, hi))
        if phi(hi) > phi(mid):
            return history
        lo, mid = mid, hi
    raise BracketNotFound(f"phi still decreasing at mu={mid:.3e}")


def _minimize(phi: _PhiTable) -> tuple[float, list[tuple[float, float]]]:
    history: list[tuple[float, float]] = _bracket(phi)
    lo, hi = history[-1]
    a, b = _golden_section(phi.on_log, math.log(lo), math.log(hi))
    candidates: list[float] = [math.exp(a), math.exp(b), math.exp(0.5 * (a + b))]
    mu_star: float = min(candidates, key=phi)
    logger.debug("phi minimized at mu=%.12g (%d samples)", mu_star, len(phi.samples))
    return mu_star, history


def spreading_speed(
    landscape: Landscape,
    reaction: Reaction,
    grid_check: bool = True,
    nodes_per_patch: int = DEFAULT_GRID_NODES,
) -> SpeedResult:
    """c* = min over mu > 0 of -lambda(mu) / mu, rightward and leftward."""
    lambda1: float = lambda1_dispersion(landscape, reaction).lambda_
    if not lambda1 < 0:
        raise NotPersistent(f"no spreading: lambda1={lambda1:.6g} >= 0")

    right = _PhiTable(landscape, reaction, sign=1)
    left = _PhiTable(landscape, reaction, sign=-1)
    mu_star, history = _minimize(right)
    mu_star_left, _ = _minimize(left)
    c_star: float = right(mu_star)
    c_star_left: float = left(mu_star_left)
    if abs(c_star - c_star_left) > SYMMETRY_TOL * max(1.0, c_star):
        message: str = f"rightward c*={c_star:.12g} and leftward c*={c_star_left:.12g}"
        raise AsymmetricSpeeds(message + " differ")

    delta: float = DERIVATIVE_STEP * mu_star
    defect: float = abs(right(mu_star + delta) - right(mu_star - delta)) / (2 * delta)
    check: Optional[CrossCheck] = None
    if grid_check:
        check = cross_check_lambda_mu(landscape, reaction, mu_star, nodes_per_patch)

    logger.info("spreading speed c*=%.10g at mu*=%.10g", c_star, mu_star)
    return SpeedResult(
        c_star=c_star,
        mu_star=mu_star,
        lambda_at_mu_star=right.samples[mu_star].lambda_mu,
        lambda1=lambda1,
        c_star_left=c_star_left,
        mu_star_left=mu_star_left,
        first_order_defect=defect,
        samples=sorted(right.samples.values(), key=lambda sample: sample.mu),
        bracket_history=history,
        grid_check=check,
    )


# Front simulations


def _crossings(x: np.ndarray, u: np.ndarray, level: float) -> tuple[float, float]:
    """Rightmost and leftmost level crossings, NaN when u < level everywhere."""
    above: np.ndarray = np.flatnonzero(u >= level)
    if len(above) == 0:
        return math.nan, math.nan
    j: int = int(above[-1])
    right: float = x[j]
    if j + 1 < len(x):
        right += (level - u[j]) * (x[j + 1] - x[j]) / (u[j + 1] - u[j])
    i: int = int(above[0])
    left: float = x[i]
    if i > 0:
        left += (level - u[i]) * (x[i] - x[i - 1]) / (u[i] - u[i - 1])
    return right, left


def _require_inside(grid: Grid, values: np.ndarray, level: float, time: float) -> None:
    margin: float = grid.halfwidth - BOUNDARY_PERIODS * grid.period
    near_ends: np.ndarray = np.abs(grid.node_positions) > margin
    if np.any(values[near_ends] >= level):
        message: str = f"front within {BOUNDARY_PERIODS} periods of the boundary "
        message += f"at t={time:.4g} (half-width {grid.halfwidth:.4g})"
        raise FrontHitBoundary(message)


def _fit(times: np.ndarray, positions: np.ndarray) -> tuple[float, float]:
    valid: np.ndarray = np.isfinite(positions)
    if np.count_nonzero(valid) < 3:
        raise NoCrossingFound("fewer than three level crossings in the fit window")
    fit = stats.linregress(times[valid], positions[valid])
    return float(fit.slope), float(fit.stderr)


def _log_lag(times: np.ndarray, log_shift: float) -> np.ndarray:
    """log_shift ln(t); NaN at t <= 0 so those samples leave the fit."""
    if log_shift == 0:
        return np.zeros_like(times)
    lag: np.ndarray = np.full(times.shape, math.nan)
    positive: np.ndarray = times > 0
    lag[positive] = log_shift * np.log(times[positive])
    return lag


def trace_front(
    trajectory: Trajectory,
    level: float,
    fit_fraction: float,
    mu_star: Optional[float] = None,
) -> FrontTrace:
    """Level crossings of every snapshot and their fitted late-time speeds.

    Given the decay rate mu_star of the minimal front, the speeds are fitted
    to x(t) + 3 ln(t) / (2 mu_star), which removes the logarithmic lag of
    fronts grown from compactly supported data. The plain fits are kept as
    the raw speeds.
    """
    grid: Grid = trajectory.grid
    x: np.ndarray = grid.node_positions
    right: list[float] = []
    left: list[float] = []
    for time, snapshot in zip(trajectory.times, trajectory.snapshots):
        _require_inside(grid, snapshot, level, time)
        xr, xl = _crossings(x, snapshot, level)
        right.append(xr)
        left.append(xl)

    times: np.ndarray = np.array(trajectory.times)
    t_transient: float = times[0] + (1 - fit_fraction) * (times[-1] - times[0])
    late: np.ndarray = times >= t_transient - 1e-12
    ahead: np.ndarray = np.array(right)[late]
    behind: np.ndarray = -np.array(left)[late]
    raw_right, _ = _fit(times[late], ahead)
    raw_left, _ = _fit(times[late], behind)
    log_shift: float = 0.0 if mu_star is None else 1.5 / mu_star
    lag: np.ndarray = _log_lag(times[late], log_shift)
    speed_right, stderr_right = _fit(times[late], ahead + lag)
    speed_left, stderr_left = _fit(times[late], behind + lag)
    return FrontTrace(
        level=level,
        times=trajectory.times,
        right=right,
        left=left,
        t_transient=t_transient,
        speed_right=speed_right,
        stderr_right=stderr_right,
        speed_left=speed_left,
        stderr_left=stderr_left,
        raw_speed_right=raw_right,
        raw_speed_left=raw_left,
        log_shift=log_shift,
        halfwidth=grid.halfwidth,
        final=trajectory.final,
    )


def _initial_bump(steady_state: SteadyState, landscape: Landscape) -> InitialData:
    width: float = 2 * landscape.period

    def bump(x: np.ndarray) -> np.ndarray:
        return steady_state.tile(x) * np.maximum(0.0, 1 - np.abs(x) / width)

    return bump


def _front_run(
    landscape: Landscape,
    reaction: Reaction,
    params: SimParams,
    u0: Optional[InitialData],
    steady_state: Optional[SteadyState],
    c_star: Optional[float],
    mu_star: Optional[float],
) -> tuple[FrontTrace, Trajectory, SteadyState]:
    if steady_state is None:
        steady_state = compute_steady_state(landscape, reaction, params.nodes_per_patch)
    if not steady_state.exists:
        raise NotPersistent(f"no front: lambda1={steady_state.lambda1:.6g}")
    if c_star is None or (mu_star is None and params.log_correction):
        result: SpeedResult = spreading_speed(landscape, reaction, grid_check=False)
        c_star = result.c_star if c_star is None else c_star
        mu_star = result.mu_star if mu_star is None else mu_star

    l: float = landscape.period
    halfwidth: float = 1.5 * c_star * params.T + 4 * l
    halfwidth = max(params.window_halfwidth or 0.0, halfwidth)
    grid: Grid = build_grid(landscape, math.ceil(halfwidth / l), params.nodes_per_patch)
    initial: InitialData = _initial_bump(steady_state, landscape) if u0 is None else u0
    values: np.ndarray = (
        np.asarray(initial(grid.node_positions), dtype=float)
        if callable(initial)
        else np.asarray(initial, dtype=float)
    )
    if np.any(values < 0):
        raise NegativeInitialData(f"u0 has min {values.min():.3e} < 0")
    values = values.copy()
    values[grid.boundary] = 0.0
    level: float = params.level or 0.5 * steady_state.min_p
    if not np.any(values >= level):
        raise NoCrossingFound(f"u0 never reaches the level {level:.4g}")

    config = StepperConfig(
        dt=params.dt,
        scheme=params.scheme,
        snapshot_every=max(1, round(params.record_every / params.dt)),
    )
    field = Field(time=0.0, values=values, grid=grid)
    trajectory: Trajectory = evolve(field, params.T, landscape, reaction, config)

    trace: FrontTrace = trace_front(
        trajectory,
        level,
        params.fit_fraction,
        mu_star=mu_star if params.log_correction else None,
    )
    logger.info(
        "front speeds %.6g (right) and %.6g (left) against c*=%.6g (raw %.6g)",
        trace.speed_right,
        trace.speed_left,
        c_star,
        trace.raw_speed_right,
    )
    return trace, trajectory, steady_state


def measure_front_speed(
    landscape: Landscape,
    reaction: Reaction,
    params: SimParams,
    u0: Optional[InitialData] = None,
    steady_state: Optional[SteadyState] = None,
    c_star: Optional[float] = None,
    mu_star: Optional[float] = None,
) -> FrontTrace:
    """Fitted speed of the level crossings; u0 defaults to p(x) max(0, 1 - |x| / 2l).

    c_star sizes the window and mu_star sets the logarithmic correction; both
    come from spreading_speed when missing.
    """
    trace, _, _ = _front_run(
        landscape, reaction, params, u0, steady_state, c_star, mu_star
    )
    return trace


def _arrival(
    start: Field,
    target: float,
    level: float,
    system: StepSystem,
    config: StepperConfig,
    bound: float,
    horizon: float,
) -> tuple[float, np.ndarray]:
    """Time and state at which the right level crossing first reaches target.

    Both are interpolated linearly between the two bracketing steps.
    """
    grid: Grid = start.grid
    x: np.ndarray = grid.node_positions
    previous: np.ndarray = start.values
    front, _ = _crossings(x, previous, level)
    time: float = start.time
    for _ in range(math.ceil(horizon / config.dt)):
        values: np.ndarray = system.advance(previous, config)
        values = enforce_bounds(values, bound, config.bound_tol, time + config.dt)
        ahead, _ = _crossings(x, values, level)
        if ahead >= target:
            weight: float = (target - front) / (ahead - front)
            state: np.ndarray = (1 - weight) * previous + weight * values
            return time + weight * config.dt, state
        previous, front, time = values, ahead, time + config.dt
    message: str = f"front did not advance to x={target:.4g} by t={time:.4g}"
    raise NoCrossingFound(message)


def pulsating_wave_check(
    landscape: Landscape,
    reaction: Reaction,
    params: SimParams,
    u0: Optional[InitialData] = None,
    steady_state: Optional[SteadyState] = None,
    c_star: Optional[float] = None,
    mu_star: Optional[float] = None,
) -> PulsatingReport:
    """Compare u(t, x) with u(t + tau, x + l), tau the time the front takes
    to advance one period from the snapshot at t.

    tau is measured at each restart, so the slow logarithmic drift of the
    front speed does not enter the defect.
    """
    trace, trajectory, steady_state = _front_run(
        landscape, reaction, params, u0, steady_state, c_star, mu_star
    )
    grid: Grid = trajectory.grid
    l: float = landscape.period
    T_period: float = l / trace.speed_right
    shift: int = grid.nodes_per_period
    x: np.ndarray = grid.node_positions
    times: np.ndarray = np.array(trajectory.times)
    config = StepperConfig(dt=params.dt, scheme=params.scheme)
    system = StepSystem(grid, landscape, reaction, params.dt, params.scheme, warn=False)

    checked: list[float] = []
    arrivals: list[float] = []
    defects: list[float] = []
    monotonicity: float = 0.0
    for fraction in params.late_fractions:
        index: int = int(np.argmin(np.abs(times - fraction * params.T)))
        start = Field(time=times[index], values=trajectory.snapshots[index], grid=grid)
        front: float = trace.right[index]
        arrival, later = _arrival(
            start,
            front + l,
            trace.level,
            system,
            config,
            trajectory.bound,
            horizon=2 * T_period,
        )
        _require_inside(grid, later, trace.level, arrival)

        lo, hi = front - BEHIND_PERIODS * l, front + AHEAD_PERIODS * l
        near: np.ndarray = (x >= lo) & (x <= hi)
        near[grid.size - shift :] = False
        nodes: np.ndarray = np.flatnonzero(near)
        if len(nodes) == 0:
            raise NoCrossingFound(f"no front to compare at t={start.time:.4g}")
        defects.append(float(np.abs(later[nodes + shift] - start.values[nodes]).max()))

        behind: np.ndarray = (x >= 0) & (x <= front - BOUNDARY_PERIODS * l)
        if np.any(behind):
            drop: float = float((start.values - later)[behind].max())
            monotonicity = max(monotonicity, drop)
        checked.append(start.time)
        arrivals.append(arrival - start.time)
        logger.debug(
            "quasi-periodicity defect %.3e at t=%.4g (one period in %.4g)",
            defects[-1],
            start.time,
            arrivals[-1],
        )

    return PulsatingReport(
        c_fitted=trace.speed_right,
        T_period=T_period,
        times=checked,
        arrivals=arrivals,
        defects=defects,
        monotonicity_defect=max(monotonicity, 0.0),
        p_sup=steady_state.max_p,
    )


# Export


def front_frame(trace: FrontTrace) -> pd.DataFrame:
    return pd.DataFrame(
        dict(t=trace.times, x_front_right=trace.right, x_front_left=trace.left)
    )[FRONT_COLUMNS]


def phi_frame(result: SpeedResult) -> pd.DataFrame:
    return pd.DataFrame([sample.model_dump() for sample in result.samples])[PHI_COLUMNS]
