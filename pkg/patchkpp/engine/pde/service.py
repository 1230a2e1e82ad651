import logging
import math
from typing import Callable, Optional, Union

import numpy as np
import pandas as pd
from scipy import sparse
from scipy.linalg import solve_banded
from scipy.sparse.linalg import spsolve

from patchkpp.access.config.constants import (
    MESH_RATIO_WARNING,
    MIN_NODES_PER_PATCH_PDE,
    MIN_SEGMENT_INTERVALS,
    TRAJECTORY_COLUMNS,
)
from patchkpp.engine.landscape.contracts import Landscape, Reaction
from patchkpp.engine.pde.contracts import (
    BOUNDARY,
    INTERFACE,
    DiscreteOperator,
    Field,
    Grid,
    PropertyCheck,
    PropertyReport,
    Scheme,
    StepperConfig,
    Trajectory,
)
from patchkpp.utility.exceptions import (
    BoundViolated,
    ConfigurationError,
    LinearSolveFailed,
    NegativeInitialData,
    NewtonDiverged,
    NonPositiveParameter,
    ResolutionTooCoarse,
    UnstableStepSize,
    WindowTooSmall,
)

logger = logging.getLogger(__name__)

InitialData = Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]

# Breakpoints closer than this (relative to the period) to a window end are dropped.
_BREAK_TOL: float = 1e-12
# Window margin beyond an assertion region: factor * sqrt(d_max t) + 2 l.
SEMIFLOW_MARGIN_FACTOR: float = 4.0
SEMIFLOW_BUILD_FACTOR: float = 12.0


# Grids


def _breakpoints(landscape: Landscape, a: float, b: float, shift: float) -> list[float]:
    """Points x in (a, b) with x + shift in S."""
    l: float = landscape.period
    tol: float = _BREAK_TOL * l
    points: list[float] = []
    for j in range(math.floor((a + shift) / l) - 1, math.ceil((b + shift) / l) + 2):
        for s in (j * l, j * l + landscape.l2):
            x: float = s - shift
            if a + tol < x < b - tol:
                points.append(x)
    return sorted(points)


def _segment_grid(
    landscape: Landscape,
    edges: list[float],
    nodes_per_patch: int,
    kind: str,
    shift: float = 0.0,
    n_tiles: int = 0,
) -> Grid:
    h: dict[int, float] = {
        1: landscape.l1 / (nodes_per_patch + 1),
        2: landscape.l2 / (nodes_per_patch + 1),
    }
    nodes: list[np.ndarray] = []
    types: list[np.ndarray] = []
    for a, b in zip(edges[:-1], edges[1:]):
        patch: int = int(landscape.patch_type_at(0.5 * (a + b) + shift))
        count: int = max(MIN_SEGMENT_INTERVALS, int(round((b - a) / h[patch])))
        nodes.append(np.linspace(a, b, count + 1)[:-1])
        types.append(np.full(count, patch, dtype=int))
    positions: np.ndarray = np.concatenate(nodes)
    patch_type: np.ndarray = np.concatenate(types)

    left: np.ndarray
    right: np.ndarray
    if kind == "periodic":
        left, right = np.roll(patch_type, 1), patch_type
    else:
        positions = np.append(positions, edges[-1])
        left = np.concatenate([patch_type[:1], patch_type])
        right = np.concatenate([patch_type, patch_type[-1:]])
    node_types: np.ndarray = np.where(left == right, right, INTERFACE)
    if kind != "periodic":
        node_types[0] = node_types[-1] = BOUNDARY
    interface_nodes: np.ndarray = np.flatnonzero(node_types == INTERFACE)

    kwargs = dict(
        kind=kind,
        n_tiles=n_tiles,
        nodes_per_patch=nodes_per_patch,
        node_positions=positions,
        patch_type=patch_type,
        node_types=node_types,
        interface_nodes=interface_nodes,
        interface_kinds=np.where(left[interface_nodes] == 1, 1, 2),
        h1=h[1],
        h2=h[2],
        period=landscape.period,
        shift=shift,
    )
    return Grid(**kwargs)


def _require_resolution(nodes_per_patch: int, minimum: int) -> None:
    if nodes_per_patch < minimum:
        message: str = f"nodes_per_patch={nodes_per_patch} is below {minimum}"
        raise ResolutionTooCoarse(message)


def build_grid(landscape: Landscape, n_tiles: int, nodes_per_patch: int) -> Grid:
    """Truncated window [-n l, n l]: 4n patches, Dirichlet nodes at both ends."""
    if n_tiles < 1:
        raise ResolutionTooCoarse(f"n_tiles must be at least 1: {n_tiles}")
    _require_resolution(nodes_per_patch, MIN_NODES_PER_PATCH_PDE)
    half: float = n_tiles * landscape.period
    edges: list[float] = [-half] + _breakpoints(landscape, -half, half, 0.0) + [half]
    kind: str = "truncated"
    return _segment_grid(landscape, edges, nodes_per_patch, kind, n_tiles=n_tiles)


def build_period_grid(landscape: Landscape, nodes_per_patch: int) -> Grid:
    """One period [-l1, l2) closed periodically; node 0 is an S2 point."""
    _require_resolution(nodes_per_patch, MIN_NODES_PER_PATCH_PDE)
    edges: list[float] = [-landscape.l1, 0.0, landscape.l2]
    return _segment_grid(landscape, edges, nodes_per_patch, "periodic")


def build_window_grid(
    landscape: Landscape,
    a: float,
    b: float,
    nodes_per_patch: int,
    shift: float = 0.0,
) -> Grid:
    """Window [a, b] carrying the pattern at x + shift, Dirichlet ends."""
    if not b > a:
        raise NonPositiveParameter(f"window [{a}, {b}] is empty")
    _require_resolution(nodes_per_patch, MIN_NODES_PER_PATCH_PDE)
    edges: list[float] = [a] + _breakpoints(landscape, a, b, shift) + [b]
    return _segment_grid(landscape, edges, nodes_per_patch, "window", shift=shift)


def semiflow_grid(
    landscape: Landscape,
    t: float,
    assertion_halfwidth: float,
    nodes_per_patch: int,
) -> Grid:
    """Truncated grid wide enough for whole-line statements on |x| <= assertion."""
    margin: float = SEMIFLOW_BUILD_FACTOR * math.sqrt(landscape.d_max * t)
    margin += 2 * landscape.period
    n_tiles: int = math.ceil((assertion_halfwidth + margin) / landscape.period)
    return build_grid(landscape, max(n_tiles, 1), nodes_per_patch)


# Operators


def assemble_operator(
    grid: Grid,
    landscape: Landscape,
    mu: float = 0.0,
) -> DiscreteOperator:
    """Discrete d(u'' - 2 mu u' + mu^2 u) and the interface flux rows."""
    n: int = grid.size
    widths: np.ndarray = grid.widths
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []

    idx: np.ndarray = np.flatnonzero(grid.interior)
    hl: np.ndarray = widths[idx - 1]
    hr: np.ndarray = widths[idx]
    d: np.ndarray = np.where(grid.node_types[idx] == 1, landscape.d1, landscape.d2)
    total: np.ndarray = hl + hr
    second = (2 / (hl * total), -2 / (hl * hr), 2 / (hr * total))
    first = (-hr / (hl * total), (hr - hl) / (hl * hr), hl / (hr * total))
    for offset, c2, c1 in zip((-1, 0, 1), second, first):
        rows.append(idx)
        cols.append((idx + offset) % n)
        vals.append(d * (c2 - 2 * mu * c1 + (mu**2 if offset == 0 else 0.0)))
    diffusion = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )

    rows, cols, vals = [], [], []
    idx = grid.interface_nodes
    hl, hr = widths[idx - 1], widths[idx]
    left_types, right_types = grid.interface_sides()
    wl: np.ndarray = np.where(left_types == 1, 1.0, landscape.sigma)
    wr: np.ndarray = np.where(right_types == 1, 1.0, landscape.sigma)
    scale: np.ndarray = 1 / (wl / hl + wr / hr)
    stencil: dict[int, np.ndarray] = {
        -2: wl / (2 * hl),
        -1: -4 * wl / (2 * hl),
        0: wl * (3 / (2 * hl) - mu) - wr * (-3 / (2 * hr) - mu),
        1: -wr * 4 / (2 * hr),
        2: wr / (2 * hr),
    }
    for offset, coefficient in stencil.items():
        rows.append(idx)
        cols.append((idx + offset) % n)
        vals.append(scale * coefficient)
    flux = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    flux_scale: np.ndarray = np.zeros(n)
    flux_scale[idx] = scale
    return DiscreteOperator(diffusion=diffusion, flux=flux, flux_scale=flux_scale)


def _to_banded(matrix: sparse.spmatrix, lower: int, upper: int) -> np.ndarray:
    coo = matrix.tocoo()
    ab: np.ndarray = np.zeros((lower + upper + 1, matrix.shape[1]))
    np.add.at(ab, (upper + coo.row - coo.col, coo.col), coo.data)
    return ab


def mesh_ratio(grid: Grid, landscape: Landscape, dt: float) -> float:
    """min over patches of dt d_i / h_i^2."""
    return min(dt * landscape.d1 / grid.h1**2, dt * landscape.d2 / grid.h2**2)


# Time stepping


class StepSystem:
    """Linear part of a theta step on a fixed grid and step size.

    Rows: interior nodes carry u - theta dt D u, interface nodes the scaled
    flux condition, Dirichlet nodes the identity.
    """

    def __init__(
        self,
        grid: Grid,
        landscape: Landscape,
        reaction: Reaction,
        dt: float,
        scheme: Scheme,
        warn: bool = True,
    ):
        self.grid = grid
        self.reaction = reaction
        self.dt = dt
        self.scheme = scheme
        self.theta: float = 0.5 if scheme == Scheme.CRANK_NICOLSON_NEWTON else 1.0
        self.node_types: np.ndarray = grid.node_types
        self.interior: np.ndarray = grid.interior.astype(float)

        operator: DiscreteOperator = assemble_operator(grid, landscape)
        self.diffusion: sparse.csr_matrix = operator.diffusion
        identity = sparse.diags(self.interior + grid.boundary.astype(float))
        self.matrix: sparse.csr_matrix = (
            identity - self.theta * dt * operator.diffusion + operator.flux
        ).tocsr()
        # Residual rows are sums of this many O(u) terms at most.
        self.row_scale: float = 1 + float(abs(self.matrix).sum(axis=1).max())
        self.banded: Optional[np.ndarray] = None
        if not grid.periodic:
            self.banded = _to_banded(self.matrix, 2, 2)

        ratio: float = mesh_ratio(grid, landscape, dt)
        if warn and ratio < MESH_RATIO_WARNING:
            # Below 1/2 the interface rows lose the M-matrix structure.
            logger.warning(
                "mesh ratio dt*d/h^2=%.3g < %.2g: order preservation at "
                "interfaces is not guaranteed",
                ratio,
                MESH_RATIO_WARNING,
            )

    def solve(self, diagonal: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        """Solve (matrix + diag(diagonal)) x = rhs."""
        try:
            if self.banded is not None:
                ab: np.ndarray = self.banded.copy()
                ab[2, :] += diagonal
                x = solve_banded((2, 2), ab, rhs, check_finite=False)
            else:
                x = spsolve((self.matrix + sparse.diags(diagonal)).tocsc(), rhs)
        except (np.linalg.LinAlgError, ValueError) as error:
            raise LinearSolveFailed(str(error)) from error
        if not np.all(np.isfinite(x)):
            raise LinearSolveFailed("linear solve returned non-finite values")
        return x

    def rhs(self, values: np.ndarray) -> np.ndarray:
        explicit: float = 1 - self.theta
        result: np.ndarray = self.interior * values
        if self.scheme == Scheme.IMEX:
            return result + self.dt * self.reaction.values(self.node_types, values)
        if explicit > 0:
            result = result + explicit * self.dt * (
                self.diffusion @ values + self.reaction.values(self.node_types, values)
            )
        return result

    def advance(self, values: np.ndarray, config: StepperConfig) -> np.ndarray:
        rhs: np.ndarray = self.rhs(values)
        if self.scheme == Scheme.IMEX:
            result: np.ndarray = self.solve(np.zeros_like(values), rhs)
        else:
            result = self._newton(values, rhs, config)
        # Dirichlet nodes stay exactly zero so the state can be restarted.
        result[self.grid.boundary] = 0.0
        return result

    def _newton(
        self,
        guess: np.ndarray,
        rhs: np.ndarray,
        config: StepperConfig,
    ) -> np.ndarray:
        implicit: float = self.theta * self.dt
        u: np.ndarray = guess.copy()
        for iteration in range(1, config.newton_max_iter + 1):
            growth: np.ndarray = self.reaction.values(self.node_types, u)
            residual: np.ndarray = self.matrix @ u - implicit * growth - rhs
            # Relative to the state so that tiny fields are still resolved.
            size: float = max(float(np.abs(u).max()), float(np.abs(rhs).max()))
            scale: float = self.row_scale * size
            if np.abs(residual).max() <= config.newton_tol * scale:
                return u
            slope: np.ndarray = self.reaction.derivatives(self.node_types, u)
            delta: np.ndarray = self.solve(-implicit * slope, -residual)
            u = u + delta
            if not np.all(np.isfinite(u)):
                break
            if np.abs(delta).max() <= config.newton_tol * np.abs(u).max():
                logger.debug("newton converged in %d iterations", iteration)
                return u
        message: str = f"newton did not converge in {config.newton_max_iter} iterations"
        raise NewtonDiverged(message)


def _bound(reaction: Reaction, values: np.ndarray) -> float:
    return max(reaction.K1, reaction.K2, float(np.abs(values).max(initial=0.0)))


def _check_step_size(
    reaction: Reaction,
    config: StepperConfig,
    bound: float,
    dt: float,
) -> None:
    if config.scheme != Scheme.IMEX:
        return
    dt_max: float = 0.5 / max(reaction.lipschitz(bound), 1e-300)
    if dt > dt_max:
        raise UnstableStepSize(f"IMEX needs dt <= {dt_max:.4g}, got dt={dt}")


def enforce_bounds(
    values: np.ndarray,
    bound: float,
    tol: float,
    time: float,
) -> np.ndarray:
    low: float = float(values.min())
    high: float = float(values.max())
    if low < -tol or high > bound + tol:
        message: str = f"u left [0, {bound}] at t={time:.6g}: "
        message += f"min={low:.3e}, max={high:.6g}"
        raise BoundViolated(message)
    return np.clip(values, 0.0, bound)


def _validate_initial(field: Field) -> None:
    if np.any(field.values < 0):
        raise NegativeInitialData(f"initial data has min {field.values.min():.3e} < 0")
    boundary: np.ndarray = field.grid.boundary
    if np.any(field.values[boundary] != 0):
        raise ConfigurationError("field must vanish at the Dirichlet nodes")


def step(
    field: Field,
    landscape: Landscape,
    reaction: Reaction,
    config: StepperConfig,
) -> Field:
    bound: float = _bound(reaction, field.values)
    _check_step_size(reaction, config, bound, config.dt)
    system = StepSystem(field.grid, landscape, reaction, config.dt, config.scheme)
    values: np.ndarray = system.advance(field.values, config)
    return Field(time=field.time + config.dt, values=values, grid=field.grid)


def evolve(
    field: Field,
    T: float,
    landscape: Landscape,
    reaction: Reaction,
    config: StepperConfig,
) -> Trajectory:
    """Advance to field.time + T, asserting 0 <= u <= max(K1, K2, |u0|)."""
    if not T > 0:
        raise NonPositiveParameter(f"T must be positive: {T}")
    _validate_initial(field)
    bound: float = _bound(reaction, field.values)
    steps: int = max(1, math.ceil(T / config.dt - 1e-9))
    dt: float = T / steps
    _check_step_size(reaction, config, bound, dt)
    system = StepSystem(field.grid, landscape, reaction, dt, config.scheme)

    values: np.ndarray = field.values.copy()
    times: list[float] = [field.time]
    snapshots: list[np.ndarray] = [values.copy()]
    for n in range(1, steps + 1):
        time: float = field.time + n * dt
        values = system.advance(values, config)
        values = enforce_bounds(values, bound, config.bound_tol, time)
        if n == steps or (config.snapshot_every and n % config.snapshot_every == 0):
            times.append(time)
            snapshots.append(values.copy())
    logger.debug("evolved %d steps of dt=%.3g on %d nodes", steps, dt, field.grid.size)
    return Trajectory(grid=field.grid, times=times, snapshots=snapshots, bound=bound)


# Initial data and the semiflow


def _sample(u0: InitialData, grid: Grid) -> np.ndarray:
    if callable(u0):
        return np.asarray(u0(grid.node_positions), dtype=float) * np.ones(grid.size)
    values: np.ndarray = np.asarray(u0, dtype=float)
    if values.shape != (grid.size,):
        message: str = f"expected {grid.size} nodal values, got {values.shape}"
        raise ConfigurationError(message)
    return values


def cutoff(grid: Grid, n: Optional[int] = None) -> np.ndarray:
    """Nodal samples of the n-th cut-off function."""
    n = grid.n_tiles if n is None else n
    l1: float = grid.h1 * (grid.nodes_per_patch + 1)
    l2: float = grid.h2 * (grid.nodes_per_patch + 1)
    half: float = n * grid.period
    eps: float = min(l1, l2) / 4
    xp: list[float] = [-half, -half + l2 - eps, half - l1 + eps, half]
    return np.interp(grid.node_positions, xp, [0.0, 1.0, 1.0, 0.0], left=0.0, right=0.0)


def apply_cutoff(u0: InitialData, grid: Grid, n: Optional[int] = None) -> Field:
    values: np.ndarray = _sample(u0, grid)
    if np.any(values < 0):
        raise NegativeInitialData(f"u0 has min {values.min():.3e} < 0")
    return Field(time=0.0, values=values * cutoff(grid, n), grid=grid)


def semiflow_apply(
    omega: Field,
    t: float,
    landscape: Landscape,
    reaction: Reaction,
    config: StepperConfig,
    assertion_halfwidth: Optional[float] = None,
) -> Field:
    """Q_t(omega) on |x| <= assertion_halfwidth (default one period)."""
    if assertion_halfwidth is None:
        assertion_halfwidth = landscape.period
    if t == 0:
        return Field(time=omega.time, values=omega.values.copy(), grid=omega.grid)
    margin: float = SEMIFLOW_MARGIN_FACTOR * math.sqrt(landscape.d_max * t)
    margin += 2 * landscape.period
    if omega.grid.halfwidth < assertion_halfwidth + margin:
        message: str = f"window half-width {omega.grid.halfwidth:.4g} < "
        message += f"{assertion_halfwidth + margin:.4g} needed for t={t}"
        raise WindowTooSmall(message)
    return evolve(omega, t, landscape, reaction, config).final


def translate(field: Field, periods: int = 1) -> Field:
    """omega(. + periods l) on the same grid, zero-filled at the far end."""
    shift: int = periods * field.grid.nodes_per_period
    values: np.ndarray = np.zeros_like(field.values)
    if shift >= 0:
        values[: field.grid.size - shift] = field.values[shift:]
    else:
        values[-shift:] = field.values[: field.grid.size + shift]
    values[field.grid.boundary] = 0.0
    return Field(time=field.time, values=values, grid=field.grid)


# Property suites


def _random_bumps(
    rng: np.random.Generator,
    x: np.ndarray,
    landscape: Landscape,
    cap: float,
    spread: float,
) -> np.ndarray:
    values: np.ndarray = np.zeros_like(x)
    for _ in range(int(rng.integers(1, 4))):
        center: float = rng.uniform(-spread, spread)
        width: float = rng.uniform(0.5, 2.0) * landscape.period
        height: float = rng.uniform(0.05, 1.0) * cap
        inside: np.ndarray = np.abs(x - center) < width
        profile: np.ndarray = height * np.cos(0.5 * np.pi * (x - center) / width) ** 2
        values += np.where(inside, profile, 0.0)
    return values


def _check(
    name: str,
    worsts: list[float],
    tolerance: float,
    strict: bool = False,
) -> PropertyCheck:
    worst: float = max(worsts) if worsts else 0.0
    return PropertyCheck(
        name=name,
        cases=len(worsts),
        worst=worst,
        tolerance=tolerance,
        passed=worst < tolerance if strict else worst <= tolerance,
    )


def run_property_suite(
    landscape: Landscape,
    reaction: Reaction,
    config: StepperConfig,
    cases: int = 50,
    seed: int = 0,
    t: float = 0.5,
    nodes_per_patch: int = 8,
) -> PropertyReport:
    """Randomized checks of the order, bound and semiflow properties.

    Each check records the worst violation over its cases (0 when it holds);
    strict ordering and positivity record the negated minimum gap.
    """
    rng: np.random.Generator = np.random.default_rng(seed)
    l: float = landscape.period
    grid: Grid = semiflow_grid(landscape, t, 2 * l, nodes_per_patch)
    x: np.ndarray = grid.node_positions
    region: np.ndarray = (np.abs(x) <= 2 * l) & ~grid.boundary
    core: np.ndarray = (np.abs(x) <= l) & ~grid.boundary
    cap: float = reaction.cap
    lipschitz: float = reaction.lipschitz(cap)
    t1: float = round(0.6 * t, 12)

    def field(values: np.ndarray) -> Field:
        return apply_cutoff(values, grid)

    def flow(omega: Field, horizon: float = t) -> Field:
        return semiflow_apply(omega, horizon, landscape, reaction, config, 2 * l)

    results: dict[str, list[float]] = {
        name: []
        for name in (
            "comparison",
            "strict_ordering",
            "positivity",
            "global_bound",
            "subhomogeneity",
            "composition",
            "translation",
            "lipschitz",
        )
    }
    for _ in range(cases):
        u0: Field = field(_random_bumps(rng, x, landscape, cap, l))
        extra: np.ndarray = _random_bumps(rng, x, landscape, 0.5 * cap, 0.5 * l)
        v0: Field = field(u0.values + extra)
        trajectory: Trajectory = evolve(u0, t, landscape, reaction, config)
        u: np.ndarray = trajectory.snapshots[-1]
        v: np.ndarray = flow(v0).values

        results["comparison"].append(max(0.0, float((u - v).max())))
        results["strict_ordering"].append(-float((v - u)[core].min()))
        results["positivity"].append(-float(u[region].min()))
        results["global_bound"].append(max(0.0, float(u.max()) - trajectory.bound))

        gamma: float = float(rng.choice([0.25, 0.5, 0.9]))
        scaled: np.ndarray = flow(Field(values=gamma * u0.values, grid=grid)).values
        results["subhomogeneity"].append(max(0.0, float((gamma * u - scaled).max())))

        first: Field = flow(u0, t1)
        composed: np.ndarray = flow(first, t - t1).values
        results["composition"].append(float(np.abs(composed - u)[region].max()))

        shifted: np.ndarray = flow(translate(u0)).values
        expected: np.ndarray = translate(Field(values=u, grid=grid)).values
        results["translation"].append(float(np.abs(shifted - expected)[region].max()))

        distance: float = float(np.abs(u0.values - v0.values).max())
        allowed: float = 2 * distance * math.exp(lipschitz * t)
        excess: float = float(np.abs(u - v).max()) - allowed
        results["lipschitz"].append(max(0.0, excess))

    tolerances: dict[str, float] = dict(
        comparison=1e-10,
        strict_ordering=0.0,
        positivity=0.0,
        global_bound=config.bound_tol,
        subhomogeneity=1e-9,
        composition=1e-8,
        translation=1e-10,
        lipschitz=1e-6,
    )
    strict: set[str] = {"strict_ordering", "positivity"}
    checks: list[PropertyCheck] = [
        _check(name, worsts, tolerances[name], name in strict)
        for name, worsts in results.items()
    ]

    periodic: Field = field(1 + 0.5 * np.cos(2 * np.pi * x / l))
    report = PropertyReport(
        seed=seed,
        checks=checks,
        periodicity_defect=periodicity_defect(flow(periodic), 2 * l),
    )
    for check in report.checks:
        log = logger.info if check.passed else logger.warning
        log(
            "%s: worst=%.3e tol=%.1e over %d cases",
            check.name,
            check.worst,
            check.tolerance,
            check.cases,
        )
    return report


def periodicity_defect(field: Field, halfwidth: float) -> float:
    """max |u(x + l) - u(x)| over nodes with |x|, |x + l| <= halfwidth."""
    grid: Grid = field.grid
    shift: int = grid.nodes_per_period
    x: np.ndarray = grid.node_positions
    base: np.ndarray = np.arange(grid.size - shift)
    inside: np.ndarray = np.abs(x) <= halfwidth
    keep: np.ndarray = inside[base] & inside[base + shift]
    if not np.any(keep):
        return 0.0
    return float(np.abs(field.values[base + shift] - field.values[base])[keep].max())


# Export


def trajectory_frame(trajectory: Trajectory, landscape: Landscape) -> pd.DataFrame:
    """Rows t, x, u, v, patch_type; interfaces get one row per side."""
    grid: Grid = trajectory.grid
    x: np.ndarray = grid.node_positions
    patch: np.ndarray = grid.node_patch_types()
    scale: np.ndarray = np.where(patch == 2, landscape.k, 1.0)
    patch_nodes: np.ndarray = grid.node_types != INTERFACE
    left_types, right_types = grid.interface_sides()
    faces: np.ndarray = grid.interface_nodes
    frames: list[pd.DataFrame] = []
    for time, u in zip(trajectory.times, trajectory.snapshots):
        pieces: list[pd.DataFrame] = [
            pd.DataFrame(
                dict(
                    t=time,
                    x=x[patch_nodes],
                    u=u[patch_nodes],
                    v=(u / scale)[patch_nodes],
                    patch_type=patch[patch_nodes],
                )
            )
        ]
        for types in (left_types, right_types):
            pieces.append(
                pd.DataFrame(
                    dict(
                        t=time,
                        x=x[faces],
                        u=u[faces],
                        v=u[faces] / np.where(types == 2, landscape.k, 1.0),
                        patch_type=types,
                    )
                )
            )
        frames.append(pd.concat(pieces).sort_values(["x", "patch_type"], kind="stable"))
    return pd.concat(frames, ignore_index=True)[TRAJECTORY_COLUMNS]
