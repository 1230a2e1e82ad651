"""Command-line surface: patchkpp <command> --config run.json [--out DIR] [--seed N]."""

import argparse
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from patchkpp.access.config.constants import (
    AGREEMENT_TOL,
    EIGENFUNCTION_COLUMNS,
    EXIT_CONFIG,
    EXIT_NOT_PERSISTENT,
    EXIT_NUMERICAL,
    EXIT_OK,
    SIGMA_SWEEP_COLUMNS,
    THREADS_ENV_VAR,
)
from patchkpp.access.config.contracts import (
    BumpData,
    ConstantData,
    FileData,
    LandscapeBlock,
    PeriodicData,
    ReactionBlock,
    RunConfig,
)
from patchkpp.access.config.service import (
    load_config,
    write_csv,
    write_json,
    write_manifest,
)
from patchkpp.engine.dynamics.contracts import FrontTrace, SpeedResult
from patchkpp.engine.dynamics.service import (
    front_frame,
    measure_front_speed,
    phi_frame,
    pulsating_wave_check,
    spreading_speed,
    trace_front,
)
from patchkpp.engine.eigen.contracts import CriticalLengths, EigenResult
from patchkpp.engine.eigen.service import (
    critical_patch_length,
    dirichlet_ladder,
    lambda1_dispersion,
    lambda1_grid_extrapolated,
    lambda_mu,
    sigma_sweep,
)
from patchkpp.engine.landscape.contracts import Landscape, LogisticReaction, Reaction
from patchkpp.engine.landscape.service import (
    build_landscape,
    validate_hypotheses,
)
from patchkpp.engine.pde.contracts import Field, Grid, Trajectory
from patchkpp.engine.pde.service import (
    apply_cutoff,
    build_grid,
    evolve,
    periodicity_defect,
    run_property_suite,
    trajectory_frame,
)
from patchkpp.engine.steady.contracts import SteadyState
from patchkpp.engine.steady.service import (
    compute_steady_state,
    profile_frame,
    verify_uniqueness,
)
from patchkpp.manager.cli.contracts import (
    EigenSummary,
    FrontSummary,
    SelftestCase,
    SelftestReport,
    SimulateSummary,
    SpeedSummary,
    SteadySummary,
)
from patchkpp.utility.builders import ContractsBuilder
from patchkpp.utility.exceptions import (
    ConfigurationError,
    MethodsDisagree,
    NoCrossingFound,
    NotPersistent,
    NumericalFailure,
)

logger = logging.getLogger(__name__)

# Simulated cells count as persistent when min p exceeds this.
PERSISTENT_MIN_P: float = 1e-3


class _Writer:
    """Per-run output directory honoring the configured formats."""

    def __init__(self, directory: Path, formats: Sequence[str]) -> None:
        self.directory = Path(directory)
        self.formats = set(formats)
        self.outputs: list[Path] = []

    def csv(self, frame: pd.DataFrame, name: str) -> None:
        if "csv" in self.formats:
            self.outputs.append(write_csv(frame, self.directory, name))

    def json(self, model: BaseModel, name: str) -> None:
        if "json" in self.formats:
            self.outputs.append(write_json(model, self.directory, name))


def worker_count() -> int:
    available: int = os.cpu_count() or 1
    raw: Optional[str] = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return available
    try:
        cap: int = int(raw)
    except ValueError as error:
        message: str = f"{THREADS_ENV_VAR} must be an integer: {raw!r}"
        raise ConfigurationError(message) from error
    if cap < 1:
        raise ConfigurationError(f"{THREADS_ENV_VAR} must be at least 1: {cap}")
    return min(cap, available)


def _model(config: RunConfig) -> tuple[Landscape, Reaction]:
    builder = ContractsBuilder()
    landscape: Landscape = builder.landscape(config.landscape)
    return landscape, builder.reaction(config.reaction, landscape)


# Commands


def cmd_eigen(config: RunConfig, writer: _Writer) -> None:
    landscape, reaction = _model(config)
    numerics = config.numerics
    dispersion: EigenResult = lambda1_dispersion(landscape, reaction)
    transfer: float = lambda_mu(landscape, reaction, 0.0).lambda_mu
    grid: EigenResult = lambda1_grid_extrapolated(
        landscape, reaction, numerics.eigen_nodes_per_patch
    )
    values: list[float] = [dispersion.lambda_, transfer, grid.lambda_]
    disagreement: float = max(values) - min(values)

    critical: Optional[CriticalLengths] = None
    if reaction.f1_prime0 > 0 > reaction.f2_prime0:
        critical = critical_patch_length(landscape, reaction)

    increasing: Optional[bool] = None
    if config.scenario.sigmas:
        sweep = sigma_sweep(landscape, reaction, config.scenario.sigmas)
        increasing = sweep.strictly_increasing
        columns = dict(sigma=sweep.sigmas, alpha=sweep.alphas, lambda1=sweep.lambdas)
        writer.csv(pd.DataFrame(columns)[SIGMA_SWEEP_COLUMNS], "lambda_vs_sigma.csv")

    ladder = dirichlet_ladder(landscape, reaction, tuple(config.scenario.ladder))
    summary = EigenSummary(
        lambda1_dispersion=dispersion.lambda_,
        lambda1_transfer_matrix=transfer,
        lambda1_grid=grid.lambda_,
        max_disagreement=disagreement,
        hypotheses=validate_hypotheses(reaction),
        ladder=ladder,
        ladder_strictly_decreasing=ladder.strictly_decreasing,
        critical=critical,
        sigma_sweep_increasing=increasing,
    )
    writer.json(summary, "eigen.json")
    frame = pd.DataFrame(dict(x=dispersion.positions, phi=dispersion.eigenfunction))
    writer.csv(frame[EIGENFUNCTION_COLUMNS], "eigenfunction.csv")
    logger.info("lambda1=%.12g (method spread %.2e)", dispersion.lambda_, disagreement)
    if disagreement > AGREEMENT_TOL:
        message: str = f"lambda1 estimates {values} spread by {disagreement:.3e}"
        raise MethodsDisagree(message)


def cmd_speed(config: RunConfig, writer: _Writer) -> None:
    landscape, reaction = _model(config)
    result: SpeedResult = spreading_speed(
        landscape, reaction, nodes_per_patch=config.numerics.eigen_nodes_per_patch
    )
    writer.csv(phi_frame(result), "phi_of_mu.csv")
    kwargs = dict(
        c_star=result.c_star,
        mu_star=result.mu_star,
        lambda1=result.lambda1,
        c_star_left=result.c_star_left,
        lambda_at_mu_star=result.lambda_at_mu_star,
        first_order_defect=result.first_order_defect,
        quasi_convex=result.quasi_convex,
        grid_check=result.grid_check,
    )
    if config.scenario.measure_front:
        params = ContractsBuilder().sim_params(config.numerics, config.scenario)
        trace: FrontTrace = measure_front_speed(
            landscape, reaction, params, c_star=result.c_star, mu_star=result.mu_star
        )
        writer.csv(front_frame(trace), "front_trace.csv")
        kwargs.update(
            c_fitted_right=trace.speed_right,
            c_fitted_left=trace.speed_left,
            c_raw_right=trace.raw_speed_right,
            rel_err=abs(trace.speed_right - result.c_star) / result.c_star,
        )
    writer.json(SpeedSummary(**kwargs), "speed.json")


def _simulation_halfwidth(
    config: RunConfig,
    landscape: Landscape,
    reaction: Reaction,
) -> float:
    """Given half-width, or one outrunning the fastest homogeneous front."""
    if config.scenario.halfwidth is not None:
        return config.scenario.halfwidth
    T: float = config.scenario.T
    c_bound: float = 2 * math.sqrt(landscape.d_max * max(reaction.f1_prime0, 0.0))
    spread: float = 4 * math.sqrt(landscape.d_max * T)
    return 1.5 * c_bound * T + spread + 4 * landscape.period


def cmd_simulate(config: RunConfig, writer: _Writer) -> None:
    builder = ContractsBuilder()
    landscape, reaction, u0 = builder.run(config)
    scenario, numerics = config.scenario, config.numerics
    l: float = landscape.period
    halfwidth: float = _simulation_halfwidth(config, landscape, reaction)
    n_tiles: int = math.ceil(halfwidth / l)
    grid: Grid = build_grid(landscape, n_tiles, numerics.nodes_per_patch)
    field: Field = apply_cutoff(u0, grid)
    every: int = max(1, round(scenario.record_every / numerics.dt))
    stepper = builder.stepper(numerics, snapshot_every=every)
    trajectory: Trajectory = evolve(field, scenario.T, landscape, reaction, stepper)
    writer.csv(trajectory_frame(trajectory, landscape), "trajectory.csv")
    final = Trajectory(
        grid=grid,
        times=trajectory.times[-1:],
        snapshots=trajectory.snapshots[-1:],
        bound=trajectory.bound,
    )
    writer.csv(trajectory_frame(final, landscape), "final_state.csv")

    lambda1: float = lambda1_dispersion(landscape, reaction).lambda_
    kwargs = dict(
        T=scenario.T,
        halfwidth=grid.halfwidth,
        nodes=grid.size,
        lambda1=lambda1,
        final_sup=trajectory.final.sup_norm(),
        bound=trajectory.bound,
    )
    if isinstance(scenario.initial, (ConstantData, PeriodicData)):
        spread: float = 4 * math.sqrt(landscape.d_max * scenario.T)
        inner: float = max(grid.halfwidth - spread - 2 * l, l)
        kwargs["periodicity_defect"] = periodicity_defect(trajectory.final, inner)

    compact: bool = isinstance(scenario.initial, (BumpData, FileData))
    if scenario.front and compact and lambda1 < 0 and field.sup_norm() > 0:
        steady: SteadyState = compute_steady_state(
            landscape, reaction, numerics.nodes_per_patch
        )
        speed: SpeedResult = spreading_speed(landscape, reaction, grid_check=False)
        try:
            trace: FrontTrace = trace_front(
                trajectory,
                0.5 * steady.min_p,
                scenario.fit_fraction,
                mu_star=speed.mu_star,
            )
        except NoCrossingFound as error:
            logger.warning("no front trace: %s", error)
        else:
            writer.csv(front_frame(trace), "front_trace.csv")
            kwargs["front"] = FrontSummary(
                level=trace.level,
                speed_right=trace.speed_right,
                stderr_right=trace.stderr_right,
                speed_left=trace.speed_left,
                stderr_left=trace.stderr_left,
                raw_speed_right=trace.raw_speed_right,
                raw_speed_left=trace.raw_speed_left,
                log_shift=trace.log_shift,
            )
        if scenario.pulsating:
            params = builder.sim_params(numerics, scenario)
            kwargs["pulsating"] = pulsating_wave_check(
                landscape,
                reaction,
                params,
                u0,
                steady,
                c_star=speed.c_star,
                mu_star=speed.mu_star,
            )

    if scenario.property_suite:
        stepper = builder.stepper(numerics)
        report = run_property_suite(
            landscape, reaction, stepper, scenario.cases, scenario.seed
        )
        writer.json(report, "property_suite.json")
        kwargs["property_suite"] = report
    writer.json(SimulateSummary(**kwargs), "simulate.json")


def cmd_steady(config: RunConfig, writer: _Writer) -> None:
    landscape, reaction = _model(config)
    steady: SteadyState = compute_steady_state(
        landscape, reaction, config.numerics.nodes_per_patch
    )
    writer.csv(profile_frame(steady), "profile.csv")
    uniqueness = None
    if steady.exists and config.scenario.uniqueness:
        seed: int = config.scenario.seed
        uniqueness = verify_uniqueness(steady, landscape, reaction, seed)
    summary = SteadySummary(
        exists=steady.exists,
        lambda1=steady.lambda1,
        min_p=steady.min_p,
        max_p=steady.max_p,
        residual=steady.residual,
        near_critical=steady.near_critical,
        converged=steady.converged,
        uniqueness=uniqueness,
    )
    writer.json(summary, "steady.json")


def _map_cell(
    landscape: Landscape,
    reaction: Reaction,
    simulate: bool,
    nodes_per_patch: int,
) -> dict[str, float]:
    lambda1: float = lambda1_dispersion(landscape, reaction).lambda_
    l1c: float = math.nan
    if reaction.f1_prime0 > 0 > reaction.f2_prime0:
        l1c = critical_patch_length(landscape, reaction).l1c
    row: dict[str, float] = dict(lambda1=lambda1, persistent=int(lambda1 < 0), l1c=l1c)
    if simulate:
        steady: SteadyState = compute_steady_state(landscape, reaction, nodes_per_patch)
        persistent: bool = steady.exists and steady.min_p > PERSISTENT_MIN_P
        row["simulated_persistent"] = int(persistent)
    return row


def _variant(
    config: RunConfig,
    l1: Optional[float],
    axis: str,
    value: float,
) -> tuple[Landscape, Reaction]:
    landscape_block: LandscapeBlock = config.landscape
    reaction_block: ReactionBlock = config.reaction
    if l1 is not None:
        landscape_block = landscape_block.model_copy(update=dict(l1=l1))
    if axis == "l2":
        landscape_block = landscape_block.model_copy(update=dict(l2=value))
    else:
        reaction_block = reaction_block.model_copy(update=dict(mu2=value, K2=None))
    builder = ContractsBuilder()
    landscape: Landscape = builder.landscape(landscape_block)
    return landscape, builder.reaction(reaction_block, landscape)


def cmd_persistence_map(config: RunConfig, writer: _Writer) -> None:
    block = config.scenario.persistence_map
    if block is None:
        raise ConfigurationError("persistence-map needs scenario.persistence_map")
    axis: str = "l2" if block.l2 is not None else "f2_prime0"
    second: list[float] = block.l2 if block.l2 is not None else block.f2_prime0
    cells: list[tuple[float, float]] = [(a, b) for a in block.l1 for b in second]

    def evaluate(cell: tuple[float, float]) -> dict[str, float]:
        l1, value = cell
        landscape, reaction = _variant(config, l1, axis, value)
        nodes: int = config.numerics.nodes_per_patch
        row = _map_cell(landscape, reaction, block.simulate, nodes)
        return {"l1": l1, axis: value, **row}

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        rows: list[dict[str, float]] = list(pool.map(evaluate, cells))
    writer.csv(pd.DataFrame(rows), "persistence_map.csv")

    curve: list[dict[str, float]] = []
    for value in second:
        landscape, reaction = _variant(config, None, axis, value)
        l1c: float = math.nan
        if reaction.f1_prime0 > 0 > reaction.f2_prime0:
            l1c = critical_patch_length(landscape, reaction).l1c
        curve.append({axis: value, "l1c": l1c})
    writer.csv(pd.DataFrame(curve), "critical_curve.csv")
    persistent: int = sum(row["persistent"] for row in rows)
    logger.info("persistence map: %d of %d cells persistent", persistent, len(rows))


def _case(name: str, value: float, expected: float, tolerance: float) -> SelftestCase:
    return SelftestCase(name=name, value=value, expected=expected, tolerance=tolerance)


def _selftest_cases() -> list[SelftestCase]:
    cases: list[SelftestCase] = []
    for d, m in ((1.0, 1.0), (4.0, 1.0)):
        landscape = build_landscape(1.0, 1.0, d, d, 0.5)
        reaction = LogisticReaction(mu1=m, mu2=m)
        result = spreading_speed(landscape, reaction, grid_check=False)
        c_star: float = 2 * math.sqrt(d * m)
        cases.append(_case(f"c* d={d} m={m}", result.c_star, c_star, 1e-8))
        cases.append(_case(f"mu* d={d} m={m}", result.mu_star, math.sqrt(m / d), 1e-6))

    landscape = build_landscape(2.0, 1.0, 1.0, 0.5, 0.4)
    reaction = LogisticReaction(mu1=1.0, mu2=-1.0)
    dispersion: float = lambda1_dispersion(landscape, reaction).lambda_
    transfer: float = lambda_mu(landscape, reaction, 0.0).lambda_mu
    grid: float = lambda1_grid_extrapolated(landscape, reaction).lambda_
    cases.append(_case("lambda1 transfer matrix", transfer, dispersion, AGREEMENT_TOL))
    cases.append(_case("lambda1 grid", grid, dispersion, AGREEMENT_TOL))

    l1c: float = critical_patch_length(landscape, reaction).l1c
    at_critical = build_landscape(l1c, 1.0, 1.0, 0.5, 0.4)
    at_l1c: float = lambda1_dispersion(at_critical, reaction).lambda_
    cases.append(_case("lambda1 at l1c", at_l1c, 0.0, 1e-8))

    homogeneous = build_landscape(1.0, 1.0, 1.0, 1.0, 0.5)
    steady = compute_steady_state(homogeneous, LogisticReaction(mu1=1.0, mu2=1.0), 16)
    cases.append(_case("homogeneous p", float(np.abs(steady.p - 1).max()), 0.0, 1e-8))
    return cases


def cmd_selftest(config: Optional[RunConfig], writer: _Writer) -> None:
    cases: list[SelftestCase] = _selftest_cases()
    report = SelftestReport(cases=cases, passed=all(case.passed for case in cases))
    writer.json(report, "selftest.json")
    for case in cases:
        verdict: str = "ok" if case.passed else "FAILED"
        logger.info("%s: %s (%.3e)", case.name, verdict, case.value)
    if not report.passed:
        failed: list[str] = [case.name for case in cases if not case.passed]
        raise NumericalFailure(f"self-test failed: {failed}")


COMMANDS: dict[str, Callable[[RunConfig, _Writer], None]] = {
    "eigen": cmd_eigen,
    "speed": cmd_speed,
    "simulate": cmd_simulate,
    "steady": cmd_steady,
    "persistence-map": cmd_persistence_map,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchkpp",
        description="Persistence and spreading in periodic two-patch landscapes.",
    )
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", type=Path, help="run config or manifest (JSON)")
    parser.add_argument("--out", type=Path, help="output directory")
    parser.add_argument("--seed", type=int, help="overrides scenario.seed")
    parser.add_argument("--log-level", default="INFO", help="logging level")
    return parser


def _resolve(args: argparse.Namespace) -> Optional[RunConfig]:
    if args.config is None:
        if args.command != "selftest":
            raise ConfigurationError(f"{args.command} needs --config")
        return None
    config: RunConfig = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigurationError(f"seed must be nonnegative: {args.seed}")
        scenario = config.scenario.model_copy(update=dict(seed=args.seed))
        config = config.model_copy(update=dict(scenario=scenario))
    return config


def run(args: argparse.Namespace) -> int:
    try:
        config: Optional[RunConfig] = _resolve(args)
        default: Path = config.output.directory if config else Path("out")
        directory: Path = args.out or default
        formats: list[str] = config.output.formats if config else ["csv", "json"]
        writer = _Writer(directory, formats)
        COMMANDS[args.command](config, writer)
        seed: int = config.scenario.seed if config else (args.seed or 0)
        write_manifest(args.command, config, seed, writer.outputs, directory)
    except NotPersistent as error:
        logger.error("not persistent: %s", error)
        return EXIT_NOT_PERSISTENT
    except (ConfigurationError, ValidationError) as error:
        logger.error("configuration error: %s", error)
        return EXIT_CONFIG
    except NumericalFailure as error:
        logger.error("numerical failure: %s", error)
        return EXIT_NUMERICAL
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args: argparse.Namespace = build_parser().parse_args(argv)
    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return run(args)
