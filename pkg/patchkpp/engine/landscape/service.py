import logging
import math

import numpy as np

from patchkpp.access.config.constants import (
    HYPOTHESIS_S_MIN,
    HYPOTHESIS_SAMPLES,
    RESCALE_TOL,
)
from patchkpp.engine.landscape.contracts import (
    HypothesisReport,
    InterfaceSet,
    Landscape,
    LogisticReaction,
    PhysicalField,
    Reaction,
    TabulatedReaction,
)
from patchkpp.engine.pde.contracts import Field, Grid
from patchkpp.utility.exceptions import (
    AlphaOutOfRange,
    InconsistentInterfaceValues,
    NonPositiveParameter,
)

logger = logging.getLogger(__name__)

# Per-capita slopes below this count as flat.
_SLOPE_TOL: float = 1e-10


def _require_positive(**kwargs: float) -> None:
    for name, value in kwargs.items():
        if not (math.isfinite(value) and value > 0):
            raise NonPositiveParameter(f"{name} must be positive and finite: {value}")


def build_landscape(
    l1: float,
    l2: float,
    d1: float,
    d2: float,
    alpha: float,
) -> Landscape:
    _require_positive(l1=l1, l2=l2, d1=d1, d2=d2)
    if not (math.isfinite(alpha) and 0 < alpha < 1):
        raise AlphaOutOfRange(f"alpha must lie in (0, 1): {alpha}")
    kwargs: dict[str, float] = dict(l1=l1, l2=l2, d1=d1, d2=d2, alpha=alpha)
    return Landscape(**kwargs)


def build_landscape_from_sigma(
    l1: float,
    l2: float,
    d1: float,
    d2: float,
    sigma: float,
) -> Landscape:
    _require_positive(sigma=sigma)
    return build_landscape(l1, l2, d1, d2, 1 / (1 + sigma))


def interface_set(landscape: Landscape, n_tiles: int) -> InterfaceSet:
    """Interface points strictly inside the window [-n l, n l]."""
    l: float = landscape.period
    kwargs: dict[str, list[float]] = dict(
        s1_points=[j * l for j in range(-n_tiles + 1, n_tiles)],
        s2_points=[j * l + landscape.l2 for j in range(-n_tiles, n_tiles)],
    )
    return InterfaceSet(**kwargs)


def _scale(landscape: Landscape, patch_types: np.ndarray) -> np.ndarray:
    return np.where(patch_types == 2, landscape.k, 1.0)


def rescale_physical_to_continuous(
    v_field: PhysicalField,
    landscape: Landscape,
    tol: float = RESCALE_TOL,
) -> Field:
    """u = v on type-1 patches and u = k v on type-2 patches."""
    grid: Grid = v_field.grid
    values: np.ndarray = v_field.values * _scale(landscape, grid.node_patch_types())
    left_types, right_types = grid.interface_sides()
    left: np.ndarray = v_field.left_limits * _scale(landscape, left_types)
    right: np.ndarray = v_field.right_limits * _scale(landscape, right_types)
    mismatch: np.ndarray = np.abs(left - right)
    allowed: np.ndarray = tol * np.maximum(1.0, np.abs(left))
    if np.any(mismatch > allowed):
        worst: int = int(np.argmax(mismatch - allowed))
        position: float = float(grid.node_positions[grid.interface_nodes[worst]])
        message: str = f"v(x-) and k v(x+) differ by {mismatch[worst]:.3e} "
        message += f"at x={position}"
        raise InconsistentInterfaceValues(message)
    values[grid.interface_nodes] = 0.5 * (left + right)
    return Field(time=v_field.time, values=values, grid=grid)


def rescale_continuous_to_physical(field: Field, landscape: Landscape) -> PhysicalField:
    grid: Grid = field.grid
    values: np.ndarray = field.values / _scale(landscape, grid.node_patch_types())
    left_types, right_types = grid.interface_sides()
    at_interfaces: np.ndarray = field.values[grid.interface_nodes]
    kwargs = dict(
        time=field.time,
        grid=grid,
        values=values,
        left_limits=at_interfaces / _scale(landscape, left_types),
        right_limits=at_interfaces / _scale(landscape, right_types),
    )
    return PhysicalField(**kwargs)


def rescale_reaction_to_continuous(
    reaction: Reaction,
    landscape: Landscape,
) -> Reaction:
    """Reaction acting on u when the rates were given for the density v.

    On type-2 patches u = k v, so the u-equation carries k f2(u / k), whose
    cap is k K2 and whose linearization at 0 is unchanged.
    """
    k: float = landscape.k
    if isinstance(reaction, LogisticReaction):
        return LogisticReaction(
            mu1=reaction.mu1,
            mu2=reaction.mu2,
            kappa1=reaction.kappa1,
            kappa2=k * reaction.kappa2,
            K1=reaction.K1,
            K2=k * reaction.K2,
        )
    f2, df2 = reaction.f2_fn, reaction.df2_fn
    return TabulatedReaction(
        f1_fn=reaction.f1_fn,
        f2_fn=lambda s: k * f2(s / k),
        f1_prime0_value=reaction.f1_prime0_value,
        f2_prime0_value=reaction.f2_prime0_value,
        df1_fn=reaction.df1_fn,
        df2_fn=None if df2 is None else (lambda s: df2(s / k)),
        K1=reaction.K1,
        K2=k * reaction.K2,
    )


def _per_capita(reaction: Reaction, patch_type: int, s: np.ndarray) -> np.ndarray:
    return reaction.f(patch_type, s) / s


def validate_hypotheses(
    reaction: Reaction,
    samples: int = HYPOTHESIS_SAMPLES,
) -> HypothesisReport:
    """Sampling check of the standing hypotheses on f1, f2.

    Heuristic: s is log spaced on [1e-6, 10 max(K1, K2)], so behavior between
    samples or beyond the range is not seen.
    """
    s: np.ndarray = np.geomspace(HYPOTHESIS_S_MIN, 10 * reaction.cap, samples)
    messages: list[str] = []

    zero: np.ndarray = np.array([0.0])
    at_zero: list[float] = [abs(float(reaction.f(i, zero)[0])) for i in (1, 2)]
    vanishes: bool = max(at_zero) <= 1e-12
    if not vanishes:
        messages.append(f"f_i(0) != 0: {at_zero}")

    bounded: bool = True
    for i, cap in ((1, reaction.K1), (2, reaction.K2)):
        beyond: np.ndarray = np.append(cap, s[s >= cap])
        if np.any(reaction.f(i, beyond) > 1e-12):
            bounded = False
            messages.append(f"f{i} is positive somewhere on [K{i}={cap}, +inf)")

    non_increasing: bool = True
    decreasing: bool = False
    for i in (1, 2):
        ratio: np.ndarray = _per_capita(reaction, i, s)
        slope: np.ndarray = np.diff(ratio)
        allowed: np.ndarray = _SLOPE_TOL * (1 + np.abs(ratio[1:]))
        if np.any(slope > allowed):
            non_increasing = False
            messages.append(f"f{i}(s)/s increases somewhere")
        decreasing = decreasing or bool(np.any(slope < -allowed))
    if not decreasing:
        messages.append("f_i(s)/s is constant for both patches")

    favorable: bool = reaction.f1_prime0 >= reaction.f2_prime0
    report = HypothesisReport(
        f_vanishes_at_zero=vanishes,
        bounded_by_caps=bounded,
        per_capita_non_increasing=non_increasing,
        per_capita_decreasing_somewhere=decreasing,
        type_one_more_favorable=favorable,
        samples=samples,
        messages=messages,
    )
    if not report.kpp_holds:
        logger.warning("reaction is not of KPP type: %s", "; ".join(messages))
    return report
