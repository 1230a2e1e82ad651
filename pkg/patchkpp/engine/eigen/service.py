"""Principal eigenvalues of the periodic, Dirichlet and drifted problems.

Conventions shared by every method:

- On a type-i patch the operator is L psi = -d_i psi'' + 2 d_i mu psi'
  - (d_i mu^2 + f_i'(0)) psi, and L psi = lambda psi.
- At every interface w_left (psi' - mu psi)(x-) = w_right (psi' - mu psi)(x+)
  with w = 1 on type-1 and w = sigma on type-2 patches, psi continuous.

Transfer matrices: with state (psi, psi') the patch equation is the linear
system X' = A X, A = [[0, 1], [-(mu^2 + (f_i'(0) + lambda) / d_i), 2 mu]].
Continuity and the flux condition give the jumps across an interface:

    S1 (type 1 -> 2): psi'+ = mu (1 - 1/sigma) psi + psi'- / sigma
    S2 (type 2 -> 1): psi'+ = mu (1 - sigma) psi + sigma psi'-

so J1 = [[1, 0], [mu (1 - 1/sigma), 1/sigma]] and J2 = [[1, 0], [mu (1 - sigma),
sigma]]. Starting just right of the S2 point -l1 the monodromy over one
period is M = J2 E2(l2) J1 E1(l1). Since det M = e^{2 mu l}, det(M - I) e^{-mu l}
equals 2 cosh(mu l) - tr(M e^{-mu l}), which is what is root-found.
"""

import logging
import math
from typing import Callable, Optional

import numpy as np
from scipy import optimize, sparse
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigs

from patchkpp.access.config.constants import (
    AGREEMENT_TOL,
    MIN_NODES_PER_PATCH_EIGEN,
    POSITIVITY_SAMPLES_PER_PATCH,
    ROOT_TOL,
    SCAN_FRACTION,
    TAN_CLAMP,
)
from patchkpp.engine.eigen.contracts import (
    CriticalLengths,
    CrossCheck,
    DirichletLadder,
    EigenMethod,
    EigenResult,
    MuFamilySample,
    SigmaSweep,
)
from patchkpp.engine.landscape.contracts import Landscape, Reaction
from patchkpp.engine.landscape.service import build_landscape_from_sigma
from patchkpp.engine.pde.contracts import DiscreteOperator, Grid
from patchkpp.engine.pde.service import (
    assemble_operator,
    build_period_grid,
    build_window_grid,
)
from patchkpp.utility.exceptions import (
    BranchSelectionFailed,
    DegenerateRates,
    IterationDiverged,
    MethodsDisagree,
    NonPositiveEigenvector,
    NonPositiveParameter,
    NoRootInBracket,
    NotSourceSink,
    ResolutionTooCoarse,
)

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES_PER_PATCH: int = 64
DEFAULT_GRID_NODES: int = 64
# Relative slack for negative round-off in computed eigenvectors.
_POSITIVITY_SLACK: float = 1e-10


def _period_positions(landscape: Landscape, samples_per_patch: int) -> np.ndarray:
    return np.concatenate(
        [
            np.linspace(-landscape.l1, 0.0, samples_per_patch, endpoint=False),
            np.linspace(0.0, landscape.l2, samples_per_patch, endpoint=False),
        ]
    )


# Dispersion relation


def _dispersion(landscape: Landscape, reaction: Reaction) -> Callable[[float], float]:
    f1, f2 = reaction.f1_prime0, reaction.f2_prime0

    def difference(lam: float) -> float:
        a: float = math.sqrt(max(f1 + lam, 0.0) / landscape.d1)
        b: float = math.sqrt(max(-(lam + f2), 0.0) / landscape.d2)
        left: float = a * math.tan(a * landscape.l1 / 2)
        right: float = landscape.sigma * b * math.tanh(b * landscape.l2 / 2)
        return left - right

    return difference


def lambda1_dispersion(
    landscape: Landscape,
    reaction: Reaction,
    samples_per_patch: int = DEFAULT_SAMPLES_PER_PATCH,
) -> EigenResult:
    """Smallest root in [-f1'(0), -f2'(0)] of

        a tan(a l1 / 2) = sigma b tanh(b l2 / 2),
        a = sqrt((f1'(0) + lambda) / d1), b = sqrt(-(lambda + f2'(0)) / d2),

    with a l1 / 2 kept on [0, pi/2). The eigenfunction is even about the
    middle of each patch: cos(a (x + l1/2)) on [-l1, 0] and
    B cosh(b (x - l2/2)) on [0, l2].
    """
    f1, f2 = reaction.f1_prime0, reaction.f2_prime0
    if f1 < f2:
        raise DegenerateRates(f"f1'(0)={f1} < f2'(0)={f2}")
    positions: np.ndarray = _period_positions(landscape, samples_per_patch)
    if f1 == f2:
        kwargs = dict(
            positions=positions,
            eigenfunction=np.ones_like(positions),
            method=EigenMethod.DISPERSION_ROOT,
            residual=0.0,
        )
        return EigenResult(lambda_=-f1, **kwargs)

    angle: float = math.pi / 2 - TAN_CLAMP
    pole: float = landscape.d1 * (2 * angle / landscape.l1) ** 2 - f1
    lo, hi = -f1, min(pole, -f2)
    difference = _dispersion(landscape, reaction)
    try:
        lam: float = optimize.bisect(difference, lo, hi, xtol=ROOT_TOL, maxiter=500)
    except ValueError as error:
        message: str = f"no sign change of the dispersion relation on [{lo}, {hi}]"
        raise NoRootInBracket(message) from error

    a: float = math.sqrt(max(f1 + lam, 0.0) / landscape.d1)
    b: float = math.sqrt(max(-(lam + f2), 0.0) / landscape.d2)
    half1, half2 = landscape.l1 / 2, landscape.l2 / 2
    B: float = math.cos(a * half1) / math.cosh(b * half2)
    phi: np.ndarray = np.where(
        positions < 0,
        np.cos(a * (positions + half1)),
        B * np.cosh(b * (positions - half2)),
    )
    flux_left: float = -a * math.sin(a * half1)
    flux_right: float = -B * b * math.sinh(b * half2)
    residual: float = abs(flux_left - landscape.sigma * flux_right)
    logger.debug("dispersion root lambda1=%.15g on [%.6g, %.6g]", lam, lo, hi)
    kwargs = dict(
        positions=positions,
        eigenfunction=phi / np.abs(phi).max(),
        method=EigenMethod.DISPERSION_ROOT,
        residual=residual,
    )
    return EigenResult(lambda_=lam, **kwargs)


# Grid discretization


def _growth(grid: Grid, reaction: Reaction) -> np.ndarray:
    """f_i'(0) at patch nodes, 0 elsewhere."""
    return np.where(
        grid.node_types == 1,
        reaction.f1_prime0,
        np.where(grid.node_types == 2, reaction.f2_prime0, 0.0),
    )


def principal_eigenpair(
    grid: Grid,
    landscape: Landscape,
    reaction: Reaction,
    mu: float = 0.0,
) -> tuple[float, np.ndarray, float]:
    """Principal eigenpair of the discrete L_mu with interface rows eliminated.

    The flux rows only couple an interface node to itself and to patch nodes,
    so psi_I = -F_II^{-1} F_IP psi_P and the patch block is reduced exactly.
    """
    operator: DiscreteOperator = assemble_operator(grid, landscape, mu)
    growth: np.ndarray = _growth(grid, reaction)
    generator: sparse.csr_matrix = (-operator.diffusion - sparse.diags(growth)).tocsr()
    patch: np.ndarray = np.flatnonzero(grid.interior)
    faces: np.ndarray = grid.interface_nodes

    flux_faces: np.ndarray = operator.flux[faces][:, faces].diagonal()
    elimination = sparse.diags(1 / flux_faces) @ operator.flux[faces][:, patch]
    reduced = (
        generator[patch][:, patch] - generator[patch][:, faces] @ elimination
    ).tocsc()

    shift: float = -max(reaction.f1_prime0, reaction.f2_prime0)
    shift -= landscape.d_max * mu**2 + 1
    try:
        values, vectors = eigs(
            reduced, k=1, sigma=shift, which="LM", v0=np.ones(len(patch))
        )
    except ArpackNoConvergence as error:
        message: str = f"shift-invert iteration did not converge: {error}"
        raise IterationDiverged(message) from error
    except ArpackError as error:
        raise IterationDiverged(str(error)) from error

    lam: complex = values[0]
    if abs(lam.imag) > 1e-8 * (1 + abs(lam.real)):
        raise NonPositiveEigenvector(f"captured a complex eigenvalue {lam}")
    vector: np.ndarray = vectors[:, 0]
    vector = (vector / vector[np.argmax(np.abs(vector))]).real

    psi: np.ndarray = np.zeros(grid.size)
    psi[patch] = vector
    psi[faces] = -(elimination @ vector)
    if psi[~grid.boundary].min() < -_POSITIVITY_SLACK:
        message: str = f"principal eigenvector changes sign (min {psi.min():.3e})"
        raise NonPositiveEigenvector(message)
    psi = np.maximum(psi, 0.0)
    psi /= psi.max()

    interior_residual: np.ndarray = (generator @ psi - lam.real * psi)[patch]
    flux_residual: np.ndarray = (operator.flux @ psi)[faces]
    residual: float = max(
        float(np.abs(interior_residual).max(initial=0.0)),
        float(np.abs(flux_residual).max(initial=0.0)),
    )
    return float(lam.real), psi, residual


def _grid_result(
    grid: Grid,
    landscape: Landscape,
    reaction: Reaction,
    nodes_per_patch: int,
) -> EigenResult:
    lam, psi, residual = principal_eigenpair(grid, landscape, reaction)
    kwargs = dict(
        positions=grid.node_positions,
        eigenfunction=psi,
        method=EigenMethod.GRID_DISCRETIZATION,
        residual=residual,
        nodes_per_patch=nodes_per_patch,
    )
    return EigenResult(lambda_=lam, **kwargs)


def _require_eigen_resolution(nodes_per_patch: int) -> None:
    if nodes_per_patch < MIN_NODES_PER_PATCH_EIGEN:
        message: str = f"nodes_per_patch={nodes_per_patch} is below "
        message += f"{MIN_NODES_PER_PATCH_EIGEN}"
        raise ResolutionTooCoarse(message)


def lambda1_grid(
    landscape: Landscape,
    reaction: Reaction,
    nodes_per_patch: int = DEFAULT_GRID_NODES,
) -> EigenResult:
    _require_eigen_resolution(nodes_per_patch)
    grid: Grid = build_period_grid(landscape, nodes_per_patch)
    return _grid_result(grid, landscape, reaction, nodes_per_patch)


def refined(nodes_per_patch: int) -> int:
    """Interior nodes per patch after halving the spacing."""
    return 2 * nodes_per_patch + 1


def richardson(coarse: float, fine: float) -> float:
    """Second-order extrapolation from spacings h and h/2."""
    return (4 * fine - coarse) / 3


def lambda1_grid_extrapolated(
    landscape: Landscape,
    reaction: Reaction,
    nodes_per_patch: int = DEFAULT_GRID_NODES,
) -> EigenResult:
    coarse: EigenResult = lambda1_grid(landscape, reaction, nodes_per_patch)
    fine: EigenResult = lambda1_grid(landscape, reaction, refined(nodes_per_patch))
    extrapolated: float = richardson(coarse.lambda_, fine.lambda_)
    return fine.model_copy(update=dict(lambda_=extrapolated))


def quotient_bounds(
    grid: Grid,
    landscape: Landscape,
    reaction: Reaction,
    psi: np.ndarray,
    mu: float = 0.0,
) -> tuple[float, float]:
    """inf and sup over patch nodes of (L_mu psi) / psi."""
    operator: DiscreteOperator = assemble_operator(grid, landscape, mu)
    growth: np.ndarray = _growth(grid, reaction)
    applied: np.ndarray = -(operator.diffusion @ psi) - growth * psi
    patch: np.ndarray = grid.interior & (psi > 0)
    quotient: np.ndarray = applied[patch] / psi[patch]
    return float(quotient.min()), float(quotient.max())


# Transfer matrices


def _propagator(mu: float, growth: float, lam: float, d: float, x: float) -> np.ndarray:
    """exp(A x) e^{-mu x} for the companion matrix A of one patch."""
    w2: float = -(growth + lam) / d
    ch: float
    sh: float
    if w2 > 0:
        w: float = math.sqrt(w2)
        ch, sh = math.cosh(w * x), math.sinh(w * x) / w
    elif w2 < 0:
        w = math.sqrt(-w2)
        ch, sh = math.cos(w * x), math.sin(w * x) / w
    else:
        ch, sh = 1.0, x
    shifted: np.ndarray = np.array([[-mu, 1.0], [w2 - mu**2, mu]])
    return ch * np.eye(2) + sh * shifted


def _jumps(mu: float, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    j1: np.ndarray = np.array([[1.0, 0.0], [mu * (1 - 1 / sigma), 1 / sigma]])
    j2: np.ndarray = np.array([[1.0, 0.0], [mu * (1 - sigma), sigma]])
    return j1, j2


def _scaled_monodromy(
    landscape: Landscape,
    reaction: Reaction,
    mu: float,
    lam: float,
) -> np.ndarray:
    j1, j2 = _jumps(mu, landscape.sigma)
    e1 = _propagator(mu, reaction.f1_prime0, lam, landscape.d1, landscape.l1)
    e2 = _propagator(mu, reaction.f2_prime0, lam, landscape.d2, landscape.l2)
    return j2 @ e2 @ j1 @ e1


def floquet_discriminant(
    landscape: Landscape,
    reaction: Reaction,
    mu: float,
    lam: float,
) -> float:
    """g(lambda) = e^{-mu l} det(M(lambda) - I); negative below lambda(mu)."""
    trace: float = float(np.trace(_scaled_monodromy(landscape, reaction, mu, lam)))
    return 2 * math.cosh(mu * landscape.period) - trace


def _transfer_eigenfunction(
    landscape: Landscape,
    reaction: Reaction,
    mu: float,
    lam: float,
    samples_per_patch: int,
) -> tuple[np.ndarray, np.ndarray, float]:
    monodromy: np.ndarray = math.exp(mu * landscape.period) * _scaled_monodromy(
        landscape, reaction, mu, lam
    )
    shifted: np.ndarray = monodromy - np.eye(2)
    candidates: list[np.ndarray] = [
        np.array([shifted[0, 1], -shifted[0, 0]]),
        np.array([-shifted[1, 1], shifted[1, 0]]),
    ]
    start: np.ndarray = max(candidates, key=lambda v: float(np.abs(v).max()))
    start = start / np.abs(start).max()
    if start[0] < 0:
        start = -start
    j1, _ = _jumps(mu, landscape.sigma)

    positions: np.ndarray = _period_positions(landscape, samples_per_patch)
    psi: np.ndarray = np.empty_like(positions)
    at_zero: np.ndarray = j1 @ (
        math.exp(mu * landscape.l1)
        * _propagator(mu, reaction.f1_prime0, lam, landscape.d1, landscape.l1)
        @ start
    )
    for i, x in enumerate(positions):
        if x < 0:
            offset: float = x + landscape.l1
            propagator = _propagator(mu, reaction.f1_prime0, lam, landscape.d1, offset)
            psi[i] = math.exp(mu * offset) * (propagator @ start)[0]
        else:
            propagator = _propagator(mu, reaction.f2_prime0, lam, landscape.d2, x)
            psi[i] = math.exp(mu * x) * (propagator @ at_zero)[0]
    residual: float = float(np.abs(shifted @ start).max())
    return positions, psi, residual


def _lambda_mu_transfer(
    landscape: Landscape,
    reaction: Reaction,
    mu: float,
    samples_per_patch: int,
) -> MuFamilySample:
    def g(lam: float) -> float:
        return floquet_discriminant(landscape, reaction, mu, lam)

    floor: float = -reaction.f1_prime0 - landscape.d_max * mu**2 - 1
    ceiling: float = -reaction.f2_prime0 + 1
    width: float = ceiling - floor
    samples: int = max(samples_per_patch, POSITIVITY_SAMPLES_PER_PATCH)
    attempts: list[tuple[float, float, float]] = [
        (floor, ceiling, SCAN_FRACTION),
        (floor - width, ceiling + width, SCAN_FRACTION / 10),
    ]
    for lo, hi, fraction in attempts:
        step: float = fraction * (hi - lo)
        a: float = lo
        ga: float = g(a)
        while a < hi:
            b: float = min(a + step, hi)
            gb: float = g(b)
            if ga == 0 or ga * gb < 0:
                lam: float = a if ga == 0 else optimize.brentq(g, a, b, xtol=ROOT_TOL)
                positions, psi, residual = _transfer_eigenfunction(
                    landscape, reaction, mu, lam, samples
                )
                if psi.min() > 0:
                    kwargs = dict(
                        mu=mu,
                        lambda_mu=lam,
                        positions=positions,
                        psi=psi / psi.max(),
                        method=EigenMethod.TRANSFER_MATRIX,
                        residual=residual,
                    )
                    return MuFamilySample(**kwargs)
                logger.debug("root %.12g at mu=%g has a sign-changing psi", lam, mu)
            a, ga = b, gb
        logger.debug("widening the branch scan for mu=%g", mu)
    raise BranchSelectionFailed(f"no positive periodic eigenfunction found for mu={mu}")


def _lambda_mu_grid(
    landscape: Landscape,
    reaction: Reaction,
    mu: float,
    nodes_per_patch: int,
) -> MuFamilySample:
    _require_eigen_resolution(nodes_per_patch)
    grid: Grid = build_period_grid(landscape, nodes_per_patch)
    lam, psi, residual = principal_eigenpair(grid, landscape, reaction, mu)
    kwargs = dict(
        mu=mu,
        lambda_mu=lam,
        positions=grid.node_positions,
        psi=psi,
        method=EigenMethod.GRID_DISCRETIZATION,
        residual=residual,
    )
    return MuFamilySample(**kwargs)


def lambda_mu(
    landscape: Landscape,
    reaction: Reaction,
    mu: float,
    method: EigenMethod = EigenMethod.TRANSFER_MATRIX,
    nodes_per_patch: int = DEFAULT_GRID_NODES,
    samples_per_patch: int = DEFAULT_SAMPLES_PER_PATCH,
) -> MuFamilySample:
    if not math.isfinite(mu):
        raise NonPositiveParameter(f"mu must be finite: {mu}")
    if method == EigenMethod.GRID_DISCRETIZATION:
        return _lambda_mu_grid(landscape, reaction, mu, nodes_per_patch)
    if method == EigenMethod.TRANSFER_MATRIX:
        return _lambda_mu_transfer(landscape, reaction, mu, samples_per_patch)
    raise ValueError(f"{method} does not apply to the drifted problem")


def cross_check_lambda_mu(
    landscape: Landscape,
    reaction: Reaction,
    mu: float,
    nodes_per_patch: int = DEFAULT_GRID_NODES,
) -> CrossCheck:
    """Transfer-matrix lambda(mu) against the extrapolated grid value."""
    exact: float = lambda_mu(landscape, reaction, mu).lambda_mu
    grid_method: EigenMethod = EigenMethod.GRID_DISCRETIZATION
    coarse: float = lambda_mu(
        landscape, reaction, mu, grid_method, nodes_per_patch
    ).lambda_mu
    fine: float = lambda_mu(
        landscape, reaction, mu, grid_method, refined(nodes_per_patch)
    ).lambda_mu
    check = CrossCheck(
        mu=mu,
        transfer_matrix=exact,
        grid_coarse=coarse,
        grid_fine=fine,
        grid_extrapolated=richardson(coarse, fine),
        tolerance=AGREEMENT_TOL,
    )
    if check.difference > check.tolerance:
        message: str = f"lambda({mu}): transfer matrix {exact:.12g} vs grid "
        message += f"{check.grid_extrapolated:.12g} (tol {check.tolerance:.2e})"
        raise MethodsDisagree(message)
    return check


# Dirichlet problems


def lambda_dirichlet(
    landscape: Landscape,
    reaction: Reaction,
    R: float,
    y_shift: float = 0.0,
    nodes_per_patch: int = 16,
) -> EigenResult:
    """Principal eigenvalue on [-R, R], zero at both ends, pattern at x + y."""
    if not R > 0:
        raise NonPositiveParameter(f"R must be positive: {R}")
    _require_eigen_resolution(nodes_per_patch)
    grid: Grid = build_window_grid(landscape, -R, R, nodes_per_patch, shift=y_shift)
    return _grid_result(grid, landscape, reaction, nodes_per_patch)


def dirichlet_ladder(
    landscape: Landscape,
    reaction: Reaction,
    multiples: tuple[float, ...] = (1, 2, 5, 10, 40),
    y_shift: float = 0.0,
    nodes_per_patch: int = 16,
) -> DirichletLadder:
    radii: list[float] = [m * landscape.period for m in multiples]
    values: list[float] = [
        lambda_dirichlet(landscape, reaction, R, y_shift, nodes_per_patch).lambda_
        for R in radii
    ]
    return DirichletLadder(y_shift=y_shift, radii=radii, values=values)


# Persistence thresholds


def sigma_sweep(
    landscape: Landscape,
    reaction: Reaction,
    sigmas: list[float],
) -> SigmaSweep:
    lambdas: list[float] = []
    alphas: list[float] = []
    for sigma in sigmas:
        variant: Landscape = build_landscape_from_sigma(
            landscape.l1, landscape.l2, landscape.d1, landscape.d2, sigma
        )
        alphas.append(variant.alpha)
        lambdas.append(lambda1_dispersion(variant, reaction).lambda_)
    return SigmaSweep(sigmas=list(sigmas), alphas=alphas, lambdas=lambdas)


def critical_patch_length(
    landscape: Landscape,
    reaction: Reaction,
    l2: Optional[float] = None,
) -> CriticalLengths:
    """Closed-form persistence thresholds of a source-sink landscape.

    l1c is the type-1 length with lambda1 = 0 (landscape.l1 is not used);
    L1c its limit as l2 grows. The critical sink rate is evaluated at
    landscape.l1 in the same large-l2 form.
    """
    f1, f2 = reaction.f1_prime0, reaction.f2_prime0
    if not f1 > 0 > f2:
        raise NotSourceSink(f"need f1'(0) > 0 > f2'(0), got {f1} and {f2}")
    l2 = landscape.l2 if l2 is None else l2
    d1, d2, sigma = landscape.d1, landscape.d2, landscape.sigma
    scale: float = 2 * math.sqrt(d1 / f1)
    ratio: float = sigma * math.sqrt(-d1 * f2 / (d2 * f1))
    l1c: float = scale * math.atan(ratio * math.tanh(math.sqrt(-f2 / d2) * l2 / 2))
    L1c: float = scale * math.atan(ratio)
    angle: float = math.sqrt(f1 / d1) * landscape.l1 / 2
    critical_rate: float = -math.inf
    if angle < math.pi / 2:
        critical_rate = -(d2 * f1 / (sigma**2 * d1)) * math.tan(angle) ** 2
    return CriticalLengths(l1c=l1c, L1c=L1c, f2_prime0_critical=critical_rate)
