"""Pairwise-likelihood inference for the planar Smith-innovation model.

The exact bivariate density of a space-time pair follows from
differentiating the joint CDF: with ``l = t2 - t1``, ``h1`` the Mahalanobis
length of ``x2 - l*tau - x1``, ``w1 = h1/2 + log(z2 / (a**l z1)) / h1`` and
``v1 = h1 - w1``,

``f = exp(-Phi(w1)/z1 - a**l Phi(v1)/z2 - (1-a**l)/z2) * (A*B + C)``

where ``A`` and ``B`` are the negated first partials of the pair exponent
and ``C`` its negated mixed partial.  Pairs aligned with the moving frame
(``h1 = 0``) switch to the complete-dependence branch, whose absolutely
continuous part is an independent Frechet product on ``z2 > a**l z1`` and
zero below.

The composite objective sums ``log f`` over the quadruple index set pairing
observation ``(t_i, x_k)`` with ``(t_j, x_l)`` for ``i < j`` and ``k < l``
(strict on both, so same-date and same-site pairs never enter), optionally
weighted.  Scheme 1 estimates the storm covariance from same-date pairs
first and then the temporal parameters; Scheme 2 maximizes the full
objective over all six parameters at once.  Optimization is a hand-rolled
Nelder-Mead in transformed space (log-Cholesky for the covariance, logit
for ``a``), derivative-free and bounded by an evaluation budget.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr

from .errors import DegeneratePairError, NumericalError, ValidationError
from .geometry import PlanarSite
from .spacetime import MarkovParams, SpaceTimeField
from .spatial import H_COMPLETE_DEP, SQRT_TWO_PI, SmithParams

__all__ = [
    "ThetaVector",
    "PairWeights",
    "FitReport",
    "FitOptions",
    "OptimizerReport",
    "ParameterTransform",
    "bivariate_density",
    "pairwise_loglik",
    "spatial_pairwise_loglik",
    "fit_scheme1",
    "fit_scheme2",
    "nelder_mead",
]

logger = logging.getLogger(__name__)

DENSITY_FLOOR = 1e-300
_LOG_FLOOR = math.log(DENSITY_FLOOR)
# Fixed reduction blocks keep the objective bit-stable regardless of how
# many worker threads drive replicate-level parallelism above us.
_SUM_BLOCK = 65536


@dataclass(frozen=True)
class ThetaVector:
    """Full parameter vector: storm covariance, coefficient, translation."""

    sigma11: float
    sigma12: float
    sigma22: float
    a: float
    tau1: float
    tau2: float

    def __post_init__(self) -> None:
        # Delegate range checks to the component records.
        self.smith
        self.markov

    @property
    def smith(self) -> SmithParams:
        return SmithParams(self.sigma11, self.sigma12, self.sigma22)

    @property
    def markov(self) -> MarkovParams:
        return MarkovParams(self.a, tau=(self.tau1, self.tau2))

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.sigma11, self.sigma12, self.sigma22, self.a, self.tau1, self.tau2]
        )

    @classmethod
    def from_array(cls, x: np.ndarray) -> "ThetaVector":
        return cls(*(float(v) for v in x))


@dataclass(frozen=True)
class PairWeights:
    """Temporal and spatial pair weights; ``None`` means all ones.

    ``temporal[i, j]`` weights the date pair ``(t_i, t_j)`` and
    ``spatial[k, l]`` the site pair ``(x_k, x_l)``; only the strict upper
    triangles are read.  A quadruple's weight is the product, and zero-weight
    quadruples are dropped from the objective.
    """

    temporal: np.ndarray | None = None
    spatial: np.ndarray | None = None

    def __post_init__(self) -> None:
        for name in ("temporal", "spatial"):
            w = getattr(self, name)
            if w is None:
                continue
            w = np.asarray(w, dtype=float)
            if w.ndim != 2 or w.shape[0] != w.shape[1]:
                raise ValidationError(f"{name} weights must be a square matrix")
            if not np.all(np.isfinite(w) & (w >= 0)):
                raise ValidationError(f"{name} weights must be finite and non-negative")
            object.__setattr__(self, name, w)

    @classmethod
    def cutoff(
        cls,
        dates: np.ndarray,
        coords: np.ndarray,
        max_time_lag: float | None = None,
        max_space_dist: float | None = None,
    ) -> "PairWeights":
        """Zero-one weights dropping pairs beyond the given radii."""
        temporal = None
        spatial = None
        if max_time_lag is not None:
            dates = np.asarray(dates, dtype=float)
            temporal = (
                np.abs(dates[None, :] - dates[:, None]) <= max_time_lag
            ).astype(float)
        if max_space_dist is not None:
            coords = np.asarray(coords, dtype=float)
            d = np.linalg.norm(coords[None, :, :] - coords[:, None, :], axis=-1)
            spatial = (d <= max_space_dist).astype(float)
        return cls(temporal, spatial)


@dataclass(frozen=True)
class FitReport:
    """Outcome of one pairwise-likelihood fit."""

    theta_hat: ThetaVector
    loglik: float
    n_pairs: int
    iterations: int
    converged: bool
    scheme: int


@dataclass(frozen=True)
class FitOptions:
    """Optimizer and weighting knobs shared by both schemes.

    ``xtol`` and ``ftol`` act in the transformed parameter space;
    ``max_evals`` is the total objective-evaluation budget per optimizer
    run including its single restart.  The optional cutoff radii build
    zero-one pair weights.
    """

    xtol: float = 1e-6
    ftol: float = 1e-8
    max_evals: int = 5000
    initial_step: float = 0.25
    max_time_lag: float | None = None
    max_space_dist: float | None = None


@dataclass(frozen=True)
class OptimizerReport:
    """Best point found by :func:`nelder_mead` with convergence facts."""

    x: np.ndarray
    fval: float
    n_evals: int
    iterations: int
    converged: bool


def _log_st_pair_density(
    z1: np.ndarray,
    z2: np.ndarray,
    alag: np.ndarray,
    h1: np.ndarray,
) -> tuple[np.ndarray, int]:
    """Vectorized log density of space-time pairs; returns (logf, n_floored).

    Everything is assembled in log space so a deeply negative exponent never
    drags the bracket term down with it; the floor applies afterwards.
    """
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    alag = np.asarray(alag, dtype=float)
    h1 = np.asarray(h1, dtype=float)

    degenerate = h1 < H_COMPLETE_DEP
    h = np.where(degenerate, 1.0, h1)

    w = 0.5 * h + np.log(z2 / (alag * z1)) / h
    v = h - w
    phi_w = np.exp(-0.5 * w * w) / SQRT_TWO_PI
    phi_v = np.exp(-0.5 * v * v) / SQRT_TWO_PI
    cdf_w = ndtr(w)
    cdf_v = ndtr(v)

    exponent = cdf_w / z1 + alag * cdf_v / z2 + (1.0 - alag) / z2
    a_term = cdf_w / z1**2 + phi_w / (h * z1**2) - alag * phi_v / (h * z1 * z2)
    b_term = (
        alag * cdf_v / z2**2
        + alag * phi_v / (h * z2**2)
        - phi_w / (h * z1 * z2)
        + (1.0 - alag) / z2**2
    )
    c_term = v * phi_w / (h**2 * z1**2 * z2) + alag * w * phi_v / (h**2 * z1 * z2**2)
    bracket = a_term * b_term + c_term
    with np.errstate(divide="ignore", invalid="ignore"):
        log_smooth = -exponent + np.log(np.maximum(bracket, 0.0))

    # Moving-frame pairs: X2 = max(a**l X1, (1-a**l) W) with W independent
    # Frechet, so the absolutely continuous part is a product on
    # z2 > a**l z1 and zero at or below the singular line.
    residual = 1.0 - alag
    with np.errstate(divide="ignore", invalid="ignore"):
        log_product = (
            -2.0 * np.log(z1)
            - 1.0 / z1
            + np.log(np.maximum(residual, 0.0))
            - 2.0 * np.log(z2)
            - residual / z2
        )
    log_deg = np.where(z2 > alag * z1, log_product, -np.inf)

    logf = np.where(degenerate, log_deg, log_smooth)
    if np.any(np.isnan(logf)):
        bad = int(np.argmax(np.isnan(np.atleast_1d(logf))))
        raise NumericalError(f"log density is NaN at pair index {bad}")
    floored = logf < _LOG_FLOOR
    n_floored = int(np.count_nonzero(floored))
    logf = np.where(floored, _LOG_FLOOR, logf)
    return logf, n_floored


def _mahalanobis_batch(dx: np.ndarray, params: SmithParams) -> np.ndarray:
    si = params.sigma_inv
    q = (
        si[0, 0] * dx[..., 0] ** 2
        + 2.0 * si[0, 1] * dx[..., 0] * dx[..., 1]
        + si[1, 1] * dx[..., 1] ** 2
    )
    return np.sqrt(np.maximum(q, 0.0))


def bivariate_density(
    z1: float,
    z2: float,
    t1: float,
    t2: float,
    x1: PlanarSite | np.ndarray,
    x2: PlanarSite | np.ndarray,
    theta: ThetaVector,
) -> float:
    """Exact density of ``(X(t1, x1), X(t2, x2))`` at ``(z1, z2)``.

    Times are canonicalized to ``t1 <= t2`` by swapping the points, which
    leaves the density unchanged.  A pair at identical date and site has no
    absolutely continuous law and raises :class:`DegeneratePairError`.
    """
    if not (z1 > 0 and z2 > 0):
        raise ValidationError(f"z1, z2 must be positive, got {z1!r}, {z2!r}")
    c1 = x1.as_array() if isinstance(x1, PlanarSite) else np.asarray(x1, dtype=float)
    c2 = x2.as_array() if isinstance(x2, PlanarSite) else np.asarray(x2, dtype=float)
    if t1 > t2:
        t1, t2, c1, c2, z1, z2 = t2, t1, c2, c1, z2, z1
    lag = t2 - t1
    tau = theta.markov.tau_array()
    h1 = float(_mahalanobis_batch(c2 - lag * tau - c1, theta.smith))
    if lag == 0 and h1 < H_COMPLETE_DEP:
        raise DegeneratePairError(
            f"pair at date {t1} with sites {c1.tolist()} and {c2.tolist()} "
            "coincides; no absolutely continuous density exists"
        )
    alag = theta.a ** lag
    logf, _ = _log_st_pair_density(
        np.asarray(z1), np.asarray(z2), np.asarray(alag), np.asarray(h1)
    )
    return float(np.exp(logf))


@dataclass(frozen=True)
class _PreparedPairs:
    """Static per-dataset pair arrays reused across objective evaluations."""

    z1: np.ndarray
    z2: np.ndarray
    lag: np.ndarray
    dx: np.ndarray
    weight: np.ndarray

    @property
    def n_terms(self) -> int:
        return int(self.z1.size)


def _upper_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    i, j = np.triu_indices(n, k=1)
    return i, j


def _prepare_st_pairs(data: SpaceTimeField, weights: PairWeights | None) -> _PreparedPairs:
    n, m = data.n_dates, data.n_sites
    if n < 2 or m < 2:
        raise ValidationError(
            f"need at least 2 dates and 2 sites, got N={n}, M={m}"
        )
    dates = np.asarray(data.dates, dtype=float)
    coords = np.asarray(data.sites.coords)
    values = np.asarray(data.values)

    if weights is not None:
        if weights.temporal is not None and weights.temporal.shape[0] != n:
            raise ValidationError(
                f"temporal weights are {weights.temporal.shape[0]}-square for {n} dates"
            )
        if weights.spatial is not None and weights.spatial.shape[0] != m:
            raise ValidationError(
                f"spatial weights are {weights.spatial.shape[0]}-square for {m} sites"
            )
    ti, tj = _upper_pairs(n)
    sk, sl = _upper_pairs(m)
    wt = np.ones(ti.size) if weights is None or weights.temporal is None else weights.temporal[ti, tj]
    ws = np.ones(sk.size) if weights is None or weights.spatial is None else weights.spatial[sk, sl]

    # Quadruples in canonical order: date pair major, site pair minor.
    flat = values.ravel()
    z1 = flat[(ti[:, None] * m + sk[None, :]).ravel()]
    z2 = flat[(tj[:, None] * m + sl[None, :]).ravel()]
    lag = np.repeat(dates[tj] - dates[ti], sk.size)
    dx = np.tile(coords[sl] - coords[sk], (ti.size, 1))
    weight = (wt[:, None] * ws[None, :]).ravel()

    keep = weight > 0
    if not np.any(keep):
        raise ValidationError("all pair weights are zero; nothing to sum")
    if not np.all(keep):
        z1, z2, lag, dx, weight = z1[keep], z2[keep], lag[keep], dx[keep], weight[keep]
    return _PreparedPairs(z1, z2, lag, dx, weight)


def _blocked_sum(terms: np.ndarray) -> float:
    # Fixed-size blocks, pairwise within and across: bit-stable by layout.
    if terms.size <= _SUM_BLOCK:
        return float(np.sum(terms))
    edges = np.arange(0, terms.size, _SUM_BLOCK)
    return float(np.sum(np.add.reduceat(terms, edges)))


def _eval_st_loglik(prepared: _PreparedPairs, theta: ThetaVector) -> float:
    alag = theta.a ** prepared.lag
    h1 = _mahalanobis_batch(
        prepared.dx - prepared.lag[:, None] * theta.markov.tau_array(), theta.smith
    )
    logf, n_floored = _log_st_pair_density(prepared.z1, prepared.z2, alag, h1)
    if n_floored:
        logger.debug("pairwise objective floored %d of %d terms", n_floored, logf.size)
    return _blocked_sum(logf * prepared.weight)


def pairwise_loglik(
    data: SpaceTimeField,
    theta: ThetaVector,
    weights: PairWeights | None = None,
) -> float:
    """Space-time pairwise log likelihood over the strict quadruple set.

    Exactly ``C(N,2) * C(M,2)`` terms contribute under default weights: the
    observation at ``(t_i, x_k)`` pairs with the one at ``(t_j, x_l)`` for
    ``i < j`` and ``k < l``.  Deterministic blocked summation makes the
    value bit-stable across thread counts.
    """
    return _eval_st_loglik(_prepare_st_pairs(data, weights), theta)


@dataclass(frozen=True)
class _PreparedSpatialPairs:
    z1: np.ndarray
    z2: np.ndarray
    dx: np.ndarray
    weight: np.ndarray


def _prepare_spatial_pairs(
    data: SpaceTimeField, weights: PairWeights | None
) -> _PreparedSpatialPairs:
    n, m = data.n_dates, data.n_sites
    if m < 2:
        raise ValidationError(f"need at least 2 sites, got M={m}")
    if weights is not None and weights.spatial is not None and weights.spatial.shape[0] != m:
        raise ValidationError(
            f"spatial weights are {weights.spatial.shape[0]}-square for {m} sites"
        )
    coords = np.asarray(data.sites.coords)
    values = np.asarray(data.values)
    sk, sl = _upper_pairs(m)
    ws = np.ones(sk.size) if weights is None or weights.spatial is None else weights.spatial[sk, sl]
    z1 = values[:, sk].ravel()
    z2 = values[:, sl].ravel()
    dx = np.tile(coords[sl] - coords[sk], (n, 1))
    weight = np.tile(ws, n)
    keep = weight > 0
    if not np.any(keep):
        raise ValidationError("all pair weights are zero; nothing to sum")
    if not np.all(keep):
        z1, z2, dx, weight = z1[keep], z2[keep], dx[keep], weight[keep]
    return _PreparedSpatialPairs(z1, z2, dx, weight)


def _eval_spatial_loglik(prepared: _PreparedSpatialPairs, sigma: SmithParams) -> float:
    h = _mahalanobis_batch(prepared.dx, sigma)
    if np.any(h < H_COMPLETE_DEP):
        bad = int(np.argmax(h < H_COMPLETE_DEP))
        raise DegeneratePairError(
            f"same-date pair {bad} has coincident sites under this covariance; "
            "remove duplicated sites before fitting"
        )
    ones = np.ones_like(h)
    logf, n_floored = _log_st_pair_density(prepared.z1, prepared.z2, ones, h)
    if n_floored:
        logger.debug("spatial objective floored %d of %d terms", n_floored, logf.size)
    return _blocked_sum(logf * prepared.weight)


def spatial_pairwise_loglik(
    data: SpaceTimeField,
    sigma: SmithParams,
    weights: PairWeights | None = None,
) -> float:
    """Same-date pairwise log likelihood, a function of the covariance only.

    Each of the ``N`` dates contributes its ``C(M,2)`` site pairs through
    the purely spatial pair density; temporal parameters never enter, which
    is what lets the covariance be estimated separately.
    """
    return _eval_spatial_loglik(_prepare_spatial_pairs(data, weights), sigma)


@dataclass(frozen=True)
class ParameterTransform:
    """Bijection between a constrained parameter vector and all of R^n."""

    to_unconstrained: Callable[[np.ndarray], np.ndarray]
    to_constrained: Callable[[np.ndarray], np.ndarray]


def _identity_transform() -> ParameterTransform:
    return ParameterTransform(lambda x: np.asarray(x, dtype=float).copy(),
                              lambda u: np.asarray(u, dtype=float).copy())


def _sigma_to_chol(sigma: np.ndarray) -> np.ndarray:
    s11, s12, s22 = sigma
    l11 = math.sqrt(s11)
    l21 = s12 / l11
    l22_sq = s22 - l21 * l21
    if l22_sq <= 0:
        raise ValidationError("covariance entries are not positive definite")
    return np.array([math.log(l11), math.log(math.sqrt(l22_sq)), l21])


def _chol_to_sigma(u: np.ndarray) -> np.ndarray:
    l11 = math.exp(u[0])
    l22 = math.exp(u[1])
    l21 = u[2]
    return np.array([l11 * l11, l11 * l21, l21 * l21 + l22 * l22])


def _logit(a: float) -> float:
    return math.log(a / (1.0 - a))


def _expit(u: float) -> float:
    if u >= 0:
        out = 1.0 / (1.0 + math.exp(-u))
    else:
        e = math.exp(u)
        out = e / (1.0 + e)
    # Saturated floats would escape the open interval and fail validation.
    return min(max(out, 1e-12), 1.0 - 1e-12)


def _sigma_transform() -> ParameterTransform:
    return ParameterTransform(
        lambda x: _sigma_to_chol(np.asarray(x, dtype=float)),
        lambda u: _chol_to_sigma(np.asarray(u, dtype=float)),
    )


def _temporal_transform() -> ParameterTransform:
    def fwd(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.array([_logit(float(x[0])), x[1], x[2]])

    def inv(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.array([_expit(float(u[0])), u[1], u[2]])

    return ParameterTransform(fwd, inv)


def _theta_transform() -> ParameterTransform:
    sig = _sigma_transform()
    tem = _temporal_transform()

    def fwd(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.concatenate([sig.to_unconstrained(x[:3]), tem.to_unconstrained(x[3:])])

    def inv(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return np.concatenate([sig.to_constrained(u[:3]), tem.to_constrained(u[3:])])

    return ParameterTransform(fwd, inv)


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    init: np.ndarray,
    transforms: ParameterTransform | None = None,
    options: FitOptions | None = None,
) -> OptimizerReport:
    """Minimize a black-box objective by the Nelder-Mead simplex method.

    The search runs in the unconstrained space defined by ``transforms``
    (identity when omitted), so constrained parameters stay feasible at
    every evaluation.  Convergence requires both a simplex diameter below
    ``xtol`` and a function spread below ``ftol``; after the first
    convergence the simplex is rebuilt once around the best vertex and the
    search continues, which guards against premature collapse.  Exceeding
    ``max_evals`` returns the best iterate with ``converged=False``.
    """
    opts = options or FitOptions()
    tr = transforms or _identity_transform()
    u0 = np.asarray(tr.to_unconstrained(np.asarray(init, dtype=float)), dtype=float)
    dim = u0.size

    evals = 0
    iterations = 0

    def g(u: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        value = float(objective(tr.to_constrained(u)))
        if math.isnan(value):
            # A NaN objective would poison simplex ordering; treat as +inf.
            return math.inf
        return value

    f0 = g(u0)
    if math.isinf(f0):
        raise ValidationError("objective is not finite at the initial point")

    alpha, gamma, rho, shrink = 1.0, 2.0, 0.5, 0.5

    def build_simplex(center: np.ndarray, f_center: float, step: float):
        pts = [center]
        fs = [f_center]
        for d in range(dim):
            p = center.copy()
            p[d] += step if p[d] == 0 else step * max(1.0, abs(p[d]))
            pts.append(p)
            fs.append(g(p))
        return np.array(pts), np.array(fs)

    def run(simplex: np.ndarray, fvals: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
        nonlocal iterations
        while evals < opts.max_evals:
            order = np.argsort(fvals, kind="stable")
            simplex, fvals = simplex[order], fvals[order]
            diameter = float(np.max(np.linalg.norm(simplex[1:] - simplex[0], axis=1)))
            spread = float(fvals[-1] - fvals[0])
            if diameter < opts.xtol and spread < opts.ftol:
                return simplex, fvals, True
            iterations += 1
            centroid = simplex[:-1].mean(axis=0)
            reflected = centroid + alpha * (centroid - simplex[-1])
            f_r = g(reflected)
            if f_r < fvals[0]:
                expanded = centroid + gamma * (reflected - centroid)
                f_e = g(expanded)
                if f_e < f_r:
                    simplex[-1], fvals[-1] = expanded, f_e
                else:
                    simplex[-1], fvals[-1] = reflected, f_r
            elif f_r < fvals[-2]:
                simplex[-1], fvals[-1] = reflected, f_r
            else:
                if f_r < fvals[-1]:
                    contracted = centroid + rho * (reflected - centroid)
                else:
                    contracted = centroid + rho * (simplex[-1] - centroid)
                f_c = g(contracted)
                if f_c < min(f_r, fvals[-1]):
                    simplex[-1], fvals[-1] = contracted, f_c
                else:
                    for idx in range(1, dim + 1):
                        simplex[idx] = simplex[0] + shrink * (simplex[idx] - simplex[0])
                        fvals[idx] = g(simplex[idx])
        return simplex, fvals, False

    simplex, fvals = build_simplex(u0, f0, opts.initial_step)
    simplex, fvals, ok = run(simplex, fvals)
    best_idx = int(np.argmin(fvals))
    best_u, best_f = simplex[best_idx].copy(), float(fvals[best_idx])
    converged = ok
    if evals < opts.max_evals:
        # One restart from the best vertex with a tighter simplex.
        simplex, fvals = build_simplex(best_u, best_f, opts.initial_step * 0.1)
        simplex, fvals, ok2 = run(simplex, fvals)
        idx = int(np.argmin(fvals))
        if float(fvals[idx]) <= best_f:
            best_u, best_f = simplex[idx].copy(), float(fvals[idx])
        converged = ok2
    x_best = np.asarray(tr.to_constrained(best_u), dtype=float)
    return OptimizerReport(x_best, best_f, evals, iterations, converged)


def _build_weights(data: SpaceTimeField, opts: FitOptions) -> PairWeights | None:
    if opts.max_time_lag is None and opts.max_space_dist is None:
        return None
    return PairWeights.cutoff(
        np.asarray(data.dates),
        np.asarray(data.sites.coords),
        opts.max_time_lag,
        opts.max_space_dist,
    )


_SCAN_A = (0.35, 0.6, 0.8)
_SCAN_RADIUS = 6.0
_SCAN_MESH = 9
_SCAN_STARTS = 3
_BASIN_SEP = 2.0


def _temporal_start_candidates(
    prepared: _PreparedPairs,
    sigma: SmithParams,
    init_a: float,
    init_tau: tuple[float, float],
) -> list[tuple[float, float, float]]:
    """Coarse objective scan proposing starting points for ``(a, tau)``.

    The simplex search has a trap: once ``a`` drifts small, lagged pairs
    look independent and the objective goes flat in ``tau``, so a neutral
    start can converge far from the maximum.  The scan evaluates the
    objective on a fixed lattice of translations (in the whitened space of
    the storm covariance, radius six Mahalanobis units: a one-step
    displacement beyond that leaves lag-1 pairs essentially independent, so
    the lattice spans the whole identifiable range) crossed with a few
    coefficient values.  The peak can be narrower than the lattice spacing,
    so instead of trusting the single best cell the top few candidates from
    mutually distant basins are all returned for refinement; the supplied
    init always competes, so a good explicit start is never discarded.
    """
    chol = np.linalg.cholesky(np.asarray(sigma.sigma))
    chol_inv = np.linalg.inv(chol)
    ticks = np.linspace(-_SCAN_RADIUS, _SCAN_RADIUS, _SCAN_MESH)
    uu, vv = np.meshgrid(ticks, ticks)
    lattice = np.column_stack([uu.ravel(), vv.ravel()]) @ chol.T

    def value(a: float, t1: float, t2: float) -> float:
        theta = ThetaVector(
            sigma.sigma11, sigma.sigma12, sigma.sigma22, a, t1, t2
        )
        return _eval_st_loglik(prepared, theta)

    init_point = (float(init_a), float(init_tau[0]), float(init_tau[1]))
    scored = [(value(*init_point), init_point)]
    for a in _SCAN_A:
        for t1, t2 in lattice:
            point = (a, float(t1), float(t2))
            scored.append((value(*point), point))
    scored.sort(key=lambda s: -s[0])

    starts: list[tuple[float, float, float]] = []
    for _, point in scored:
        tau = np.array(point[1:])
        if any(
            np.linalg.norm(chol_inv @ (tau - np.array(kept[1:]))) < _BASIN_SEP
            for kept in starts
        ):
            continue
        starts.append(point)
        if len(starts) == _SCAN_STARTS:
            break
    return starts


def fit_scheme1(
    data: SpaceTimeField,
    init: ThetaVector,
    options: FitOptions | None = None,
    weights: PairWeights | None = None,
) -> FitReport:
    """Two-stage fit: covariance from same-date pairs, then ``(a, tau)``.

    Stage one maximizes the same-date objective over the three covariance
    entries (log-Cholesky parametrization); stage two holds the covariance
    fixed and maximizes the full space-time objective over the coefficient
    (logit) and translation (unconstrained).  The reported log likelihood
    is the space-time objective at the combined estimate.
    """
    opts = options or FitOptions()
    w = weights if weights is not None else _build_weights(data, opts)
    spatial_prep = _prepare_spatial_pairs(data, w)
    st_prep = _prepare_st_pairs(data, w)

    def neg_spatial(x: np.ndarray) -> float:
        return -_eval_spatial_loglik(spatial_prep, SmithParams(*x))

    stage1 = nelder_mead(
        neg_spatial,
        np.array([init.sigma11, init.sigma12, init.sigma22]),
        _sigma_transform(),
        opts,
    )
    sigma_hat = SmithParams(*stage1.x)

    def neg_temporal(x: np.ndarray) -> float:
        theta = ThetaVector(
            sigma_hat.sigma11, sigma_hat.sigma12, sigma_hat.sigma22,
            float(x[0]), float(x[1]), float(x[2]),
        )
        return -_eval_st_loglik(st_prep, theta)

    starts = _temporal_start_candidates(
        st_prep, sigma_hat, init.a, (init.tau1, init.tau2)
    )
    runs = [
        nelder_mead(neg_temporal, np.array(s), _temporal_transform(), opts)
        for s in starts
    ]
    stage2 = min(runs, key=lambda r: r.fval)
    theta_hat = ThetaVector(
        sigma_hat.sigma11, sigma_hat.sigma12, sigma_hat.sigma22,
        float(stage2.x[0]), float(stage2.x[1]), float(stage2.x[2]),
    )
    return FitReport(
        theta_hat=theta_hat,
        loglik=-stage2.fval,
        n_pairs=st_prep.n_terms,
        iterations=stage1.n_evals + sum(r.n_evals for r in runs),
        converged=stage1.converged and stage2.converged,
        scheme=1,
    )


def fit_scheme2(
    data: SpaceTimeField,
    init: ThetaVector,
    options: FitOptions | None = None,
    weights: PairWeights | None = None,
) -> FitReport:
    """Joint fit: one six-parameter maximization of the space-time objective."""
    opts = options or FitOptions()
    w = weights if weights is not None else _build_weights(data, opts)
    st_prep = _prepare_st_pairs(data, w)

    def neg_full(x: np.ndarray) -> float:
        return -_eval_st_loglik(st_prep, ThetaVector.from_array(x))

    starts = _temporal_start_candidates(
        st_prep, init.smith, init.a, (init.tau1, init.tau2)
    )
    runs = [
        nelder_mead(
            neg_full,
            np.array([init.sigma11, init.sigma12, init.sigma22, a0, t1, t2]),
            _theta_transform(),
            opts,
        )
        for a0, t1, t2 in starts
    ]
    report = min(runs, key=lambda r: r.fval)
    return FitReport(
        theta_hat=ThetaVector.from_array(report.x),
        loglik=-report.fval,
        n_pairs=st_prep.n_terms,
        iterations=sum(r.n_evals for r in runs),
        converged=report.converged,
        scheme=2,
    )
