"""Spatial innovation fields and the Smith exponent machinery.

Three max-stable innovation models are simulated at finite site sets:

* Smith storms on the plane: deterministic Gaussian-density bumps
  ``U_i h_Sigma(x - C_i)`` with centers from a homogeneous Poisson process;
* Schlather fields on the plane: rescaled stationary Gaussian processes
  ``sqrt(2*pi) * eps(x)`` with powered-exponential correlation (approximate
  by nature, used for figures, never for likelihood work);
* von Mises-Fisher storms on the unit sphere.

Every simulator consumes a :class:`~maxstorm.point_process.SeededStream` and
is a pure function of it; margins are standard Frechet on the exact paths
(Smith, sphere) and approximately so for Schlather.

The closed-form bivariate Smith exponent and its derivatives, together with
an adaptive-quadrature evaluation of the M-variate exponent, live here as
well; inference composes them into space-time quantities.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.linalg import solve_triangular
from scipy.special import ndtr

from .errors import CapabilityError, NumericalError, ResourceError, ValidationError
from .geometry import PlanarSite, SphereSite, SiteSet
from .point_process import STORM_CAP, SeededStream

__all__ = [
    "SmithParams",
    "SchlatherParams",
    "VmfParams",
    "SpatialField",
    "BivariateExponent",
    "gaussian_density_2d",
    "simulate_smith",
    "simulate_schlather",
    "correlation_powered_exponential",
    "vmf_density",
    "simulate_vmf_field",
    "smith_exponent_bivariate",
    "smith_exponent_numeric",
    "mahalanobis_distance",
    "SmithExponentOracle",
]

logger = logging.getLogger(__name__)

SQRT_TWO_PI = math.sqrt(2.0 * math.pi)
INV_TWO_PI = 1.0 / (2.0 * math.pi)
# Fraction of a site's Frechet scale allowed to fall outside the storm window.
EPS_TAIL = 1e-6
# Below this Mahalanobis distance the bivariate exponent switches to its
# complete-dependence limit; the generic formula hits 0/0.
H_COMPLETE_DEP = 1e-8
# Dense-site cap for the Schlather correlation Cholesky.
SCHLATHER_MAX_SITES = 4000
_KAPPA_SERIES_CUTOFF = 1e-4


@dataclass(frozen=True)
class SmithParams:
    """Covariance entries of the Gaussian storm shape."""

    sigma11: float
    sigma12: float
    sigma22: float

    def __post_init__(self) -> None:
        for name, v in (
            ("sigma11", self.sigma11),
            ("sigma12", self.sigma12),
            ("sigma22", self.sigma22),
        ):
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v!r}")
        det = self.sigma11 * self.sigma22 - self.sigma12 ** 2
        if not (self.sigma11 > 0 and self.sigma22 > 0 and det > 0):
            raise ValidationError(
                "storm covariance must be positive definite, got "
                f"[[{self.sigma11}, {self.sigma12}], [{self.sigma12}, {self.sigma22}]]"
            )

    @property
    def sigma(self) -> np.ndarray:
        return np.array([[self.sigma11, self.sigma12], [self.sigma12, self.sigma22]])

    @property
    def det(self) -> float:
        return self.sigma11 * self.sigma22 - self.sigma12 ** 2

    @property
    def sigma_inv(self) -> np.ndarray:
        d = self.det
        return np.array(
            [[self.sigma22 / d, -self.sigma12 / d], [-self.sigma12 / d, self.sigma11 / d]]
        )

    @property
    def density_bound(self) -> float:
        """Supremum of the storm shape, attained at the center."""
        return INV_TWO_PI / math.sqrt(self.det)

    @property
    def largest_eigenvalue(self) -> float:
        tr, det = self.sigma11 + self.sigma22, self.det
        return 0.5 * (tr + math.sqrt(max(tr * tr - 4.0 * det, 0.0)))

    def buffer_radius(self, eps_tail: float = EPS_TAIL) -> float:
        """Window buffer leaving at most ``eps_tail`` of any site's scale outside.

        Chernoff bound on the Gaussian tail along the worst axis, with a
        factor 4 covering both axes and both signs.
        """
        return math.sqrt(2.0 * self.largest_eigenvalue * math.log(4.0 / eps_tail))


@dataclass(frozen=True)
class SchlatherParams:
    """Powered-exponential correlation: range ``c1``, smoothness ``c2``."""

    c1: float
    c2: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.c1) and self.c1 > 0):
            raise ValidationError(f"c1 must be positive, got {self.c1!r}")
        if not (math.isfinite(self.c2) and 0 < self.c2 < 2):
            raise ValidationError(f"c2 must lie in (0, 2), got {self.c2!r}")


@dataclass(frozen=True)
class VmfParams:
    """Concentration of the spherical storm shape; 0 means uniform storms."""

    kappa: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kappa) and self.kappa >= 0):
            raise ValidationError(f"kappa must be non-negative, got {self.kappa!r}")


@dataclass(frozen=True)
class SpatialField:
    """One simulated innovation field: a positive value per site."""

    sites: SiteSet
    values: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.sites),):
            raise ValidationError(
                f"values shape {values.shape} does not match {len(self.sites)} sites"
            )
        if not np.all(np.isfinite(values) & (values > 0)):
            raise ValidationError("field values must be finite and strictly positive")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def _as_planar_coords(x: PlanarSite | np.ndarray) -> np.ndarray:
    if isinstance(x, PlanarSite):
        return x.as_array()
    return np.asarray(x, dtype=float)


def gaussian_density_2d(x: PlanarSite | np.ndarray, params: SmithParams) -> float | np.ndarray:
    """Centered bivariate Gaussian density, vectorized over ``(..., 2)`` input."""
    xs = _as_planar_coords(x)
    si = params.sigma_inv
    q = (
        si[0, 0] * xs[..., 0] ** 2
        + 2.0 * si[0, 1] * xs[..., 0] * xs[..., 1]
        + si[1, 1] * xs[..., 1] ** 2
    )
    out = np.exp(-0.5 * q) * (INV_TWO_PI / math.sqrt(params.det))
    return float(out) if out.ndim == 0 else out


def mahalanobis_distance(dx: np.ndarray, params: SmithParams) -> float | np.ndarray:
    """``sqrt(dx' Sigma^{-1} dx)``, vectorized over ``(..., 2)`` input."""
    dx = np.asarray(dx, dtype=float)
    si = params.sigma_inv
    q = (
        si[0, 0] * dx[..., 0] ** 2
        + 2.0 * si[0, 1] * dx[..., 0] * dx[..., 1]
        + si[1, 1] * dx[..., 1] ** 2
    )
    out = np.sqrt(np.maximum(q, 0.0))
    return float(out) if out.ndim == 0 else out


def _smith_values(
    coords: np.ndarray,
    params: SmithParams,
    rng: np.random.Generator,
    eps_tail: float,
    cap: int,
) -> tuple[np.ndarray, int]:
    """Exact Smith sample at ``coords`` via windowed storm generation.

    Storms are drawn in growing blocks; the decreasing intensities make the
    stopping rule sound: once ``U_i`` times the shape supremum falls below
    the running minimum over sites, no later storm can change any value.
    Storms past the stopping index inside the final block are legitimate
    points of the process, so applying them is harmless.
    """
    r_buf = params.buffer_radius(eps_tail)
    lo = coords.min(axis=0) - r_buf
    hi = coords.max(axis=0) + r_buf
    area = float(np.prod(hi - lo))
    h_max = params.density_bound
    si = params.sigma_inv
    norm = INV_TWO_PI / math.sqrt(params.det)

    values = np.zeros(coords.shape[0])
    p_last = 0.0
    n_storms = 0
    block = 64
    while True:
        p = p_last + np.cumsum(rng.exponential(size=block))
        p_last = float(p[-1])
        u = area / p
        centers = rng.uniform(lo, hi, size=(block, 2))
        d = coords[None, :, :] - centers[:, None, :]
        q = (
            si[0, 0] * d[..., 0] ** 2
            + 2.0 * si[0, 1] * d[..., 0] * d[..., 1]
            + si[1, 1] * d[..., 1] ** 2
        )
        contrib = u[:, None] * (norm * np.exp(-0.5 * q))
        np.maximum(values, contrib.max(axis=0), out=values)
        n_storms += block
        if u[-1] * h_max < values.min():
            break
        if n_storms >= cap:
            raise ResourceError(
                f"storm count exceeded cap {cap} before the stopping rule fired "
                f"(window area {area:.3g})"
            )
        block = min(block * 2, 65536)
    return values, n_storms


def simulate_smith(
    sites: SiteSet,
    params: SmithParams,
    stream: SeededStream,
    *,
    eps_tail: float = EPS_TAIL,
    cap: int = STORM_CAP,
) -> SpatialField:
    """Exact Smith-model sample restricted to a planar site set.

    Parameters
    ----------
    sites : SiteSet
        Planar sites, at least one.
    params : SmithParams
        Storm-shape covariance.
    stream : SeededStream
        Randomness source; identical streams give identical fields.
    eps_tail : float
        Scale mass allowed to leak past the storm window per site.
    cap : int
        Hard limit on generated storms.

    Returns
    -------
    SpatialField
        Field with standard Frechet margins (up to ``eps_tail``); the
        ``meta`` mapping reports the storm count consumed.
    """
    if sites.kind != "planar":
        raise ValidationError("simulate_smith requires planar sites")
    values, n_storms = _smith_values(
        np.asarray(sites.coords), params, stream.generator(), eps_tail, cap
    )
    return SpatialField(sites, values, {"n_storms": n_storms})


def correlation_powered_exponential(h: float | np.ndarray, params: SchlatherParams) -> float | np.ndarray:
    """Powered-exponential correlation ``exp(-(h / c1) ** c2)``."""
    h = np.asarray(h, dtype=float)
    if np.any(h < 0):
        raise ValidationError("distance must be non-negative")
    out = np.exp(-((h / params.c1) ** params.c2))
    return float(out) if out.ndim == 0 else out


_envelope_warned: set[tuple[int, float]] = set()


def _warn_schlather_envelope(n_sites: int, b_max: float) -> None:
    # One warning per (site count, envelope) keeps replicate loops readable.
    p_exceed = float(n_sites) * float(ndtr(-b_max))
    key = (n_sites, b_max)
    level = logging.WARNING if key not in _envelope_warned else logging.DEBUG
    _envelope_warned.add(key)
    logger.log(
        level,
        "Schlather stopping envelope b_max=%.3g on %d sites: per-storm "
        "P(sup eps > b_max) <= %.3g; margins are approximate",
        b_max,
        n_sites,
        p_exceed,
    )


def _cholesky_with_jitter(corr: np.ndarray, coords: np.ndarray) -> np.ndarray:
    for jitter in (0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6):
        try:
            m = corr if jitter == 0.0 else corr + jitter * np.eye(corr.shape[0])
            return np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            continue
    off = corr - np.eye(corr.shape[0])
    i, j = np.unravel_index(np.argmax(np.abs(off)), off.shape)
    raise NumericalError(
        "correlation matrix is not positive definite even with jitter 1e-6; "
        f"most correlated site pair: {coords[i].tolist()} and {coords[j].tolist()} "
        f"(correlation {corr[i, j]:.6f})"
    )


def simulate_schlather(
    sites: SiteSet,
    params: SchlatherParams,
    stream: SeededStream,
    n_storms: int = 1000,
    *,
    b_max: float = 4.0,
) -> SpatialField:
    """Approximate Schlather-model sample on a planar site set.

    Spectral functions are ``sqrt(2*pi) * eps`` with ``eps`` a standard
    Gaussian process; they are unbounded, so the stopping rule uses the
    envelope ``b_max`` and the storm count is capped by ``n_storms``.
    Duplicate sites are collapsed before the Cholesky factorization and
    receive identical values.
    """
    if sites.kind != "planar":
        raise ValidationError("simulate_schlather requires planar sites")
    if n_storms < 1:
        raise ValidationError(f"n_storms must be >= 1, got {n_storms}")
    coords = np.asarray(sites.coords)
    unique, inverse = np.unique(coords, axis=0, return_inverse=True)
    k = unique.shape[0]
    if k > SCHLATHER_MAX_SITES:
        raise ResourceError(
            f"{k} distinct sites exceed the dense-Cholesky cap "
            f"{SCHLATHER_MAX_SITES}; thin the site set or use the Smith model"
        )
    dist = np.linalg.norm(unique[:, None, :] - unique[None, :, :], axis=-1)
    corr = np.exp(-((dist / params.c1) ** params.c2))
    np.fill_diagonal(corr, 1.0)
    chol = _cholesky_with_jitter(corr, unique)
    _warn_schlather_envelope(k, b_max)

    rng = stream.generator()
    values = np.zeros(k)
    envelope = SQRT_TWO_PI * b_max
    p_last = 0.0
    used = 0
    block = 64
    stopped_early = False
    while used < n_storms:
        b = min(block, n_storms - used)
        p = p_last + np.cumsum(rng.exponential(size=b))
        p_last = float(p[-1])
        u = 1.0 / p
        eps = chol @ rng.standard_normal(size=(k, b))
        contrib = u[None, :] * (SQRT_TWO_PI * np.clip(eps, 0.0, None))
        np.maximum(values, contrib.max(axis=1), out=values)
        used += b
        if u[-1] * envelope < values.min():
            stopped_early = True
            break
        block = min(block * 2, 8192)
    # A site every storm missed (all eps <= 0 there) would stay at zero;
    # give it the largest value consistent with the stopping rule instead of
    # emitting an invalid non-positive field.
    floor = (1.0 / p_last) * 1e-12
    values = np.maximum(values, floor)
    meta = {"n_storms": used, "stopped_early": stopped_early}
    return SpatialField(sites, values[inverse], meta)


def _kappa_over_sinh(kappa: float) -> float:
    # Series below the cutoff avoids the 0/0 cancellation of kappa/sinh(kappa).
    if kappa < _KAPPA_SERIES_CUTOFF:
        k2 = kappa * kappa
        return 1.0 - k2 / 6.0 + 7.0 * k2 * k2 / 360.0
    return 2.0 * kappa * math.exp(-kappa) / (-math.expm1(-2.0 * kappa))


def vmf_density(x: SphereSite | np.ndarray, mu: SphereSite | np.ndarray, params: VmfParams) -> float | np.ndarray:
    """Von Mises-Fisher density on the unit sphere, vectorized over ``x``.

    Evaluated as ``kappa * exp(kappa * (mu'x - 1)) / (2*pi*(1 - e^{-2*kappa}))``
    so large concentrations never overflow; small concentrations go through
    a series for ``kappa / sinh(kappa)`` and ``kappa = 0`` returns the
    uniform density ``1 / (4*pi)`` exactly.
    """
    xv = x.as_array() if isinstance(x, SphereSite) else np.asarray(x, dtype=float)
    mv = mu.as_array() if isinstance(mu, SphereSite) else np.asarray(mu, dtype=float)
    kappa = params.kappa
    dot = xv @ mv if xv.ndim == 1 else xv @ mv
    if kappa < _KAPPA_SERIES_CUTOFF:
        out = _kappa_over_sinh(kappa) * np.exp(kappa * np.asarray(dot)) / (4.0 * math.pi)
    else:
        denom = 2.0 * math.pi * (-math.expm1(-2.0 * kappa))
        out = kappa * np.exp(kappa * (np.asarray(dot) - 1.0)) / denom
    out = np.asarray(out)
    return float(out) if out.ndim == 0 else out


def vmf_density_bound(params: VmfParams) -> float:
    """Supremum of the density, attained at the mean direction."""
    kappa = params.kappa
    if kappa < _KAPPA_SERIES_CUTOFF:
        return _kappa_over_sinh(kappa) * math.exp(kappa) / (4.0 * math.pi)
    return kappa / (2.0 * math.pi * (-math.expm1(-2.0 * kappa)))


def _vmf_values(
    coords: np.ndarray,
    params: VmfParams,
    rng: np.random.Generator,
    cap: int,
) -> tuple[np.ndarray, int]:
    """Exact spherical storm sample; centers uniform, total rate 4*pi."""
    kappa = params.kappa
    f_max = vmf_density_bound(params)
    area = 4.0 * math.pi
    if kappa < _KAPPA_SERIES_CUTOFF:
        series = _kappa_over_sinh(kappa) / (4.0 * math.pi)
    values = np.zeros(coords.shape[0])
    p_last = 0.0
    n_storms = 0
    block = 64
    while True:
        p = p_last + np.cumsum(rng.exponential(size=block))
        p_last = float(p[-1])
        u = area / p
        centers = rng.standard_normal(size=(block, 3))
        centers /= np.linalg.norm(centers, axis=1)[:, None]
        dot = centers @ coords.T
        if kappa < _KAPPA_SERIES_CUTOFF:
            dens = series * np.exp(kappa * dot)
        else:
            dens = kappa * np.exp(kappa * (dot - 1.0)) / (2.0 * math.pi * (-math.expm1(-2.0 * kappa)))
        contrib = u[:, None] * dens
        np.maximum(values, contrib.max(axis=0), out=values)
        n_storms += block
        if u[-1] * f_max < values.min():
            break
        if n_storms >= cap:
            raise ResourceError(f"storm count exceeded cap {cap} on the sphere")
        block = min(block * 2, 65536)
    return values, n_storms


def simulate_vmf_field(
    sites: SiteSet,
    params: VmfParams,
    stream: SeededStream,
    *,
    cap: int = STORM_CAP,
) -> SpatialField:
    """Exact spherical innovation sample with von Mises-Fisher storm shapes."""
    if sites.kind != "sphere":
        raise ValidationError("simulate_vmf_field requires sphere sites")
    values, n_storms = _vmf_values(np.asarray(sites.coords), params, stream.generator(), cap)
    return SpatialField(sites, values, {"n_storms": n_storms})


@dataclass(frozen=True)
class BivariateExponent:
    """Bivariate Smith exponent value and its partial derivatives.

    ``V`` is the negative log joint CDF at unit Frechet scale; ``dV_dz1``
    and ``dV_dz2`` are the (non-positive) first partials and
    ``d2V_dz1dz2`` the (non-positive) mixed second partial.
    """

    V: float
    dV_dz1: float
    dV_dz2: float
    d2V_dz1dz2: float


def smith_exponent_bivariate(z1: float, z2: float, h: float) -> BivariateExponent:
    """Closed-form bivariate Smith exponent at Mahalanobis distance ``h``.

    For ``h`` below 1e-8 the complete-dependence limit
    ``V = max(1/z1, 1/z2)`` is returned; its first partials use the
    convention that ties (``z1 == z2``) attribute the derivative to the
    first coordinate, and the mixed partial is zero.
    """
    if not (z1 > 0 and z2 > 0):
        raise ValidationError(f"z1, z2 must be positive, got {z1!r}, {z2!r}")
    if not (h >= 0 and math.isfinite(h)):
        raise ValidationError(f"h must be non-negative and finite, got {h!r}")
    if h < H_COMPLETE_DEP:
        if z1 <= z2:
            return BivariateExponent(1.0 / z1, -1.0 / z1 ** 2, 0.0, 0.0)
        return BivariateExponent(1.0 / z2, 0.0, -1.0 / z2 ** 2, 0.0)
    w = 0.5 * h + math.log(z2 / z1) / h
    v = h - w
    phi_w = math.exp(-0.5 * w * w) / SQRT_TWO_PI
    phi_v = math.exp(-0.5 * v * v) / SQRT_TWO_PI
    cdf_w = float(ndtr(w))
    cdf_v = float(ndtr(v))
    value = cdf_w / z1 + cdf_v / z2
    d1 = -(cdf_w / z1 ** 2 + phi_w / (h * z1 ** 2) - phi_v / (h * z1 * z2))
    d2 = -(cdf_v / z2 ** 2 + phi_v / (h * z2 ** 2) - phi_w / (h * z1 * z2))
    d12 = -(v * phi_w / (h ** 2 * z1 ** 2 * z2) + w * phi_v / (h ** 2 * z1 * z2 ** 2))
    return BivariateExponent(value, d1, d2, d12)


def smith_exponent_numeric(
    sites: SiteSet,
    z: np.ndarray,
    params: SmithParams,
    *,
    epsabs: float = 1e-9,
    epsrel: float = 1e-7,
) -> float:
    """M-variate Smith exponent by adaptive 2-d quadrature.

    Integrates ``max_m h_Sigma(x_m - c) / z_m`` over the plane after
    whitening by the storm covariance, which reduces the integrand to a
    maximum of isotropic unit Gaussian bumps.  ``M = 1`` returns ``1/z``
    exactly.

    Raises
    ------
    NumericalError
        If the quadrature reports an error estimate incompatible with the
        requested tolerances.
    """
    if sites.kind != "planar":
        raise ValidationError("smith_exponent_numeric requires planar sites")
    z = np.asarray(z, dtype=float)
    m = len(sites)
    if z.shape != (m,):
        raise ValidationError(f"z shape {z.shape} does not match {m} sites")
    if not np.all(z > 0):
        raise ValidationError("z must be strictly positive")
    if m == 1:
        return 1.0 / float(z[0])

    chol = np.linalg.cholesky(params.sigma)
    white = solve_triangular(chol, np.asarray(sites.coords).T, lower=True).T
    inv_z = INV_TWO_PI / z
    # Unit Gaussian bumps are negligible 8 standardized units out.
    pad = 8.0
    x_lo, x_hi = white[:, 0].min() - pad, white[:, 0].max() + pad
    y_lo, y_hi = white[:, 1].min() - pad, white[:, 1].max() + pad

    sx, sy = white[:, 0], white[:, 1]

    def integrand(y: float, x: float) -> float:
        q = (sx - x) ** 2 + (sy - y) ** 2
        return float(np.max(inv_z * np.exp(-0.5 * q)))

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", integrate.IntegrationWarning)
        value, abserr = integrate.dblquad(
            integrand, x_lo, x_hi, y_lo, y_hi, epsabs=epsabs, epsrel=epsrel
        )
    tolerance = max(epsabs, abs(value) * epsrel)
    if abserr > 100.0 * tolerance:
        raise NumericalError(
            f"exponent quadrature did not converge: error estimate {abserr:.3g} "
            f"against tolerance {tolerance:.3g}"
        )
    if caught and abserr > tolerance:
        raise NumericalError(
            f"exponent quadrature warned and achieved only {abserr:.3g} "
            f"(tolerance {tolerance:.3g})"
        )
    return float(value)


class SmithExponentOracle:
    """Evaluates the M-variate Smith exponent for joint CDF assembly.

    Pairs go through the closed form, three and four points through
    adaptive quadrature; anything larger is outside the supported envelope.
    Coordinates are taken relative to a common origin (translation
    invariance of the storm process makes the origin irrelevant).
    """

    MAX_POINTS = 4

    def __init__(self, params: SmithParams):
        self.params = params

    def value(self, coords: np.ndarray, z: np.ndarray) -> float:
        coords = np.asarray(coords, dtype=float)
        z = np.asarray(z, dtype=float)
        m = coords.shape[0]
        if m == 1:
            return 1.0 / float(z[0])
        if m == 2:
            h = float(mahalanobis_distance(coords[1] - coords[0], self.params))
            return smith_exponent_bivariate(float(z[0]), float(z[1]), h).V
        if m <= self.MAX_POINTS:
            return smith_exponent_numeric(SiteSet.planar(coords), z, self.params)
        raise CapabilityError(
            f"joint evaluation supports at most {self.MAX_POINTS} points, got {m}"
        )
