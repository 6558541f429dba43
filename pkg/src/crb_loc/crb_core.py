"""Fisher information and Cramer-Rao bounds for biased range measurements.

Every beacon contributes ``A_m * q_m q_m^T`` to the Fisher information
matrix, where ``q_m`` is the unit vector from beacon ``m`` to the target and
``A_m`` is a scalar weight. An unbiased beacon has ``A_m = sigma_m**-2``. For
a beacon whose bias ``b`` has prior ``p(b)``,

    A_m = sigma_m**-4 * E_r[alpha_m(r)**2],

with ``alpha_m(r)`` the posterior mean of ``r - d_m - b`` given ``r``. The
expectation over ``r`` and the marginalization over ``b`` are both evaluated
by adaptive quadrature, the inner integrals running 100 times tighter than
the outer one.

Beacon indices are 0-based throughout.
"""

import enum
from dataclasses import dataclass

import numpy as np

from . import bias_models as bm
from .errors import (
    ApproximationDomainError,
    NoClosedFormError,
    OutsideSupportError,
    UnobservableGeometryError,
)
from .geometry import distance, unit_direction
from .quadrature import DEFAULT_SPEC, integrate

__all__ = [
    "CoeffMode",
    "Fim",
    "CrbResult",
    "conditional_pdf",
    "marginal_pdf",
    "posterior_mean_alpha",
    "score",
    "coeff_numeric",
    "coeff_closed",
    "coeff_approx",
    "assemble_fim",
    "fim",
    "crb",
    "crb_from_fim",
]

MAX_CONDITION = 1e12
# How far past the bias support the outer integral over r extends, in noise std.
OUTER_SIGMAS = 8.0
UNDERFLOW = 1e-300
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class CoeffMode(enum.Enum):
    NUMERIC = "numeric"
    CLOSED = "closed"
    APPROX = "approx"
    DISCARDED = "discarded"
    UNBIASED = "unbiased"


_BIASED_ONLY = {CoeffMode.NUMERIC, CoeffMode.CLOSED, CoeffMode.APPROX}


@dataclass(frozen=True, eq=False)
class Fim:
    matrix: np.ndarray
    coefficients: np.ndarray


@dataclass(frozen=True, eq=False)
class CrbResult:
    crb: np.ndarray
    mse_bound: float
    fim: Fim
    modes: tuple


def _gauss(z, sigma):
    return np.exp(-0.5 * z * z) * (_INV_SQRT_2PI / sigma)


def conditional_pdf(r, m, b, scenario):
    """Density of range ``r`` at beacon ``m`` given bias ``b`` (use 0 when unbiased)."""
    sigma = scenario.noise_std[m]
    u = np.asarray(r, dtype=float) - distance(scenario, m) - b
    return _gauss(u / sigma, sigma)


def _bias_integrals(u, model, sigma, spec):
    """Return ``(p, num)`` for offsets ``u = r - d``.

    ``p(u) = int N(u - b; 0, sigma^2) p(b) db`` and
    ``num(u) = int (u - b) N(u - b; 0, sigma^2) p(b) db``.
    """
    u = np.asarray(u, dtype=float)
    if isinstance(model, bm.PointMass):
        e = u - model.value
        p = _gauss(e / sigma, sigma)
        return p, e * p
    flat = u.ravel()

    def integrand(b):
        e = flat[None, :] - b[:, None]
        w = _gauss(e / sigma, sigma) * model.pdf(b)[:, None]
        return np.stack([w, e * w], axis=-1)

    value, _ = integrate(integrand, model.support(), spec, breakpoints=model.breakpoints())
    return value[:, 0].reshape(u.shape), value[:, 1].reshape(u.shape)


def _bias_model(scenario, m):
    if not 0 <= m < scenario.biased_count:
        raise IndexError(f"beacon {scenario.labels[m]} is not a biased beacon")
    return scenario.bias_models[m]


def marginal_pdf(r, m, scenario, spec=DEFAULT_SPEC):
    """Density of range ``r`` at biased beacon ``m`` with the bias integrated out."""
    model = _bias_model(scenario, m)
    u = np.asarray(r, dtype=float) - distance(scenario, m)
    p, _ = _bias_integrals(u, model, scenario.noise_std[m], spec)
    return p if p.ndim else float(p)


def posterior_mean_alpha(r, m, scenario, spec=DEFAULT_SPEC):
    """Posterior mean of the noise term ``r - d_m - b`` given ``r``."""
    model = _bias_model(scenario, m)
    u = np.asarray(r, dtype=float) - distance(scenario, m)
    p, num = _bias_integrals(u, model, scenario.noise_std[m], spec)
    if np.any(p < UNDERFLOW):
        raise OutsideSupportError(
            f"marginal range density underflows at beacon {scenario.labels[m]}")
    alpha = num / p
    return alpha if alpha.ndim else float(alpha)


def score(r, m, scenario, spec=DEFAULT_SPEC):
    """Gradient of ``ln p(r_m)`` with respect to the target position."""
    sigma = scenario.noise_std[m]
    q = unit_direction(scenario, m)
    if m < scenario.biased_count:
        a = posterior_mean_alpha(r, m, scenario, spec)
    else:
        a = float(r) - distance(scenario, m)
    return (a / sigma**2) * q


def coeff_numeric(m, scenario, spec=DEFAULT_SPEC):
    """Fisher weight of biased beacon ``m`` by nested quadrature."""
    model = _bias_model(scenario, m)
    sigma = scenario.noise_std[m]
    inner = spec.tighter(100.0)
    lo, hi = model.support()
    span = (lo - OUTER_SIGMAS * sigma, hi + OUTER_SIGMAS * sigma)

    def integrand(u):
        p, num = _bias_integrals(u, model, sigma, inner)
        out = np.zeros_like(p)
        ok = p > UNDERFLOW
        out[ok] = num[ok] ** 2 / p[ok]
        return out

    value, _ = integrate(integrand, span, spec, breakpoints=model.breakpoints())
    return value / sigma**4


def coeff_closed(m, scenario):
    """Exact weight for point-mass and Gaussian bias priors."""
    model = _bias_model(scenario, m)
    sigma = scenario.noise_std[m]
    if isinstance(model, bm.PointMass):
        return 1.0 / sigma**2
    if isinstance(model, bm.Gaussian):
        return 1.0 / (sigma**2 + model.std**2)
    raise NoClosedFormError(f"no closed-form weight for {type(model).__name__} bias")


def coeff_approx(m, scenario):
    """Small-bias-spread approximation ``sigma^-2 (1 - (kappa/sigma)^2)``."""
    model = _bias_model(scenario, m)
    sigma = scenario.noise_std[m]
    _, kappa = model.moments()
    if kappa >= sigma:
        raise ApproximationDomainError(
            f"beacon {scenario.labels[m]}: bias std {kappa:.6g} >= noise std {sigma:.6g}, "
            "approximation undefined")
    return (1.0 - (kappa / sigma) ** 2) / sigma**2


def _resolve_modes(scenario, modes):
    n = scenario.num_beacons
    if isinstance(modes, (CoeffMode, str)):
        mode = CoeffMode(modes)
        return tuple(mode if m < scenario.biased_count else CoeffMode.UNBIASED
                     for m in range(n))
    out = tuple(CoeffMode(x) for x in modes)
    if len(out) != n:
        raise ValueError(f"need {n} modes, got {len(out)}")
    for m, mode in enumerate(out):
        if mode in _BIASED_ONLY and m >= scenario.biased_count:
            raise ValueError(
                f"mode {mode.value!r} needs a bias model; beacon {scenario.labels[m]} is unbiased")
    return out


def _coefficient(m, mode, scenario, spec):
    if mode is CoeffMode.UNBIASED:
        return 1.0 / scenario.noise_std[m] ** 2
    if mode is CoeffMode.DISCARDED:
        return 0.0
    if mode is CoeffMode.NUMERIC:
        return coeff_numeric(m, scenario, spec)
    if mode is CoeffMode.CLOSED:
        return coeff_closed(m, scenario)
    return coeff_approx(m, scenario)


def assemble_fim(directions, coefficients):
    """``sum_m A_m q_m q_m^T`` for ``(M, dim)`` directions and ``(M,)`` weights."""
    q = np.asarray(directions, dtype=float)
    a = np.asarray(coefficients, dtype=float)
    j = (q * a[:, None]).T @ q
    return 0.5 * (j + j.T)


def fim(scenario, modes=CoeffMode.NUMERIC, spec=DEFAULT_SPEC):
    """Fisher information matrix of the target position.

    ``modes`` is either one :class:`CoeffMode` applied to every biased
    beacon (unbiased beacons then use ``UNBIASED``) or a per-beacon sequence.
    """
    modes = _resolve_modes(scenario, modes)
    q = np.array([unit_direction(scenario, m) for m in range(scenario.num_beacons)])
    coeffs = np.array([_coefficient(m, mode, scenario, spec) for m, mode in enumerate(modes)])
    return Fim(assemble_fim(q, coeffs), coeffs)


def crb_from_fim(info, modes=()):
    j = info.matrix
    cond = np.linalg.cond(j)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise UnobservableGeometryError(
            f"Fisher information is singular or ill-conditioned (condition number {cond:.3g})")
    c = np.linalg.solve(j, np.eye(j.shape[0]))
    c = 0.5 * (c + c.T)
    return CrbResult(c, float(np.trace(c)), info, tuple(modes))


def crb(scenario, modes=CoeffMode.NUMERIC, spec=DEFAULT_SPEC):
    """Cramer-Rao bound (inverse FIM) and its trace, the MSE bound."""
    modes = _resolve_modes(scenario, modes)
    return crb_from_fim(fim(scenario, modes, spec), modes)
