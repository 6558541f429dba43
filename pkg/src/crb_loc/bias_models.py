"""Prior distributions for the range bias of a single beacon.

Four families are supported: a known deterministic bias (``PointMass``),
``Gaussian``, ``Uniform`` and ``PiecewiseConstant``. :func:`table_one_pdf`
builds the measured NLOS bias shape used throughout the experiments.

Bins of a piecewise-constant density are left-open and right-closed,
``(edges[i], edges[i + 1]]``.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr, logsumexp

from .errors import ScenarioFormatError, UnsupportedOperationError

__all__ = [
    "PointMass",
    "Gaussian",
    "Uniform",
    "PiecewiseConstant",
    "TABLE_ONE_MASSES",
    "table_one_pdf",
    "pdf",
    "moments",
    "support",
    "sample",
    "to_dict",
    "from_dict",
]

TABLE_ONE_MASSES = (0.12, 0.03, 0.31, 0.12, 0.24, 0.12, 0.03, 0.0, 0.03)
TABLE_ONE_OFFSET = 0.1

# Gaussian priors are truncated at mean +/- this many std for quadrature only.
GAUSS_SUPPORT_SIGMAS = 8.0

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


def _log_normal(u, mean, std):
    z = (u - mean) / std
    return -0.5 * z * z - np.log(std) - _LOG_SQRT_2PI


def _log_cdf_diff(a, b):
    """``log(Phi(a) - Phi(b))`` for ``a > b``, accurate in both tails."""
    flip = b > 0
    hi = np.where(flip, -b, a)
    lo = np.where(flip, -a, b)
    lhi = log_ndtr(hi)
    with np.errstate(divide="ignore"):
        return lhi + np.log(-np.expm1(log_ndtr(lo) - lhi))


@dataclass(frozen=True)
class PointMass:
    """Deterministic, known bias."""

    value: float

    def pdf(self, b):
        raise UnsupportedOperationError("a point mass has no finite density")

    def moments(self):
        return float(self.value), 0.0

    def support(self):
        return float(self.value), float(self.value)

    def breakpoints(self):
        return (float(self.value),)

    def sample(self, rng, size=None):
        return np.full(size, float(self.value)) if size is not None else float(self.value)

    def log_noisy_pdf(self, u, sigma):
        return _log_normal(np.asarray(u, dtype=float), self.value, sigma)


@dataclass(frozen=True)
class Gaussian:
    mean: float
    std: float

    def __post_init__(self):
        if not self.std > 0:
            raise ValueError("Gaussian bias std must be positive")

    def pdf(self, b):
        return np.exp(_log_normal(np.asarray(b, dtype=float), self.mean, self.std))

    def moments(self):
        return float(self.mean), float(self.std)

    def support(self):
        w = GAUSS_SUPPORT_SIGMAS * self.std
        return self.mean - w, self.mean + w

    def breakpoints(self):
        return (float(self.mean),)

    def sample(self, rng, size=None):
        return rng.normal(self.mean, self.std, size)

    def log_noisy_pdf(self, u, sigma):
        return _log_normal(np.asarray(u, dtype=float), self.mean, np.hypot(sigma, self.std))


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("Uniform bias needs hi > lo")

    def pdf(self, b):
        b = np.asarray(b, dtype=float)
        inside = (b > self.lo) & (b <= self.hi)
        return np.where(inside, 1.0 / (self.hi - self.lo), 0.0)

    def moments(self):
        return 0.5 * (self.lo + self.hi), (self.hi - self.lo) / np.sqrt(12.0)

    def support(self):
        return float(self.lo), float(self.hi)

    def breakpoints(self):
        return (float(self.lo), float(self.hi))

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size)

    def log_noisy_pdf(self, u, sigma):
        u = np.asarray(u, dtype=float)
        return (_log_cdf_diff((u - self.lo) / sigma, (u - self.hi) / sigma)
                - np.log(self.hi - self.lo))


@dataclass(frozen=True)
class PiecewiseConstant:
    """Density ``masses[i] / width_i`` on each bin ``(edges[i], edges[i+1]]``.

    ``table_delta`` is set only by :func:`table_one_pdf` so the model can be
    serialized back to its compact form.
    """

    edges: tuple
    masses: tuple
    table_delta: float = field(default=None, compare=False)

    def __post_init__(self):
        edges = tuple(float(e) for e in self.edges)
        masses = tuple(float(p) for p in self.masses)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "masses", masses)
        if len(edges) != len(masses) + 1 or not masses:
            raise ValueError("need len(edges) == len(masses) + 1 and at least one bin")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("bin edges must be strictly increasing")
        if any(p < 0 for p in masses):
            raise ValueError("bin masses must be nonnegative")
        if abs(sum(masses) - 1.0) > 1e-9:
            raise ValueError(f"bin masses sum to {sum(masses)!r}, expected 1")

    @property
    def widths(self):
        return np.diff(self.edges)

    def pdf(self, b):
        b = np.asarray(b, dtype=float)
        idx = np.searchsorted(self.edges, b, side="left") - 1
        valid = (idx >= 0) & (idx < len(self.masses))
        dens = np.asarray(self.masses) / self.widths
        return np.where(valid, dens[np.clip(idx, 0, len(self.masses) - 1)], 0.0)

    def moments(self):
        p = np.asarray(self.masses)
        w = self.widths
        mid = np.asarray(self.edges[:-1]) + 0.5 * w
        mean = float(np.sum(p * mid))
        second = float(np.sum(p * (mid * mid + w * w / 12.0)))
        return mean, float(np.sqrt(max(second - mean * mean, 0.0)))

    def support(self):
        return self.edges[0], self.edges[-1]

    def breakpoints(self):
        return self.edges

    def sample(self, rng, size=None):
        p = np.asarray(self.masses)
        cdf = np.concatenate([[0.0], np.cumsum(p)])
        cdf /= cdf[-1]
        u = rng.random(size)
        i = np.searchsorted(cdf, u, side="right") - 1
        i = np.clip(i, 0, len(p) - 1)
        lo = np.asarray(self.edges[:-1])[i]
        frac = (u - cdf[i]) / p[i]
        out = lo + frac * self.widths[i]
        return float(out) if size is None else out

    def log_noisy_pdf(self, u, sigma):
        u = np.asarray(u, dtype=float)[..., None]
        keep = np.asarray(self.masses) > 0
        lo = np.asarray(self.edges[:-1])[keep]
        hi = np.asarray(self.edges[1:])[keep]
        logw = np.log(np.asarray(self.masses)[keep] / (hi - lo))
        terms = logw + _log_cdf_diff((u - lo) / sigma, (u - hi) / sigma)
        return logsumexp(terms, axis=-1)


def table_one_pdf(delta):
    """Measured NLOS bias shape with bin width ``delta``: edges ``0.1 + i*delta``."""
    if not delta > 0:
        raise ValueError("bin width must be positive")
    edges = tuple(TABLE_ONE_OFFSET + i * delta for i in range(len(TABLE_ONE_MASSES) + 1))
    return PiecewiseConstant(edges, TABLE_ONE_MASSES, table_delta=float(delta))


def pdf(model, b):
    return model.pdf(b)


def moments(model):
    """Exact ``(mean, std)`` of the bias prior."""
    return model.moments()


def support(model):
    return model.support()


def sample(model, rng, size=None):
    return model.sample(rng, size)


def to_dict(model):
    if isinstance(model, PointMass):
        return {"variant": "point_mass", "value": model.value}
    if isinstance(model, Gaussian):
        return {"variant": "gaussian", "mean": model.mean, "std": model.std}
    if isinstance(model, Uniform):
        return {"variant": "uniform", "lo": model.lo, "hi": model.hi}
    if isinstance(model, PiecewiseConstant):
        if model.table_delta is not None:
            return {"variant": "table_one", "delta": model.table_delta}
        return {"variant": "piecewise_constant", "edges": list(model.edges),
                "masses": list(model.masses)}
    raise TypeError(f"not a bias model: {model!r}")


_FIELDS = {
    "point_mass": ({"value"}, lambda d: PointMass(float(d["value"]))),
    "gaussian": ({"mean", "std"}, lambda d: Gaussian(float(d["mean"]), float(d["std"]))),
    "uniform": ({"lo", "hi"}, lambda d: Uniform(float(d["lo"]), float(d["hi"]))),
    "piecewise_constant": ({"edges", "masses"},
                           lambda d: PiecewiseConstant(tuple(d["edges"]), tuple(d["masses"]))),
    "table_one": ({"delta"}, lambda d: table_one_pdf(float(d["delta"]))),
}


def from_dict(data):
    if not isinstance(data, dict) or "variant" not in data:
        raise ScenarioFormatError("bias model must be an object with a 'variant' tag")
    variant = data["variant"]
    if variant not in _FIELDS:
        raise ScenarioFormatError(f"unknown bias model variant {variant!r}")
    needed, build = _FIELDS[variant]
    given = set(data) - {"variant"}
    if given != needed:
        extra, missing = sorted(given - needed), sorted(needed - given)
        raise ScenarioFormatError(
            f"bias model {variant!r}: unexpected keys {extra}, missing keys {missing}")
    try:
        return build(data)
    except (TypeError, ValueError) as exc:
        raise ScenarioFormatError(f"bias model {variant!r}: {exc}") from None
