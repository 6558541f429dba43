"""Maximum-likelihood location estimators with binary bias indicators.

For a candidate location ``p`` and indicator vector ``s`` the log-likelihood
is a sum of per-beacon terms. With ``s_m = 1`` the range is treated as
unbiased (a Gaussian around ``d_m(p)``); with ``s_m = 0`` the bias is
integrated out against the beacon's candidate bias prior.

Two estimators are provided. :func:`ml_informed` knows which beacons are
biased and maximizes over the location only. :func:`ml_joint` also maximizes
over every indicator vector.

The location search screens a regular grid of starts spanning the search
box, then runs Nelder-Mead from the best few grid points. Every candidate
is confined to the search box grown by 20% on each side.
"""

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import EnumerationTooLargeError, OptimizationError
from .geometry import distances
from .simplex import batch_nelder_mead

__all__ = [
    "EstimatorConfig",
    "EstimateResult",
    "default_candidates",
    "loglik_term",
    "loglik",
    "ml_informed",
    "ml_joint",
    "estimate_batch",
    "true_indicators",
    "all_indicator_vectors",
]

MAX_ENUMERATION = 16
TIE_TOL = 1e-12
BOX_MARGIN = 0.2
_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True, eq=False)
class EstimatorConfig:
    """Search settings.

    ``search_box`` is a ``(lo, hi)`` pair of corner vectors; ``None`` uses
    the bounding box of the beacons. ``candidate_bias_pdfs`` holds one bias
    prior per beacon for hypotheses with ``s_m = 0``; ``None`` picks
    :func:`default_candidates`. ``n_refine`` grid starts per hypothesis are
    handed to the simplex search.
    """

    search_box: tuple = None
    grid: int = 5
    conv_tol: float = 1e-6
    max_iters: int = 500
    candidate_bias_pdfs: tuple = None
    n_refine: int = 3

    def __post_init__(self):
        if self.grid < 2:
            raise ValueError("grid needs at least 2 starts per axis")
        if not self.conv_tol > 0:
            raise ValueError("conv_tol must be positive")
        if self.n_refine < 1:
            raise ValueError("n_refine must be at least 1")
        if self.search_box is not None:
            lo, hi = (np.asarray(c, dtype=float) for c in self.search_box)
            if lo.shape != hi.shape or not np.all(hi > lo):
                raise ValueError("search box must satisfy lo < hi on every axis")


@dataclass(frozen=True, eq=False)
class EstimateResult:
    location: np.ndarray
    indicators: tuple
    loglik: float
    iterations: int
    converged: bool
    ambiguous: bool = False


def default_candidates(scenario):
    """Each biased beacon keeps its own prior; unbiased beacons borrow the first one."""
    if scenario.biased_count == 0:
        raise ValueError("scenario has no bias model to use as a candidate prior")
    first = scenario.bias_models[0]
    return tuple(scenario.bias_models[m] if m < scenario.biased_count else first
                 for m in range(scenario.num_beacons))


def _candidates(scenario, config):
    if config.candidate_bias_pdfs is not None:
        cands = tuple(config.candidate_bias_pdfs)
        if len(cands) != scenario.num_beacons:
            raise ValueError("need one candidate bias prior per beacon")
        return cands
    return default_candidates(scenario)


def true_indicators(scenario):
    return tuple(0 if m < scenario.biased_count else 1 for m in range(scenario.num_beacons))


def _search_box(scenario, config):
    if config.search_box is not None:
        lo, hi = (np.asarray(c, dtype=float) for c in config.search_box)
    else:
        lo, hi = scenario.beacons.min(axis=0), scenario.beacons.max(axis=0)
        flat = hi - lo <= 0
        lo, hi = lo - flat, hi + flat
    return lo, hi


def _log_normal(u, sigma):
    return -0.5 * (u / sigma) ** 2 - np.log(sigma) - _LOG_SQRT_2PI


def _loglik_rows(points, indicators, ranges, scenario, candidates):
    """Log-likelihood of ``k`` rows: points (k, dim), indicators and ranges (k, M)."""
    u = ranges - distances(scenario, points)
    total = np.zeros(len(points))
    for m in range(scenario.num_beacons):
        sigma = scenario.noise_std[m]
        clean = indicators[:, m] == 1
        term = np.empty(len(points))
        term[clean] = _log_normal(u[clean, m], sigma)
        if not clean.all():
            term[~clean] = candidates[m].log_noisy_pdf(u[~clean, m], sigma)
        total += term
    return total


def loglik_term(p, s_m, r_m, m, scenario, config=None):
    """Log-likelihood contribution of beacon ``m`` (0-based) at location ``p``."""
    config = config or EstimatorConfig()
    u = float(r_m) - float(distances(scenario, np.asarray(p, dtype=float))[m])
    sigma = scenario.noise_std[m]
    if s_m:
        return float(_log_normal(u, sigma))
    return float(_candidates(scenario, config)[m].log_noisy_pdf(u, sigma))


def loglik(p, s, measurements, scenario, config=None):
    config = config or EstimatorConfig()
    r = getattr(measurements, "r", measurements)
    return sum(loglik_term(p, s[m], r[m], m, scenario, config)
               for m in range(scenario.num_beacons))


def _grid(lo, hi, n):
    axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    return np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1)


def estimate_batch(ranges, scenario, config, hypotheses):
    """Maximize the log-likelihood for many trials over a set of indicator vectors.

    Parameters
    ----------
    ranges : array_like (T, M)
        One row of range measurements per trial.
    hypotheses : array_like (H, M)
        Indicator vectors to search; ties within ``TIE_TOL`` go to the vector
        with more ones, then to the earlier row.

    Returns
    -------
    dict of arrays keyed ``location`` (T, dim), ``loglik``, ``hypothesis``
    (index into ``hypotheses``), ``iterations``, ``converged``, ``ambiguous``.
    """
    ranges = np.atleast_2d(np.asarray(ranges, dtype=float))
    hyps = np.atleast_2d(np.asarray(hypotheses, dtype=int))
    cands = _candidates(scenario, config) if (hyps == 0).any() else None
    ntrial, nhyp = len(ranges), len(hyps)
    lo, hi = _search_box(scenario, config)
    pad = BOX_MARGIN * (hi - lo)
    wall_lo, wall_hi = lo - pad, hi + pad
    starts = _grid(lo, hi, config.grid)
    ngrid, dim = starts.shape

    # Screen every grid point for every (trial, hypothesis) pair.
    t_idx = np.repeat(np.arange(ntrial), nhyp * ngrid)
    h_idx = np.tile(np.repeat(np.arange(nhyp), ngrid), ntrial)
    pts = np.tile(starts, (ntrial * nhyp, 1))
    screen = _loglik_rows(pts, hyps[h_idx], ranges[t_idx], scenario, cands)
    screen = screen.reshape(ntrial, nhyp, ngrid)
    nref = min(config.n_refine, ngrid)
    best_starts = np.argsort(-screen, axis=2, kind="stable")[:, :, :nref]

    prob_t = np.repeat(np.arange(ntrial), nhyp * nref)
    prob_h = np.tile(np.repeat(np.arange(nhyp), nref), ntrial)
    x0 = starts[best_starts.ravel()]

    def objective(points, idx):
        inside = np.all((points >= wall_lo) & (points <= wall_hi), axis=1)
        out = np.full(len(points), np.inf)
        if inside.any():
            k = idx[inside]
            out[inside] = -_loglik_rows(points[inside], hyps[prob_h[k]], ranges[prob_t[k]],
                                        scenario, cands)
        return out

    step = 0.5 * (hi - lo) / (config.grid - 1)
    x, fx, iters, conv = batch_nelder_mead(objective, x0, step, config.conv_tol,
                                           config.max_iters)
    x = x.reshape(ntrial, nhyp, nref, dim)
    ll = -fx.reshape(ntrial, nhyp, nref)
    iters = iters.reshape(ntrial, nhyp, nref)
    conv = conv.reshape(ntrial, nhyp, nref)

    ones = hyps.sum(axis=1)
    rows = np.arange(ntrial)
    pick_start = np.argmax(ll, axis=2)
    hyp_ll = np.take_along_axis(ll, pick_start[:, :, None], axis=2)[:, :, 0]
    top = hyp_ll.max(axis=1, keepdims=True)
    tied = hyp_ll >= top - TIE_TOL * np.maximum(1.0, np.abs(top))
    rank = np.where(tied, ones[None, :] * (nhyp + 1) + (nhyp - np.arange(nhyp))[None, :], -1)
    pick_h = np.argmax(rank, axis=1)
    pick_s = pick_start[rows, pick_h]

    loc = x[rows, pick_h, pick_s]
    chosen_ll = ll[rows, pick_h, pick_s]
    others = x[rows, pick_h]
    others_ok = conv[rows, pick_h] & (
        np.abs(ll[rows, pick_h] - chosen_ll[:, None]) <= 1e-9 * (1.0 + np.abs(chosen_ll[:, None])))
    far = np.max(np.abs(others - loc[:, None, :]), axis=2) > 1e3 * config.conv_tol
    return {
        "location": loc,
        "loglik": chosen_ll,
        "hypothesis": pick_h,
        "iterations": iters.sum(axis=(1, 2)),
        "converged": conv[rows, pick_h, pick_s],
        "ambiguous": np.any(others_ok & far, axis=1),
    }


def _result(out, hyps, i=0):
    res = EstimateResult(
        location=out["location"][i].copy(),
        indicators=tuple(int(v) for v in hyps[out["hypothesis"][i]]),
        loglik=float(out["loglik"][i]),
        iterations=int(out["iterations"][i]),
        converged=bool(out["converged"][i]),
        ambiguous=bool(out["ambiguous"][i]),
    )
    if res.ambiguous:
        warnings.warn("likelihood has several equally good maximizers; returning one of them",
                      RuntimeWarning, stacklevel=3)
    return res


def _ranges(measurements):
    return np.asarray(getattr(measurements, "r", measurements), dtype=float)


def ml_informed(measurements, scenario, config=None):
    """Location estimate when the set of biased beacons is known."""
    config = config or EstimatorConfig()
    hyps = np.array([true_indicators(scenario)])
    out = estimate_batch(_ranges(measurements)[None, :], scenario, config, hyps)
    res = _result(out, hyps)
    if not res.converged:
        raise OptimizationError("no simplex start converged", best=res)
    return res


def all_indicator_vectors(num_beacons):
    if num_beacons > MAX_ENUMERATION:
        raise EnumerationTooLargeError(
            f"{num_beacons} beacons give 2**{num_beacons} indicator vectors; "
            f"limit is {MAX_ENUMERATION} beacons")
    return np.array(list(itertools.product((1, 0), repeat=num_beacons)), dtype=int)


def ml_joint(measurements, scenario, config=None):
    """Joint estimate of the location and of which ranges are biased."""
    config = config or EstimatorConfig()
    hyps = all_indicator_vectors(scenario.num_beacons)
    out = estimate_batch(_ranges(measurements)[None, :], scenario, config, hyps)
    return _result(out, hyps)
