"""Measurement synthesis, bound sweeps and Monte Carlo MSE sweeps.

Every trial draws from its own generator seeded by ``(base_seed,
trial_index)``, so a trial can be replayed in isolation and results do not
depend on how trials are split across workers. The same trial index reuses
the same stream at every bin width, which gives common random numbers
across a sweep.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import bias_models as bm
from .crb_core import CoeffMode, crb
from .errors import CrbLocError
from .estimators import (
    EstimatorConfig,
    all_indicator_vectors,
    default_candidates,
    estimate_batch,
    true_indicators,
)
from .geometry import distances
from .quadrature import DEFAULT_SPEC

__all__ = [
    "MeasurementSet",
    "SweepRecord",
    "DEFAULT_DELTAS",
    "trial_rng",
    "sample_measurements",
    "instantiate",
    "run_bound_sweep",
    "run_ml_mse",
    "worker_count",
]

DEFAULT_DELTAS = tuple(round(0.1 * k, 10) for k in range(1, 11))
MAX_FAILURE_RATE = 0.01
CHUNK = 250


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    r: np.ndarray
    trial_index: int = 0
    seed: int = None


@dataclass
class SweepRecord:
    delta: float
    kappa_over_sigma: float
    bound_exact: float
    bound_approx: float = None
    bound_discarded: float = None
    bound_unbiased: float = None
    mse_informed: float = None
    mse_joint: float = None
    trials: int = 0
    se_informed: float = None
    se_joint: float = None
    failures: int = 0
    status: str = "ok"

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]


def trial_rng(base_seed, trial_index):
    return np.random.default_rng(np.random.SeedSequence([int(base_seed), int(trial_index)]))


def sample_measurements(scenario, rng, trial_index=0, seed=None):
    """One realization ``r_m = d_m + noise_m (+ bias_m for biased beacons)``."""
    d = distances(scenario)
    r = d + rng.normal(0.0, 1.0, scenario.num_beacons) * scenario.noise_std
    for m in range(scenario.biased_count):
        r[m] += scenario.bias_models[m].sample(rng)
    return MeasurementSet(r=r, trial_index=trial_index, seed=seed)


def instantiate(scenario, delta):
    """Copy of ``scenario`` with the measured bias shape of width ``delta`` on every biased beacon."""
    if scenario.biased_count < 1:
        raise ValueError("sweeps need at least one biased beacon")
    return scenario.with_bias_models([bm.table_one_pdf(delta)] * scenario.biased_count)


def worker_count():
    """Worker processes from ``CRB_LOC_THREADS`` (0 or unset means one per CPU)."""
    raw = os.environ.get("CRB_LOC_THREADS", "0").strip() or "0"
    n = int(raw)
    if n < 0:
        raise ValueError("CRB_LOC_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def _kappa_over_sigma(scenario):
    _, kappa = scenario.bias_models[0].moments()
    return kappa / scenario.noise_std[0]


def _bounds(scenario, spec, reference=None):
    rec = SweepRecord(delta=float("nan"), kappa_over_sigma=_kappa_over_sigma(scenario),
                      bound_exact=float("nan"))
    if reference is None:
        reference = (crb(scenario, CoeffMode.UNBIASED, spec).mse_bound,
                     crb(scenario, CoeffMode.DISCARDED, spec).mse_bound)
    rec.bound_unbiased, rec.bound_discarded = reference
    rec.bound_exact = crb(scenario, CoeffMode.NUMERIC, spec).mse_bound
    sigmas = scenario.noise_std[:scenario.biased_count]
    kappas = np.array([m.moments()[1] for m in scenario.bias_models])
    if np.all(kappas < sigmas):
        rec.bound_approx = crb(scenario, CoeffMode.APPROX, spec).mse_bound
    return rec


def _failed(delta, scenario, exc):
    rec = SweepRecord(delta=delta, kappa_over_sigma=_kappa_over_sigma(scenario),
                      bound_exact=float("nan"))
    rec.status = f"{getattr(exc, 'code', 'E_GENERIC')}: {exc}"
    return rec


def run_bound_sweep(scenario, deltas=DEFAULT_DELTAS, spec=DEFAULT_SPEC):
    """Exact, approximate, discarded and unbiased MSE bounds for each bin width."""
    records = []
    reference = None
    for delta in deltas:
        if not delta > 0:
            raise ValueError("bin widths must be positive")
        s = instantiate(scenario, delta)
        try:
            rec = _bounds(s, spec, reference)
            reference = (rec.bound_unbiased, rec.bound_discarded)
        except CrbLocError as exc:
            rec = _failed(delta, s, exc)
        rec.delta = float(delta)
        records.append(rec)
    return records


def _chunk_job(args):
    scenario, config, ranges, hyps_informed, hyps_joint = args
    inf = estimate_batch(ranges, scenario, config, hyps_informed)
    joint = estimate_batch(ranges, scenario, config, hyps_joint)
    target = scenario.target
    return (np.sum((inf["location"] - target) ** 2, axis=1), inf["converged"],
            np.sum((joint["location"] - target) ** 2, axis=1), joint["converged"])


def _mse(sq, ok):
    sq = sq[ok]
    if sq.size == 0:
        return float("nan"), float("nan")
    se = float(np.std(sq, ddof=1) / np.sqrt(sq.size)) if sq.size > 1 else float("nan")
    return float(np.mean(sq)), se


def run_ml_mse(scenario, deltas=DEFAULT_DELTAS, trials=1000, base_seed=0, config=None,
               spec=DEFAULT_SPEC, workers=None):
    """Monte Carlo MSE of both ML estimators next to the bounds, per bin width.

    Hypotheses with ``s_m = 0`` use the instantiated prior of the first
    biased beacon for every beacon unless ``config`` lists explicit
    candidate priors.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    config = config or EstimatorConfig()
    workers = worker_count() if workers is None else workers
    hyps_joint = all_indicator_vectors(scenario.num_beacons)
    records = []
    reference = None
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for delta in deltas:
            s = instantiate(scenario, delta)
            try:
                rec = _bounds(s, spec, reference)
                reference = (rec.bound_unbiased, rec.bound_discarded)
            except CrbLocError as exc:
                rec = _failed(delta, s, exc)
            rec.delta = float(delta)
            cfg = config
            if config.candidate_bias_pdfs is None:
                cfg = EstimatorConfig(config.search_box, config.grid, config.conv_tol,
                                      config.max_iters, default_candidates(s), config.n_refine)
            ranges = np.array([sample_measurements(s, trial_rng(base_seed, t)).r
                               for t in range(trials)])
            hyps_informed = np.array([true_indicators(s)])
            jobs = [(s, cfg, ranges[i:i + CHUNK], hyps_informed, hyps_joint)
                    for i in range(0, trials, CHUNK)]
            parts = list(pool.map(_chunk_job, jobs)) if pool else [_chunk_job(j) for j in jobs]
            sq_i, ok_i, sq_j, ok_j = (np.concatenate(x) for x in zip(*parts))
            rec.mse_informed, rec.se_informed = _mse(sq_i, ok_i)
            rec.mse_joint, rec.se_joint = _mse(sq_j, ok_j)
            rec.trials = trials
            rec.failures = int(np.sum(~ok_i) + np.sum(~ok_j))
            if rec.status == "ok" and max(np.sum(~ok_i), np.sum(~ok_j)) > MAX_FAILURE_RATE * trials:
                rec.status = f"E_OPTIMIZATION: {rec.failures} estimator runs did not converge"
            records.append(rec)
    finally:
        if pool:
            pool.shutdown()
    return records
