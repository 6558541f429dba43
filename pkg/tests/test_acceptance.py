"""The nine acceptance criteria, each printed as one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s``. Criteria 8 and 9
share one fixture that runs the ``ml-mse`` command twice with the same seed.
"""

import csv
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from crb_loc import bias_models as bm
from crb_loc import crb_core as cc
from crb_loc.experiments import DEFAULT_DELTAS, run_bound_sweep
from crb_loc.geometry import distance, make_scenario

from conftest import default_scenario

ML_SEED = 20240
ML_TRIALS = 1000


def single(model, sigma=1.0):
    return make_scenario([(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)], (3.0, 4.0), sigma, [0], [model])


def test_criterion_1_gaussian_oracle(report):
    start = time.perf_counter()
    worst = 0.0
    for kappa in (0.1, 0.25, 0.5, 1.0, 2.0, 3.0):
        got = cc.coeff_numeric(0, single(bm.Gaussian(0.0, kappa)))
        want = 1.0 / (1.0 + kappa**2)
        worst = max(worst, abs(got - want) / want)
    elapsed = time.perf_counter() - start
    report(1, "Gaussian bias weight equals 1/(sigma^2+kappa^2)",
           worst <= 1e-4 and elapsed < 10, f"max rel err {worst:.2e}, {elapsed:.2f} s")


def test_criterion_2_point_mass_anchor(report):
    start = time.perf_counter()
    worst_coeff = 0.0
    worst_crb = 0.0
    for value, sigma in ((0.0, 1.0), (1.3, 0.6), (-2.0, 2.5)):
        beacons = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)]
        s = make_scenario(beacons, (3.0, 4.0), sigma, [0, 2], [bm.PointMass(value)] * 2)
        for m in (0, 1):
            a = cc.coeff_numeric(m, s)
            worst_coeff = max(worst_coeff, abs(a * sigma**2 - 1.0))
        got = cc.crb(s, cc.CoeffMode.NUMERIC).crb
        want = cc.crb(s, cc.CoeffMode.UNBIASED).crb
        worst_crb = max(worst_crb, float(np.max(np.abs(got - want) / np.abs(want))))
    elapsed = time.perf_counter() - start
    ok = worst_coeff <= 1e-6 and worst_crb <= 1e-6 and elapsed < 5
    report(2, "known bias weighs like an unbiased range", ok,
           f"coeff rel err {worst_coeff:.2e}, CRB rel err {worst_crb:.2e}, {elapsed:.2f} s")


def _random_model(kind, rng):
    if kind == "table_one":
        return bm.table_one_pdf(rng.uniform(0.02, 3.0))
    if kind == "uniform":
        lo = rng.uniform(-2.0, 3.0)
        return bm.Uniform(lo, lo + rng.uniform(0.01, 6.0))
    return bm.Gaussian(rng.uniform(-2.0, 2.0), rng.uniform(0.01, 4.0))


def test_criterion_3_jensen(report):
    rng = np.random.default_rng(3)
    start = time.perf_counter()
    violations = 0
    worst = -np.inf
    count = 0
    for _ in range(200):
        m_count = int(rng.integers(3, 7))
        dim = int(rng.integers(2, 4))
        beacons = rng.uniform(-20.0, 20.0, (m_count, dim))
        target = rng.uniform(-10.0, 10.0, dim)
        sigma = rng.uniform(0.05, 3.0)
        for kind in ("table_one", "uniform", "gaussian"):
            s = make_scenario(beacons, target, sigma, [0], [_random_model(kind, rng)])
            ratio = cc.coeff_numeric(0, s) * sigma**2
            worst = max(worst, ratio)
            violations += ratio > 1.0 + 1e-6
            count += 1
    elapsed = time.perf_counter() - start
    report(3, "biased weight never exceeds sigma^-2", violations == 0 and elapsed < 120,
           f"{count} cases, max A*sigma^2 {worst:.9f}, {elapsed:.1f} s")


def test_criterion_4_table_moments(report):
    start = time.perf_counter()
    worst_mean = 0.0
    worst_std = 0.0
    for delta in DEFAULT_DELTAS:
        mean, std = bm.table_one_pdf(delta).moments()
        worst_mean = max(worst_mean, abs(mean - (0.1 + 3.49 * delta)) / (0.1 + 3.49 * delta))
        worst_std = max(worst_std, abs(std - 1.83 * delta) / (1.83 * delta))
    elapsed = time.perf_counter() - start
    ok = worst_mean <= 1e-12 and worst_std <= 5e-3 and elapsed < 1
    report(4, "measured bias table moments", ok,
           f"mean rel err {worst_mean:.1e}, std vs 1.83*delta {worst_std:.2%}, {elapsed:.3f} s")


def test_criterion_5_informative_approximation(report):
    start = time.perf_counter()
    worst = 0.0
    checked = []
    for delta in np.arange(0.05, 1.0, 0.05):
        s = default_scenario(float(delta))
        if s.bias_models[0].moments()[1] > 0.5:
            break
        exact = cc.crb(s, cc.CoeffMode.NUMERIC).mse_bound
        approx = cc.crb(s, cc.CoeffMode.APPROX).mse_bound
        worst = max(worst, abs(approx - exact) / exact)
        checked.append(round(float(delta), 2))
    elapsed = time.perf_counter() - start
    ok = len(checked) >= 3 and worst <= 0.02 and elapsed < 60
    report(5, "small-spread approximation within 2% for kappa/sigma <= 0.5", ok,
           f"deltas {checked}, max rel gap {worst:.3%}, {elapsed:.1f} s")


def test_criterion_6_sweep_limits(report):
    start = time.perf_counter()
    rows = run_bound_sweep(default_scenario(), DEFAULT_DELTAS)
    elapsed = time.perf_counter() - start
    exact = np.array([r.bound_exact for r in rows])
    unb = np.array([r.bound_unbiased for r in rows])
    disc = np.array([r.bound_discarded for r in rows])
    ordered = bool(np.all(unb - 1e-9 <= exact) and np.all(exact <= disc + 1e-9))
    monotone = bool(np.all(np.diff(exact) >= 0))
    near = abs(exact[0] - unb[0]) <= 0.01 * unb[0]
    gap = disc - exact
    shrinking = bool(np.all(np.diff(gap) <= 0))
    ok = ordered and monotone and near and shrinking and elapsed < 120
    report(6, "bound sweep limits and ordering", ok,
           f"ordered={ordered} monotone={monotone} smallest-delta gap "
           f"{(exact[0] - unb[0]) / unb[0]:.3%} shrinking={shrinking}, {elapsed:.1f} s")


def test_criterion_7_score_finite_differences(report):
    rng = np.random.default_rng(7)
    start = time.perf_counter()
    model = bm.table_one_pdf(0.3)
    lo, hi = model.support()
    h = 1e-5
    worst = 0.0
    for _ in range(20):
        target = rng.uniform(0.5, 9.5, 2)
        s = make_scenario([(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)],
                          target, 1.0, [0], [model])
        r = distance(s, 0) + rng.uniform(lo - 2.5, hi + 2.5)
        fd = np.zeros(2)
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            up = cc.marginal_pdf(r, 0, s.with_target(target + e))
            dn = cc.marginal_pdf(r, 0, s.with_target(target - e))
            fd[k] = (math.log(up) - math.log(dn)) / (2 * h)
        sc = cc.score(r, 0, s)
        worst = max(worst, float(np.linalg.norm(fd - sc) / np.linalg.norm(sc)))
    elapsed = time.perf_counter() - start
    report(7, "score matches finite differences of the log marginal",
           worst <= 1e-5 and elapsed < 30, f"max rel err {worst:.2e}, {elapsed:.1f} s")


def _run_cli(out):
    start = time.perf_counter()
    cmd = [sys.executable, "-m", "crb_loc.cli", "ml-mse", "default",
           "--deltas", "0.1:0.1:1.0", "--trials", str(ML_TRIALS), "--seed", str(ML_SEED),
           "--out", str(out)]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    return proc, time.perf_counter() - start


@pytest.fixture(scope="module")
def ml_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("mlmse")
    return [(base / f"run{i}.csv",) + _run_cli(base / f"run{i}.csv") for i in (1, 2)]


@pytest.mark.slow
def test_criterion_8_ml_ordering(report, ml_runs):
    path, proc, elapsed = ml_runs[0]
    assert proc.returncode == 0, proc.stderr
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    within = []
    above = []
    joint_ge = []
    for row in rows:
        bound = float(row["bound_exact"])
        mse, se = float(row["mse_informed"]), float(row["se_informed"])
        within.append(bound - 3 * se <= mse <= bound + 3 * se)
        above.append(mse >= bound)
        joint_ge.append(float(row["mse_joint"]) >= mse)
    zs = [(float(r["mse_informed"]) - float(r["bound_exact"])) / float(r["se_informed"])
          for r in rows]
    ok = len(rows) == 10 and all(within) and all(above) and all(joint_ge) and elapsed < 900
    report(8, "informed ML above the bound and within 3 SE, joint ML no better", ok,
           f"z-scores {[round(z, 2) for z in zs]}, above bound at {sum(above)}/{len(rows)},"
           f" joint>=informed at {sum(joint_ge)}/{len(rows)}, "
           f"{elapsed:.0f} s")


@pytest.mark.slow
def test_criterion_9_determinism(report, ml_runs):
    (p1, proc1, t1), (p2, proc2, t2) = ml_runs
    same = proc1.returncode == 0 and proc2.returncode == 0 and p1.read_bytes() == p2.read_bytes()
    report(9, "same seed gives byte-identical ml-mse CSV", same and max(t1, t2) < 900,
           f"{p1.stat().st_size} bytes, runs took {t1:.0f} s and {t2:.0f} s")
