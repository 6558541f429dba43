import math

import numpy as np
import pytest
from scipy import stats

from crb_loc import bias_models as bm
from crb_loc.errors import ScenarioFormatError, UnsupportedOperationError
from crb_loc.quadrature import QuadratureSpec, integrate

DELTAS = [round(0.1 * k, 10) for k in range(1, 11)]
FINE = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-15)


def test_table_one_masses_and_edges():
    model = bm.table_one_pdf(0.1)
    assert model.masses == (0.12, 0.03, 0.31, 0.12, 0.24, 0.12, 0.03, 0.0, 0.03)
    assert len(model.edges) == 10
    assert bm.support(model) == pytest.approx((0.1, 1.0), abs=1e-15)


def test_pdf_examples():
    model = bm.table_one_pdf(0.1)
    assert bm.pdf(model, 0.35) == pytest.approx(3.1, rel=1e-12)
    assert bm.pdf(model, 2.0) == 0.0
    assert bm.pdf(bm.Uniform(0, 2), 1.0) == 0.5


def test_bins_are_left_open_right_closed():
    model = bm.PiecewiseConstant((0.0, 1.0, 2.0), (0.25, 0.75))
    assert model.pdf(0.0) == 0.0
    assert model.pdf(1.0) == 0.25
    assert model.pdf(2.0) == 0.75
    assert model.pdf(2.0 + 1e-12) == 0.0


def test_point_mass_has_no_density():
    with pytest.raises(UnsupportedOperationError):
        bm.pdf(bm.PointMass(0.7), 0.7)


@pytest.mark.parametrize("delta", DELTAS)
def test_table_one_moments_linear_in_delta(delta):
    mean, std = bm.moments(bm.table_one_pdf(delta))
    assert mean == pytest.approx(0.1 + 3.49 * delta, rel=1e-12)
    # sqrt(sum P_i (i + 1/2)^2 + 1/12 - 3.49^2) evaluated independently
    p = np.array(bm.TABLE_ONE_MASSES)
    i = np.arange(9) + 0.5
    factor = math.sqrt(np.sum(p * i * i) + 1.0 / 12.0 - np.sum(p * i) ** 2)
    assert factor == pytest.approx(1.8257144720, rel=1e-9)
    assert std == pytest.approx(factor * delta, rel=1e-12)


def test_simple_moments():
    assert bm.moments(bm.PointMass(0.7)) == (0.7, 0.0)
    assert bm.moments(bm.Gaussian(0.2, 0.5)) == (0.2, 0.5)
    mean, std = bm.moments(bm.Uniform(-1.0, 3.0))
    assert mean == 1.0 and std == pytest.approx(4 / math.sqrt(12))


def test_supports():
    assert bm.support(bm.Gaussian(0, 1)) == (-8.0, 8.0)
    assert bm.support(bm.PointMass(0.3)) == (0.3, 0.3)


MODELS = [
    bm.table_one_pdf(0.1),
    bm.table_one_pdf(0.7),
    bm.Uniform(-0.3, 1.9),
    bm.Gaussian(0.4, 0.6),
    bm.PiecewiseConstant((-1.0, -0.2, 0.0, 3.0), (0.5, 0.1, 0.4)),
]


@pytest.mark.parametrize("model", MODELS, ids=lambda m: type(m).__name__)
def test_density_normalized_and_moments_match_quadrature(model):
    lo, hi = model.support()
    bp = model.breakpoints()
    mass, _ = integrate(model.pdf, (lo, hi), FINE, breakpoints=bp)
    assert abs(mass - 1.0) <= 1e-8
    m1, _ = integrate(lambda b: b * model.pdf(b), (lo, hi), FINE, breakpoints=bp)
    m2, _ = integrate(lambda b: b * b * model.pdf(b), (lo, hi), FINE, breakpoints=bp)
    mean, std = model.moments()
    assert m1 == pytest.approx(mean, rel=1e-8, abs=1e-12)
    assert math.sqrt(m2 - m1 * m1) == pytest.approx(std, rel=1e-8)


def test_point_mass_sample():
    rng = np.random.default_rng(0)
    assert bm.sample(bm.PointMass(0.7), rng) == 0.7
    assert np.all(bm.PointMass(0.7).sample(rng, 5) == 0.7)


def test_table_one_sample_mean():
    rng = np.random.default_rng(12345)
    model = bm.table_one_pdf(0.1)
    draws = model.sample(rng, 10**6)
    _, std = model.moments()
    se = std / math.sqrt(draws.size)
    assert abs(draws.mean() - 0.449) <= 3 * se


def test_uniform_sample():
    rng = np.random.default_rng(7)
    draws = bm.Uniform(0.0, 1.0).sample(rng, 10**6)
    assert draws.min() >= 0.0 and draws.max() <= 1.0
    assert abs(draws.mean() - 0.5) <= 3 * math.sqrt(1 / 12) / 1e3


def test_table_one_histogram_chi_square():
    rng = np.random.default_rng(2024)
    model = bm.table_one_pdf(0.1)
    draws = model.sample(rng, 10**6)
    counts, _ = np.histogram(draws, bins=model.edges)
    p = np.array(model.masses)
    keep = p > 0
    assert counts[~keep].sum() == 0
    _, pvalue = stats.chisquare(counts[keep], p[keep] * draws.size)
    assert pvalue > 0.001


def test_gaussian_sample_untruncated():
    rng = np.random.default_rng(3)
    draws = bm.Gaussian(0.0, 1.0).sample(rng, 10**6)
    assert draws.std() == pytest.approx(1.0, rel=5e-3)


@pytest.mark.parametrize("model", MODELS + [bm.PointMass(0.35)], ids=lambda m: type(m).__name__)
@pytest.mark.parametrize("sigma", [0.3, 1.0, 2.5])
def test_log_noisy_pdf_matches_convolution(model, sigma):
    u = np.linspace(-6.0, 8.0, 29)
    got = np.exp(model.log_noisy_pdf(u, sigma))
    if isinstance(model, bm.PointMass):
        expected = stats.norm.pdf(u, model.value, sigma)
    else:
        expected = np.array([
            integrate(lambda b: model.pdf(b) * stats.norm.pdf(x - b, 0.0, sigma),
                      model.support(), FINE, breakpoints=model.breakpoints())[0]
            for x in u])
    np.testing.assert_allclose(got, expected, rtol=1e-9, atol=1e-13)


@pytest.mark.parametrize("u", [-30.0, -12.0, -4.0, 0.3, 5.0, 14.0, 40.0])
def test_log_noisy_pdf_tails_against_high_precision(u):
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 60
    model = bm.table_one_pdf(0.5)
    sigma = mpmath.mpf(1)
    total = mpmath.mpf(0)
    for p, lo, hi in zip(model.masses, model.edges[:-1], model.edges[1:]):
        cdf = lambda x: mpmath.ncdf(x)
        lo, hi = mpmath.mpf(lo), mpmath.mpf(hi)
        if u < 0:
            mass = cdf((u - lo) / sigma) - cdf((u - hi) / sigma)
        else:
            mass = cdf((hi - u) / sigma) - cdf((lo - u) / sigma)
        total += mpmath.mpf(p) / (hi - lo) * mass
    expected = float(mpmath.log(total))
    assert float(model.log_noisy_pdf(u, 1.0)) == pytest.approx(expected, rel=1e-12)


def test_log_noisy_pdf_far_tails_are_finite():
    model = bm.table_one_pdf(0.5)
    out = model.log_noisy_pdf(np.array([-30.0, 45.0]), 1.0)
    assert np.all(np.isfinite(out))


@pytest.mark.parametrize("model", MODELS + [bm.PointMass(0.35)], ids=lambda m: type(m).__name__)
def test_dict_round_trip(model):
    assert bm.from_dict(bm.to_dict(model)) == model


@pytest.mark.parametrize("data", [
    {"variant": "gaussian", "mean": 0.0},
    {"variant": "gaussian", "mean": 0.0, "std": 1.0, "extra": 1},
    {"variant": "nope"},
    {"variant": "uniform", "lo": 1.0, "hi": 0.0},
    {"variant": "piecewise_constant", "edges": [0, 1], "masses": [0.5]},
    [1, 2],
])
def test_bad_dicts(data):
    with pytest.raises(ScenarioFormatError):
        bm.from_dict(data)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        bm.Gaussian(0.0, 0.0)
    with pytest.raises(ValueError):
        bm.PiecewiseConstant((0.0, 1.0, 1.0), (0.5, 0.5))
    with pytest.raises(ValueError):
        bm.PiecewiseConstant((0.0, 1.0, 2.0), (1.2, -0.2))
