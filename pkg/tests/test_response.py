import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, optimize
from scipy.stats import exponnorm

from timingleak.errors import AmbiguityError, ParameterError, TruncationError
from timingleak.response import (
    SampledDensity,
    analysis_domain,
    discretize,
    emg,
    eval_density,
    gaussian,
    measure_fwhm,
    reference_emg,
    shift_model,
)

taus = st.floats(min_value=20.0, max_value=2000.0)
fwhms = st.floats(min_value=20.0, max_value=3000.0)
centres = st.floats(min_value=-5000.0, max_value=5000.0)


def unit_sigma_gaussian():
    return gaussian(0.0, 2.0 * math.sqrt(2.0 * math.log(2.0)))


def test_gaussian_peak_value():
    assert eval_density(unit_sigma_gaussian(), 0.0) == pytest.approx(1.0 / math.sqrt(2 * math.pi), abs=1e-5)


def test_gaussian_half_max_points():
    g = unit_sigma_gaussian()
    half = eval_density(g, 0.0) / 2
    x = math.sqrt(2 * math.log(2))  # 1.1774
    assert eval_density(g, x) == pytest.approx(half, rel=1e-12)
    assert eval_density(g, -x) == pytest.approx(half, rel=1e-12)


def test_emg_reference_mode_on_1ps_grid():
    t = np.arange(-5000.0, 15000.0, 1.0)
    mode = t[np.argmax(eval_density(reference_emg(), t))]
    assert abs(mode - 1000.0) <= 1.0


def test_emg_matches_independent_convolution():
    # oracle: Gaussian(sigma=tau_g) convolved with exp(tau_e) by quadrature,
    # located so that scipy's EMG has its maximum at t0
    tau_e, tau_g, t0 = 400.0, 290.0, 1000.0
    res = optimize.minimize_scalar(
        lambda x: -exponnorm.pdf(x, tau_e / tau_g, scale=tau_g),
        bounds=(-1000, 2000),
        method="bounded",
        options={"xatol": 1e-9},
    )
    loc = t0 - res.x

    def conv(t):
        f = lambda s: math.exp(-s / tau_e) / tau_e * math.exp(-0.5 * ((t - loc - s) / tau_g) ** 2) / (
            tau_g * math.sqrt(2 * math.pi)
        )
        return integrate.quad(f, 0, 40 * tau_e, limit=200)[0]

    m = emg(tau_e, tau_g, t0)
    for t in (-500.0, 500.0, 1000.0, 1700.0, 4000.0):
        assert eval_density(m, t) == pytest.approx(conv(t), rel=1e-6)
        assert eval_density(m, t) == pytest.approx(exponnorm.pdf(t, tau_e / tau_g, loc=loc, scale=tau_g), rel=1e-6)


@pytest.mark.parametrize("bad", [dict(tau_e=0, tau_g=290), dict(tau_e=400, tau_g=-1), dict(tau_e=-3, tau_g=-3)])
def test_emg_rejects_non_positive_taus(bad):
    with pytest.raises(ParameterError):
        emg(t0=1000, **bad)


def test_gaussian_rejects_zero_fwhm():
    with pytest.raises(ParameterError):
        gaussian(0, 0)


def test_shift_by_zero_is_identity():
    for m in (reference_emg(), gaussian(10, 300)):
        t = np.linspace(-3000, 8000, 97)
        np.testing.assert_array_equal(eval_density(shift_model(m, 0.0), t), eval_density(m, t))


def test_shift_gaussian_peak():
    assert shift_model(gaussian(0, 1000), 350).peak == 350
    t = np.arange(-1000.0, 2000.0, 1.0)
    assert t[np.argmax(eval_density(shift_model(gaussian(0, 1000), 350), t))] == 350


def test_shift_emg_mode():
    t = np.arange(-5000.0, 15000.0, 1.0)
    mode = t[np.argmax(eval_density(shift_model(reference_emg(), 100), t))]
    assert abs(mode - 1100.0) <= 1.0


@given(taus, taus, centres, st.floats(-3000, 3000), st.floats(-1e4, 1e4))
def test_shift_relation(tau_e, tau_g, t0, delta, t):
    m = emg(tau_e, tau_g, t0)
    assert eval_density(shift_model(m, delta), t) == pytest.approx(
        eval_density(m, t - delta), rel=1e-9, abs=1e-300
    )


def test_discretize_gaussian_normalized():
    d = discretize(gaussian(0, 1000), -5000, 5000, 1.0)
    assert d.n == 10000
    assert abs(d.values.sum() * d.dt - 1.0) <= 1e-6


def test_discretize_emg_reference_normalized():
    span = 400 + 290
    d = discretize(reference_emg(), 1000 - 10 * span, 1000 + 20 * span, 1.0)
    assert abs(d.values.sum() * d.dt - 1.0) <= 1e-6


class UniformStub:
    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return ((t >= 0) & (t <= 1)).astype(float)

    def cdf(self, t):
        return np.clip(np.asarray(t, dtype=float), 0, 1)


def test_discretize_uniform_stub():
    d = discretize(UniformStub(), 0.0, 1.0, 0.5)
    np.testing.assert_array_equal(d.values, [1.0, 1.0])


def test_discretize_truncation():
    with pytest.raises(TruncationError):
        discretize(gaussian(0, 1000), -500, 500, 1.0)


def test_sampled_density_invariants():
    with pytest.raises(ParameterError):
        SampledDensity(0.0, 1.0, [0.5, 0.4])
    with pytest.raises(ParameterError):
        SampledDensity(0.0, 0.0, [1.0])
    with pytest.raises(ParameterError):
        SampledDensity(0.0, 1.0, [1.5, -0.5])


@pytest.mark.parametrize("f", [20.0, 290.0, 500.0, 1000.0])
def test_measure_fwhm_gaussian(f):
    assert measure_fwhm(gaussian(0, f)) == pytest.approx(f, rel=1e-4)
    assert abs(measure_fwhm(gaussian(0, f)) - f) <= 0.01


def test_measure_fwhm_emg_against_brute_force_scan():
    # oracle: scipy's EMG on a 0.01 ps grid, width of the above-half-max set
    t = np.arange(-3000.0, 6000.0, 0.01)
    v = exponnorm.pdf(t, 400 / 290, scale=290)
    above = t[v >= v.max() / 2]
    oracle = above[-1] - above[0]  # 914.17
    assert measure_fwhm(reference_emg()) == pytest.approx(oracle, abs=0.02)


def test_measure_fwhm_sampled():
    d = discretize(gaussian(0, 1000), -5000, 5000, 1.0)
    assert measure_fwhm(d) == pytest.approx(1000, abs=0.05)


def test_measure_fwhm_bimodal_is_ambiguous():
    a, b = gaussian(0, 100), gaussian(1000, 100)
    t = np.arange(-1000.0, 2000.0, 1.0) + 0.5
    v = 0.5 * (a.pdf(t) + b.pdf(t))
    with pytest.raises(AmbiguityError):
        measure_fwhm(SampledDensity(-1000.0, 1.0, v / v.sum()))


@given(taus, taus, centres, st.integers(0, 2**32 - 1))
def test_non_negative_everywhere(tau_e, tau_g, t0, seed):
    rng = np.random.default_rng(seed)
    t = rng.uniform(-1e5, 1e5, 10_000)
    for m in (emg(tau_e, tau_g, t0), gaussian(t0, tau_g)):
        v = eval_density(m, t)
        assert np.all(v >= 0) and np.all(np.isfinite(v))


@given(taus, taus, centres)
def test_normalization_by_quadrature(tau_e, tau_g, t0):
    m = emg(tau_e, tau_g, t0)
    lo, hi = m.support()
    dt = min(tau_g, tau_e) / 50
    t = np.arange(lo, hi, dt) + dt / 2
    assert abs(eval_density(m, t).sum() * dt - 1.0) <= 1e-6


@given(taus, taus, centres)
def test_mode_anchored_at_t0(tau_e, tau_g, t0):
    m = emg(tau_e, tau_g, t0)
    dt = 0.5
    t = t0 + np.arange(-400, 401) * dt
    assert abs(t[np.argmax(eval_density(m, t))] - t0) <= dt


@given(taus, taus, st.integers(-2000, 2000))
def test_discretize_shift_equivariance(tau_e, tau_g, cells):
    m = emg(tau_e, tau_g, 0.0)
    dt = 1.0
    lo, hi = analysis_domain(m, dt=dt)
    d = discretize(m, lo, hi, dt)
    ds = discretize(shift_model(m, cells * dt), lo + cells * dt, hi + cells * dt, dt)
    np.testing.assert_allclose(ds.values, d.values, rtol=0, atol=1e-12)


def test_analysis_domain_defaults():
    m = reference_emg()
    span = 690
    assert analysis_domain(m, shift_model(m, 350)) == (1000 - 10 * span, 1000 + 350 + 20 * span)
    g = gaussian(0, 1000)
    sigma = 1000 / (2 * math.sqrt(2 * math.log(2)))
    lo, hi = analysis_domain(g, shift_model(g, 350))
    assert lo <= -8 * sigma < lo + 1 and hi - 1 < 350 + 8 * sigma <= hi
