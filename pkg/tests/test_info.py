import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from timingleak.binning import BinningScheme, BinProbabilities, bin_density, scheme_for
from timingleak.errors import ParameterError, ShapeError
from timingleak.info import (
    BitPrior,
    ChannelSpec,
    entropy,
    mixture,
    mutual_information_binned,
    mutual_information_continuous,
    mutual_information_sampled,
)
from timingleak.response import analysis_domain, discretize, emg, gaussian, shift_model


def channel(c0, c1, p0=0.5, p1=None):
    s = BinningScheme(1.0, 0.0, 0.0, float(len(c0)))
    prior = BitPrior.from_p0(p0) if p1 is None else BitPrior(p0, p1)
    return ChannelSpec(prior, BinProbabilities(s, c0), BinProbabilities(s, c1))


def test_mixture_identical():
    v = [0.2, 0.5, 0.3]
    np.testing.assert_allclose(mixture(channel(v, v)).probs, v, rtol=0, atol=1e-15)


def test_mixture_degenerate_prior():
    spec = channel([0.7, 0.3], [0.1, 0.9], p0=1.0)
    np.testing.assert_array_equal(mixture(spec).probs, [0.7, 0.3])


def test_mixture_disjoint():
    np.testing.assert_array_equal(mixture(channel([1, 0], [0, 1])).probs, [0.5, 0.5])


def test_mismatched_partitions():
    a = BinningScheme(1.0, 0.0, 0.0, 2.0)
    b = BinningScheme(1.0, 0.5, 0.0, 2.0)
    with pytest.raises(ShapeError):
        ChannelSpec(BitPrior(), BinProbabilities(a, [0.5, 0.5]), BinProbabilities(b, [0.2, 0.3, 0.5]))


def test_mi_independent():
    assert mutual_information_binned(channel([0.3, 0.7], [0.3, 0.7])) == 0.0


def test_mi_perfect():
    assert mutual_information_binned(channel([1, 0], [0, 1])) == pytest.approx(1.0, abs=1e-15)


def test_mi_symmetric_binary_channel():
    # oracle: H(T) - H(T|X) from the joint table written out by hand
    joint = np.array([[0.4, 0.1], [0.1, 0.4]])
    pt = joint.sum(axis=0)
    h_t = -sum(p * math.log2(p) for p in pt)
    h_t_given_x = -sum(0.5 * (c * math.log2(c)) for row in joint / 0.5 for c in row)
    oracle = h_t - h_t_given_x
    assert oracle == pytest.approx(0.27807, abs=1e-5)
    assert mutual_information_binned(channel([0.8, 0.2], [0.2, 0.8])) == pytest.approx(oracle, abs=1e-12)


def test_entropy_values():
    assert entropy(BitPrior(0.5, 0.5)) == 1.0
    assert entropy(BitPrior(1.0, 0.0)) == 0.0
    oracle = -(0.8 * math.log2(0.8) + 0.2 * math.log2(0.2))
    assert entropy(BitPrior(0.8, 0.2)) == pytest.approx(oracle, abs=1e-15)
    assert entropy(BitPrior(0.8, 0.2)) == pytest.approx(0.72193, abs=1e-5)


def test_invalid_prior():
    with pytest.raises(ParameterError):
        BitPrior(0.6, 0.6)


def test_continuous_identical_models():
    for m in (emg(400, 290, 1000), gaussian(0, 1000)):
        assert mutual_information_continuous(BitPrior(), m, m, 1.0) == pytest.approx(0.0, abs=1e-9)


def test_continuous_disjoint_gaussians():
    g = gaussian(0, 20)
    mi = mutual_information_continuous(BitPrior(), g, shift_model(g, 2000), 1.0)
    assert 1.0 - mi < 1e-6


def test_continuous_rejects_coarse_grid():
    g = gaussian(0, 100)
    with pytest.raises(ParameterError):
        mutual_information_continuous(BitPrior(), g, shift_model(g, 50), 10.0)


def test_continuous_against_monte_carlo():
    # oracle: E_x E_{t ~ d_x} log2(d_x(t) / dbar(t)) with exact Gaussian pdfs
    fwhm, delta = 1000.0, 350.0
    sigma = fwhm / (2 * math.sqrt(2 * math.log(2)))
    n = 10**7
    rng = np.random.default_rng(20240501)
    bits = rng.random(n) < 0.5
    t = rng.normal(0.0, sigma, n) + np.where(bits, delta, 0.0)

    def pdf(x, mu):
        return np.exp(-0.5 * ((x - mu) / sigma) ** 2)

    own = np.where(bits, pdf(t, delta), pdf(t, 0.0))
    mix = 0.5 * (pdf(t, 0.0) + pdf(t, delta))
    samples = np.log2(own / mix)
    mc, se = samples.mean(), samples.std(ddof=1) / math.sqrt(n)

    g = gaussian(0, fwhm)
    grid = mutual_information_continuous(BitPrior(), g, shift_model(g, delta), 1.0)
    assert abs(grid - mc) <= 3 * se


def test_grid_halving_convergence():
    g = gaussian(0, 500)
    a = mutual_information_continuous(BitPrior(), g, shift_model(g, 350), 1.0)
    b = mutual_information_continuous(BitPrior(), g, shift_model(g, 350), 0.5)
    assert abs(a - b) < 1e-8


probs = st.lists(st.floats(0.0, 1.0), min_size=2, max_size=12)


def normalized(v):
    v = np.asarray(v) + 1e-12
    return v / v.sum()


@given(probs, probs, st.floats(0.0, 1.0))
def test_bounds(a, b, p0):
    n = min(len(a), len(b))
    spec = channel(normalized(a[:n]), normalized(b[:n]), p0)
    mi = mutual_information_binned(spec)
    assert 0.0 <= mi <= entropy(spec.prior) + 1e-12


@given(probs, probs, st.floats(0.0, 1.0))
def test_label_symmetry_exact(a, b, p0):
    n = min(len(a), len(b))
    c0, c1 = normalized(a[:n]), normalized(b[:n])
    p1 = 1.0 - p0
    assert mutual_information_binned(channel(c0, c1, p0, p1)) == mutual_information_binned(
        channel(c1, c0, p1, p0)
    )


@given(st.floats(1.0, 3000.0), st.floats(0.0, 0.999), st.floats(-1500, 1500), st.floats(20, 2000), st.floats(0.05, 0.95))
def test_data_processing(width, frac, delta, fwhm, p0):
    g = gaussian(0, fwhm)
    g1 = shift_model(g, delta)
    lo, hi = analysis_domain(g, g1)
    d0, d1 = discretize(g, lo, hi, 1.0), discretize(g1, lo, hi, 1.0)
    s = scheme_for(d0, width, frac * width)
    prior = BitPrior.from_p0(p0)
    binned = mutual_information_binned(ChannelSpec(prior, bin_density(d0, s), bin_density(d1, s)))
    assert binned <= mutual_information_continuous(prior, g, g1, 1.0) + 1e-9


@given(st.integers(1, 1000), st.floats(0.0, 0.999), st.floats(-1500, 1500))
def test_refinement_never_decreases(half_width, frac, delta):
    m = emg(400, 290, 1000)
    m1 = shift_model(m, delta)
    lo, hi = analysis_domain(m, m1)
    d0, d1 = discretize(m, lo, hi), discretize(m1, lo, hi)

    def mi(w):
        s = scheme_for(d0, w, frac * 2 * half_width)
        return mutual_information_binned(ChannelSpec(BitPrior(), bin_density(d0, s), bin_density(d1, s)))

    assert mi(half_width) >= mi(2 * half_width) - 1e-12


@given(st.floats(1.0, 2000.0), st.floats(30, 2000))
def test_delay_sign_symmetry(delta, fwhm):
    m = emg(400, 290, 1000)
    pos = mutual_information_continuous(BitPrior(), m, shift_model(m, delta), 1.0)
    neg = mutual_information_continuous(BitPrior(), m, shift_model(m, -delta), 1.0)
    assert pos == pytest.approx(neg, abs=1e-9)


def test_sampled_grid_mismatch():
    g = gaussian(0, 100)
    with pytest.raises(ShapeError):
        mutual_information_sampled(BitPrior(), discretize(g, -1000, 1000), discretize(g, -1001, 1000))


def test_subnormal_masses_stay_finite():
    tiny = 5e-324
    c0 = np.array([1.0 - 2 * tiny, tiny, tiny])
    c1 = np.array([0.0, 0.0, 1.0])
    s = BinningScheme(1.0, 0.0, 0.0, 3.0)
    spec = ChannelSpec(BitPrior.from_p0(0.1), BinProbabilities(s, c0), BinProbabilities(s, c1))
    mi = mutual_information_binned(spec)
    assert np.isfinite(mi) and 0.0 <= mi <= 1.0


def test_continuous_mi_finite_for_far_emg_tails():
    m0 = emg(759.8644989184171, 104.61867544719894, -130.79120425677843)
    m1 = shift_model(m0, 1369.6982497)
    mi = mutual_information_continuous(BitPrior.from_p0(0.08027639898924754), m0, m1)
    assert np.isfinite(mi) and 0.0 < mi < 1.0
