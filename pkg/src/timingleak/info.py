"""Mutual information between a key bit and its (binned) detection time.

All quantities are in bits. The binned and continuous variants share one
kernel, the prior-weighted KL divergence of each conditional from the
mixture, with the convention ``0 log 0 = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .binning import BinProbabilities
from .errors import ParameterError, ShapeError
from .response import DEFAULT_DT, SampledDensity, analysis_domain, discretize, measure_fwhm


@dataclass(frozen=True)
class BitPrior:
    p0: float = 0.5
    p1: float = 0.5

    def __post_init__(self):
        if self.p0 < 0 or self.p1 < 0 or abs(self.p0 + self.p1 - 1.0) > 1e-12:
            raise ParameterError(f"invalid bit prior ({self.p0}, {self.p1})")

    @classmethod
    def from_p0(cls, p0: float) -> "BitPrior":
        return cls(p0, 1.0 - p0)


UNIFORM = BitPrior()


@dataclass(frozen=True, eq=False)
class ChannelSpec:
    """Prior and the two per-bit conditionals, on a shared partition."""

    prior: BitPrior
    cond0: BinProbabilities
    cond1: BinProbabilities

    def __post_init__(self):
        if self.cond0.scheme != self.cond1.scheme:
            raise ShapeError("conditionals are binned with different schemes")

    @property
    def scheme(self):
        return self.cond0.scheme


def entropy(prior: BitPrior) -> float:
    """Binary entropy of the key bit."""
    p = np.array([prior.p0, prior.p1])
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum()) + 0.0


def _kl_bits(p: np.ndarray, q: np.ndarray) -> float:
    # q >= prior * p, so q == 0 < p only when a subnormal p underflows in
    # the mixture; such a term is below 1e-300 bits
    mask = (p > 0) & (q > 0)
    return float(np.sum(p[mask] * np.log2(p[mask] / q[mask])))


def _mi_from_vectors(p0: float, p1: float, c0: np.ndarray, c1: np.ndarray) -> float:
    if c0.shape != c1.shape:
        raise ShapeError(f"conditional shapes differ: {c0.shape} vs {c1.shape}")
    mix = p0 * c0 + p1 * c1
    mi = 0.0
    # a bit with zero prior contributes nothing, and its conditional may be
    # nonzero where the mixture vanishes
    if p0 > 0:
        mi += p0 * _kl_bits(c0, mix)
    if p1 > 0:
        mi += p1 * _kl_bits(c1, mix)
    return max(mi, 0.0)


def mixture(spec: ChannelSpec) -> BinProbabilities:
    """Bin distribution of the detection time averaged over the key bit."""
    p = spec.prior
    probs = p.p0 * spec.cond0.probs + p.p1 * spec.cond1.probs
    return BinProbabilities(spec.scheme, probs)


def mutual_information_binned(spec: ChannelSpec) -> float:
    """I(X;T) for the binned detection time T."""
    return _mi_from_vectors(spec.prior.p0, spec.prior.p1, spec.cond0.probs, spec.cond1.probs)


def mutual_information_sampled(prior: BitPrior, d0: SampledDensity, d1: SampledDensity) -> float:
    """Fine-grid quadrature of I(X;T) for two densities on one grid."""
    if d0.n != d1.n or d0.t_start != d1.t_start or d0.dt != d1.dt:
        raise ShapeError("sampled densities are on different grids")
    return _mi_from_vectors(prior.p0, prior.p1, d0.masses, d1.masses)


def mutual_information_continuous(prior: BitPrior, m0, m1, dt: float = DEFAULT_DT) -> float:
    """I(X;T) for the unbinned detection time.

    Both models are sampled on their joint default analysis domain with
    step ``dt``, which must not exceed 1/20 of the narrower FWHM. Every
    binning of the same grid gives at most this value.
    """
    min_fwhm = min(measure_fwhm(m0), measure_fwhm(m1))
    if dt > min_fwhm / 20.0 * (1 + 1e-6):
        raise ParameterError(f"dt={dt} ps is coarser than FWHM/20 = {min_fwhm / 20.0:.4g} ps")
    t_start, t_end = analysis_domain(m0, m1, dt=dt)
    d0 = discretize(m0, t_start, t_end, dt)
    d1 = discretize(m1, t_start, t_end, dt)
    return mutual_information_sampled(prior, d0, d1)
