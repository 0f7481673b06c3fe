"""Uniform binning of the time axis.

A scheme places bin edges at ``t_start + phase + k * width`` inside the
analysis domain ``[t_start, t_end]``. The partial cells at either end of the
domain are kept as bins of their own, so index 0 is the leading partial
cell whenever ``phase > 0``. Intervals are half-open: a timestamp on an edge
belongs to the bin on its right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BinRangeError, ParameterError, ResolutionError
from .response import SampledDensity

# Phases are snapped to this grid (ps) after wrapping into [0, width), so
# phi and phi + width give bit-identical schemes.
PHASE_QUANTUM_DIGITS = 6


@dataclass(frozen=True)
class BinningScheme:
    """Bin width, start phase and analysis domain (all in ps).

    ``phase`` may be given outside ``[0, width)``; it is wrapped on
    construction.
    """

    width: float
    phase: float
    t_start: float
    t_end: float

    def __post_init__(self):
        if not (np.isfinite(self.width) and self.width > 0):
            raise ParameterError(f"bin width must be > 0, got {self.width}")
        if not (np.isfinite(self.t_start) and np.isfinite(self.t_end) and self.t_end > self.t_start):
            raise ParameterError(f"empty binning domain [{self.t_start}, {self.t_end}]")
        if not np.isfinite(self.phase):
            raise ParameterError(f"phase must be finite, got {self.phase}")
        phase = round(math.fmod(self.phase, self.width), PHASE_QUANTUM_DIGITS)
        if phase < 0:
            phase = round(phase + self.width, PHASE_QUANTUM_DIGITS)
        if phase >= self.width:
            phase = 0.0
        object.__setattr__(self, "phase", float(phase) + 0.0)

    @classmethod
    def from_angle(cls, width, angle, t_start, t_end):
        """Build a scheme whose phase is given in radians (2 pi per bin width)."""
        return cls(width, width * angle / (2.0 * math.pi), t_start, t_end)

    @property
    def phase_angle(self) -> float:
        return 2.0 * math.pi * self.phase / self.width

    @property
    def _offset(self) -> int:
        return 1 if self.phase > 0 else 0

    @property
    def n_bins(self) -> int:
        # index of a point just inside t_end, plus one
        last = math.ceil((self.t_end - self.t_start - self.phase) / self.width) - 1
        return last + self._offset + 1

    def edges(self) -> np.ndarray:
        """All bin edges, including both domain ends."""
        k = np.arange(self.n_bins + 1)
        inner = self.t_start + self.phase + k * self.width
        inner = inner[(inner > self.t_start) & (inner < self.t_end)]
        return np.concatenate(([self.t_start], inner, [self.t_end]))

    def indices(self, t) -> np.ndarray:
        """Vectorized :func:`bin_index` without the range check."""
        t = np.asarray(t, dtype=float)
        idx = np.floor((t - self.t_start - self.phase) / self.width).astype(np.int64) + self._offset
        return np.clip(idx, 0, self.n_bins - 1)


@dataclass(frozen=True, eq=False)
class BinProbabilities:
    """Probability of each bin of ``scheme``."""

    scheme: BinningScheme
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (self.scheme.n_bins,):
            raise ParameterError(f"expected {self.scheme.n_bins} bins, got shape {probs.shape}")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
            raise ParameterError("bin probabilities must be non-negative and sum to 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)


def bin_index(t, scheme: BinningScheme):
    """Index of the bin holding ``t``.

    ``t`` may be a scalar or an array. ``t == t_end`` maps to the last bin.
    """
    arr = np.asarray(t, dtype=float)
    if np.any((arr < scheme.t_start) | (arr > scheme.t_end)) or not np.all(np.isfinite(arr)):
        raise BinRangeError(f"time outside binning domain [{scheme.t_start}, {scheme.t_end}]")
    idx = scheme.indices(arr)
    return int(idx) if idx.ndim == 0 else idx


def bin_density(density: SampledDensity, scheme: BinningScheme) -> BinProbabilities:
    """Aggregate the mass of each fine-grid cell into the bin holding its centre."""
    if scheme.width < density.dt:
        raise ResolutionError(f"bin width {scheme.width} ps is below the grid step {density.dt} ps")
    tol = 1e-9 * density.dt
    if density.t_start < scheme.t_start - tol or density.t_end > scheme.t_end + tol:
        raise BinRangeError("binning domain does not cover the density grid")
    idx = scheme.indices(density.centers)
    probs = np.bincount(idx, weights=density.masses, minlength=scheme.n_bins)
    return BinProbabilities(scheme, probs / probs.sum())


def scheme_for(density: SampledDensity, width: float, phase: float = 0.0) -> BinningScheme:
    """Scheme over the same domain as ``density``."""
    return BinningScheme(width, phase, density.t_start, density.t_end)


def bin_lengths(scheme: BinningScheme) -> np.ndarray:
    return np.diff(scheme.edges())
