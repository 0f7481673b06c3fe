"""Cross-correlograms and the delay-compensation countermeasure.

Bob histograms the lag ``b - a`` between Alice's and his own detections
separately for ``+`` and ``-`` coincidences. A relative delay between his
two detectors shows up as an offset between the two peaks; shifting one
detector's timestamps by that offset before anything is published removes
the timing signal.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoSignalError, OrderingError, ParameterError, ShapeError

DEFAULT_LAG_WINDOW = 10_000.0
DEFAULT_LAG_STEP = 10.0
MIN_PEAK_COUNTS = 10


@dataclass(frozen=True, eq=False)
class Correlogram:
    """Coincidence counts per lag cell; cell ``k`` is centred on ``lag_start + k * lag_step``."""

    lag_start: float
    lag_step: float
    counts: np.ndarray

    def __post_init__(self):
        if not self.lag_step > 0:
            raise ParameterError(f"lag_step must be > 0, got {self.lag_step}")
        counts = np.asarray(self.counts)
        if counts.ndim != 1 or np.any(counts < 0) or not np.issubdtype(counts.dtype, np.integer):
            raise ParameterError("counts must be a vector of non-negative integers")
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @property
    def lags(self) -> np.ndarray:
        return self.lag_start + np.arange(self.counts.size) * self.lag_step

    def __add__(self, other):
        if (other.lag_start, other.lag_step, other.counts.size) != (
            self.lag_start,
            self.lag_step,
            self.counts.size,
        ):
            raise ShapeError("correlograms have different lag grids")
        return Correlogram(self.lag_start, self.lag_step, self.counts + other.counts)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lag_ps", "count"])
            for lag, c in zip(self.lags.tolist(), self.counts.tolist()):
                w.writerow([repr(lag), c])


@dataclass(frozen=True)
class OffsetEstimate:
    delta: float
    confidence_width: float


def _check_sorted(name, t):
    if t.ndim != 1 or t.size == 0:
        raise ParameterError(f"{name} must be a non-empty 1-D list of times")
    if np.any(np.diff(t) < 0):
        raise OrderingError(f"{name} is not sorted")


def build_correlogram(times_a, times_b, lag_window=DEFAULT_LAG_WINDOW, lag_step=DEFAULT_LAG_STEP):
    """Histogram of ``b - a`` over all pairs with ``|b - a| <= lag_window``.

    The partner window of each ``a`` is located by binary search on the
    sorted ``times_b``; since ``times_a`` is sorted too, both window
    pointers only move forward. Pairs outside the window are never
    formed.
    """
    a = np.asarray(times_a, dtype=float)
    b = np.asarray(times_b, dtype=float)
    _check_sorted("times_a", a)
    _check_sorted("times_b", b)
    if not lag_step > 0:
        raise ParameterError(f"lag_step must be > 0, got {lag_step}")
    if not lag_window >= 0:
        raise ParameterError(f"lag_window must be >= 0, got {lag_window}")

    half = math.floor(lag_window / lag_step + 1e-9)
    lag_start = -half * lag_step
    n_cells = 2 * half + 1

    lo = np.searchsorted(b, a - lag_window, side="left")
    hi = np.searchsorted(b, a + lag_window, side="right")
    per_a = hi - lo
    total = int(per_a.sum())
    if total == 0:
        return Correlogram(lag_start, lag_step, np.zeros(n_cells, dtype=np.int64))
    ia = np.repeat(np.arange(a.size), per_a)
    # position of each pair inside its a-window
    within = np.arange(total) - np.repeat(np.cumsum(per_a) - per_a, per_a)
    lags = b[lo[ia] + within] - a[ia]
    cells = np.rint((lags - lag_start) / lag_step).astype(np.int64)
    np.clip(cells, 0, n_cells - 1, out=cells)
    return Correlogram(lag_start, lag_step, np.bincount(cells, minlength=n_cells))


SMOOTH_CELLS = 9


def _window_moments(corr: Correlogram, lo: float, hi: float):
    """Count-weighted mean and rms of lags in ``[lo, hi]``, cells weighted by overlap."""
    step = corr.lag_step
    cell_lo = corr.lags - step / 2
    seg_lo = np.maximum(cell_lo, lo)
    seg_hi = np.minimum(cell_lo + step, hi)
    w = np.clip(seg_hi - seg_lo, 0.0, None) / step * corr.counts
    mid = 0.5 * (seg_lo + seg_hi)
    total = w.sum()
    mean = float(np.dot(w, mid) / total)
    rms = float(np.sqrt(np.dot(w, (mid - mean) ** 2) / total))
    return mean, rms, float(total)


def _half_max_run(corr: Correlogram):
    """Edges of the above-half-max run around the peak of the smoothed counts."""
    c = corr.counts
    k_raw = int(np.argmax(c))
    if c[k_raw] < MIN_PEAK_COUNTS or c[k_raw] == c.min():
        raise NoSignalError(f"no peak: max count {int(c[k_raw])}, min count {int(c.min())}")
    width = min(SMOOTH_CELLS, c.size)
    s = np.convolve(c, np.ones(width) / width, mode="same")
    k = int(np.argmax(s))
    half = s[k] / 2.0
    left = k
    while left > 0 and s[left - 1] >= half:
        left -= 1
    right = k
    while right < s.size - 1 and s[right + 1] >= half:
        right += 1
    step, lags = corr.lag_step, corr.lags
    x_lo = lags[left] - step / 2
    if left > 0:
        x_lo = lags[left - 1] + (half - s[left - 1]) / (s[left] - s[left - 1]) * step
    x_hi = lags[right] + step / 2
    if right < s.size - 1:
        x_hi = lags[right] + (s[right] - half) / (s[right] - s[right + 1]) * step
    return x_lo, x_hi


def peak_centroid(corr: Correlogram, max_iter: int = 200):
    """Peak location, rms width and counts of the above-half-max region.

    The region has the width of the half-max run of the (lightly smoothed)
    correlogram and is re-centred on its own centroid until it stops
    moving. Returns ``(centroid, rms, counts_in_region)``.
    """
    x_lo, x_hi = _half_max_run(corr)
    half_width = max((x_hi - x_lo) / 2.0, corr.lag_step / 2.0)
    center = 0.5 * (x_lo + x_hi)
    for _ in range(max_iter):
        mean, rms, total = _window_moments(corr, center - half_width, center + half_width)
        if abs(mean - center) < 1e-9 * corr.lag_step:
            break
        center = mean
    return mean, rms, total


def estimate_offset(corr_plus: Correlogram, corr_minus: Correlogram) -> OffsetEstimate:
    """Lag of the ``+`` peak minus lag of the ``-`` peak."""
    cp, rp, np_ = peak_centroid(corr_plus)
    cm, rm, nm = peak_centroid(corr_minus)
    width = math.hypot(rp / math.sqrt(np_), rm / math.sqrt(nm))
    return OffsetEstimate(cp - cm, width)


def compensate(times, delta: float) -> np.ndarray:
    """Shift every timestamp by ``-delta``."""
    return np.asarray(times, dtype=float) - delta


@dataclass(frozen=True, eq=False)
class CompensationResult:
    estimate: OffsetEstimate
    residual: OffsetEstimate
    before: tuple  # (plus, minus) correlograms
    after: tuple
    bob_compensated: np.ndarray


def compensate_stream(stream, lag_window=DEFAULT_LAG_WINDOW, lag_step=DEFAULT_LAG_STEP):
    """Estimate Bob's +/- offset from a :class:`~timingleak.events.CoincidenceStream` and remove it.

    The shift is applied to Bob's ``+`` detector. The residual offset is
    re-estimated from correlograms rebuilt on the compensated times.
    """
    a_plus, a_minus = stream.alice_times(0), stream.alice_times(1)
    b_plus, b_minus = stream.bob_times(0), stream.bob_times(1)
    before = (
        build_correlogram(a_plus, b_plus, lag_window, lag_step),
        build_correlogram(a_minus, b_minus, lag_window, lag_step),
    )
    est = estimate_offset(*before)
    b_plus_c = compensate(b_plus, est.delta)
    after = (build_correlogram(a_plus, b_plus_c, lag_window, lag_step), before[1])
    residual = estimate_offset(*after)
    bob = stream.bob.copy()
    bob[stream.bits == 0] = b_plus_c
    return CompensationResult(est, residual, before, after, bob)
