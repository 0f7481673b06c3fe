"""Monte Carlo detection events and what an eavesdropper can infer from them.

Timestamps are drawn by inverse-CDF sampling on a fine grid, with uniform
jitter inside the selected grid cell. Streams are generated in fixed-size
chunks; chunk ``c`` draws from ``default_rng([seed, c])``, so a stream
depends only on its configuration and seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .binning import BinningScheme, bin_index
from .errors import ParameterError, SizeError
from .info import UNIFORM, BitPrior, ChannelSpec
from .response import DEFAULT_DT, ResponseModel, analysis_domain, discretize

CHUNK_SIZE = 1 << 16


class EventRecord(NamedTuple):
    true_bit: int
    timestamp: float
    bin: int


@dataclass(eq=False)
class EventStream:
    """Column-oriented event list; indexing yields :class:`EventRecord`."""

    bits: np.ndarray
    timestamps: np.ndarray
    bins: np.ndarray
    scheme: BinningScheme | None = None

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.int8)
        self.timestamps = np.asarray(self.timestamps, dtype=float)
        self.bins = np.asarray(self.bins, dtype=np.int64)
        if not (self.bits.shape == self.timestamps.shape == self.bins.shape) or self.bits.ndim != 1:
            raise ParameterError("event columns must be equal-length vectors")

    def __len__(self):
        return self.bits.size

    def __getitem__(self, i):
        return EventRecord(int(self.bits[i]), float(self.timestamps[i]), int(self.bins[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def from_records(cls, records, scheme=None):
        records = list(records)
        if not records:
            return cls(np.zeros(0), np.zeros(0), np.zeros(0), scheme)
        bits, ts, bins = zip(*records)
        return cls(np.array(bits), np.array(ts), np.array(bins), scheme)

    @classmethod
    def from_timestamps(cls, bits, timestamps, scheme: BinningScheme):
        """Bin raw timestamps with ``scheme``."""
        ts = np.asarray(timestamps, dtype=float)
        return cls(bits, ts, np.atleast_1d(bin_index(ts, scheme)), scheme)

    @property
    def n_bins(self) -> int:
        if self.scheme is not None:
            return self.scheme.n_bins
        return int(self.bins.max()) + 1 if len(self) else 0


def _as_stream(events) -> EventStream:
    return events if isinstance(events, EventStream) else EventStream.from_records(events)


class _GridSampler:
    """Inverse-CDF sampler for one model on a fine grid."""

    def __init__(self, model, t_start, t_end, dt):
        n = max(1, math.ceil((t_end - t_start) / dt - 1e-9))
        # shrink the step slightly so the grid ends exactly at t_end
        self.dt = (t_end - t_start) / n
        self.t_start = t_start
        density = discretize(model, t_start, t_end, self.dt)
        cdf = np.cumsum(density.masses)
        self.cdf = cdf / cdf[-1]

    def __call__(self, u, jitter):
        cell = np.searchsorted(self.cdf, u, side="right")
        np.minimum(cell, self.cdf.size - 1, out=cell)
        return self.t_start + (cell + jitter) * self.dt


def _check_seed(seed):
    if not (isinstance(seed, (int, np.integer)) and 0 <= seed < 2**64):
        raise ParameterError(f"seed must be an integer in [0, 2**64), got {seed!r}")


def _chunked(n, seed, draw):
    """Run ``draw(rng, m)`` over fixed chunks and concatenate the columns."""
    parts = []
    for c, start in enumerate(range(0, n, CHUNK_SIZE)):
        rng = np.random.default_rng([int(seed), c])
        parts.append(draw(rng, min(CHUNK_SIZE, n - start)))
    return [np.concatenate(cols) for cols in zip(*parts)]


@dataclass(frozen=True, eq=False)
class SimConfig:
    """Single-party detection stream: two detector models, prior, public binning."""

    model0: ResponseModel
    model1: ResponseModel
    scheme: BinningScheme
    n_events: int
    seed: int = 0
    prior: BitPrior = UNIFORM
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if not (isinstance(self.n_events, (int, np.integer)) and self.n_events >= 1):
            raise ParameterError(f"n_events must be a positive integer, got {self.n_events!r}")
        _check_seed(self.seed)
        if not self.dt > 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")


def simulate_stream(cfg: SimConfig) -> EventStream:
    """Draw ``cfg.n_events`` (bit, timestamp, bin) events."""
    s = cfg.scheme
    samplers = [_GridSampler(m, s.t_start, s.t_end, cfg.dt) for m in (cfg.model0, cfg.model1)]
    p0 = cfg.prior.p0

    def draw(rng, m):
        bits = (rng.random(m) >= p0).astype(np.int8)
        u = rng.random(m)
        jitter = rng.random(m)
        ts = np.where(bits == 0, samplers[0](u, jitter), samplers[1](u, jitter))
        return bits, ts

    bits, ts = _chunked(cfg.n_events, cfg.seed, draw)
    return EventStream(bits, ts, s.indices(ts), s)


def map_rule(spec: ChannelSpec) -> np.ndarray:
    """MAP guess for every bin; ties go to bit 0."""
    score0 = spec.prior.p0 * spec.cond0.probs
    score1 = spec.prior.p1 * spec.cond1.probs
    return (score1 > score0).astype(np.int8)


def map_guess(bin: int, spec: ChannelSpec) -> int:
    """Most probable key bit given the published bin."""
    return int(map_rule(spec)[bin])


def joint_counts(events) -> np.ndarray:
    """2 x n_bins table of (bit, bin) counts."""
    ev = _as_stream(events)
    nb = ev.n_bins
    flat = ev.bits.astype(np.int64) * nb + ev.bins
    return np.bincount(flat, minlength=2 * nb).reshape(2, nb)


def _plugin_mi(counts: np.ndarray) -> float:
    n = counts.sum()
    joint = counts / n
    px = joint.sum(axis=1, keepdims=True)
    pb = joint.sum(axis=0, keepdims=True)
    mask = joint > 0
    mi = np.sum(joint[mask] * np.log2(joint[mask] / (px * pb)[mask]))
    return max(float(mi), 0.0)


def empirical_mi(events) -> float:
    """Plug-in MI (bits) of the empirical (bit, bin) table, no bias correction."""
    ev = _as_stream(events)
    if len(ev) < 2:
        raise SizeError(f"need at least 2 events, got {len(ev)}")
    return _plugin_mi(joint_counts(ev))


def bootstrap_mi_se(events, n_boot: int = 100, seed: int = 0) -> float:
    """Bootstrap standard error of :func:`empirical_mi`.

    Resampling events with replacement is the same as a multinomial draw on
    the joint table, which is what is done here.
    """
    ev = _as_stream(events)
    if len(ev) < 2:
        raise SizeError(f"need at least 2 events, got {len(ev)}")
    counts = joint_counts(ev)
    n = int(counts.sum())
    p = (counts / n).ravel()
    rng = np.random.default_rng(seed)
    reps = [_plugin_mi(rng.multinomial(n, p).reshape(counts.shape)) for _ in range(n_boot)]
    return float(np.std(reps, ddof=1))


def guessing_success(events, spec: ChannelSpec) -> float:
    """Fraction of events whose MAP guess from the bin equals the true bit."""
    ev = _as_stream(events)
    if len(ev) < 1:
        raise SizeError("need at least 1 event")
    guesses = map_rule(spec)[ev.bins]
    return float(np.mean(guesses == ev.bits))


def write_events_csv(events, path):
    ev = _as_stream(events)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["true_bit", "timestamp_ps", "bin"])
        for b, t, k in zip(ev.bits.tolist(), ev.timestamps.tolist(), ev.bins.tolist()):
            w.writerow([b, repr(t), k])


def read_events_csv(path, scheme=None) -> EventStream:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return EventStream(
        np.array([int(r["true_bit"]) for r in rows]),
        np.array([float(r["timestamp_ps"]) for r in rows]),
        np.array([int(r["bin"]) for r in rows]),
        scheme,
    )


@dataclass(eq=False)
class CoincidenceStream:
    """Entangled-pair detections on both sides.

    Pair ``j`` is emitted at ``slot[j] * period``. Bit 0 is detected in the
    ``+`` detectors and bit 1 in the ``-`` detectors of both parties.
    """

    bits: np.ndarray
    slots: np.ndarray
    alice: np.ndarray
    bob: np.ndarray
    period: float

    def alice_times(self, bit):
        return self.alice[self.bits == bit]

    def bob_times(self, bit):
        return self.bob[self.bits == bit]

    def bob_relative(self, bob=None):
        """Bob's detection times measured from the start of each emission slot."""
        bob = self.bob if bob is None else bob
        return bob - self.slots * self.period


def simulate_coincidences(
    alice_model,
    bob_plus,
    bob_minus,
    n_pairs: int,
    seed: int = 0,
    prior: BitPrior = UNIFORM,
    period: float = 100_000.0,
    dt: float = DEFAULT_DT,
) -> CoincidenceStream:
    """Simulate ``n_pairs`` coincidences, one per emission slot.

    Alice's two detectors both follow ``alice_model``. Bob's ``+`` and ``-``
    detectors follow ``bob_plus`` and ``bob_minus``; a delay between those
    two is the leak.
    """
    _check_seed(seed)
    if n_pairs < 1:
        raise ParameterError(f"n_pairs must be >= 1, got {n_pairs}")
    t_start, t_end = analysis_domain(alice_model, bob_plus, bob_minus, dt=dt)
    if t_end - t_start >= period:
        raise ParameterError(f"slot period {period} ps is shorter than the response span")
    sa = _GridSampler(alice_model, t_start, t_end, dt)
    sp = _GridSampler(bob_plus, t_start, t_end, dt)
    sm = _GridSampler(bob_minus, t_start, t_end, dt)
    p0 = prior.p0

    def draw(rng, m):
        bits = (rng.random(m) >= p0).astype(np.int8)
        ta = sa(rng.random(m), rng.random(m))
        u, jitter = rng.random(m), rng.random(m)
        tb = np.where(bits == 0, sp(u, jitter), sm(u, jitter))
        return bits, ta, tb

    bits, ta, tb = _chunked(n_pairs, seed, draw)
    slots = np.arange(n_pairs, dtype=np.int64)
    offset = slots * period
    return CoincidenceStream(bits, slots, offset + ta, offset + tb, float(period))
