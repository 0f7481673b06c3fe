"""Detector timing-response densities.

Two families are supported: the exponentially modified Gaussian (EMG), the
usual shape of a SPAD timing histogram, and a plain Gaussian. All times are
in picoseconds and densities in 1/ps.

The EMG is the Gaussian of standard deviation ``tau_g`` convolved with a
one-sided exponential of decay ``tau_e``. It is translated so that its mode,
located by root finding, sits exactly at ``t0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize, special, stats

from .errors import AmbiguityError, ParameterError, TruncationError

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))

# Domain margins in units of (tau_e + tau_g) for the EMG and of sigma for
# the Gaussian; both leave < 1e-9 of the mass outside.
EMG_LEFT_MARGIN = 10.0
EMG_RIGHT_MARGIN = 20.0
GAUSS_MARGIN = 8.0

DEFAULT_DT = 1.0


def _emg_mode_offset(tau_e: float, tau_g: float) -> float:
    """Distance from the Gaussian centre to the EMG mode."""
    lam_sigma = tau_g / tau_e

    # d/dx log f = 0  <=>  phi(z) / Phi(z) = lam * sigma, with
    # z = (x - mu) / sigma - lam * sigma. The inverse Mills ratio is
    # strictly decreasing, so the root is unique.
    def score(z):
        return -0.5 * z * z - 0.5 * math.log(2.0 * math.pi) - special.log_ndtr(z) - math.log(lam_sigma)

    z = optimize.brentq(score, -(lam_sigma + 10.0), 40.0, xtol=1e-14, rtol=1e-15)
    return tau_g * (z + lam_sigma)


@dataclass(frozen=True)
class EmgParams:
    """Exponentially modified Gaussian parameters (ps)."""

    tau_e: float
    tau_g: float
    t0: float

    def __post_init__(self):
        for name in ("tau_e", "tau_g"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be > 0, got {value}")
        if not np.isfinite(self.t0):
            raise ParameterError(f"t0 must be finite, got {self.t0}")


@dataclass(frozen=True)
class GaussianParams:
    """Gaussian response with mean ``mu`` and full width at half maximum ``fwhm`` (ps)."""

    mu: float
    fwhm: float

    def __post_init__(self):
        if not (np.isfinite(self.fwhm) and self.fwhm > 0):
            raise ParameterError(f"fwhm must be > 0, got {self.fwhm}")
        if not np.isfinite(self.mu):
            raise ParameterError(f"mu must be finite, got {self.mu}")

    @property
    def sigma(self) -> float:
        return self.fwhm / FWHM_PER_SIGMA


@dataclass(frozen=True)
class ResponseModel:
    """A detector timing-response density.

    Use :func:`emg` or :func:`gaussian` to build one.
    """

    kind: str
    params: EmgParams | GaussianParams
    _loc: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "emg":
            if not isinstance(self.params, EmgParams):
                raise ParameterError("emg model needs EmgParams")
            p = self.params
            loc = p.t0 - _emg_mode_offset(p.tau_e, p.tau_g)
        elif self.kind == "gaussian":
            if not isinstance(self.params, GaussianParams):
                raise ParameterError("gaussian model needs GaussianParams")
            loc = self.params.mu
        else:
            raise ParameterError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "_loc", loc)

    @property
    def peak(self) -> float:
        """Location of the density maximum."""
        return self.params.t0 if self.kind == "emg" else self.params.mu

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "gaussian":
            sigma = self.params.sigma
            z = (t - self._loc) / sigma
            return np.exp(-0.5 * z * z) / (sigma * math.sqrt(2.0 * math.pi))
        tau_e, sigma = self.params.tau_e, self.params.tau_g
        lam = 1.0 / tau_e
        # log-space form avoids exp overflow far into the left tail
        log_f = (
            math.log(lam)
            + lam * (self._loc - t)
            + 0.5 * (lam * sigma) ** 2
            + special.log_ndtr((t - self._loc) / sigma - lam * sigma)
        )
        return np.exp(log_f)

    def cdf(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "gaussian":
            return special.ndtr((t - self._loc) / self.params.sigma)
        p = self.params
        return stats.exponnorm.cdf(t, p.tau_e / p.tau_g, loc=self._loc, scale=p.tau_g)

    def support(self) -> tuple[float, float]:
        """Interval holding all but a negligible (< 1e-9) fraction of the mass."""
        if self.kind == "emg":
            span = self.params.tau_e + self.params.tau_g
            return self.peak - EMG_LEFT_MARGIN * span, self.peak + EMG_RIGHT_MARGIN * span
        sigma = self.params.sigma
        return self.peak - GAUSS_MARGIN * sigma, self.peak + GAUSS_MARGIN * sigma


def emg(tau_e: float, tau_g: float, t0: float) -> ResponseModel:
    return ResponseModel("emg", EmgParams(float(tau_e), float(tau_g), float(t0)))


def gaussian(mu: float, fwhm: float) -> ResponseModel:
    return ResponseModel("gaussian", GaussianParams(float(mu), float(fwhm)))


def reference_emg() -> ResponseModel:
    """Reference detector: tau_e = 400 ps, tau_g = 290 ps, peak at 1000 ps."""
    return emg(400.0, 290.0, 1000.0)


def eval_density(model: ResponseModel, t):
    """Density of ``model`` at time(s) ``t``."""
    return model.pdf(t)


def shift_model(model: ResponseModel, delta: float) -> ResponseModel:
    """Return ``model`` delayed by ``delta`` ps."""
    p = model.params
    if model.kind == "emg":
        return ResponseModel("emg", replace(p, t0=p.t0 + delta))
    return ResponseModel("gaussian", replace(p, mu=p.mu + delta))


def analysis_domain(*models, dt: float = DEFAULT_DT) -> tuple[float, float]:
    """Default analysis domain covering every model, snapped outward to multiples of ``dt``.

    For a model and a copy shifted by ``delta_t0`` this is
    ``[t0 - 10 (tau_e + tau_g), t0 + delta_t0 + 20 (tau_e + tau_g)]`` (EMG) or
    ``[mu - 8 sigma, mu + delta_t0 + 8 sigma]`` (Gaussian).
    """
    if not models:
        raise ParameterError("analysis_domain needs at least one model")
    lo = min(m.support()[0] for m in models)
    hi = max(m.support()[1] for m in models)
    return math.floor(lo / dt) * dt, math.ceil(hi / dt) * dt


@dataclass(frozen=True, eq=False)
class SampledDensity:
    """Density sampled at the centres of a uniform fine grid.

    ``values[i]`` is the density on ``[t_start + i dt, t_start + (i + 1) dt)``.
    """

    t_start: float
    dt: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if not self.dt > 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if values.ndim != 1 or values.size == 0:
            raise ParameterError("values must be a non-empty vector")
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ParameterError("density values must be finite and non-negative")
        if abs(values.sum() * self.dt - 1.0) > 1e-6:
            raise ParameterError(f"density integrates to {values.sum() * self.dt}, not 1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def t_end(self) -> float:
        return self.t_start + self.n * self.dt

    @property
    def centers(self) -> np.ndarray:
        return self.t_start + (np.arange(self.n) + 0.5) * self.dt

    @property
    def masses(self) -> np.ndarray:
        """Probability of each fine cell."""
        return self.values * self.dt


def discretize(model, t_start: float, t_end: float, dt: float = DEFAULT_DT) -> SampledDensity:
    """Sample ``model`` at cell centres of ``[t_start, t_end)`` and renormalize.

    ``model`` needs ``pdf`` and ``cdf`` methods. Raises
    :class:`TruncationError` if the domain holds less than ``1 - 1e-6`` of
    the model's mass.
    """
    if not dt > 0:
        raise ParameterError(f"dt must be > 0, got {dt}")
    if not t_end > t_start:
        raise ParameterError(f"empty domain [{t_start}, {t_end})")
    n = int(math.ceil((t_end - t_start) / dt - 1e-9))
    covered = float(model.cdf(t_start + n * dt) - model.cdf(t_start))
    if covered < 1.0 - 1e-6:
        raise TruncationError(
            f"domain [{t_start}, {t_start + n * dt}) holds only {covered:.9f} of the mass"
        )
    values = np.asarray(model.pdf(t_start + (np.arange(n) + 0.5) * dt), dtype=float)
    values = values / (values.sum() * dt)
    return SampledDensity(float(t_start), float(dt), values)


def _half_max_crossing(f, inside: float, step: float, half: float) -> float:
    outside = inside + step
    while f(outside) >= half:
        outside += step
    a, b = sorted((inside, outside))
    return optimize.bisect(lambda t: f(t) - half, a, b, xtol=1e-4)


def measure_fwhm(model) -> float:
    """Full width at half maximum, in ps.

    Accepts a :class:`ResponseModel` (half-max points found by bisection to
    1e-4 ps) or a :class:`SampledDensity` (linear interpolation between
    cell centres). A sampled density whose above-half-max region is not one
    contiguous run raises :class:`AmbiguityError`.
    """
    if isinstance(model, SampledDensity):
        v = model.values
        half = v.max() / 2.0
        above = np.flatnonzero(v >= half)
        if above[-1] - above[0] + 1 != above.size:
            raise AmbiguityError("density has several separated regions above half maximum")
        t = model.centers
        i, j = above[0], above[-1]
        left = t[i] if i == 0 else np.interp(half, [v[i - 1], v[i]], [t[i - 1], t[i]])
        right = t[j] if j == v.size - 1 else np.interp(half, [v[j + 1], v[j]], [t[j + 1], t[j]])
        return float(right - left)

    def f(t):
        return float(model.pdf(t))

    peak = model.peak
    half = f(peak) / 2.0
    lo, hi = model.support()
    step = (hi - lo) / 50.0
    left = _half_max_crossing(f, peak, -step, half)
    right = _half_max_crossing(f, peak, step, half)
    return right - left
