"""One- and two-parameter sweeps of the binned leakage.

Each row builds the bit-0 detector model and a copy delayed by
``delta_t0``, samples both on their joint analysis domain, bins them, and
evaluates the mutual information. Rows are independent; results keep the
order of the axis grid.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .binning import PHASE_QUANTUM_DIGITS, BinningScheme, bin_density
from .errors import ParameterError, SizeError, SweepError
from .info import BitPrior, ChannelSpec, mutual_information_binned, mutual_information_sampled
from .response import DEFAULT_DT, analysis_domain, discretize, emg, gaussian, shift_model

AXES = ("bin_width", "phase", "fwhm", "delta_t0")

# phase values on an axis are angles (2 pi per bin width); everything else is ps
AXIS_COLUMNS = {
    "bin_width": "bin_width_ps",
    "phase": "phase_rad",
    "fwhm": "fwhm_ps",
    "delta_t0": "delta_t0_ps",
}


@dataclass(frozen=True)
class Scenario:
    """Detector pair, prior and binning shared by every row of a sweep."""

    model: str = "emg"
    tau_e: float = 400.0
    tau_g: float = 290.0
    t0: float = 1000.0
    mu: float = 0.0
    fwhm: float = 1000.0
    delta_t0: float = 350.0
    p0: float = 0.5
    bin_width: float = 500.0
    phase: float = 0.0  # ps
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if self.model not in ("emg", "gaussian"):
            raise ParameterError(f"model must be 'emg' or 'gaussian', got {self.model!r}")
        if not self.dt > 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        BitPrior.from_p0(self.p0)
        self.models()
        BinningScheme(self.bin_width, self.phase, 0.0, 1.0)

    @property
    def prior(self) -> BitPrior:
        return BitPrior.from_p0(self.p0)

    def models(self):
        """The bit-0 detector and the bit-1 detector delayed by ``delta_t0``."""
        if self.model == "emg":
            m0 = emg(self.tau_e, self.tau_g, self.t0)
        else:
            m0 = gaussian(self.mu, self.fwhm)
        return m0, shift_model(m0, self.delta_t0)

    def densities(self):
        m0, m1 = self.models()
        t_start, t_end = analysis_domain(m0, m1, dt=self.dt)
        return discretize(m0, t_start, t_end, self.dt), discretize(m1, t_start, t_end, self.dt)

    def channel(self) -> ChannelSpec:
        d0, d1 = self.densities()
        scheme = BinningScheme(self.bin_width, self.phase, d0.t_start, d0.t_end)
        return ChannelSpec(self.prior, bin_density(d0, scheme), bin_density(d1, scheme))


@dataclass(frozen=True)
class Axis:
    name: str
    values: tuple

    def __post_init__(self):
        if self.name not in AXES:
            raise ParameterError(f"unknown sweep axis {self.name!r}; expected one of {AXES}")
        values = tuple(float(v) for v in self.values)
        if not values:
            raise ParameterError(f"axis {self.name} has no values")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ParameterError(f"axis {self.name} values must be strictly increasing")
        object.__setattr__(self, "values", values)

    @property
    def column(self) -> str:
        return AXIS_COLUMNS[self.name]


@dataclass(frozen=True)
class SweepSpec:
    base: Scenario
    axis1: Axis
    axis2: Axis | None = None
    workers: int = field(default=1, compare=False)

    def __post_init__(self):
        if self.axis2 is not None and self.axis2.name == self.axis1.name:
            raise ParameterError("the two sweep axes must differ")
        if self.base.model == "emg" and "fwhm" in self.axis_names:
            raise ParameterError("the fwhm axis needs the gaussian model")

    @property
    def axis_names(self):
        return [a.name for a in (self.axis1, self.axis2) if a is not None]

    def grid(self):
        if self.axis2 is None:
            return [(v, None) for v in self.axis1.values]
        return [(v1, v2) for v1 in self.axis1.values for v2 in self.axis2.values]

    def scenario_at(self, v1, v2=None) -> Scenario:
        """Base scenario with the swept values substituted."""
        values = {self.axis1.name: v1}
        if self.axis2 is not None:
            values[self.axis2.name] = v2
        angle = values.pop("phase", None)
        sc = replace(self.base, **values)
        if angle is not None:
            sc = replace(sc, phase=sc.bin_width * angle / (2.0 * math.pi))
        return sc


class Row(NamedTuple):
    value1: float
    value2: float | None
    mi_bits: float


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list

    @property
    def mi(self) -> np.ndarray:
        return np.array([r.mi_bits for r in self.rows])

    def columns(self):
        cols = [self.spec.axis1.column]
        if self.spec.axis2 is not None:
            cols.append(self.spec.axis2.column)
        if "phase" in self.spec.axis_names:
            cols.append("phase_ps")
        return cols + ["mi_bits"]

    def records(self):
        """Rows as lists matching :meth:`columns`."""
        out = []
        for r in self.rows:
            rec = [r.value1] if self.spec.axis2 is None else [r.value1, r.value2]
            if "phase" in self.spec.axis_names:
                rec.append(round(self.spec.scenario_at(r.value1, r.value2).phase, PHASE_QUANTUM_DIGITS))
            out.append(rec + [r.mi_bits])
        return out

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns())
            for rec in self.records():
                w.writerow([repr(float(x)) for x in rec])


def _density_key(sc: Scenario):
    d = asdict(sc)
    for k in ("p0", "bin_width", "phase"):
        d.pop(k)
    return tuple(sorted(d.items()))


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate the binned MI at every grid point of ``spec``."""
    grid = spec.grid()
    scenarios = []
    for i, (v1, v2) in enumerate(grid):
        try:
            scenarios.append(spec.scenario_at(v1, v2))
        except Exception as exc:
            raise SweepError(f"row {i} ({_describe(spec, v1, v2)}): {exc}") from exc

    # sample each distinct detector pair once, in grid order
    cache = {}
    for i, sc in enumerate(scenarios):
        key = _density_key(sc)
        if key not in cache:
            try:
                cache[key] = sc.densities()
            except Exception as exc:
                raise SweepError(f"row {i} ({_describe(spec, *grid[i])}): {exc}") from exc

    def evaluate(i):
        sc = scenarios[i]
        try:
            d0, d1 = cache[_density_key(sc)]
            scheme = BinningScheme(sc.bin_width, sc.phase, d0.t_start, d0.t_end)
            chan = ChannelSpec(sc.prior, bin_density(d0, scheme), bin_density(d1, scheme))
            return Row(grid[i][0], grid[i][1], mutual_information_binned(chan))
        except Exception as exc:
            raise SweepError(f"row {i} ({_describe(spec, *grid[i])}): {exc}") from exc

    if spec.workers > 1:
        with ThreadPoolExecutor(spec.workers) as pool:
            rows = list(pool.map(evaluate, range(len(grid))))
    else:
        rows = [evaluate(i) for i in range(len(grid))]
    return SweepResult(spec, rows)


def reference_mi(sc: Scenario) -> float:
    """Unbinned MI on the fine grid for the scenario's detector pair."""
    d0, d1 = sc.densities()
    return mutual_information_sampled(sc.prior, d0, d1)


def _describe(spec, v1, v2):
    parts = [f"{spec.axis1.name}={v1}"]
    if spec.axis2 is not None:
        parts.append(f"{spec.axis2.name}={v2}")
    return ", ".join(parts)


class Extremum(NamedTuple):
    index: int
    value: float
    mi_bits: float
    kind: str


def find_extrema(result) -> list[Extremum]:
    """Interior points strictly below (``min``) or above (``max``) both neighbours.

    ``result`` is a single-axis :class:`SweepResult` or a plain sequence of
    MI values (axis value is then the index).
    """
    if isinstance(result, SweepResult):
        if result.spec.axis2 is not None:
            raise ParameterError("find_extrema needs a single-axis sweep")
        xs = [r.value1 for r in result.rows]
        ys = [r.mi_bits for r in result.rows]
    else:
        ys = [float(y) for y in result]
        xs = list(range(len(ys)))
    if len(ys) < 3:
        raise SizeError(f"need at least 3 rows, got {len(ys)}")
    out = []
    for i in range(1, len(ys) - 1):
        if ys[i] < ys[i - 1] and ys[i] < ys[i + 1]:
            out.append(Extremum(i, xs[i], ys[i], "min"))
        elif ys[i] > ys[i - 1] and ys[i] > ys[i + 1]:
            out.append(Extremum(i, xs[i], ys[i], "max"))
    return out
