"""Run configuration: ``key = value`` text plus command-line overrides.

Precedence, lowest first: built-in defaults, figure presets, the config
file, flags. All times are picoseconds given as plain numbers. Axis values
are either a comma list (``100,200,350``) or an inclusive range
``start:stop:step``; a trailing ``pi`` multiplies a number by pi, which is
handy for phase axes (radians).
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

import numpy as np

from .binning import BinningScheme
from .errors import ConfigError, TimingLeakError
from .sweep import AXES, Axis, Scenario, SweepSpec

SUBCOMMANDS = ("sweep", "simulate", "compensate", "figure")
FIGURES = ("fig1", "fig3", "fig4", "fig5", "fig6")


def _number(text):
    text = text.strip().lower()
    if text.endswith("pi"):
        head = text[:-2].strip()
        return (float(head) if head else 1.0) * math.pi
    return float(text)


def _int(text):
    value = _number(text)
    if value != int(value):
        raise ValueError("expected an integer")
    return int(value)


def _range(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("range must be start:stop:step")
    start, stop, step = (_number(p) for p in parts)
    if step <= 0:
        raise ValueError("range step must be > 0")
    n = math.floor((stop - start) / step + 1e-9)
    return (start + step * np.arange(n + 1)).tolist()


def _axis_values(text):
    values = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if ":" in chunk:
            values.extend(_range(chunk))
        elif chunk:
            values.append(_number(chunk))
    return tuple(values)


def _choice(options):
    def parse(text):
        text = text.strip().lower()
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text

    return parse


def _optional_axis(text):
    text = text.strip().lower()
    if text in ("", "none"):
        return None
    return _choice(AXES)(text)


# key -> (parser, default)
FIELDS = {
    "subcommand": (_choice(SUBCOMMANDS), None),
    "figure": (_choice(FIGURES), None),
    "model": (_choice(("emg", "gaussian")), "emg"),
    "tau_e_ps": (_number, 400.0),
    "tau_g_ps": (_number, 290.0),
    "t0_ps": (_number, 1000.0),
    "mu_ps": (_number, 0.0),
    "fwhm_ps": (_number, 1000.0),
    "delta_t0_ps": (_number, 350.0),
    "p0": (_number, 0.5),
    "bin_width_ps": (_number, 500.0),
    "phase_ps": (_number, 0.0),
    "dt_ps": (_number, 1.0),
    "axis1": (_optional_axis, None),
    "axis1_values": (_axis_values, ()),
    "axis2": (_optional_axis, None),
    "axis2_values": (_axis_values, ()),
    "n_events": (_int, 100_000),
    "seed": (_int, 0),
    "bootstrap": (_int, 100),
    "lag_window_ps": (_number, 10_000.0),
    "lag_step_ps": (_number, 10.0),
    "slot_period_ps": (_number, 100_000.0),
    "workers": (_int, 1),
}

FIGURE_PRESETS = {
    "fig1": {"model": "emg"},
    "fig3": {
        "model": "emg",
        "axis1": "delta_t0",
        "axis1_values": "100,200,350,500,800",
        "axis2": "bin_width",
        "axis2_values": "1,10:4000:10",
    },
    "fig4": {
        "model": "gaussian",
        "fwhm_ps": "1000",
        "delta_t0_ps": "350",
        "axis1": "bin_width",
        "axis1_values": "250:4000:250",
        "axis2": "phase",
        "axis2_values": "0:4pi:0.0625pi",
    },
    "fig5": {"model": "gaussian", "delta_t0_ps": "100"},
    "fig6": {
        "model": "gaussian",
        "delta_t0_ps": "350",
        "axis1": "fwhm",
        "axis1_values": "20,50,100,200,350,500,750,1000,1500,2000",
        "axis2": "bin_width",
        "axis2_values": "1,10,50,100,250,500,1000,2000,4000",
    },
}


@dataclass
class RunConfig:
    subcommand: str
    figure: str | None
    model: str
    tau_e_ps: float
    tau_g_ps: float
    t0_ps: float
    mu_ps: float
    fwhm_ps: float
    delta_t0_ps: float
    p0: float
    bin_width_ps: float
    phase_ps: float
    dt_ps: float
    axis1: str | None
    axis1_values: tuple
    axis2: str | None
    axis2_values: tuple
    n_events: int
    seed: int
    bootstrap: int
    lag_window_ps: float
    lag_step_ps: float
    slot_period_ps: float
    workers: int
    sources: dict = field(default_factory=dict, repr=False, compare=False)

    def scenario(self) -> Scenario:
        return Scenario(
            model=self.model,
            tau_e=self.tau_e_ps,
            tau_g=self.tau_g_ps,
            t0=self.t0_ps,
            mu=self.mu_ps,
            fwhm=self.fwhm_ps,
            delta_t0=self.delta_t0_ps,
            p0=self.p0,
            bin_width=self.bin_width_ps,
            phase=self.phase_ps,
            dt=self.dt_ps,
        )

    def sweep_spec(self) -> SweepSpec:
        axis1 = Axis(self.axis1, self.axis1_values)
        axis2 = Axis(self.axis2, self.axis2_values) if self.axis2 else None
        return SweepSpec(self.scenario(), axis1, axis2, workers=self.workers)

    def items(self):
        """Resolved key/value pairs in declaration order."""
        for key in FIELDS:
            value = getattr(self, key)
            if isinstance(value, tuple):
                value = ",".join(repr(v) for v in value)
            yield key, "" if value is None else value


def _read_text(text: str) -> dict:
    parser = configparser.ConfigParser(
        interpolation=None, delimiters=("=",), comment_prefixes=("#", ";"), inline_comment_prefixes=("#",)
    )
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"cannot parse configuration: {exc}") from exc
    if len(parser.sections()) != 1:
        raise ConfigError("<file>", "sections are not supported")
    return dict(parser["run"])


def _check(key, ok, message):
    if not ok:
        raise ConfigError(key, message)


def _validate(cfg: RunConfig):
    _check("subcommand", cfg.subcommand is not None, "missing subcommand")
    _check("figure", cfg.subcommand != "figure" or cfg.figure is not None, "figure subcommand needs figure=")
    _check("tau_e_ps", cfg.tau_e_ps > 0, "must be > 0")
    _check("tau_g_ps", cfg.tau_g_ps > 0, "must be > 0")
    _check("fwhm_ps", cfg.fwhm_ps > 0, "must be > 0")
    _check("dt_ps", cfg.dt_ps > 0, "must be > 0")
    _check("p0", 0.0 <= cfg.p0 <= 1.0, "must lie in [0, 1]")
    _check("bin_width_ps", cfg.bin_width_ps >= cfg.dt_ps, "must be >= dt_ps")
    _check("n_events", cfg.n_events >= 1, "must be >= 1")
    _check("seed", 0 <= cfg.seed < 2**64, "must lie in [0, 2**64)")
    _check("bootstrap", cfg.bootstrap >= 2, "must be >= 2")
    _check("lag_step_ps", cfg.lag_step_ps > 0, "must be > 0")
    _check("lag_window_ps", cfg.lag_window_ps >= cfg.lag_step_ps, "must be >= lag_step_ps")
    _check("slot_period_ps", cfg.slot_period_ps > 2 * cfg.lag_window_ps, "must exceed 2 * lag_window_ps")
    _check("workers", cfg.workers >= 1, "must be >= 1")

    try:
        cfg.scenario()
        BinningScheme(cfg.bin_width_ps, cfg.phase_ps, 0.0, 1.0)
    except TimingLeakError as exc:
        raise ConfigError("model", str(exc)) from exc

    needs_axes = cfg.subcommand == "sweep" or (cfg.subcommand == "figure" and cfg.figure in ("fig3", "fig4", "fig6"))
    if needs_axes:
        _check("axis1", cfg.axis1 is not None, "a sweep needs axis1")
        for n in ("1", "2"):
            name, values = getattr(cfg, "axis" + n), getattr(cfg, f"axis{n}_values")
            if name is None:
                continue
            key = f"axis{n}_values"
            _check(key, len(values) > 0, "axis has no values")
            _check(key, all(b > a for a, b in zip(values, values[1:])), "values must be strictly increasing")
            if name == "bin_width":
                _check(key, min(values) >= cfg.dt_ps, "bin widths must be >= dt_ps")
            if name == "fwhm":
                _check(key, min(values) > 0, "FWHM values must be > 0")
                _check("model", cfg.model == "gaussian", "the fwhm axis needs model=gaussian")
        _check("axis2", cfg.axis2 is None or cfg.axis2 != cfg.axis1, "must differ from axis1")


def parse_config(text: str = "", overrides: dict | None = None, subcommand: str | None = None) -> RunConfig:
    """Resolve a :class:`RunConfig` from config-file text and flag overrides.

    Raises :class:`ConfigError` naming the offending key for unknown keys,
    unparsable values and constraint violations.
    """
    raw = {}
    sources = {}
    for origin, layer in (("file", _read_text(text) if text else {}), ("flag", dict(overrides or {}))):
        for key, value in layer.items():
            key = key.strip().replace("-", "_")
            if key not in FIELDS:
                raise ConfigError(key, "unknown configuration key")
            raw[key] = str(value)
            sources[key] = origin
    if subcommand is not None:
        raw["subcommand"] = subcommand
        sources["subcommand"] = "flag"

    figure = raw.get("figure")
    if figure is not None:
        figure = figure.strip().lower()
        if figure not in FIGURE_PRESETS:
            raise ConfigError("figure", f"expected one of {', '.join(FIGURES)}")
        for key, value in FIGURE_PRESETS[figure].items():
            if key not in raw:
                raw[key] = value
                sources[key] = "preset"

    values = {}
    for key, (parse, default) in FIELDS.items():
        if key in raw:
            try:
                values[key] = parse(raw[key])
            except (ValueError, TypeError) as exc:
                raise ConfigError(key, f"invalid value {raw[key]!r}: {exc}") from exc
        else:
            values[key] = default
            sources.setdefault(key, "default")
    cfg = RunConfig(**values, sources=sources)
    _validate(cfg)
    return cfg
