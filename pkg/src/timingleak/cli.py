"""Command-line front end.

    timingleak <subcommand> [--config PATH] [--key value ...] [--out DIR]

Any configuration key can be given as a flag (``--bin_width_ps 1000`` or
``--bin-width-ps=1000``); flags override the config file. Every run writes
its CSV tables plus ``manifest.csv`` (resolved configuration, tool
version, seed) into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import __version__
from .binning import BinningScheme
from .config import SUBCOMMANDS, RunConfig, parse_config
from .delay import compensate_stream
from .errors import ConfigError, TimingLeakError
from .events import (
    EventStream,
    SimConfig,
    bootstrap_mi_se,
    empirical_mi,
    guessing_success,
    simulate_coincidences,
    simulate_stream,
    write_events_csv,
)
from .figures import fig1_mass_error, fig1_table, fig5_table, write_table
from .info import mutual_information_binned
from .response import analysis_domain
from .sweep import reference_mi, run_sweep

log = logging.getLogger("timingleak")


def _write_pairs(path, header, pairs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k, v in pairs:
            w.writerow([k, repr(v) if isinstance(v, float) else v])


def _sweep(cfg: RunConfig, out: Path, name: str):
    result = run_sweep(cfg.sweep_spec())
    path = out / f"{name}.csv"
    result.write_csv(path)
    return [path], []


def _simulate(cfg: RunConfig, out: Path):
    sc = cfg.scenario()
    m0, m1 = sc.models()
    t_start, t_end = analysis_domain(m0, m1, dt=cfg.dt_ps)
    scheme = BinningScheme(cfg.bin_width_ps, cfg.phase_ps, t_start, t_end)
    stream = simulate_stream(SimConfig(m0, m1, scheme, cfg.n_events, cfg.seed, sc.prior, cfg.dt_ps))
    chan = sc.channel()
    summary = [
        ("n_events", cfg.n_events),
        ("n_bins", scheme.n_bins),
        ("analytic_mi_bits", mutual_information_binned(chan)),
        ("continuous_mi_bits", reference_mi(sc)),
    ]
    if cfg.n_events >= 2:
        summary += [
            ("empirical_mi_bits", empirical_mi(stream)),
            ("bootstrap_se_bits", bootstrap_mi_se(stream, cfg.bootstrap, cfg.seed)),
        ]
    summary.append(("guessing_success", guessing_success(stream, chan)))
    events_path, summary_path = out / "events.csv", out / "summary.csv"
    write_events_csv(stream, events_path)
    _write_pairs(summary_path, ["key", "value"], summary)
    return [events_path, summary_path], summary


def _compensate(cfg: RunConfig, out: Path):
    sc = cfg.scenario()
    m0, m1 = sc.models()
    stream = simulate_coincidences(
        m0, m0, m1, cfg.n_events, cfg.seed, sc.prior, cfg.slot_period_ps, cfg.dt_ps
    )
    res = compensate_stream(stream, cfg.lag_window_ps, cfg.lag_step_ps)
    t_start, t_end = analysis_domain(m0, m1, dt=cfg.dt_ps)
    pad = abs(res.estimate.delta) + cfg.lag_step_ps
    scheme = BinningScheme(cfg.bin_width_ps, cfg.phase_ps, t_start - pad, t_end + pad)
    before = EventStream.from_timestamps(stream.bits, stream.bob_relative(), scheme)
    after = EventStream.from_timestamps(stream.bits, stream.bob_relative(res.bob_compensated), scheme)
    summary = [
        ("n_pairs", cfg.n_events),
        ("delta_ps", res.estimate.delta),
        ("confidence_width_ps", res.estimate.confidence_width),
        ("residual_delta_ps", res.residual.delta),
        ("residual_confidence_width_ps", res.residual.confidence_width),
        ("mi_before_bits", empirical_mi(before)),
        ("mi_after_bits", empirical_mi(after)),
    ]
    paths = {
        "correlogram_plus.csv": res.before[0],
        "correlogram_minus.csv": res.before[1],
        "correlogram_plus_compensated.csv": res.after[0],
    }
    written = []
    for name, corr in paths.items():
        corr.write_csv(out / name)
        written.append(out / name)
    write_events_csv(after, out / "events_compensated.csv")
    _write_pairs(out / "summary.csv", ["key", "value"], summary)
    return written + [out / "events_compensated.csv", out / "summary.csv"], summary


def _figure(cfg: RunConfig, out: Path):
    name = cfg.figure
    if name in ("fig3", "fig4", "fig6"):
        return _sweep(cfg, out, name)
    path = out / f"{name}.csv"
    if name == "fig1":
        columns, data = fig1_table(cfg)
        err = fig1_mass_error(data, cfg.dt_ps)
        if err > 1e-9:
            raise TimingLeakError(f"fig1 staircases lose mass: {err:.3g}")
    else:
        columns, data = fig5_table(cfg)
    write_table(path, columns, data)
    return [path], []


def run(cfg: RunConfig, out_dir) -> int:
    """Execute ``cfg`` and write its artifacts; returns a process exit status."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if cfg.subcommand == "sweep":
            written, summary = _sweep(cfg, out, "sweep")
        elif cfg.subcommand == "simulate":
            written, summary = _simulate(cfg, out)
        elif cfg.subcommand == "compensate":
            written, summary = _compensate(cfg, out)
        else:
            written, summary = _figure(cfg, out)
        manifest = [("tool", "timingleak"), ("tool_version", __version__)]
        manifest += list(cfg.items())
        manifest += [("output", p.name) for p in written]
        _write_pairs(out / "manifest.csv", ["key", "value"], manifest)
    except (TimingLeakError, OSError) as exc:
        print(f"timingleak: error: {exc}", file=sys.stderr)
        return 1
    for key, value in summary:
        log.info("%s = %s", key, value)
    return 0


def _parse_overrides(tokens):
    overrides = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or tok == "--":
            raise ConfigError(tok, "expected --key value")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(key, "flag needs a value")
            value = tokens[i + 1]
            i += 2
        overrides[key.replace("-", "_")] = value
    return overrides


def build_parser():
    parser = argparse.ArgumentParser(
        prog="timingleak",
        description="Timing side-channel leakage analysis for QKD timestamp sharing.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = {
        "sweep": "mutual information over one or two swept parameters",
        "simulate": "Monte Carlo detection events and eavesdropper estimates",
        "compensate": "estimate and remove the +/- detector delay",
        "figure": "data tables for fig1, fig3, fig4, fig5, fig6",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", type=Path, help="key = value configuration file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args, extra = build_parser().parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text, _parse_overrides(extra), subcommand=args.subcommand)
    except (ConfigError, OSError) as exc:
        print(f"timingleak: configuration error: {exc}", file=sys.stderr)
        return 2
    return run(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
