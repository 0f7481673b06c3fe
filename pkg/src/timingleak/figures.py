"""Data tables behind the leakage figures (fig1, fig3, fig4, fig5, fig6).

fig3, fig4 and fig6 are plain sweeps whose axes come from the figure
presets in :mod:`timingleak.config`; this module holds the two density
tables.
"""

from __future__ import annotations

import csv

import numpy as np

from .binning import BinningScheme, bin_density
from .response import analysis_domain, discretize, emg, gaussian, shift_model

FIG1_WIDTHS = (500.0, 1000.0)
FIG5_FWHMS = (20.0, 500.0)


def staircase(density, scheme: BinningScheme) -> np.ndarray:
    """Binned density spread back over the fine grid (1/ps).

    Each fine cell gets its bin's probability divided by the bin's length,
    so the staircase integrates to one just like the original density.
    """
    probs = bin_density(density, scheme).probs
    idx = scheme.indices(density.centers)
    counts = np.bincount(idx, minlength=scheme.n_bins)
    # bin length measured in whole fine cells keeps the mass exact
    lengths = counts * density.dt
    per_bin = np.divide(probs, lengths, out=np.zeros_like(probs), where=lengths > 0)
    return per_bin[idx]


def fig1_table(cfg):
    """Reference EMG density and its 500 ps and 1000 ps binned versions."""
    model = emg(cfg.tau_e_ps, cfg.tau_g_ps, cfg.t0_ps)
    t_start, t_end = analysis_domain(model, dt=cfg.dt_ps)
    d = discretize(model, t_start, t_end, cfg.dt_ps)
    columns = ["t_ps", "density_per_ps"] + [f"binned_{int(w)}ps_per_ps" for w in FIG1_WIDTHS]
    data = [d.centers, d.values]
    for w in FIG1_WIDTHS:
        data.append(staircase(d, BinningScheme(w, cfg.phase_ps, d.t_start, d.t_end)))
    return columns, np.column_stack(data)


def fig5_table(cfg):
    """Two detector responses and their equal-weight mixture, for a narrow and a wide FWHM."""
    pairs = []
    for fwhm in FIG5_FWHMS:
        m0 = gaussian(cfg.mu_ps, fwhm)
        pairs.append((fwhm, m0, shift_model(m0, cfg.delta_t0_ps)))
    t_start, t_end = analysis_domain(*[m for _, a, b in pairs for m in (a, b)], dt=cfg.dt_ps)
    blocks = []
    for fwhm, m0, m1 in pairs:
        d0 = discretize(m0, t_start, t_end, cfg.dt_ps)
        d1 = discretize(m1, t_start, t_end, cfg.dt_ps)
        mix = cfg.p0 * d0.values + (1.0 - cfg.p0) * d1.values
        blocks.append(np.column_stack([np.full(d0.n, fwhm), d0.centers, d0.values, d1.values, mix]))
    columns = ["fwhm_ps", "t_ps", "density_bit0_per_ps", "density_bit1_per_ps", "mixture_per_ps"]
    return columns, np.vstack(blocks)


def write_table(path, columns, data):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in data.tolist():
            w.writerow([repr(x) for x in row])


def fig1_mass_error(data, dt) -> float:
    """Largest deviation from unit mass among the fig1 staircase columns."""
    return float(max(abs(data[:, j].sum() * dt - 1.0) for j in range(2, data.shape[1])))

