"""Leakage analysis of the QKD timestamp timing side channel."""

__version__ = "0.1.0"

from .binning import BinningScheme, BinProbabilities, bin_density, bin_index
from .delay import Correlogram, OffsetEstimate, build_correlogram, compensate, estimate_offset
from .events import EventRecord, EventStream, SimConfig, empirical_mi, guessing_success, map_guess, simulate_stream
from .info import BitPrior, ChannelSpec, entropy, mixture, mutual_information_binned, mutual_information_continuous
from .response import (
    ResponseModel,
    SampledDensity,
    discretize,
    emg,
    eval_density,
    gaussian,
    measure_fwhm,
    shift_model,
)
from .sweep import Axis, Scenario, SweepSpec, find_extrema, reference_mi, run_sweep
