"""Simulation and autonomous absolute calibration of a photon-counting ICCD.

A Monte Carlo model of an intensified camera watching momentum- and
wavelength-correlated photon pairs (sim), photon-counting threshold analysis
(threshold), and the coincidence-based absolute efficiency estimator with
its supporting scans (calib), plus a frame-file format (framefile),
streaming reductions (pipeline), and a command-line interface (cli).
"""

from ._backend import backend_name
from .core import (
    BinaryFrame,
    CameraGeometry,
    OpticalChannel,
    RawFrame,
    Region,
    WavelengthBand,
    bin_pixels,
    conjugate_band,
    conjugate_region,
    conjugate_wavelength,
)
from .sim import (
    FrameRenderer,
    PairEvent,
    SimConfig,
    render_frame,
    sample_pair_events,
    shutter_variant,
    simulate_run,
    true_baseline,
)
from .threshold import (
    BaselineMap,
    CountStats,
    RegionCounts,
    SweepCurve,
    accumulate_counts,
    binarize,
    estimate_baseline,
    relative_qe_curve,
    snr_sweep,
)
from .calib import (
    CalibrationResult,
    CoincidenceSeries,
    CoincidenceStats,
    CorrelationMap,
    PixelSensitivity,
    calibrate_sources,
    coincidence_stats,
    count_coincidences,
    estimate_accidentals,
    find_conjugate_region,
    g2_map,
    g2_map_source,
    indicator_series,
    klyshko_qe,
    rescale_relative,
    uniformity_scan,
    wavelength_scan,
)
from .framefile import FrameFile, FrameFileWriter, write_frames

__version__ = "0.1.0"
