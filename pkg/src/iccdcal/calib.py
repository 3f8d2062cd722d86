"""Absolute calibration from pair coincidences.

The estimator: with a reference detector region and a test (DUT) region
placed on momentum-conjugate parts of the frame, the DUT efficiency is

    eta_raw = (n_cc - n_acc) / (n_ref - dn_noise)

where n_cc is the per-frame rate of joint clicks, n_acc the accidental
rate estimated from lag-shifted frames, n_ref the reference click rate with
the pump on, and dn_noise the reference click rate with the pump off.
Dividing by the transmission of the optical channel in front of the DUT
yields the corrected efficiency.  Region detectors are OR detectors: a
region clicks when any member pixel clicks, giving at most one coincidence
per frame.

Uncertainties: a block bootstrap over contiguous frame blocks (which
preserves any frame-to-frame correlation) gives sigma_eta whenever the
per-frame click series is available; an independent-binomial error
propagation is always reported alongside as sigma_eta_analytic.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from . import pipeline
from .core import (
    BinaryFrame,
    CameraGeometry,
    OpticalChannel,
    RawFrame,
    Region,
    WavelengthBand,
    conjugate_band,
    conjugate_region,
    conjugate_wavelength,
)
from .sim import SimConfig, shutter_variant
from .threshold import BaselineMap, SweepCurve

__all__ = [
    "CoincidenceStats",
    "CoincidenceSeries",
    "CalibrationResult",
    "CorrelationMap",
    "PixelSensitivity",
    "indicator_series",
    "count_coincidences",
    "estimate_accidentals",
    "coincidence_stats",
    "klyshko_qe",
    "g2_map",
    "g2_map_source",
    "find_conjugate_region",
    "rescale_relative",
    "calibrate_sources",
    "wavelength_scan",
    "uniformity_scan",
]


# --------------------------------------------------------------------------
# coincidence bookkeeping
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CoincidenceStats:
    """Per-frame rates entering the efficiency estimator."""

    n_frames: int          # pump-on frames counted
    n_cc: float            # joint ref&dut click rate per frame
    n_acc: float           # accidental rate (lag-shifted estimate)
    n_ref: float           # reference click rate per frame, pump on
    dn_noise: float        # reference click rate per frame, pump off
    n_noise_frames: int = 0


@dataclass(frozen=True)
class CoincidenceSeries:
    """Per-frame click indicators backing a CoincidenceStats."""

    ref: np.ndarray                    # bool, pump-on frames
    dut: np.ndarray                    # bool, same frames
    noise_ref: np.ndarray | None = None  # bool, pump-off frames
    lag: int = 1

    def __post_init__(self):
        ref = np.asarray(self.ref, dtype=bool)
        dut = np.asarray(self.dut, dtype=bool)
        if ref.shape != dut.shape or ref.ndim != 1:
            raise ValueError("ref and dut series must be equal-length 1-D arrays")
        if self.lag < 1:
            raise ValueError("lag must be >= 1")
        if ref.size <= self.lag:
            raise ValueError(f"need more than lag={self.lag} frames, got {ref.size}")
        object.__setattr__(self, "ref", ref)
        object.__setattr__(self, "dut", dut)
        if self.noise_ref is not None:
            object.__setattr__(self, "noise_ref", np.asarray(self.noise_ref, dtype=bool))

    def stats(self) -> CoincidenceStats:
        r, d, lag = self.ref, self.dut, self.lag
        n = r.size
        nr = self.noise_ref
        return CoincidenceStats(
            n_frames=n,
            n_cc=float(np.count_nonzero(r & d)) / n,
            n_acc=float(np.count_nonzero(r[:-lag] & d[lag:])) / (n - lag),
            n_ref=float(np.count_nonzero(r)) / n,
            dn_noise=float(np.count_nonzero(nr)) / nr.size if nr is not None and nr.size else 0.0,
            n_noise_frames=int(nr.size) if nr is not None else 0,
        )


def indicator_series(frames: Iterable[BinaryFrame], regions: Sequence[Region]) -> np.ndarray:
    """Region-OR click indicator per frame, one column per region."""
    rows = []
    slicers = [r.slices() for r in regions]
    for frame in frames:
        rows.append([bool(frame.clicks[ys, xs].any()) for ys, xs in slicers])
    if not rows:
        raise ValueError("no frames supplied")
    return np.array(rows, dtype=bool)


def count_coincidences(frames: Iterable[BinaryFrame], ref: Region, dut: Region) -> CoincidenceStats:
    """Joint and singles rates of two disjoint region detectors.

    n_acc and dn_noise are returned as zero; fill them from
    estimate_accidentals and a pump-off run (or use coincidence_stats).
    """
    if ref.intersects(dut):
        raise ValueError("reference and test regions overlap")
    bits = indicator_series(frames, [ref, dut])
    n = bits.shape[0]
    return CoincidenceStats(
        n_frames=n,
        n_cc=float(np.count_nonzero(bits[:, 0] & bits[:, 1])) / n,
        n_acc=0.0,
        n_ref=float(np.count_nonzero(bits[:, 0])) / n,
        dn_noise=0.0,
    )


def estimate_accidentals(frames: Iterable[BinaryFrame], ref: Region, dut: Region,
                         lag: int = 1) -> float:
    """Accidental coincidence rate from lag-shifted frame pairing.

    Pairs the reference indicator of frame i with the test indicator of
    frame i+lag; genuinely correlated pairs never straddle frames, so this
    estimates the uncorrelated background coincidence rate.
    """
    if ref.intersects(dut):
        raise ValueError("reference and test regions overlap")
    bits = indicator_series(frames, [ref, dut])
    if bits.shape[0] <= lag:
        raise ValueError(f"need more than lag={lag} frames, got {bits.shape[0]}")
    series = CoincidenceSeries(ref=bits[:, 0], dut=bits[:, 1], lag=lag)
    return series.stats().n_acc


def coincidence_stats(signal_frames: Iterable[BinaryFrame],
                      noise_frames: Iterable[BinaryFrame] | None,
                      ref: Region, dut: Region, lag: int = 1) -> tuple[CoincidenceStats, CoincidenceSeries]:
    """Full estimator inputs (rates and series) from thresholded streams."""
    if ref.intersects(dut):
        raise ValueError("reference and test regions overlap")
    bits = indicator_series(signal_frames, [ref, dut])
    noise_ref = None
    if noise_frames is not None:
        noise_ref = indicator_series(noise_frames, [ref])[:, 0]
    series = CoincidenceSeries(ref=bits[:, 0], dut=bits[:, 1], noise_ref=noise_ref, lag=lag)
    return series.stats(), series


# --------------------------------------------------------------------------
# the efficiency estimator
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CalibrationResult:
    """Absolute efficiency at one threshold, with everything that made it."""

    eta_raw: float                 # before channel correction
    eta_corrected: float           # eta_raw / channel transmission
    sigma_eta: float               # 1-sigma on eta_corrected (bootstrap when available)
    threshold: int                 # ADU
    lambda_dut: float              # nm, wavelength the efficiency refers to
    inputs: CoincidenceStats
    sigma_eta_analytic: float      # independent-binomial propagation
    channel_transmission: float
    low_signal: bool               # rates too close to their uncertainties


def _analytic_sigma(stats: CoincidenceStats, transmission: float) -> tuple[float, float, float]:
    """(sigma_corrected, sigma_numerator, sigma_denominator), binomial model."""
    n, m, lag = stats.n_frames, stats.n_noise_frames, 1
    var_cc = stats.n_cc * (1.0 - stats.n_cc) / n
    var_acc = stats.n_acc * (1.0 - stats.n_acc) / max(n - lag, 1)
    var_ref = stats.n_ref * (1.0 - stats.n_ref) / n
    var_dn = stats.dn_noise * (1.0 - stats.dn_noise) / m if m else 0.0
    a = stats.n_cc - stats.n_acc
    b = stats.n_ref - stats.dn_noise
    var_a = var_cc + var_acc
    var_b = var_ref + var_dn
    var_eta = var_a / b**2 + a * a * var_b / b**4
    return math.sqrt(var_eta) / transmission, math.sqrt(var_a), math.sqrt(var_b)


def _block_stats(bits: np.ndarray, partner: np.ndarray | None, n_blocks: int, lag: int):
    """Per-block sufficient statistics for the bootstrap."""
    edges = np.linspace(0, bits.size, n_blocks + 1).astype(np.int64)
    lengths = np.diff(edges)
    cnt = np.add.reduceat(bits, edges[:-1])
    out = {"len": lengths, "cnt": cnt}
    if partner is not None:
        joint = bits & partner
        out["cnt_joint"] = np.add.reduceat(joint, edges[:-1])
        lag_prod = bits[:-lag] & partner[lag:]
        # lag pairs fully inside each block: start offsets edges[b] .. edges[b+1]-lag-1
        inside = np.zeros(n_blocks, dtype=np.int64)
        for b in range(n_blocks):
            lo, hi = edges[b], edges[b + 1] - lag
            if hi > lo:
                inside[b] = int(lag_prod[lo:hi].sum())
        out["cnt_lag_inside"] = inside
        out["ref_tail"] = np.stack([bits[e - lag:e] for e in edges[1:]])
        out["dut_head"] = np.stack([partner[e:e + lag] for e in edges[:-1]])
    return out


def _bootstrap_sigma(series: CoincidenceSeries, transmission: float,
                     n_blocks: int, n_resamples: int, boot_seed: int) -> tuple[float, int]:
    """(sigma of eta_corrected, number of valid resamples).

    Resamples contiguous frame blocks with replacement and recomputes the
    full estimator each time, including lag products across the joins of the
    resampled blocks, so the statistic matches a materialized resample
    exactly.  nan is returned when fewer than 2 resamples are valid.
    """
    lag = series.lag
    n = series.ref.size
    n_blocks = min(n_blocks, n // max(2 * lag, 2))
    if n_blocks < 2:
        return float("nan"), 0
    sig = _block_stats(series.ref, series.dut, n_blocks, lag)
    rng = np.random.default_rng(boot_seed)
    pick = rng.integers(0, n_blocks, size=(n_resamples, n_blocks))

    tot_len = sig["len"][pick].sum(axis=1)
    tot_ref = sig["cnt"][pick].sum(axis=1)
    tot_joint = sig["cnt_joint"][pick].sum(axis=1)
    inside = sig["cnt_lag_inside"][pick].sum(axis=1)
    joins = (sig["ref_tail"][pick[:, :-1]] & sig["dut_head"][pick[:, 1:]]).sum(axis=(1, 2))

    n_cc = tot_joint / tot_len
    n_ref = tot_ref / tot_len
    n_acc = (inside + joins) / (tot_len - lag)

    if series.noise_ref is not None and series.noise_ref.size:
        m = series.noise_ref.size
        nb = min(n_blocks, max(m // 2, 1))
        if nb >= 2:
            noi = _block_stats(series.noise_ref, None, nb, lag)
            pick_n = rng.integers(0, nb, size=(n_resamples, nb))
            dn = noi["cnt"][pick_n].sum(axis=1) / noi["len"][pick_n].sum(axis=1)
        else:
            dn = np.full(n_resamples, float(np.count_nonzero(series.noise_ref)) / m)
    else:
        dn = np.zeros(n_resamples)

    denom = n_ref - dn
    valid = denom > 0.0
    if int(valid.sum()) < 2:
        return float("nan"), int(valid.sum())
    eta = (n_cc[valid] - n_acc[valid]) / denom[valid] / transmission
    return float(np.std(eta, ddof=1)), int(valid.sum())


def klyshko_qe(stats: CoincidenceStats, channel: OpticalChannel, threshold: int,
               lambda_dut: float, *, series: CoincidenceSeries | None = None,
               n_blocks: int = 100, n_resamples: int = 200,
               boot_seed: int = 0) -> CalibrationResult:
    """Absolute efficiency from coincidence rates.

    Parameters
    ----------
    stats : CoincidenceStats
        Rates per frame; n_ref must exceed dn_noise.
    channel : OpticalChannel
        Optics in front of the test detector; eta_raw is divided by its
        total transmission.
    threshold, lambda_dut :
        Recorded in the result for bookkeeping.
    series : CoincidenceSeries, optional
        Per-frame indicators.  When given, sigma_eta comes from a block
        bootstrap (n_blocks contiguous blocks, n_resamples resamples,
        deterministic boot_seed); otherwise sigma_eta falls back to the
        analytic propagation, which is always reported as
        sigma_eta_analytic.

    Returns
    -------
    CalibrationResult
        low_signal is set when the numerator or denominator is within three
        of its own standard errors of zero.
    """
    t = channel.total_transmission
    denom = stats.n_ref - stats.dn_noise
    if denom <= 0.0:
        raise ValueError(
            f"reference rate {stats.n_ref:.3g} does not exceed its noise rate {stats.dn_noise:.3g}")
    numer = stats.n_cc - stats.n_acc
    eta_raw = numer / denom
    sigma_analytic, sigma_a, sigma_b = _analytic_sigma(stats, t)
    sigma = sigma_analytic
    if series is not None:
        boot, n_valid = _bootstrap_sigma(series, t, n_blocks, n_resamples, boot_seed)
        if n_valid >= 2 and math.isfinite(boot):
            sigma = boot
    low = numer <= 3.0 * sigma_a or denom <= 3.0 * sigma_b
    return CalibrationResult(
        eta_raw=eta_raw,
        eta_corrected=eta_raw / t,
        sigma_eta=sigma,
        threshold=int(threshold),
        lambda_dut=float(lambda_dut),
        inputs=stats,
        sigma_eta_analytic=sigma_analytic,
        channel_transmission=t,
        low_signal=bool(low),
    )


# --------------------------------------------------------------------------
# pair correlation mapping
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CorrelationMap:
    """Normalized coincidence of every pixel with a reference region.

    values[y, x] = P(pixel and ref click) / (P(pixel clicks) * P(ref clicks))
    estimated over n_frames; nan where either marginal is zero.  Values near
    1 mean statistical independence; correlated pairs push well above 1.
    """

    geometry: CameraGeometry
    values: np.ndarray           # float64 (height, width), nan = undefined
    n_frames: int
    ref: Region
    ref_rate: float              # P(ref clicks) per frame
    pixel_rates: np.ndarray      # float64 (height, width), P(pixel clicks)

    def __post_init__(self):
        for name in ("values", "pixel_rates"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=np.float64))
            if arr.shape != self.geometry.shape:
                raise ValueError(f"{name} shape {arr.shape} does not match geometry")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def _g2_from_counts(geometry: CameraGeometry, ref: Region, clicks: np.ndarray,
                    joint: np.ndarray, n_ref: int, n: int) -> CorrelationMap:
    with np.errstate(divide="ignore", invalid="ignore"):
        g2 = (n * joint.astype(np.float64)) / (float(n_ref) * clicks.astype(np.float64))
    g2[(clicks == 0) | (n_ref == 0)] = np.nan
    return CorrelationMap(geometry=geometry, values=g2, n_frames=n, ref=ref,
                          ref_rate=n_ref / n, pixel_rates=clicks / n)


def g2_map(frames: Iterable[BinaryFrame], ref: Region) -> CorrelationMap:
    """Frame-wise correlation of every pixel with the reference region."""
    clicks = joint = None
    geometry = None
    n_ref = 0
    n = 0
    ys, xs = ref.slices()
    for frame in frames:
        if clicks is None:
            geometry = frame.geometry
            ref.require_inside(geometry)
            clicks = np.zeros(geometry.shape, dtype=np.int64)
            joint = np.zeros(geometry.shape, dtype=np.int64)
        c = frame.clicks
        clicks += c
        if c[ys, xs].any():
            n_ref += 1
            joint += c
        n += 1
    if n == 0:
        raise ValueError("no frames supplied")
    return _g2_from_counts(geometry, ref, clicks, joint, n_ref, n)


def g2_map_source(source, baseline: BaselineMap, s_th: int, ref: Region) -> CorrelationMap:
    """g2_map over a FrameSource of raw frames, using the compiled reductions."""
    counts = pipeline.pixel_joint_counts(source, baseline, s_th, ref)
    return _g2_from_counts(source.geometry, ref, counts.clicks, counts.joint,
                           counts.n_ref, counts.n_frames)


def find_conjugate_region(cmap: CorrelationMap, g2_min: float = 2.0, margin: int = 4,
                          halo: int = 6, min_joint: int = 10) -> Region:
    """Locate the partner region of the map's reference automatically.

    Pixels with values >= g2_min qualify; pixels inside the reference region
    dilated by `halo` (charge-splat crosstalk neighborhood) are excluded.
    A pixel must also have at least min_joint joint counts behind its value:
    a lone accidental coincidence on a rarely-clicking pixel produces a huge
    but meaningless correlation estimate.  The smallest rectangle covering
    the qualifying pixels, dilated by `margin` and clipped to the frame, is
    returned.  Errors if nothing qualifies or if the result touches the
    reference region.
    """
    g = cmap.geometry
    qualify = np.zeros(g.shape, dtype=bool)
    defined = np.isfinite(cmap.values)
    qualify[defined] = cmap.values[defined] >= g2_min
    # g2 = N * joint / (n_ref * clicks) inverts exactly to the joint count
    joint = cmap.values * (cmap.ref_rate * cmap.n_frames) * cmap.pixel_rates
    qualify &= np.where(defined, joint, 0.0) >= min_joint - 0.5
    ex0 = max(cmap.ref.x0 - halo, 0)
    ey0 = max(cmap.ref.y0 - halo, 0)
    ex1 = min(cmap.ref.x1 + halo, g.width)
    ey1 = min(cmap.ref.y1 + halo, g.height)
    qualify[ey0:ey1, ex0:ex1] = False
    if not qualify.any():
        raise ValueError(f"no pixels with correlation >= {g2_min} outside the reference neighborhood")
    rows = np.flatnonzero(qualify.any(axis=1))
    cols = np.flatnonzero(qualify.any(axis=0))
    x0 = max(int(cols[0]) - margin, 0)
    y0 = max(int(rows[0]) - margin, 0)
    x1 = min(int(cols[-1]) + 1 + margin, g.width)
    y1 = min(int(rows[-1]) + 1 + margin, g.height)
    found = Region(x0, y0, x1 - x0, y1 - y0, label="auto-conjugate")
    if found.intersects(cmap.ref):
        raise ValueError(f"located region {found} overlaps the reference {cmap.ref}")
    return found


def rescale_relative(curve: SweepCurve, anchor_threshold: int, anchor_value: float) -> SweepCurve:
    """Pin a relative sweep to an absolute efficiency at one threshold.

    All values are multiplied by anchor_value / curve(anchor_threshold);
    the curve keeps its shape and becomes an absolute-scale estimate.
    """
    if curve.kind != "qe_relative":
        raise ValueError(f"can only rescale qe_relative curves, got {curve.kind!r}")
    at = curve.value_at(anchor_threshold)
    if not math.isfinite(at) or at <= 0.0:
        raise ValueError(f"relative curve is {at} at the anchor threshold {anchor_threshold}")
    return SweepCurve(kind="qe_relative", thresholds=curve.thresholds,
                      values=curve.values * (anchor_value / at),
                      n_frames=curve.n_frames, region=curve.region, normalized=True)


# --------------------------------------------------------------------------
# high-level runs
# --------------------------------------------------------------------------

def calibrate_sources(signal_source, noise_source, baseline: BaselineMap,
                      ref: Region, dut: Region, thresholds: Sequence[int],
                      channel: OpticalChannel, lambda_dut: float, *,
                      lag: int = 1, n_blocks: int = 100, n_resamples: int = 200,
                      boot_seed: int = 0) -> list[CalibrationResult]:
    """Efficiency at each threshold from raw-frame sources.

    One pass per source collects the per-frame region maxima of the
    baseline-subtracted values; every threshold is then evaluated exactly
    from those series.
    """
    if ref.intersects(dut):
        raise ValueError("reference and test regions overlap")
    sig_max = pipeline.region_maxq_series(signal_source, baseline, [ref, dut])
    noi_max = pipeline.region_maxq_series(noise_source, baseline, [ref])
    results = []
    for s in thresholds:
        q = 4 * int(s)
        series = CoincidenceSeries(ref=sig_max[:, 0] > q, dut=sig_max[:, 1] > q,
                                   noise_ref=noi_max[:, 0] > q, lag=lag)
        results.append(klyshko_qe(series.stats(), channel, int(s), lambda_dut,
                                  series=series, n_blocks=n_blocks,
                                  n_resamples=n_resamples, boot_seed=boot_seed))
    return results


def wavelength_scan(config: SimConfig, scan: Sequence[tuple[WavelengthBand, WavelengthBand]],
                    ref: Region, threshold: int, n_frames: int, n_noise_frames: int, *,
                    margin: int = 4, n_baseline_frames: int = 256, lag: int = 1,
                    n_blocks: int = 100, n_resamples: int = 200, boot_seed: int = 0,
                    workers: int = 1) -> list[CalibrationResult]:
    """Spectral efficiency scan: one calibration per reference passband.

    For each (reference band, test band) pair the config's two filter
    regions keep their geometry but swap in the new passbands, a fresh
    simulated acquisition is run (per-point seeds derived from the config
    seed), and the efficiency is estimated at lambda = conj(reference
    center).  The test band must contain the conjugate image of the whole
    reference band, otherwise partners of reference-detected photons would
    be filtered away and the estimate biased low.
    """
    if len(config.filters) != 2:
        raise ValueError("wavelength_scan needs a config with exactly two filter regions")
    (reg_a, _), (reg_b, _) = config.filters
    if reg_a.contains(ref.x0, ref.y0) and reg_a.contains(ref.x1 - 1, ref.y1 - 1):
        ref_reg, dut_reg = reg_a, reg_b
    elif reg_b.contains(ref.x0, ref.y0) and reg_b.contains(ref.x1 - 1, ref.y1 - 1):
        ref_reg, dut_reg = reg_b, reg_a
    else:
        raise ValueError(f"reference region {ref} is not inside either filter region")

    dut = conjugate_region(ref, config.geometry, margin)
    if dut.intersects(ref):
        raise ValueError("conjugate region overlaps the reference; move the reference off-center")

    results = []
    for k, (ref_band, dut_band) in enumerate(scan):
        image = conjugate_band(ref_band, config.lambda_pump)
        if image.lo < dut_band.lo - 1e-9 or image.hi > dut_band.hi + 1e-9:
            raise ValueError(
                f"test band {dut_band.lo:.1f}..{dut_band.hi:.1f} nm does not cover the "
                f"conjugate image {image.lo:.1f}..{image.hi:.1f} nm of the reference band")
        cfg = dataclasses.replace(
            config, pump_on=True, seed=(config.seed + 1000003 * k) % 2**64,
            filters=((ref_reg, ref_band), (dut_reg, dut_band)))
        baseline = pipeline.baseline_from_source(
            pipeline.SimSource(shutter_variant(cfg), n_baseline_frames, workers=workers))
        noise_cfg = dataclasses.replace(cfg, pump_on=False)
        res = calibrate_sources(
            pipeline.SimSource(cfg, n_frames, workers=workers),
            pipeline.SimSource(noise_cfg, n_noise_frames, workers=workers),
            baseline, ref, dut, [threshold], cfg.channel,
            conjugate_wavelength(ref_band.center, cfg.lambda_pump),
            lag=lag, n_blocks=n_blocks, n_resamples=n_resamples, boot_seed=boot_seed)
        results.append(res[0])
    return results


# --------------------------------------------------------------------------
# uniformity
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class PixelSensitivity:
    """Single-pixel efficiency relative to the scan average."""

    x: int
    y: int
    eta_raw: float               # per-pixel Klyshko ratio (no channel correction)
    sigma_eta: float             # 1-sigma on eta_raw
    relative_sensitivity: float  # eta_raw / scan mean
    relative_sigma: float        # sigma_eta / scan mean
    is_outlier: bool             # |eta_raw - mean| > 3 sigma_eta
    n_frames: int


def uniformity_scan(frames: Iterable[RawFrame], baseline: BaselineMap, threshold: int,
                    ref: Region, pixel_list: Sequence[tuple[int, int]], *,
                    noise_frames: Iterable[RawFrame] | None = None, lag: int = 1,
                    n_blocks: int = 100, n_resamples: int = 200,
                    boot_seed: int = 0) -> list[PixelSensitivity]:
    """Pixel-to-pixel sensitivity across the conjugate patch.

    Each listed pixel is treated as a one-pixel test detector against the
    common reference region; its Klyshko ratio is normalized by the mean
    over the scan, which cancels everything the pixels share (reference
    rate, channel, spectrum).  Without noise_frames the pump-off term is
    zero, which shifts all ratios by a common factor and leaves the
    relative sensitivities unchanged.
    """
    q = 4 * int(threshold)
    bq4 = baseline.quantized4()
    for x, y in pixel_list:
        if not (0 <= x < baseline.geometry.width and 0 <= y < baseline.geometry.height):
            raise ValueError(f"scan pixel ({x}, {y}) outside the frame")
        if ref.contains(x, y):
            raise ValueError(f"scan pixel ({x}, {y}) lies inside the reference region")

    if hasattr(frames, "batches"):
        ref_bits, pix_bits = pipeline.pixel_series(frames, baseline, threshold, ref, pixel_list)
    else:
        ys, xs = ref.slices()
        pidx = (np.array([p[1] for p in pixel_list]), np.array([p[0] for p in pixel_list]))
        ref_rows, pix_rows = [], []
        for frame in frames:
            fq = 4 * frame.values.astype(np.int32) - bq4
            ref_rows.append(bool((fq[ys, xs] > q).any()))
            pix_rows.append(fq[pidx] > q)
        if not ref_rows:
            raise ValueError("no frames supplied")
        ref_bits = np.array(ref_rows, dtype=bool)
        pix_bits = np.array(pix_rows, dtype=bool)

    noise_ref = None
    if noise_frames is not None:
        if hasattr(noise_frames, "batches"):
            noise_max = pipeline.region_maxq_series(noise_frames, baseline, [ref])
            noise_ref = noise_max[:, 0] > q
        else:
            ys, xs = ref.slices()
            noise_ref = np.array(
                [bool(((4 * f.values.astype(np.int32) - bq4)[ys, xs] > q).any())
                 for f in noise_frames], dtype=bool)

    results = []
    etas = []
    for i, (x, y) in enumerate(pixel_list):
        series = CoincidenceSeries(ref=ref_bits, dut=pix_bits[:, i],
                                   noise_ref=noise_ref, lag=lag)
        stats = series.stats()
        denom = stats.n_ref - stats.dn_noise
        if denom <= 0.0:
            raise ValueError("reference rate does not exceed its noise rate")
        eta = (stats.n_cc - stats.n_acc) / denom
        sigma, n_valid = _bootstrap_sigma(series, 1.0, n_blocks, n_resamples, boot_seed)
        if n_valid < 2 or not math.isfinite(sigma):
            sigma, _, _ = _analytic_sigma(stats, 1.0)
        etas.append(eta)
        results.append((x, y, eta, sigma, stats.n_frames))

    mean_eta = float(np.mean(etas))
    if mean_eta <= 0.0:
        raise ValueError("scan-average efficiency is not positive; signal too weak")
    return [
        PixelSensitivity(
            x=x, y=y, eta_raw=eta, sigma_eta=sigma,
            relative_sensitivity=eta / mean_eta, relative_sigma=sigma / mean_eta,
            is_outlier=bool(abs(eta - mean_eta) > 3.0 * sigma),
            n_frames=n,
        )
        for x, y, eta, sigma, n in results
    ]
