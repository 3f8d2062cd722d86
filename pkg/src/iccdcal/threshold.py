"""Baseline estimation, thresholding, and click-rate sweeps.

The photon-counting rule: pixel (x, y) of a frame clicks at threshold s_th
iff value - baseline > s_th strictly.  Baseline estimates are quantized to
0.25 ADU internally, so the rule is evaluated exactly on integers as

    4 * value - rint(4 * baseline)  >  4 * s_th

which keeps every reduction order-independent and bit-reproducible.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import BinaryFrame, CameraGeometry, RawFrame, Region

__all__ = [
    "BaselineMap",
    "CountStats",
    "RegionCounts",
    "SweepCurve",
    "estimate_baseline",
    "binarize",
    "accumulate_counts",
    "snr_sweep",
    "relative_qe_curve",
]

SWEEP_KINDS = ("signal", "noise", "snr", "qe_relative", "qe_absolute")


@dataclass(frozen=True)
class BaselineMap:
    """Per-pixel mean dark level of the camera, from dedicated dark frames."""

    geometry: CameraGeometry
    values: np.ndarray           # float64 (height, width), read-only
    n_frames: int                # frames averaged

    def __post_init__(self):
        values = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if values.shape != self.geometry.shape:
            raise ValueError(f"baseline shape {values.shape} does not match geometry {self.geometry.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.n_frames < 1:
            raise ValueError("a baseline map needs at least one frame")

    def quantized4(self) -> np.ndarray:
        """Baseline quantized to 0.25 ADU, scaled by 4: rint(4 * values) as int32."""
        return np.rint(4.0 * self.values).astype(np.int32)


def estimate_baseline(frames: Iterable[RawFrame]) -> BaselineMap:
    """Average dark frames into a BaselineMap.

    Accumulation is exact (integer sums), so the result does not depend on
    frame ordering or batching.  Frames must share one geometry.
    """
    total = None
    geometry = None
    n = 0
    for frame in frames:
        if total is None:
            geometry = frame.geometry
            total = np.zeros(geometry.shape, dtype=np.int64)
        elif frame.geometry != geometry:
            raise ValueError("frames with mixed geometries")
        total += frame.values
        n += 1
    if n == 0:
        raise ValueError("no frames supplied for baseline estimation")
    return BaselineMap(geometry=geometry, values=total / n, n_frames=n)


def threshold_q(s_th: float) -> int:
    """Threshold on the 0.25-ADU integer scale used by the click rule."""
    return int(round(4.0 * float(s_th)))


def click_matrix(values: np.ndarray, bq4: np.ndarray, s_th: float) -> np.ndarray:
    """Boolean clicks for one frame (or a stack) of raw values."""
    return (4 * values.astype(np.int32) - bq4) > threshold_q(s_th)


def binarize(frame: RawFrame, baseline: BaselineMap, s_th: int) -> BinaryFrame:
    """Threshold one frame: click iff value - baseline > s_th strictly.

    The baseline enters quantized to 0.25 ADU; ties (value - baseline equal
    to s_th) do not click.
    """
    if frame.geometry.shape != baseline.geometry.shape:
        raise ValueError("frame and baseline geometries differ")
    clicks = click_matrix(frame.values, baseline.quantized4(), s_th)
    return BinaryFrame(geometry=frame.geometry, clicks=clicks,
                       frame_index=frame.frame_index, threshold_used=int(s_th))


# --------------------------------------------------------------------------
# counting
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CountStats:
    """Click totals for one region over a run of frames.

    mode 'per_pixel': clicks_total counts every clicking pixel of every
    frame; mean_rate is clicks per pixel per frame.  mode 'region_or':
    clicks_total counts frames in which any region pixel clicked; mean_rate
    is that probability per frame.
    """

    region: Region
    n_frames: int
    clicks_total: int
    mean_rate: float
    mode: str

    def __post_init__(self):
        if self.mode not in ("per_pixel", "region_or"):
            raise ValueError(f"unknown counting mode {self.mode!r}")


class RegionCounts(NamedTuple):
    per_pixel: CountStats
    region_or: CountStats


def accumulate_counts(frames: Iterable[BinaryFrame], region: Region) -> RegionCounts:
    """Count clicks in a region over a stream of thresholded frames.

    Returns both counting conventions at once; partial sums over disjoint
    frame partitions add, so streams may be partitioned across workers and
    merged.
    """
    ys, xs = region.slices()
    pixel_total = 0
    or_total = 0
    n = 0
    for frame in frames:
        region.require_inside(frame.geometry)
        sub = frame.clicks[ys, xs]
        c = int(np.count_nonzero(sub))
        pixel_total += c
        or_total += 1 if c else 0
        n += 1
    if n == 0:
        raise ValueError("no frames supplied")
    return RegionCounts(
        per_pixel=CountStats(region=region, n_frames=n, clicks_total=pixel_total,
                             mean_rate=pixel_total / (n * region.area), mode="per_pixel"),
        region_or=CountStats(region=region, n_frames=n, clicks_total=or_total,
                             mean_rate=or_total / n, mode="region_or"),
    )


# --------------------------------------------------------------------------
# threshold sweeps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepCurve:
    """One quantity as a function of the click threshold."""

    kind: str                    # one of SWEEP_KINDS
    thresholds: tuple[int, ...]  # ADU
    values: np.ndarray           # float64, one per threshold
    n_frames: int
    region: Region
    normalized: bool = False     # True once rescaled to an absolute anchor

    def __post_init__(self):
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"unknown sweep kind {self.kind!r}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.thresholds),):
            raise ValueError("one value per threshold required")
        values = np.ascontiguousarray(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "thresholds", tuple(int(t) for t in self.thresholds))

    def value_at(self, threshold: int) -> float:
        try:
            return float(self.values[self.thresholds.index(int(threshold))])
        except ValueError:
            raise ValueError(f"threshold {threshold} not in sweep {self.thresholds}") from None


class RegionClickHistogram:
    """Histogram of q = 4*value - quantized baseline over one region.

    One pass over the frames yields exact click counts for every integer
    threshold at once: clicks at s_th are the histogram mass above 4*s_th.
    """

    def __init__(self, baseline: BaselineMap, region: Region):
        region.require_inside(baseline.geometry)
        self.region = region
        self.bq4 = baseline.quantized4()
        self.qmin = -int(self.bq4.max())
        qmax = 4 * 65535 - int(self.bq4.min())
        self.hist = np.zeros(qmax - self.qmin + 1, dtype=np.int64)
        self.n_frames = 0

    def add_values(self, values: np.ndarray) -> None:
        """Accumulate one frame (2-D) or a stack (3-D) of raw uint16 values."""
        stack = values[None, ...] if values.ndim == 2 else values
        ys, xs = self.region.slices()
        q = 4 * stack[:, ys, xs].astype(np.int64) - self.bq4[ys, xs]
        self.hist += np.bincount((q - self.qmin).ravel(), minlength=self.hist.size)
        self.n_frames += stack.shape[0]

    def clicks_above(self, s_th: float) -> int:
        """Exact click count at threshold s_th (strict rule)."""
        lo = threshold_q(s_th) + 1 - self.qmin
        if lo <= 0:
            return int(self.hist.sum())
        if lo >= self.hist.size:
            return 0
        return int(self.hist[lo:].sum())

    def rate_curve(self, thresholds, kind: str) -> SweepCurve:
        """Per-pixel click rates at the given thresholds."""
        denom = self.n_frames * self.region.area
        vals = np.array([self.clicks_above(s) / denom for s in thresholds])
        return SweepCurve(kind=kind, thresholds=tuple(thresholds), values=vals,
                          n_frames=self.n_frames, region=self.region)


def snr_sweep(signal_frames: Iterable[RawFrame], noise_frames: Iterable[RawFrame],
              baseline: BaselineMap, region: Region,
              thresholds: Iterable[int]) -> tuple[SweepCurve, SweepCurve, SweepCurve]:
    """Per-pixel click rates with pump on and off, and their ratio.

    Returns (signal, noise, snr) curves over the given thresholds.  Where
    the noise rate is zero the ratio is +inf if the signal rate is positive
    and nan if both vanish.
    """
    thresholds = tuple(int(t) for t in thresholds)
    sig_hist = RegionClickHistogram(baseline, region)
    for frame in signal_frames:
        sig_hist.add_values(frame.values)
    noi_hist = RegionClickHistogram(baseline, region)
    for frame in noise_frames:
        noi_hist.add_values(frame.values)
    return curves_from_histograms(sig_hist, noi_hist, thresholds)


def curves_from_histograms(sig_hist: RegionClickHistogram, noi_hist: RegionClickHistogram,
                           thresholds: tuple[int, ...]) -> tuple[SweepCurve, SweepCurve, SweepCurve]:
    signal = sig_hist.rate_curve(thresholds, "signal")
    noise = noi_hist.rate_curve(thresholds, "noise")
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = signal.values / noise.values
    ratio = np.where(noise.values == 0.0,
                     np.where(signal.values > 0.0, np.inf, np.nan), ratio)
    snr = SweepCurve(kind="snr", thresholds=thresholds, values=ratio,
                     n_frames=signal.n_frames, region=sig_hist.region)
    return signal, noise, snr


def relative_qe_curve(frames: Iterable[RawFrame], baseline: BaselineMap,
                      ref: Region, dut: Region, thresholds: Iterable[int]) -> SweepCurve:
    """Coincidence-to-singles ratio per threshold, on an arbitrary scale.

    The ratio (frames where both region detectors clicked) / (frames where
    the reference clicked) tracks the detection efficiency's threshold
    dependence without any accidental or noise subtraction; it only becomes
    an efficiency after rescale_relative pins it to an absolute point.
    """
    if ref.intersects(dut):
        raise ValueError("reference and test regions overlap")
    thresholds = tuple(int(t) for t in thresholds)
    bq4 = baseline.quantized4()
    qs = np.array([threshold_q(s) for s in thresholds], dtype=np.int32)
    both = np.zeros(len(thresholds), dtype=np.int64)
    ref_only = np.zeros(len(thresholds), dtype=np.int64)
    n = 0
    rys, rxs = ref.slices()
    dys, dxs = dut.slices()
    for frame in frames:
        q = 4 * frame.values.astype(np.int32) - bq4
        rmax = q[rys, rxs].max()
        dmax = q[dys, dxs].max()
        ref_only += rmax > qs
        both += (rmax > qs) & (dmax > qs)
        n += 1
    if n == 0:
        raise ValueError("no frames supplied")
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(ref_only > 0, both / np.maximum(ref_only, 1), np.nan)
    return SweepCurve(kind="qe_relative", thresholds=thresholds, values=vals,
                      n_frames=n, region=dut)
