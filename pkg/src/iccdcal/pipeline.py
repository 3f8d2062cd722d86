"""Frame sources and streaming reductions.

Analysis never holds a full run in memory: frames arrive in batches from a
FrameSource (simulator or file) and are folded into exact integer
accumulators by the kernel backend.  Every reduction here is
order-independent by construction (integer arithmetic, per-frame outputs),
so results are identical for any batch size or worker count.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass

import numpy as np

from ._backend import get_kernels
from .core import CameraGeometry, Region
from .framefile import FrameFile
from .sim import FrameRenderer, SimConfig
from .threshold import BaselineMap, RegionClickHistogram, SweepCurve, curves_from_histograms

__all__ = [
    "SimSource",
    "FileSource",
    "ArraySource",
    "baseline_from_source",
    "region_maxq_series",
    "region_histogram",
    "sweep_curves_source",
    "relative_curve_source",
    "pixel_joint_counts",
    "pixel_series",
    "write_source",
]

DEFAULT_BATCH = 1024


def _render_chunk(args):
    config, start, count, backend = args
    renderer = FrameRenderer(config, backend=backend)
    return start, renderer.render_batch(start, count)


class SimSource:
    """Batches of simulated frames, optionally rendered by a process pool."""

    def __init__(self, config: SimConfig, n_frames: int, workers: int = 1,
                 batch_frames: int = DEFAULT_BATCH, backend: str | None = None):
        if n_frames < 0:
            raise ValueError("n_frames must be >= 0")
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.config = config
        self.n_frames = int(n_frames)
        self.workers = int(workers)
        self.batch_frames = int(batch_frames)
        self.backend = backend

    @property
    def geometry(self) -> CameraGeometry:
        return self.config.geometry

    def batches(self):
        starts = range(0, self.n_frames, self.batch_frames)
        sizes = [min(self.batch_frames, self.n_frames - s) for s in starts]
        if self.workers == 1:
            renderer = FrameRenderer(self.config, backend=self.backend)
            for start, size in zip(starts, sizes):
                yield start, renderer.render_batch(start, size)
            return
        args = [(self.config, start, size, self.backend) for start, size in zip(starts, sizes)]
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(self.workers) as pool:
            yield from pool.imap(_render_chunk, args)


class FileSource:
    """Batches straight out of a frame file."""

    def __init__(self, path, batch_frames: int = DEFAULT_BATCH,
                 beam_center: tuple[float, float] | None = None, binning: int = 1):
        self.file = path if isinstance(path, FrameFile) else FrameFile(path)
        self.n_frames = self.file.n_frames
        self.batch_frames = int(batch_frames)
        self._geometry = self.file.geometry(binning=binning, beam_center=beam_center)

    @property
    def geometry(self) -> CameraGeometry:
        return self._geometry

    def batches(self):
        for start in range(0, self.n_frames, self.batch_frames):
            size = min(self.batch_frames, self.n_frames - start)
            yield start, self.file.read_batch(start, size)


class ArraySource:
    """In-memory frame stack as a source (mostly for tests)."""

    def __init__(self, frames: np.ndarray, geometry: CameraGeometry | None = None,
                 batch_frames: int = DEFAULT_BATCH):
        frames = np.ascontiguousarray(frames, dtype=np.uint16)
        if frames.ndim != 3:
            raise ValueError("expected an (n, height, width) stack")
        self.frames = frames
        self.n_frames = frames.shape[0]
        self.batch_frames = int(batch_frames)
        self._geometry = geometry or CameraGeometry(width=frames.shape[2], height=frames.shape[1])

    @property
    def geometry(self) -> CameraGeometry:
        return self._geometry

    def batches(self):
        for start in range(0, self.n_frames, self.batch_frames):
            yield start, self.frames[start:start + self.batch_frames]


# --------------------------------------------------------------------------
# reductions
# --------------------------------------------------------------------------

def baseline_from_source(source) -> BaselineMap:
    """Mean frame of a source as a BaselineMap (exact integer accumulation)."""
    total = np.zeros(source.geometry.shape, dtype=np.int64)
    n = 0
    for _, arr in source.batches():
        total += arr.sum(axis=0, dtype=np.int64)
        n += arr.shape[0]
    if n == 0:
        raise ValueError("source is empty")
    return BaselineMap(geometry=source.geometry, values=total / n, n_frames=n)


def region_maxq_series(source, baseline: BaselineMap, regions: list[Region],
                       backend: str | None = None) -> np.ndarray:
    """Per-frame maximum of 4*value - quantized baseline, one column per region.

    A region's OR detector clicks at threshold s iff its column exceeds 4*s,
    so this one pass answers every threshold later.
    """
    kern = get_kernels(backend)
    for region in regions:
        region.require_inside(source.geometry)
    bq4 = baseline.quantized4()
    out = np.empty((source.n_frames, len(regions)), dtype=np.int32)
    tmp = np.empty(source.batch_frames if hasattr(source, "batch_frames") else DEFAULT_BATCH,
                   dtype=np.int32)
    for start, arr in source.batches():
        n = arr.shape[0]
        if tmp.size < n:
            tmp = np.empty(n, dtype=np.int32)
        for j, region in enumerate(regions):
            kern.region_max_q(arr, bq4, region.x0, region.y0, region.w, region.h, tmp[:n])
            out[start:start + n, j] = tmp[:n]
    return out


def region_histogram(source, baseline: BaselineMap, region: Region,
                     backend: str | None = None) -> RegionClickHistogram:
    """RegionClickHistogram of a whole source, filled by the kernel backend."""
    kern = get_kernels(backend)
    hist = RegionClickHistogram(baseline, region)
    for _, arr in source.batches():
        kern.region_hist_q(arr, hist.bq4, region.x0, region.y0, region.w, region.h,
                           hist.hist, hist.qmin)
        hist.n_frames += arr.shape[0]
    return hist


def sweep_curves_source(signal_source, noise_source, baseline: BaselineMap,
                        region: Region, thresholds,
                        backend: str | None = None) -> tuple[SweepCurve, SweepCurve, SweepCurve]:
    """(signal, noise, snr) click-rate curves from two sources."""
    sig = region_histogram(signal_source, baseline, region, backend=backend)
    noi = region_histogram(noise_source, baseline, region, backend=backend)
    return curves_from_histograms(sig, noi, tuple(int(t) for t in thresholds))


def relative_curve_source(signal_source, baseline: BaselineMap, ref: Region,
                          dut: Region, thresholds,
                          backend: str | None = None) -> SweepCurve:
    """Coincidence-to-singles ratio per threshold (see relative_qe_curve)."""
    if ref.intersects(dut):
        raise ValueError("reference and test regions overlap")
    thresholds = tuple(int(t) for t in thresholds)
    series = region_maxq_series(signal_source, baseline, [ref, dut], backend=backend)
    qs = np.array([4 * t for t in thresholds], dtype=np.int32)
    r = series[:, 0:1] > qs
    d = series[:, 1:2] > qs
    ref_cnt = r.sum(axis=0)
    both_cnt = (r & d).sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(ref_cnt > 0, both_cnt / np.maximum(ref_cnt, 1), np.nan)
    return SweepCurve(kind="qe_relative", thresholds=thresholds, values=vals,
                      n_frames=series.shape[0], region=dut)


@dataclass(frozen=True)
class PixelJointCounts:
    clicks: np.ndarray      # int64 (height, width): frames each pixel clicked
    joint: np.ndarray       # int64: frames pixel and reference both clicked
    n_ref: int              # frames the reference clicked
    n_frames: int


def pixel_joint_counts(source, baseline: BaselineMap, s_th: int, ref: Region,
                       backend: str | None = None) -> PixelJointCounts:
    """Per-pixel click and joint-with-reference counts at one threshold."""
    kern = get_kernels(backend)
    ref.require_inside(source.geometry)
    bq4 = baseline.quantized4()
    q = np.int32(4 * int(s_th))
    clicks = np.zeros(source.geometry.shape, dtype=np.int64)
    joint = np.zeros(source.geometry.shape, dtype=np.int64)
    n_ref = 0
    n = 0
    for _, arr in source.batches():
        m = arr.shape[0]
        tmp = np.empty(m, dtype=np.int32)
        kern.region_max_q(arr, bq4, ref.x0, ref.y0, ref.w, ref.h, tmp)
        refbits = (tmp > q).astype(np.uint8)
        kern.pixel_click_joint(arr, bq4, q, refbits, clicks, joint)
        n_ref += int(refbits.sum())
        n += m
    if n == 0:
        raise ValueError("source is empty")
    return PixelJointCounts(clicks=clicks, joint=joint, n_ref=n_ref, n_frames=n)


def pixel_series(source, baseline: BaselineMap, s_th: int, ref: Region,
                 pixel_list, backend: str | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(reference OR-indicator, per-pixel click indicators) per frame."""
    kern = get_kernels(backend)
    bq4 = baseline.quantized4()
    q = 4 * int(s_th)
    ys = np.array([p[1] for p in pixel_list], dtype=np.intp)
    xs = np.array([p[0] for p in pixel_list], dtype=np.intp)
    ref_bits = np.empty(source.n_frames, dtype=bool)
    pix_bits = np.empty((source.n_frames, len(pixel_list)), dtype=bool)
    pix_bq = bq4[ys, xs]
    for start, arr in source.batches():
        n = arr.shape[0]
        tmp = np.empty(n, dtype=np.int32)
        kern.region_max_q(arr, bq4, ref.x0, ref.y0, ref.w, ref.h, tmp)
        ref_bits[start:start + n] = tmp > q
        vals = arr[:, ys, xs].astype(np.int32)
        pix_bits[start:start + n] = (4 * vals - pix_bq) > q
    return ref_bits, pix_bits


def write_source(source, path, seed: int = 0) -> int:
    """Stream a source into a frame file; returns the frame count."""
    from .framefile import FrameFileWriter
    g = source.geometry
    with FrameFileWriter(path, g.width, g.height, seed=seed) as writer:
        for _, arr in source.batches():
            writer.append_array(arr)
        return writer.n_frames
