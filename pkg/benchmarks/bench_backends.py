"""Compare the compiled and pure-Python kernel backends.

Renders the same frame stream through both backends, asserts the outputs
are byte-identical, and reports per-frame timings for rendering and for
the click reductions.

Usage: python3 benchmarks/bench_backends.py [n_frames]
"""

import sys
import time

import numpy as np

from iccdcal import pipeline
from iccdcal.core import CameraGeometry, OpticalChannel, Region, WavelengthBand
from iccdcal.sim import FrameRenderer, SimConfig, shutter_variant
from iccdcal._backend import get_kernels


def bench_config() -> SimConfig:
    geom = CameraGeometry(width=64, height=64, binning=8)
    band = WavelengthBand(center=810.0, fwhm=100.0)
    return SimConfig(
        geometry=geom,
        pair_rate=3.0,
        pump_on=True,
        lambda_pump=405.0,
        spdc_band=band,
        true_qe=((700.0, 0.2), (900.0, 0.2)),
        channel=OpticalChannel(elements=(("optics", 0.88),)),
        filters=(
            (Region(0, 0, 32, 64, label="f1"), WavelengthBand(center=830.0, fwhm=10.0, transmission=0.95)),
            (Region(32, 0, 32, 64, label="f2"), WavelengthBand(center=800.0, fwhm=40.0, transmission=0.95)),
        ),
        corr_jitter_sigma=1.0,
        beam_profile_sigma=10.0,
        signal_amp_mean=180.0,
        noise_amp_mean=20.0,
        dark_event_rate=0.003,
        splat_sigma=0.8,
        baseline_range=(600.0, 650.0),
        readout_noise_sigma=2.0,
        seed=1234,
        stray_event_rate=5e-5,
    )


def time_render(backend: str, cfg: SimConfig, n: int) -> tuple[float, np.ndarray]:
    renderer = FrameRenderer(cfg, backend=backend)
    renderer.render(0)  # warm up caches outside the timed loop
    digest = np.zeros(cfg.geometry.shape, dtype=np.int64)
    t0 = time.perf_counter()
    for i in range(n):
        digest += renderer.render(i)
    dt = time.perf_counter() - t0
    return dt / n, digest


def time_reductions(backend: str, cfg: SimConfig, n: int) -> tuple[float, np.ndarray]:
    source = pipeline.SimSource(cfg, n, backend=backend)
    dark = pipeline.SimSource(shutter_variant(cfg), 64, backend=backend)
    baseline = pipeline.baseline_from_source(dark)
    region = Region(20, 20, 24, 24, label="bench")
    t0 = time.perf_counter()
    series = pipeline.region_maxq_series(source, baseline, [region], backend=backend)
    dt = time.perf_counter() - t0
    return dt / n, series


def main() -> int:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    cfg = bench_config()
    try:
        get_kernels("compiled")
    except (ImportError, ValueError):
        print("compiled backend not available; build the extension first")
        return 1

    print(f"rendering {n} frames of {cfg.geometry.width}x{cfg.geometry.height} on each backend")
    results = {}
    for backend in ("python", "compiled"):
        per_frame, digest = time_render(backend, cfg, n)
        results[backend] = (per_frame, digest)
        print(f"  render {backend:>8}: {per_frame * 1e3:7.3f} ms/frame")
    assert np.array_equal(results["python"][1], results["compiled"][1]), \
        "backends disagree on rendered frames"
    speedup = results["python"][0] / results["compiled"][0]
    print(f"  render speedup: {speedup:.2f}x, outputs byte-identical")

    red = {}
    for backend in ("python", "compiled"):
        per_frame, series = time_reductions(backend, cfg, n)
        red[backend] = (per_frame, series)
        print(f"  reduce {backend:>8}: {per_frame * 1e6:7.1f} us/frame (render + region max)")
    assert np.array_equal(red["python"][1], red["compiled"][1]), \
        "backends disagree on click reductions"
    print("  reductions byte-identical")
    return 0


if __name__ == "__main__":
    sys.exit(main())
