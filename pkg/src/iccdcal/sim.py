"""Monte Carlo model of an intensified camera watching photon pairs.

Physics implemented per gated frame:

* Pair generation: a Poisson number of pairs per gate.  One member of each
  pair ("signal") lands Gaussian-distributed around the beam center with its
  wavelength drawn uniformly over the emission band; the partner ("idler")
  lands at the point reflection of the signal through the beam center plus
  Gaussian correlation jitter, at the energy-conserving wavelength
  1/l_idler = 1/l_pump - 1/l_signal.
* Detection: a photon is kept only if it lands inside some filter region,
  its wavelength lies in that filter's passband, and it survives three
  Bernoulli thinnings (filter transmission, channel transmission, quantum
  efficiency at its wavelength, optionally scaled by per-pixel defects).
* Intensifier response: every surviving photon produces a pulse with an
  exponentially distributed amplitude (mean signal_amp_mean).  Spurious dark
  events occur uniformly over the frame with exponential amplitudes of a
  smaller mean; optional stray-light events use the photon amplitude law and
  occur with pump on or off.  Each pulse is spread over neighboring pixels
  as a separable Gaussian charge splat (sigma splat_sigma, total charge
  preserved up to frame-edge clipping).
* Readout: a static per-pixel baseline (drawn once per camera from
  baseline_range), optional Gaussian readout noise, rounding to integer
  counts, clamping to the 16-bit range.

Randomness is counter-based: each frame owns independent streams keyed by
(seed, frame_index, stream, pump flag), so any frame renders identically
regardless of order or worker count.  Draw order within a frame is part of
the reproducibility contract:

  pair stream:    n_pairs | signal x | signal y | wavelengths | jitter x | jitter y
  render stream:  filter u | channel u | qe u (all photons, signals then
                  idlers) | photon amplitudes (detected only) | dark count |
                  dark x | dark y | dark amplitudes | stray count | stray x |
                  stray y | stray amplitudes | readout noise field
"""

from __future__ import annotations

import dataclasses
import functools
import math
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from ._backend import get_kernels
from ._rng import STREAM_BASELINE, STREAM_PAIRS, STREAM_RENDER, frame_generator
from .core import (
    CameraGeometry,
    OpticalChannel,
    RawFrame,
    Region,
    WavelengthBand,
    conjugate_wavelength,
)

__all__ = [
    "SimConfig",
    "PairEvent",
    "FrameRenderer",
    "sample_pair_events",
    "render_frame",
    "simulate_run",
    "shutter_variant",
    "true_baseline",
]


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    """Complete description of one simulated acquisition.

    Instances are immutable and hashable; two runs with equal configs produce
    identical frames.  mcp_gain_setting is recorded metadata (the amplitude
    scale it would control is configured directly via signal_amp_mean and
    noise_amp_mean).
    """

    geometry: CameraGeometry
    pair_rate: float                     # mean pairs per gate
    pump_on: bool
    lambda_pump: float                   # nm
    spdc_band: WavelengthBand            # emission band of signal draws
    true_qe: tuple[tuple[float, float], ...]   # (wavelength nm, qe) table
    channel: OpticalChannel
    filters: tuple[tuple[Region, WavelengthBand], ...]
    corr_jitter_sigma: float             # px, partner-position jitter
    beam_profile_sigma: float            # px, signal landing spread
    signal_amp_mean: float               # ADU, photon pulse-height mean
    noise_amp_mean: float                # ADU, dark pulse-height mean
    dark_event_rate: float               # events per pixel per gate
    splat_sigma: float                   # px, charge-cloud spread
    baseline_range: tuple[float, float]  # ADU, static per-pixel baseline
    readout_noise_sigma: float           # ADU
    mcp_gain_setting: int = 100
    seed: int = 0
    stray_event_rate: float = 0.0        # ambient photon events per pixel per gate
    qe_defects: tuple[tuple[int, int, float], ...] = ()  # (x, y, qe scale)

    def __post_init__(self):
        g = self.geometry
        if self.pair_rate < 0 or self.dark_event_rate < 0 or self.stray_event_rate < 0:
            raise ValueError("event rates must be >= 0")
        if not 0.0 < self.noise_amp_mean < self.signal_amp_mean:
            raise ValueError("need 0 < noise_amp_mean < signal_amp_mean")
        if self.corr_jitter_sigma < 0 or self.beam_profile_sigma < 0:
            raise ValueError("position spreads must be >= 0")
        if self.splat_sigma < 0 or self.readout_noise_sigma < 0:
            raise ValueError("splat_sigma and readout_noise_sigma must be >= 0")
        b0, b1 = self.baseline_range
        if not 0.0 <= b0 <= b1 <= 65535.0:
            raise ValueError(f"baseline_range {self.baseline_range} outside 0..65535")
        if self.mcp_gain_setting < 1:
            raise ValueError("mcp_gain_setting must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit an unsigned 64-bit integer")
        if self.spdc_band.lo <= self.lambda_pump:
            raise ValueError("emission band must lie strictly above the pump wavelength")
        object.__setattr__(self, "baseline_range", (float(b0), float(b1)))

        table = tuple(sorted((float(w), float(q)) for w, q in self.true_qe))
        if not table:
            raise ValueError("true_qe table must not be empty")
        lams = [w for w, _ in table]
        if len(set(lams)) != len(lams):
            raise ValueError("true_qe table has duplicate wavelengths")
        for _, q in table:
            if not 0.0 <= q <= 1.0:
                raise ValueError("true_qe values must be in [0, 1]")
        # Idlers can fall outside the emission band; the table must span the
        # band together with its energy-conservation image.
        need_lo = min(self.spdc_band.lo, conjugate_wavelength(self.spdc_band.hi, self.lambda_pump))
        need_hi = max(self.spdc_band.hi, conjugate_wavelength(self.spdc_band.lo, self.lambda_pump))
        if len(table) > 1 and (lams[0] > need_lo or lams[-1] < need_hi):
            raise ValueError(
                f"true_qe table spans {lams[0]}..{lams[-1]} nm but wavelengths "
                f"{need_lo:.1f}..{need_hi:.1f} nm can occur")
        object.__setattr__(self, "true_qe", table)

        filts = tuple((reg, band) for reg, band in self.filters)
        for reg, _ in filts:
            reg.require_inside(g)
        for i in range(len(filts)):
            for j in range(i + 1, len(filts)):
                if filts[i][0].intersects(filts[j][0]):
                    raise ValueError(f"filter regions {filts[i][0]} and {filts[j][0]} overlap")
        object.__setattr__(self, "filters", filts)

        defects = tuple((int(x), int(y), float(s)) for x, y, s in self.qe_defects)
        for x, y, s in defects:
            if not (0 <= x < g.width and 0 <= y < g.height):
                raise ValueError(f"qe defect at ({x}, {y}) outside the frame")
            if not 0.0 <= s <= 1.0:
                raise ValueError("qe defect scale must be in [0, 1]")
        object.__setattr__(self, "qe_defects", defects)


@dataclass(frozen=True)
class PairEvent:
    """One down-converted pair in a frame, before any detection losses."""

    signal_pos: tuple[float, float]      # (x, y) px
    idler_pos: tuple[float, float]
    signal_wavelength: float             # nm
    idler_wavelength: float


def shutter_variant(config: SimConfig) -> SimConfig:
    """Config for baseline-estimation frames: gate closed, electronics live.

    Pump off and both spurious-event rates zeroed; baseline and readout
    noise are unchanged, so these frames measure the static baseline.
    """
    return dataclasses.replace(config, pump_on=False, dark_event_rate=0.0, stray_event_rate=0.0)


# --------------------------------------------------------------------------
# static baseline
# --------------------------------------------------------------------------

@functools.lru_cache(maxsize=32)
def _baseline_cached(shape: tuple[int, int], rng_range: tuple[float, float], seed: int) -> np.ndarray:
    gen = frame_generator(seed, 0, STREAM_BASELINE, False)
    b0, b1 = rng_range
    base = b0 + (b1 - b0) * gen.random(shape)
    base.setflags(write=False)
    return base


def true_baseline(config: SimConfig) -> np.ndarray:
    """The static per-pixel baseline of the simulated camera (read-only)."""
    return _baseline_cached(config.geometry.shape, config.baseline_range, config.seed)


# --------------------------------------------------------------------------
# rendering
# --------------------------------------------------------------------------

_EMPTY = np.empty(0, dtype=np.float64)
_NO_PAIRS = (_EMPTY, _EMPTY, _EMPTY, _EMPTY, _EMPTY, _EMPTY)


class FrameRenderer:
    """Renders frames for one config; reusable across frames and processes."""

    def __init__(self, config: SimConfig, backend: str | None = None):
        self.config = config
        self._kern = get_kernels(backend)
        g = config.geometry
        self._baseline = np.ascontiguousarray(true_baseline(config))
        self._acc = np.zeros(g.shape, dtype=np.float64)

        filts = config.filters
        self._f_x0 = np.array([r.x0 for r, _ in filts], dtype=np.int64)
        self._f_x1 = np.array([r.x1 for r, _ in filts], dtype=np.int64)
        self._f_y0 = np.array([r.y0 for r, _ in filts], dtype=np.int64)
        self._f_y1 = np.array([r.y1 for r, _ in filts], dtype=np.int64)
        self._f_lo = np.array([b.lo for _, b in filts])
        self._f_hi = np.array([b.hi for _, b in filts])
        self._f_tr = np.array([b.transmission for _, b in filts])

        self._qe_lam = np.array([w for w, _ in config.true_qe])
        self._qe_val = np.array([q for _, q in config.true_qe])
        self._qe_scale = np.ones(g.shape, dtype=np.float64)
        for x, y, s in config.qe_defects:
            self._qe_scale[y, x] = s

        sig = config.splat_sigma
        if sig > 0.0:
            r = int(math.ceil(4.0 * sig))
            self._offs = np.arange(-r, r + 1, dtype=np.float64)
            self._inv2s2 = 1.0 / (2.0 * sig * sig)
        else:
            self._offs = np.zeros(1)
            self._inv2s2 = 0.0
        self._k = self._offs.size
        self._r = (self._k - 1) // 2

    # -- pair sampling ----------------------------------------------------

    def _sample_pairs(self, frame_index: int):
        """Arrays (sx, sy, lam_s, ix, iy, lam_i); empty when the pump is off."""
        cfg = self.config
        if not cfg.pump_on:
            return _NO_PAIRS
        gen = frame_generator(cfg.seed, frame_index, STREAM_PAIRS, True)
        n = int(gen.poisson(cfg.pair_rate))
        if n == 0:
            return _NO_PAIRS
        bx, by = cfg.geometry.beam_center
        sx = gen.normal(bx, cfg.beam_profile_sigma, n)
        sy = gen.normal(by, cfg.beam_profile_sigma, n)
        lam_s = gen.uniform(cfg.spdc_band.lo, cfg.spdc_band.hi, n)
        jx = gen.normal(0.0, cfg.corr_jitter_sigma, n)
        jy = gen.normal(0.0, cfg.corr_jitter_sigma, n)
        ix = 2.0 * bx - sx + jx
        iy = 2.0 * by - sy + jy
        lam_i = 1.0 / (1.0 / cfg.lambda_pump - 1.0 / lam_s)
        return sx, sy, lam_s, ix, iy, lam_i

    # -- detection and deposition -----------------------------------------

    def _detect_photons(self, gen, pairs):
        """Positions and amplitudes of photons that produce a pulse."""
        cfg = self.config
        sx, sy, lam_s, ix, iy, lam_i = pairs
        x = np.concatenate((sx, ix))
        y = np.concatenate((sy, iy))
        lam = np.concatenate((lam_s, lam_i))
        n = x.size
        if n == 0:
            return _EMPTY, _EMPTY, _EMPTY
        u_filter = gen.random(n)
        u_channel = gen.random(n)
        u_qe = gen.random(n)

        pxi = np.floor(x).astype(np.int64)
        pyi = np.floor(y).astype(np.int64)
        fidx = np.full(n, -1, dtype=np.int64)
        for fi in range(self._f_x0.size):
            hit = ((pxi >= self._f_x0[fi]) & (pxi < self._f_x1[fi])
                   & (pyi >= self._f_y0[fi]) & (pyi < self._f_y1[fi]))
            fidx[hit] = fi
        landed = fidx >= 0
        accept = np.zeros(n, dtype=bool)
        if landed.any():
            fl = fidx[landed]
            in_band = (lam[landed] >= self._f_lo[fl]) & (lam[landed] <= self._f_hi[fl])
            pass_filter = in_band & (u_filter[landed] < self._f_tr[fl])
            pass_channel = u_channel[landed] < cfg.channel.total_transmission
            p_detect = (np.interp(lam[landed], self._qe_lam, self._qe_val)
                        * self._qe_scale[pyi[landed], pxi[landed]])
            accept[landed] = pass_filter & pass_channel & (u_qe[landed] < p_detect)
        amps = gen.exponential(cfg.signal_amp_mean, int(accept.sum()))
        return x[accept], y[accept], amps

    def _uniform_events(self, gen, rate_per_pixel: float, amp_mean: float):
        """Spurious events uniform over the frame with exponential amplitudes."""
        g = self.config.geometry
        m = int(gen.poisson(rate_per_pixel * g.n_pixels))
        ex = gen.uniform(0.0, g.width, m)
        ey = gen.uniform(0.0, g.height, m)
        amps = gen.exponential(amp_mean, m)
        return ex, ey, amps

    def _splat_axis(self, pos: np.ndarray, pix: np.ndarray, limit: int):
        """Per-axis splat weights and their in-frame sums for each event."""
        if self._k == 1:
            w = np.ones((pos.size, 1), dtype=np.float64)
            return w, np.ones(pos.size)
        frac = pos - pix - 0.5
        d = self._offs[None, :] - frac[:, None]
        w = np.exp(-(d * d) * self._inv2s2)
        cols = pix[:, None] + np.arange(-self._r, self._r + 1)[None, :]
        valid = (cols >= 0) & (cols < limit)
        return w, (w * valid).sum(axis=1)

    def _render_into(self, frame_index: int, pairs, out: np.ndarray) -> np.ndarray:
        """Render one frame into `out` (uint16); returns deposited amplitudes."""
        cfg = self.config
        g = cfg.geometry
        gen = frame_generator(cfg.seed, frame_index, STREAM_RENDER, cfg.pump_on)

        phx, phy, pha = self._detect_photons(gen, pairs)
        dkx, dky, dka = self._uniform_events(gen, cfg.dark_event_rate, cfg.noise_amp_mean)
        stx, sty, sta = self._uniform_events(gen, cfg.stray_event_rate, cfg.signal_amp_mean)

        ex = np.concatenate((phx, dkx, stx))
        ey = np.concatenate((phy, dky, sty))
        ea = np.concatenate((pha, dka, sta))

        acc = self._acc
        acc.fill(0.0)
        if ex.size:
            pxi = np.floor(ex).astype(np.int64)
            pyi = np.floor(ey).astype(np.int64)
            wx, sx_sum = self._splat_axis(ex, pxi, g.width)
            wy, sy_sum = self._splat_axis(ey, pyi, g.height)
            scaled = ea / (sx_sum * sy_sum)
            self._kern.deposit_splats(acc, pxi, pyi,
                                      np.ascontiguousarray(scaled),
                                      np.ascontiguousarray(wx),
                                      np.ascontiguousarray(wy))

        noise = None
        if cfg.readout_noise_sigma > 0.0:
            noise = gen.normal(0.0, cfg.readout_noise_sigma, g.shape)
        self._kern.finalize_frame(acc, self._baseline, noise, out)
        return ea

    def render(self, frame_index: int) -> np.ndarray:
        """One frame as a fresh uint16 (height, width) array."""
        out = np.empty(self.config.geometry.shape, dtype=np.uint16)
        self._render_into(frame_index, self._sample_pairs(frame_index), out)
        return out

    def render_batch(self, start: int, count: int) -> np.ndarray:
        """Frames start..start+count-1 stacked as uint16 (count, height, width)."""
        g = self.config.geometry
        out = np.empty((count, g.height, g.width), dtype=np.uint16)
        for i in range(count):
            idx = start + i
            self._render_into(idx, self._sample_pairs(idx), out[i])
        return out

    def _render_debug(self, frame_index: int):
        """(frame, pre-baseline accumulator copy, deposited amplitudes)."""
        out = np.empty(self.config.geometry.shape, dtype=np.uint16)
        amps = self._render_into(frame_index, self._sample_pairs(frame_index), out)
        return out, self._acc.copy(), amps


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------

def sample_pair_events(config: SimConfig, frame_index: int) -> list[PairEvent]:
    """Draw the down-converted pairs of one frame.

    Returns an empty list when the pump is off.  Consumes only the pair
    stream, so rendering the same frame afterwards reproduces exactly the
    frame simulate_run would produce.
    """
    renderer = FrameRenderer(config)
    sx, sy, lam_s, ix, iy, lam_i = renderer._sample_pairs(frame_index)
    return [
        PairEvent(
            signal_pos=(float(sx[i]), float(sy[i])),
            idler_pos=(float(ix[i]), float(iy[i])),
            signal_wavelength=float(lam_s[i]),
            idler_wavelength=float(lam_i[i]),
        )
        for i in range(sx.size)
    ]


def render_frame(config: SimConfig, events: list[PairEvent], frame_index: int) -> RawFrame:
    """Detect and read out the given pairs as one camera frame.

    Detection losses, spurious events, charge splats, baseline, readout
    noise, rounding, and clamping are applied here; `events` carries only
    the ideal pair kinematics (normally from sample_pair_events, but any
    list is accepted).
    """
    renderer = FrameRenderer(config)
    sx = np.array([e.signal_pos[0] for e in events], dtype=np.float64)
    sy = np.array([e.signal_pos[1] for e in events], dtype=np.float64)
    ix = np.array([e.idler_pos[0] for e in events], dtype=np.float64)
    iy = np.array([e.idler_pos[1] for e in events], dtype=np.float64)
    lam_s = np.array([e.signal_wavelength for e in events], dtype=np.float64)
    lam_i = np.array([e.idler_wavelength for e in events], dtype=np.float64)
    out = np.empty(config.geometry.shape, dtype=np.uint16)
    renderer._render_into(frame_index, (sx, sy, lam_s, ix, iy, lam_i), out)
    return RawFrame(geometry=config.geometry, values=out, frame_index=frame_index)


def simulate_run(config: SimConfig, n_frames: int) -> Iterator[RawFrame]:
    """Yield n_frames consecutive frames starting at index 0.

    Equivalent to render_frame(config, sample_pair_events(config, i), i)
    for each i, but reuses one renderer.
    """
    if n_frames < 0:
        raise ValueError("n_frames must be >= 0")
    renderer = FrameRenderer(config)
    for i in range(n_frames):
        yield RawFrame(geometry=config.geometry, values=renderer.render(i), frame_index=i)
