"""Counter-based random streams.

Every frame owns independent, reproducible streams derived from
(seed, frame_index, stream id, pump flag) via a Philox-4x64 key, so frames
can be rendered in any order, on any number of workers, with identical
results.  Stream ids keep the public sampling and rendering stages
decoupled: rendering a frame from externally supplied events consumes no
draws from the pair-sampling stream and vice versa.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1

# Stream ids (bits 58..62 of the high key word).
STREAM_PAIRS = 0      # pair counts, positions, wavelengths, jitter
STREAM_RENDER = 1     # fates, amplitudes, dark/stray events, readout noise
STREAM_BASELINE = 2   # static per-pixel baseline map (frame_index 0, pump bit 0)

_FRAME_BITS = 58
_PUMP_BIT = 63


def frame_key(seed: int, frame_index: int, stream: int, pump_on: bool) -> tuple[int, int]:
    """128-bit Philox key for one stream of one frame, as (low, high) words."""
    if not 0 <= frame_index < (1 << _FRAME_BITS):
        raise ValueError(f"frame_index out of range: {frame_index}")
    if not 0 <= stream < 32:
        raise ValueError(f"stream id out of range: {stream}")
    high = frame_index | (stream << _FRAME_BITS) | (int(bool(pump_on)) << _PUMP_BIT)
    return seed & MASK64, high & MASK64


def frame_generator(seed: int, frame_index: int, stream: int, pump_on: bool) -> np.random.Generator:
    """Fresh Generator for one (frame, stream); draws are position-independent."""
    lo, hi = frame_key(seed, frame_index, stream, pump_on)
    key = np.array([lo, hi], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
