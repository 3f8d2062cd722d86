"""Binary frame-stream files.

Layout (all integers little-endian):

    offset  size  field
    0       4     magic "ICDF"
    4       4     format version, currently 1
    8       4     width in pixels
    12      4     height in pixels
    16      4     bits per pixel, currently 16
    20      8     frame count
    28      8     seed of the run that produced the frames (0 if unknown)
    36      -     frames, row-major uint16, frame after frame

The file size must equal header + count * width * height * 2 exactly;
anything else is rejected on open.
"""

from __future__ import annotations

import struct
from collections.abc import Iterable, Iterator

import numpy as np

from .core import CameraGeometry, RawFrame

__all__ = ["FrameFile", "FrameFileWriter", "write_frames", "HEADER_SIZE"]

_MAGIC = b"ICDF"
_VERSION = 1
_HEADER = struct.Struct("<4sIIIIQQ")
HEADER_SIZE = _HEADER.size  # 36 bytes


class FrameFileWriter:
    """Streaming writer; the frame count is fixed up in the header on close."""

    def __init__(self, path, width: int, height: int, seed: int = 0):
        if width < 1 or height < 1:
            raise ValueError("frame dimensions must be positive")
        self.path = str(path)
        self.width = int(width)
        self.height = int(height)
        self.seed = int(seed)
        self.n_frames = 0
        self._fh = open(self.path, "wb")
        self._fh.write(self._header(0))

    def _header(self, count: int) -> bytes:
        return _HEADER.pack(_MAGIC, _VERSION, self.width, self.height, 16, count, self.seed)

    def append_array(self, values: np.ndarray) -> None:
        """Write one (height, width) frame or an (n, height, width) stack."""
        if self._fh is None:
            raise ValueError("writer is closed")
        arr = np.asarray(values)
        if arr.ndim == 2:
            arr = arr[None, ...]
        if arr.ndim != 3 or arr.shape[1:] != (self.height, self.width):
            raise ValueError(f"frame shape {arr.shape} does not match {self.height}x{self.width}")
        if arr.dtype != np.uint16:
            raise ValueError(f"frames must be uint16, got {arr.dtype}")
        self._fh.write(np.ascontiguousarray(arr, dtype="<u2").tobytes())
        self.n_frames += arr.shape[0]

    def append(self, frame: RawFrame) -> None:
        self.append_array(frame.values)

    def close(self) -> None:
        if self._fh is None:
            return
        self._fh.seek(0)
        self._fh.write(self._header(self.n_frames))
        self._fh.close()
        self._fh = None

    def __enter__(self) -> "FrameFileWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class FrameFile:
    """Read-only view of a frame-stream file, memory-mapped."""

    def __init__(self, path):
        self.path = str(path)
        with open(self.path, "rb") as fh:
            raw = fh.read(HEADER_SIZE)
            if len(raw) < HEADER_SIZE:
                raise ValueError(f"{self.path}: too short to hold a header")
            magic, version, width, height, depth, count, seed = _HEADER.unpack(raw)
            if magic != _MAGIC:
                raise ValueError(f"{self.path}: bad magic {magic!r}")
            if version != _VERSION:
                raise ValueError(f"{self.path}: unsupported version {version}")
            if depth != 16:
                raise ValueError(f"{self.path}: unsupported bit depth {depth}")
            if width < 1 or height < 1:
                raise ValueError(f"{self.path}: bad dimensions {width}x{height}")
            fh.seek(0, 2)
            size = fh.tell()
        expect = HEADER_SIZE + count * width * height * 2
        if size != expect:
            raise ValueError(f"{self.path}: size {size} does not match header "
                             f"({count} frames of {width}x{height} need {expect})")
        self.width, self.height = width, height
        self.n_frames = int(count)
        self.seed = int(seed)
        if count:
            self._mm = np.memmap(self.path, dtype="<u2", mode="r",
                                 offset=HEADER_SIZE).reshape(count, height, width)
        else:
            self._mm = np.empty((0, height, width), dtype=np.uint16)

    def close(self) -> None:
        """Release the mapping; further reads raise."""
        self._mm = None

    def __enter__(self) -> "FrameFile":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def geometry(self, binning: int = 1, beam_center: tuple[float, float] | None = None) -> CameraGeometry:
        """Geometry of the stored raster; beam center defaults to the middle."""
        return CameraGeometry(width=self.width, height=self.height,
                              binning=binning, beam_center=beam_center)

    def read_batch(self, start: int, count: int) -> np.ndarray:
        """Frames start..start+count-1 as a native uint16 array (copy)."""
        if self._mm is None:
            raise ValueError(f"{self.path} is closed")
        if not 0 <= start <= start + count <= self.n_frames:
            raise ValueError(f"frames {start}..{start + count} outside 0..{self.n_frames}")
        return np.ascontiguousarray(self._mm[start:start + count], dtype=np.uint16)

    def frame(self, index: int) -> RawFrame:
        values = self.read_batch(index, 1)[0]
        return RawFrame(geometry=self.geometry(), values=values, frame_index=index)

    def iter_frames(self) -> Iterator[RawFrame]:
        for i in range(self.n_frames):
            yield self.frame(i)


def write_frames(path, frames: Iterable[RawFrame], seed: int = 0) -> int:
    """Write RawFrames to a new file; returns the number written."""
    writer = None
    try:
        for frame in frames:
            if writer is None:
                writer = FrameFileWriter(path, frame.geometry.width, frame.geometry.height, seed=seed)
            writer.append(frame)
        if writer is None:
            raise ValueError("no frames supplied")
    finally:
        if writer is not None:
            writer.close()
    return writer.n_frames
