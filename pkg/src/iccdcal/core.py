"""Camera geometry, optics, and frame containers.

Coordinate conventions used throughout the package:

* pixel (x, y) covers the half-open square [x, x+1) x [y, y+1); its center
  sits at (x + 0.5, y + 0.5),
* arrays are row-major with shape (height, width), indexed values[y, x],
* regions are axis-aligned pixel rectangles given by their lower corner and
  size, half-open on both axes,
* wavelengths are vacuum wavelengths in nanometers, amplitudes in ADU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CameraGeometry",
    "Region",
    "WavelengthBand",
    "OpticalChannel",
    "RawFrame",
    "BinaryFrame",
    "conjugate_wavelength",
    "conjugate_band",
    "conjugate_region",
    "bin_pixels",
]


# --------------------------------------------------------------------------
# geometry
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CameraGeometry:
    """Sensor raster and the position of the pump-beam axis on it."""

    width: int                               # pixels per row
    height: int                              # rows
    binning: int = 1                         # on-chip binning factor already applied
    beam_center: tuple[float, float] = None  # (x, y); defaults to the frame center

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("geometry must have positive width and height")
        if self.binning < 1:
            raise ValueError("binning factor must be >= 1")
        if self.beam_center is None:
            object.__setattr__(self, "beam_center", (self.width / 2.0, self.height / 2.0))
        bx, by = self.beam_center
        if not (0.0 <= bx <= self.width and 0.0 <= by <= self.height):
            raise ValueError(f"beam_center {self.beam_center} outside the frame")
        object.__setattr__(self, "beam_center", (float(bx), float(by)))

    @property
    def n_pixels(self) -> int:
        return self.width * self.height

    @property
    def shape(self) -> tuple[int, int]:
        """numpy array shape (height, width)."""
        return (self.height, self.width)


@dataclass(frozen=True)
class Region:
    """Axis-aligned pixel rectangle, half-open: x in [x0, x0+w), y in [y0, y0+h)."""

    x0: int
    y0: int
    w: int
    h: int
    label: str = ""

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"region {self.label!r} must have positive size")

    @property
    def x1(self) -> int:
        """One past the last column."""
        return self.x0 + self.w

    @property
    def y1(self) -> int:
        return self.y0 + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def slices(self) -> tuple[slice, slice]:
        """(row, column) slices selecting the region in a (height, width) array."""
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    def contains(self, x: int, y: int) -> bool:
        return self.x0 <= x < self.x1 and self.y0 <= y < self.y1

    def intersects(self, other: "Region") -> bool:
        return (self.x0 < other.x1 and other.x0 < self.x1
                and self.y0 < other.y1 and other.y0 < self.y1)

    def inside(self, geometry: CameraGeometry) -> bool:
        return self.x0 >= 0 and self.y0 >= 0 and self.x1 <= geometry.width and self.y1 <= geometry.height

    def require_inside(self, geometry: CameraGeometry) -> None:
        if not self.inside(geometry):
            raise ValueError(f"region {self} does not fit a {geometry.width}x{geometry.height} frame")

    def pixels(self) -> list[tuple[int, int]]:
        """Member pixels in raster order."""
        return [(x, y) for y in range(self.y0, self.y1) for x in range(self.x0, self.x1)]

    @classmethod
    def parse(cls, text: str, label: str = "") -> "Region":
        """Parse the CLI syntax 'x0,y0,WxH', e.g. '10,12,4x6'."""
        try:
            x0s, y0s, size = text.strip().split(",")
            ws, hs = size.lower().split("x")
            return cls(int(x0s), int(y0s), int(ws), int(hs), label=label)
        except (ValueError, AttributeError) as exc:
            raise ValueError(f"malformed region {text!r}, expected 'x0,y0,WxH'") from exc

    def __str__(self) -> str:
        return f"{self.x0},{self.y0},{self.w}x{self.h}"


# --------------------------------------------------------------------------
# optics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class WavelengthBand:
    """Top-hat spectral band: transmits `transmission` inside center +/- fwhm/2."""

    center: float        # nm
    fwhm: float          # nm, full width
    transmission: float = 1.0  # in-band transmission, (0, 1]

    def __post_init__(self):
        if self.center <= 0 or self.fwhm <= 0:
            raise ValueError("band center and fwhm must be positive")
        if not 0.0 < self.transmission <= 1.0:
            raise ValueError("band transmission must be in (0, 1]")

    @property
    def lo(self) -> float:
        return self.center - self.fwhm / 2.0

    @property
    def hi(self) -> float:
        return self.center + self.fwhm / 2.0

    def contains(self, wavelength: float) -> bool:
        return self.lo <= wavelength <= self.hi


@dataclass(frozen=True)
class OpticalChannel:
    """Chain of lossy elements between source and detector.

    total_transmission is always the product of the element transmissions;
    it is recomputed on construction and validated to 1e-12 relative.
    """

    elements: tuple[tuple[str, float], ...]
    total_transmission: float = None

    def __post_init__(self):
        if not self.elements:
            raise ValueError("channel needs at least one element")
        for name, t in self.elements:
            if not 0.0 < t <= 1.0:
                raise ValueError(f"element {name!r} transmission {t} outside (0, 1]")
        prod = 1.0
        for _, t in self.elements:
            prod *= t
        if self.total_transmission is None:
            object.__setattr__(self, "total_transmission", prod)
        elif not math.isclose(self.total_transmission, prod, rel_tol=1e-12, abs_tol=0.0):
            raise ValueError("total_transmission does not match the element product")

    @classmethod
    def of_total(cls, transmission: float, name: str = "channel") -> "OpticalChannel":
        """Single-element channel with the given net transmission."""
        return cls(elements=((name, float(transmission)),))


# --------------------------------------------------------------------------
# frames
# --------------------------------------------------------------------------

def _check_frame_array(values: np.ndarray, geometry: CameraGeometry, dtype, what: str) -> np.ndarray:
    values = np.asarray(values)
    if values.dtype != dtype:
        raise ValueError(f"{what} must have dtype {np.dtype(dtype)}, got {values.dtype}")
    if values.shape != geometry.shape:
        raise ValueError(f"{what} shape {values.shape} does not match geometry {geometry.shape}")
    values = np.ascontiguousarray(values)
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class RawFrame:
    """One gated exposure: 16-bit counts per pixel, row-major."""

    geometry: CameraGeometry
    values: np.ndarray       # uint16, shape (height, width), read-only
    frame_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _check_frame_array(self.values, self.geometry, np.uint16, "frame values"))
        if self.frame_index < 0:
            raise ValueError("frame_index must be >= 0")


@dataclass(frozen=True)
class BinaryFrame:
    """Thresholded exposure: click flags per pixel plus the threshold applied."""

    geometry: CameraGeometry
    clicks: np.ndarray       # bool, shape (height, width), read-only
    frame_index: int = 0
    threshold_used: int = 0

    def __post_init__(self):
        object.__setattr__(self, "clicks", _check_frame_array(self.clicks, self.geometry, np.bool_, "click flags"))


# --------------------------------------------------------------------------
# conjugation and binning
# --------------------------------------------------------------------------

def conjugate_wavelength(lambda_ref: float, lambda_pump: float) -> float:
    """Partner wavelength under pair energy conservation.

    Down-converted pairs satisfy 1/l_pump = 1/l_a + 1/l_b, so the partner of
    a photon at lambda_ref is 1 / (1/lambda_pump - 1/lambda_ref).

    Parameters
    ----------
    lambda_ref : float
        Known wavelength of one pair member, nm.  Must exceed lambda_pump.
    lambda_pump : float
        Pump wavelength, nm.

    Returns
    -------
    float
        The partner wavelength in nm.  Applying the function twice returns
        the input (the map is an involution).
    """
    if lambda_pump <= 0.0:
        raise ValueError("pump wavelength must be positive")
    if lambda_ref <= lambda_pump:
        raise ValueError(f"wavelength {lambda_ref} nm not above the pump {lambda_pump} nm")
    return 1.0 / (1.0 / lambda_pump - 1.0 / lambda_ref)


def conjugate_band(band: WavelengthBand, lambda_pump: float) -> WavelengthBand:
    """Image of a top-hat band under pair energy conservation.

    The band edges map to conj(hi) < conj(lo); the result is the top-hat
    spanning them, centered on their midpoint, with unit transmission.
    """
    lo = conjugate_wavelength(band.hi, lambda_pump)
    hi = conjugate_wavelength(band.lo, lambda_pump)
    return WavelengthBand(center=(lo + hi) / 2.0, fwhm=hi - lo, transmission=1.0)


def conjugate_region(ref: Region, geometry: CameraGeometry, margin: int = 0) -> Region:
    """Pixel region holding the momentum-conjugate partners of `ref`.

    In the far field, pair partners land point-reflected through the beam
    center: a photon at position p has its partner near 2*c - p.  The pixel
    containing the reflection of pixel x's center is floor(2*c_x - x - 0.5),
    so a w-pixel-wide region reflects to another w-pixel-wide region.  The
    reflected rectangle is dilated by `margin` pixels on every side (to
    leave room for correlation jitter) and clipped to the frame.

    Parameters
    ----------
    ref : Region
        Reference region, must lie inside the frame.
    geometry : CameraGeometry
        Supplies the beam center and the clip bounds.
    margin : int
        Dilation in pixels applied on all four sides before clipping.

    Returns
    -------
    Region
        The conjugate region.  With margin 0 and no clipping, applying the
        function twice returns `ref` exactly.
    """
    if margin < 0:
        raise ValueError("margin must be >= 0")
    ref.require_inside(geometry)
    bx, by = geometry.beam_center
    cx = math.floor(2.0 * bx - 0.5)   # reflected index of pixel x is cx - x
    cy = math.floor(2.0 * by - 0.5)
    x0 = cx - (ref.x0 + ref.w - 1) - margin
    y0 = cy - (ref.y0 + ref.h - 1) - margin
    x1 = cx - ref.x0 + 1 + margin
    y1 = cy - ref.y0 + 1 + margin
    x0c, x1c = max(x0, 0), min(x1, geometry.width)
    y0c, y1c = max(y0, 0), min(y1, geometry.height)
    if x0c >= x1c or y0c >= y1c:
        raise ValueError(f"conjugate of {ref} falls entirely outside the frame")
    label = f"conj({ref.label})" if ref.label else "conjugate"
    return Region(x0c, y0c, x1c - x0c, y1c - y0c, label=label)


def bin_pixels(frame: RawFrame, factor: int) -> RawFrame:
    """Software-bin a frame by an integer factor, saturating at 65535.

    Counts are summed over factor x factor blocks.  The resulting geometry
    has width/factor x height/factor pixels, binning multiplied by the
    factor, and the beam center rescaled.  The frame dimensions must be
    divisible by the factor.
    """
    if factor < 1:
        raise ValueError("binning factor must be >= 1")
    if factor == 1:
        return frame
    g = frame.geometry
    if g.width % factor or g.height % factor:
        raise ValueError(f"frame {g.width}x{g.height} not divisible by binning factor {factor}")
    h, w = g.height // factor, g.width // factor
    summed = frame.values.reshape(h, factor, w, factor).sum(axis=(1, 3), dtype=np.int64)
    binned = np.minimum(summed, 65535).astype(np.uint16)
    geometry = CameraGeometry(
        width=w,
        height=h,
        binning=g.binning * factor,
        beam_center=(g.beam_center[0] / factor, g.beam_center[1] / factor),
    )
    return RawFrame(geometry=geometry, values=binned, frame_index=frame.frame_index)
