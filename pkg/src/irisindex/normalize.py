"""Rubber-sheet normalization of an eye image into a 64x512 polar grid."""

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, OutOfBoundsError, DataError
from .model import EyeLabel, NormalizedIris, NORM_ROWS, NORM_COLS

PUPIL_TRIM = 0.10
IRIS_TRIM = 0.05


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    r: float

    def __post_init__(self):
        if not (np.isfinite(self.cx) and np.isfinite(self.cy) and np.isfinite(self.r)):
            raise GeometryError(f"circle has non-finite parameters: {self}")
        if self.r <= 0:
            raise GeometryError(f"circle radius must be positive, got {self.r}")


@dataclass(frozen=True)
class EyeImage:
    """Grayscale eye image; ``pixels`` has shape (height, width)."""

    pixels: np.ndarray
    label: EyeLabel
    sample_id: str

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64, copy=True)
        if px.ndim != 2 or px.size == 0:
            raise DataError("eye image must be a non-empty 2-D array")
        if not np.all(np.isfinite(px)) or px.min() < 0.0 or px.max() > 1.0:
            raise DataError("eye image intensities must be finite and in [0, 1]")
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def trim_radii(r_pupil, r_iris):
    """Pull the pupil boundary out by 10% and the iris boundary in by 5% of the ring width."""
    if not (0 < r_pupil < r_iris):
        raise GeometryError(f"need 0 < r_pupil < r_iris, got r_pupil={r_pupil}, r_iris={r_iris}")
    width = r_iris - r_pupil
    return r_pupil + PUPIL_TRIM * width, r_iris - IRIS_TRIM * width


def sample_grid(pupil: Circle, iris: Circle, angle_offset_cols: int = 0):
    """Return (x, y) sample coordinates, each of shape (64, 512).

    Column j sits at angle 2*pi*((j + angle_offset_cols) mod 512)/512, measured
    from +x toward +y (image-down). Row k sits at t = (k + 0.5)/64 of the way
    from the trimmed pupil boundary to the trimmed iris boundary.
    """
    rp, ri = trim_radii(pupil.r, iris.r)
    cols = (np.arange(NORM_COLS) + int(angle_offset_cols)) % NORM_COLS
    theta = 2.0 * np.pi * cols / NORM_COLS
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    inner_x = pupil.cx + rp * cos_t
    inner_y = pupil.cy + rp * sin_t
    outer_x = iris.cx + ri * cos_t
    outer_y = iris.cy + ri * sin_t
    t = ((np.arange(NORM_ROWS) + 0.5) / NORM_ROWS)[:, None]
    x = (1.0 - t) * inner_x + t * outer_x
    y = (1.0 - t) * inner_y + t * outer_y
    return x, y


def bilinear(pixels: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Bilinear lookup at pixel-centre coordinates; raises if any sample leaves the image."""
    h, w = pixels.shape
    outside = (x < 0) | (x > w - 1) | (y < 0) | (y > h - 1) | ~np.isfinite(x) | ~np.isfinite(y)
    if outside.any():
        row, col = (int(i) for i in np.argwhere(outside)[0])
        raise OutOfBoundsError(row, col, f"x={x[row, col]:.3f}, y={y[row, col]:.3f}, image {w}x{h}")
    x0 = np.minimum(np.floor(x).astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(np.floor(y).astype(np.intp), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = x - x0
    fy = y - y0
    top = pixels[y0, x0] * (1.0 - fx) + pixels[y0, x1] * fx
    bottom = pixels[y1, x0] * (1.0 - fx) + pixels[y1, x1] * fx
    return top * (1.0 - fy) + bottom * fy


def unwrap(image: EyeImage, pupil: Circle, iris: Circle, angle_offset_cols: int = 0) -> NormalizedIris:
    x, y = sample_grid(pupil, iris, angle_offset_cols)
    values = bilinear(image.pixels, x, y)
    # interpolation weights are convex; clip only rounding overshoot
    values = np.clip(values, 0.0, 1.0)
    return NormalizedIris(values, image.label, image.sample_id)
