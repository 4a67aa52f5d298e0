"""Explicit visual attractiveness features of RGB images.

Seven interpretable measurements per image: brightness, saturation,
sharpness, entropy, RGB-contrast, colorfulness, naturalness.  All are pure
functions of the pixel data, invariant under horizontal/vertical flips, and
deterministic down to the bit for byte-identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import InputError

EVF_DIMENSION = 7

# Guard against division by near-zero local luma in the sharpness kernel.
_SHARPNESS_EPS = 1e-6

# Hue bands (degrees, half-open) and saturation optima of the naturalness
# score: pixels are grouped into skin / grass / sky and each group is scored
# by how close its mean saturation sits to the band's empirical optimum.
_NATURALNESS_BANDS = (
    (25.0, 70.0, 0.76, 0.52),   # skin
    (95.0, 135.0, 0.81, 0.53),  # grass
    (185.0, 260.0, 0.43, 0.22), # sky
)


class ImageTooSmallError(InputError):
    """Raised when an image lacks interior pixels (width or height < 3)."""


class ImageDecodeError(InputError):
    """Raised when a file cannot be decoded into an RGB image."""


@dataclass(frozen=True)
class RgbImage:
    """Decoded 8-bit RGB image; `array` has shape (height, width, 3), uint8."""

    array: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.array)
        if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
            raise InputError(f"expected uint8 array of shape (h, w, 3), got {arr.shape} {arr.dtype}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InputError("image must be at least 1x1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "array", arr)

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def height(self) -> int:
        return self.array.shape[0]


@dataclass(frozen=True)
class EvfVector:
    """The seven attractiveness measurements of one image, in fixed order."""

    brightness: float
    saturation: float
    sharpness: float
    entropy: float
    rgb_contrast: float
    colorfulness: float
    naturalness: float

    # sharpness and colorfulness are unbounded above; the rest live in [0, 1]
    _UNIT_RANGE = ("brightness", "saturation", "entropy", "rgb_contrast", "naturalness")

    def __post_init__(self):
        for name, value in zip(self.field_names(), self.as_tuple()):
            if not math.isfinite(value):
                raise InputError(f"non-finite EVF component {name}: {value}")
            if value < 0.0:
                raise InputError(f"negative EVF component {name}: {value}")
            if name in self._UNIT_RANGE and value > 1.0:
                raise InputError(f"EVF component {name} exceeds 1: {value}")

    @staticmethod
    def field_names() -> tuple[str, ...]:
        return ("brightness", "saturation", "sharpness", "entropy",
                "rgb_contrast", "colorfulness", "naturalness")

    def as_tuple(self) -> tuple[float, ...]:
        return (self.brightness, self.saturation, self.sharpness, self.entropy,
                self.rgb_contrast, self.colorfulness, self.naturalness)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=np.float64)


def load_image(path: str | Path) -> RgbImage:
    """Decode an image file (PNG, JPEG, ...) to 8-bit RGB.

    Alpha channels are composited over white before conversion.
    """
    try:
        with Image.open(path) as img:
            img.load()
            if "A" in img.getbands() or (img.mode == "P" and "transparency" in img.info):
                rgba = img.convert("RGBA")
                background = Image.new("RGB", rgba.size, (255, 255, 255))
                background.paste(rgba, mask=rgba.getchannel("A"))
                rgb = background
            else:
                rgb = img.convert("RGB")
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise ImageDecodeError(f"cannot decode image {path}: {exc}") from exc
    return RgbImage(np.asarray(rgb, dtype=np.uint8))


def luma(pixel: tuple[int, int, int]) -> float:
    """Rec.601 luma of one (r, g, b) triple, scaled to [0, 1]."""
    r, g, b = pixel
    for c in (r, g, b):
        if not 0 <= c <= 255:
            raise InputError(f"channel out of range: {pixel}")
    return min(max((0.299 * r + 0.587 * g + 0.114 * b) / 255.0, 0.0), 1.0)


def _luma_plane(img: RgbImage) -> np.ndarray:
    arr = img.array.astype(np.float64)
    y = (0.299 * arr[:, :, 0] + 0.587 * arr[:, :, 1] + 0.114 * arr[:, :, 2]) / 255.0
    return np.clip(y, 0.0, 1.0)


def brightness(img: RgbImage) -> float:
    """Mean luma over all pixels."""
    return float(np.mean(_luma_plane(img)))


def saturation(img: RgbImage) -> float:
    """Mean HSV saturation; pixels with max channel 0 contribute 0."""
    arr = img.array.astype(np.float64)
    mx = arr.max(axis=2)
    mn = arr.min(axis=2)
    sat = np.where(mx > 0, (mx - mn) / np.where(mx > 0, mx, 1.0), 0.0)
    return float(np.mean(sat))


def sharpness(img: RgbImage) -> float:
    """Luma-normalized mean absolute 4-neighbor Laplacian over interior pixels."""
    if img.width < 3 or img.height < 3:
        raise ImageTooSmallError(f"sharpness needs width and height >= 3, got {img.width}x{img.height}")
    y = _luma_plane(img)
    lap = (y[:-2, 1:-1] + y[2:, 1:-1] + y[1:-1, :-2] + y[1:-1, 2:] - 4.0 * y[1:-1, 1:-1])
    window_mean = np.zeros_like(lap)
    for dr in range(3):
        for dc in range(3):
            window_mean += y[dr:dr + lap.shape[0], dc:dc + lap.shape[1]]
    window_mean /= 9.0
    return float(np.mean(np.abs(lap) / np.maximum(window_mean, _SHARPNESS_EPS)))


def entropy(img: RgbImage) -> float:
    """Shannon entropy (bits) of the 256-bin luma histogram, normalized by 8."""
    levels = np.rint(_luma_plane(img) * 255.0).astype(np.int64)
    counts = np.bincount(levels.ravel(), minlength=256)
    p = counts[counts > 0] / levels.size
    h = float(-np.sum(p * np.log2(p)))
    return min(max(h / 8.0, 0.0), 1.0)


def rgb_contrast(img: RgbImage) -> float:
    """Population standard deviation of all channel values, scaled to [0, 1]."""
    vals = img.array.astype(np.float64) / 255.0
    return float(np.std(vals))


def colorfulness(img: RgbImage) -> float:
    """Hasler-Suesstrunk opponent-channel colorfulness, scaled by 255."""
    arr = img.array.astype(np.float64)
    rg = arr[:, :, 0] - arr[:, :, 1]
    yb = 0.5 * (arr[:, :, 0] + arr[:, :, 1]) - arr[:, :, 2]
    sigma = math.hypot(float(np.std(rg)), float(np.std(yb)))
    mu = math.hypot(float(np.mean(rg)), float(np.mean(yb)))
    return (sigma + 0.3 * mu) / 255.0


def _hsv_planes(img: RgbImage) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hue (degrees in [0, 360)), saturation and value planes."""
    arr = img.array.astype(np.float64) / 255.0
    r, g, b = arr[:, :, 0], arr[:, :, 1], arr[:, :, 2]
    mx = arr.max(axis=2)
    mn = arr.min(axis=2)
    delta = mx - mn
    safe = np.where(delta > 0, delta, 1.0)
    hue = np.zeros_like(mx)
    idx = (mx == r) & (delta > 0)
    hue[idx] = np.mod((g - b)[idx] / safe[idx], 6.0)
    idx = (mx == g) & (delta > 0) & (mx != r)
    hue[idx] = (b - r)[idx] / safe[idx] + 2.0
    idx = (mx == b) & (delta > 0) & (mx != r) & (mx != g)
    hue[idx] = (r - g)[idx] / safe[idx] + 4.0
    hue = np.mod(hue * 60.0, 360.0)
    sat = np.where(mx > 0, delta / np.where(mx > 0, mx, 1.0), 0.0)
    return hue, sat, mx


def naturalness(img: RgbImage) -> float:
    """Color-naturalness score over skin/grass/sky pixel groups.

    Qualifying pixels (V in [0.2, 0.8], S > 0.1) are grouped by hue band;
    each non-empty group scores a Gaussian of its mean saturation around the
    band optimum, and groups are combined weighted by pixel count.  Images
    with no qualifying pixel in any band score 0.
    """
    hue, sat, val = _hsv_planes(img)
    qualify = (val >= 0.2) & (val <= 0.8) & (sat > 0.1)
    total = 0
    weighted = 0.0
    for lo, hi, opt, width in _NATURALNESS_BANDS:
        members = qualify & (hue >= lo) & (hue < hi)
        n = int(np.count_nonzero(members))
        if n == 0:
            continue
        mean_sat = float(np.mean(sat[members]))
        score = math.exp(-0.5 * ((mean_sat - opt) / width) ** 2)
        total += n
        weighted += n * score
    if total == 0:
        return 0.0
    return min(max(weighted / total, 0.0), 1.0)


def extract_evf(img: RgbImage) -> EvfVector:
    """All seven features of one image, assembled in fixed order."""
    if img.width < 3 or img.height < 3:
        raise ImageTooSmallError(f"EVF extraction needs width and height >= 3, got {img.width}x{img.height}")
    return EvfVector(
        brightness=brightness(img),
        saturation=saturation(img),
        sharpness=sharpness(img),
        entropy=entropy(img),
        rgb_contrast=rgb_contrast(img),
        colorfulness=colorfulness(img),
        naturalness=naturalness(img),
    )
