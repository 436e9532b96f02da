"""Raster images, PNG I/O, bicubic resampling, and Fourier-spectrum stats.

Images are float32 arrays of shape (height, width, 3) with values in [0, 1],
row-major and channel-interleaved. 8-bit quantization happens only at the
PNG boundary so that residual transfer never quantizes twice.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np
from PIL import Image, UnidentifiedImageError

# Rec.601 luma weights, used for spectra and descriptor gradients.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)


@dataclass(frozen=True)
class ImageRGB:
    """Dense float RGB raster; immutable after construction."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr is self.data:
            arr = arr.copy()  # never freeze a caller-owned buffer
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"image data must have shape (h, w, 3), got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"image must be at least 1x1, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("image data contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("image data must lie in [0, 1]")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def size(self) -> tuple[int, int]:
        """(width, height)."""
        return self.data.shape[1], self.data.shape[0]


@dataclass(frozen=True)
class LowFreqImage(ImageRGB):
    """Stage-1 output: a smoothed mid-frequency image awaiting detail transfer.

    provenance records whether the image came from the built-in bicubic
    upsampler or was supplied externally.
    """

    provenance: str = "external-file"

    _PROVENANCES = ("bicubic", "external-file")

    def __post_init__(self):
        super().__post_init__()
        if self.provenance not in self._PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


@dataclass(frozen=True)
class SpectrumStats:
    """Centered DFT magnitudes plus radial summaries of one image."""

    magnitude: np.ndarray
    radial_profile: np.ndarray
    high_freq_ratio: float
    cutoff: float = field(default=0.25)


def luminance(img: ImageRGB | np.ndarray) -> np.ndarray:
    """Rec.601 luma of an RGB image as a float64 (h, w) array."""
    data = img.data if isinstance(img, ImageRGB) else np.asarray(img)
    data = data.astype(np.float64)
    r, g, b = LUMA_WEIGHTS
    return r * data[..., 0] + g * data[..., 1] + b * data[..., 2]


def load_png(path) -> ImageRGB:
    """Load an 8-bit RGB or grayscale PNG, mapping bytes to v/255.

    Grayscale values are replicated across the three channels. Any other
    color type or bit depth is rejected with an error naming the property.
    """
    try:
        with Image.open(path) as im:
            if im.format != "PNG":
                raise ValueError(f"not a PNG file (format={im.format}): {path}")
            if im.mode not in ("RGB", "L"):
                raise ValueError(
                    f"unsupported PNG color type / bit depth (mode={im.mode}): {path}"
                )
            raw = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise ValueError(f"not a decodable image: {path}") from exc
    data = raw.astype(np.float32) / np.float32(255.0)
    if data.ndim == 2:
        data = np.repeat(data[:, :, None], 3, axis=2)
    return ImageRGB(data)


def png_bytes(img: ImageRGB) -> bytes:
    """Encode an image as 8-bit RGB PNG, quantizing with round-half-up."""
    quantized = np.floor(img.data.astype(np.float64) * 255.0 + 0.5)
    buf = io.BytesIO()
    Image.fromarray(quantized.astype(np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def save_png(img: ImageRGB, path) -> None:
    """Write an image as 8-bit RGB PNG, quantizing with round-half-up."""
    with open(path, "wb") as fh:
        fh.write(png_bytes(img))


def _catmull_rom(t: np.ndarray) -> np.ndarray:
    """Catmull-Rom kernel (bicubic with a = -0.5) evaluated at |t|."""
    a = -0.5
    t = np.abs(t)
    near = (a + 2.0) * t**3 - (a + 3.0) * t**2 + 1.0
    far = a * (t**3 - 5.0 * t**2 + 8.0 * t - 4.0)
    return np.where(t <= 1.0, near, np.where(t < 2.0, far, 0.0))


def _resample_axis_weights(n_in: int, n_out: int) -> tuple[np.ndarray, np.ndarray]:
    """Tap indices (n_out, 4) and kernel weights for one axis.

    Output sample x maps to source coordinate (x + 0.5) * n_in / n_out - 0.5;
    the four taps around it are edge-clamped.
    """
    x = np.arange(n_out, dtype=np.float64)
    src = (x + 0.5) * (n_in / n_out) - 0.5
    base = np.floor(src).astype(np.int64)
    frac = src - base
    offsets = np.array([-1, 0, 1, 2], dtype=np.int64)
    taps = base[:, None] + offsets[None, :]
    weights = _catmull_rom(offsets[None, :].astype(np.float64) - frac[:, None])
    return np.clip(taps, 0, n_in - 1), weights


def bicubic_resample(img: ImageRGB, out_w: int, out_h: int) -> LowFreqImage:
    """Catmull-Rom bicubic resample with edge-clamped sampling.

    This is the built-in Stage-1 for super-resolution; output values are
    clamped back to [0, 1] after the separable filter.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError(f"output size must be >= 1x1, got {out_w}x{out_h}")
    data = img.data.astype(np.float64)
    taps_x, w_x = _resample_axis_weights(img.width, out_w)
    taps_y, w_y = _resample_axis_weights(img.height, out_h)
    # Horizontal pass to (h, out_w, 3), then vertical to (out_h, out_w, 3).
    horiz = np.einsum("hotc,ot->hoc", data[:, taps_x, :], w_x)
    out = np.einsum("otwc,ot->owc", horiz[taps_y], w_y)
    out = np.clip(out, 0.0, 1.0).astype(np.float32)
    return LowFreqImage(out, provenance="bicubic")


def spectrum(img: ImageRGB, cutoff: float = 0.25) -> SpectrumStats:
    """DC-centered DFT magnitude of the image luminance plus radial stats.

    Energy is squared magnitude; the high-frequency cutoff radius is
    cutoff * (min(w, h) / 2) and high_freq_ratio is the energy fraction
    strictly beyond it. Radial profile bands are nearest-integer radii.
    """
    if not 0.0 < cutoff < 1.0:
        raise ValueError(f"cutoff must lie in (0, 1), got {cutoff}")
    lum = luminance(img)
    h, w = lum.shape
    mag = np.abs(np.fft.fftshift(np.fft.fft2(lum)))
    cy, cx = h // 2, w // 2
    yy, xx = np.mgrid[0:h, 0:w]
    dist = np.hypot(yy - cy, xx - cx)

    bands = np.floor(dist + 0.5).astype(np.int64)
    profile = np.zeros(int(bands.max()) + 1, dtype=np.float64)
    counts = np.bincount(bands.ravel())
    sums = np.bincount(bands.ravel(), weights=mag.ravel())
    nonzero = counts > 0
    profile[nonzero] = sums[nonzero] / counts[nonzero]

    energy = mag**2
    total = float(energy.sum())
    cutoff_radius = cutoff * (min(w, h) / 2.0)
    high = float(energy[dist > cutoff_radius].sum())
    ratio = high / total if total > 0.0 else 0.0
    return SpectrumStats(mag, profile, ratio, cutoff)


def psnr(a: ImageRGB, b: ImageRGB) -> float:
    """Peak signal-to-noise ratio in dB with peak 1.0; +inf for equal images."""
    if a.data.shape != b.data.shape:
        raise ValueError(
            f"psnr dimension mismatch: {a.data.shape} vs {b.data.shape}"
        )
    diff = a.data.astype(np.float64) - b.data.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)
