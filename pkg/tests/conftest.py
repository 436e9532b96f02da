"""Shared fixtures: random images, small databases, synthetic textures."""

from __future__ import annotations

import numpy as np
import pytest

from pixelnn import (
    DescriptorConfig,
    ImageRGB,
    LowFreqImage,
    bicubic_resample,
    build_database,
)


def rand_image(rng: np.random.Generator, h: int, w: int) -> ImageRGB:
    return ImageRGB(rng.random((h, w, 3), dtype=np.float32))


def rand_lowfreq(rng: np.random.Generator, h: int, w: int) -> LowFreqImage:
    return LowFreqImage(rng.random((h, w, 3), dtype=np.float32))


def make_db(rng: np.random.Generator, n: int, size: int, cfg: DescriptorConfig):
    """Random database of n exemplars with size x size images."""
    pairs = []
    for i in range(n):
        regressed = rand_lowfreq(rng, size, size)
        target = rand_image(rng, size, size)
        pairs.append((regressed, target, f"ex{i}", {f"tag{i % 3}"}))
    return build_database(pairs, cfg)


def band_limited_noise(rng: np.random.Generator, size: int, max_cycles: float) -> np.ndarray:
    """Zero-mean noise with spectral support inside radius max_cycles, in [-1, 1]."""
    white = rng.standard_normal((size, size))
    spec = np.fft.fft2(white)
    fy = np.minimum(np.arange(size), size - np.arange(size))
    fx = np.minimum(np.arange(size), size - np.arange(size))
    radius = np.hypot(fy[:, None], fx[None, :])
    spec[radius > max_cycles] = 0.0
    noise = np.real(np.fft.ifft2(spec))
    noise -= noise.mean()
    peak = np.abs(noise).max()
    return noise / peak if peak > 0 else noise


GRATING_ORIENTATIONS = tuple(np.pi * i / 8.0 for i in range(8))
GRATING_FREQS = (4.5, 5.0, 5.5)


def make_texture(
    rng: np.random.Generator,
    size: int = 96,
    noise_amp: float = 0.08,
    noise_cycles: float = 4.0,
    grating_amp: float = 0.18,
) -> ImageRGB:
    """Band-limited noise plus sinusoid gratings at a random orientation.

    The gratings form a truncated square wave: a fundamental below the
    12x12-input Nyquist (so Stage-1 still sees the texture's orientation,
    frequency and phase) plus phase-locked 3rd and 5th harmonics well above
    it. The harmonics are the high-frequency content that only residual
    transfer can restore, and because they are locked to the visible
    fundamental, well-matched exemplars restore them coherently.
    Orientation and frequency are drawn from small discrete sets so that a
    200-exemplar database actually contains close matches; amplitudes keep
    every value inside [0, 1] without clipping.
    """
    noise = band_limited_noise(rng, size, noise_cycles) * noise_amp
    theta = GRATING_ORIENTATIONS[rng.integers(len(GRATING_ORIENTATIONS))]
    freq = GRATING_FREQS[rng.integers(len(GRATING_FREQS))]
    phase = rng.uniform(0.0, 2.0 * np.pi)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    u = 2.0 * np.pi * freq * (xx * np.cos(theta) + yy * np.sin(theta)) / size + phase
    grating = grating_amp * (np.sin(u) + np.sin(3.0 * u) / 3.0 + np.sin(5.0 * u) / 5.0)
    gray = 0.5 + noise + grating
    return ImageRGB(np.repeat(gray[:, :, None], 3, axis=2).astype(np.float32))


def texture_pair(rng: np.random.Generator, size: int = 96, low: int = 12):
    """(stage-1 bicubic image, ground truth) for one synthetic texture."""
    gt = make_texture(rng, size)
    small = bicubic_resample(gt, low, low)
    f_x = bicubic_resample(ImageRGB(small.data), size, size)
    return f_x, gt


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
