"""Per-pixel multiscale descriptors and the cosine distance used for matching.

Each pixel gets a concatenation of per-level blocks sampled from a Gaussian
pyramid. Level l (0-based) is the image blurred with sigma = 0.8 * 2**l and
decimated by stride 2**l; a block gathers a (2r+1)^2 patch of
(R, G, B, dx-luma-gradient, dy-luma-gradient) from that level, sampled
bilinearly at the query pixel's position in level coordinates. Patch offsets
are level pixels, so deeper levels see proportionally more context.

Fields computed outside this package (e.g. CNN hypercolumns) can be loaded
from the PXNT tensor format and used interchangeably for matching.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .image import LUMA_WEIGHTS, ImageRGB

FEATURES_PER_PIXEL_PER_LEVEL = 5  # R, G, B, dx luma gradient, dy luma gradient

TENSOR_MAGIC = b"PXNT"
TENSOR_VERSION = 1


@dataclass(frozen=True)
class DescriptorConfig:
    """Knobs for the pyramid descriptor.

    level_weights scales each normalized level block before concatenation;
    None means all ones.
    """

    levels: int = 5
    patch_radius: int = 1
    level_weights: tuple[float, ...] | None = None
    normalize_per_level: bool = True

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError(f"levels must be >= 1, got {self.levels}")
        if self.patch_radius < 0:
            raise ValueError(f"patch_radius must be >= 0, got {self.patch_radius}")
        if self.level_weights is None:
            weights = (1.0,) * self.levels
        else:
            weights = tuple(float(w) for w in self.level_weights)
            if len(weights) != self.levels:
                raise ValueError(
                    f"expected {self.levels} level weights, got {len(weights)}"
                )
            if not all(np.isfinite(w) and w > 0 for w in weights):
                raise ValueError("level weights must be finite and positive")
        object.__setattr__(self, "level_weights", weights)

    @property
    def weights(self) -> tuple[float, ...]:
        return self.level_weights

    @property
    def block_dim(self) -> int:
        """Length of one level's sub-block."""
        side = 2 * self.patch_radius + 1
        return side * side * FEATURES_PER_PIXEL_PER_LEVEL

    @property
    def dim(self) -> int:
        return self.levels * self.block_dim

    def digest(self) -> str:
        """Stable 64-bit hex digest identifying this configuration."""
        canon = "levels=%d;radius=%d;weights=%s;normalize=%d" % (
            self.levels,
            self.patch_radius,
            ",".join(repr(w) for w in self.weights),
            int(self.normalize_per_level),
        )
        return hashlib.blake2b(canon.encode(), digest_size=8).hexdigest()


@dataclass(frozen=True)
class DescriptorField:
    """Per-pixel descriptor vectors for one image.

    data has shape (h, w, dim), float32, pixel-major. level_dims gives the
    sub-block length of each level (needed to locate the coarsest block);
    config_hash ties the field to the producing config, or "external".
    """

    data: np.ndarray
    config_hash: str
    level_dims: tuple[int, ...] | None = None

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr is self.data:
            arr = arr.copy()  # never freeze a caller-owned buffer
        if arr.ndim != 3:
            raise ValueError(f"field data must have shape (h, w, dim), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("descriptor field contains non-finite values")
        if self.level_dims is not None:
            dims = tuple(int(d) for d in self.level_dims)
            if sum(dims) != arr.shape[2]:
                raise ValueError(
                    f"level dims {dims} do not sum to descriptor dim {arr.shape[2]}"
                )
            object.__setattr__(self, "level_dims", dims)
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class GlobalDescriptor:
    """Whole-image match key: normalized mean of the coarsest level block."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr is self.data:
            arr = arr.copy()  # never freeze a caller-owned buffer
        if arr.ndim != 1:
            raise ValueError(f"global descriptor must be a vector, got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def dim(self) -> int:
        return self.data.shape[0]


def _gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled Gaussian, truncated at radius ceil(3*sigma), normalized."""
    radius = int(np.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def gaussian_blur(data: np.ndarray, sigma: float) -> np.ndarray:
    """Separable edge-clamped Gaussian blur of an (h, w, c) float array."""
    kernel = _gaussian_kernel(sigma)
    radius = (len(kernel) - 1) // 2
    out = np.asarray(data, dtype=np.float64)
    for axis in (0, 1):
        padded = np.pad(
            out,
            [(radius, radius) if ax == axis else (0, 0) for ax in range(out.ndim)],
            mode="edge",
        )
        acc = np.zeros_like(out)
        for i, w in enumerate(kernel):
            sl = [slice(None)] * out.ndim
            sl[axis] = slice(i, i + out.shape[axis])
            acc += w * padded[tuple(sl)]
        out = acc
    return out


def _level_features(img_f64: np.ndarray, sigma: float, stride: int) -> np.ndarray:
    """5-channel (R, G, B, gx, gy) feature image of one pyramid level."""
    blurred = gaussian_blur(img_f64, sigma)
    level = blurred[::stride, ::stride]
    r, g, b = LUMA_WEIGHTS
    luma = r * level[..., 0] + g * level[..., 1] + b * level[..., 2]
    # Central differences with clamped borders.
    right = np.empty_like(luma)
    right[:, :-1] = luma[:, 1:]
    right[:, -1] = luma[:, -1]
    left = np.empty_like(luma)
    left[:, 1:] = luma[:, :-1]
    left[:, 0] = luma[:, 0]
    gx = (right - left) / 2.0
    down = np.empty_like(luma)
    down[:-1] = luma[1:]
    down[-1] = luma[-1]
    up = np.empty_like(luma)
    up[1:] = luma[:-1]
    up[0] = luma[0]
    gy = (down - up) / 2.0
    return np.concatenate([level, gx[..., None], gy[..., None]], axis=2)


def _bilinear_sample(feat: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample (lh, lw, c) features at the grid ys x xs, clamped to bounds."""
    lh, lw = feat.shape[:2]
    ys = np.clip(ys, 0.0, lh - 1.0)
    xs = np.clip(xs, 0.0, lw - 1.0)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, lh - 1)
    x1 = np.minimum(x0 + 1, lw - 1)
    fy = (ys - y0)[:, None, None]
    fx = (xs - x0)[None, :, None]
    top = feat[np.ix_(y0, x0)] * (1.0 - fx) + feat[np.ix_(y0, x1)] * fx
    bot = feat[np.ix_(y1, x0)] * (1.0 - fx) + feat[np.ix_(y1, x1)] * fx
    return top * (1.0 - fy) + bot * fy


def compute_field(img: ImageRGB, cfg: DescriptorConfig) -> DescriptorField:
    """Compute the pyramid descriptor field of an image.

    Raises if the image is smaller than the descriptor patch.
    """
    side = 2 * cfg.patch_radius + 1
    if img.height < side or img.width < side:
        raise ValueError(
            f"image {img.width}x{img.height} too small for patch radius "
            f"{cfg.patch_radius} ({side}x{side})"
        )
    img_f64 = img.data.astype(np.float64)
    h, w = img.height, img.width
    r = cfg.patch_radius
    offsets = [(dy, dx) for dy in range(-r, r + 1) for dx in range(-r, r + 1)]
    blocks = []
    for level in range(cfg.levels):
        stride = 2**level
        sigma = 0.8 * (2.0**level)
        feat = _level_features(img_f64, sigma, stride)
        base_y = np.arange(h, dtype=np.float64) / stride
        base_x = np.arange(w, dtype=np.float64) / stride
        patch = np.empty((h, w, len(offsets), FEATURES_PER_PIXEL_PER_LEVEL))
        for p, (dy, dx) in enumerate(offsets):
            patch[:, :, p, :] = _bilinear_sample(feat, base_y + dy, base_x + dx)
        block = patch.reshape(h, w, cfg.block_dim)
        if cfg.normalize_per_level:
            norms = np.sqrt(np.einsum("hwd,hwd->hw", block, block))
            safe = np.where(norms > 0.0, norms, 1.0)
            block = block / safe[:, :, None]
        blocks.append(block * cfg.weights[level])
    data = np.concatenate(blocks, axis=2).astype(np.float32)
    return DescriptorField(
        data,
        config_hash=cfg.digest(),
        level_dims=(cfg.block_dim,) * cfg.levels,
    )


def global_descriptor(field: DescriptorField) -> GlobalDescriptor:
    """Mean coarsest-level block over all pixels, L2-normalized."""
    if field.level_dims is None:
        raise ValueError(
            "field has no level structure; supply explicit sub-block bounds "
            "(level_dims) to locate the coarsest block"
        )
    start = field.dim - field.level_dims[-1]
    mean = field.data[:, :, start:].astype(np.float64).reshape(-1, field.level_dims[-1])
    vec = mean.mean(axis=0)
    norm = float(np.sqrt(np.dot(vec, vec)))
    if norm > 0.0:
        vec = vec / norm
    return GlobalDescriptor(vec.astype(np.float32))


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine distance in [0, 2]; zero-norm inputs give the neutral value 1.

    Computed as 1 - dot / sqrt(|a|^2 * |b|^2) so that bit-identical vectors
    yield exactly 0.
    """
    av = np.asarray(a, dtype=np.float64).reshape(-1)
    bv = np.asarray(b, dtype=np.float64).reshape(-1)
    if av.shape != bv.shape:
        raise ValueError(f"descriptor dim mismatch: {av.shape[0]} vs {bv.shape[0]}")
    na2 = float(np.dot(av, av))
    nb2 = float(np.dot(bv, bv))
    if na2 == 0.0 or nb2 == 0.0:
        return 1.0
    d = 1.0 - float(np.dot(av, bv)) / math.sqrt(na2 * nb2)
    return min(max(d, 0.0), 2.0)


def save_field(field: DescriptorField, path) -> None:
    """Write a descriptor field in the PXNT tensor format."""
    level_dims = field.level_dims if field.level_dims is not None else (field.dim,)
    with open(path, "wb") as fh:
        fh.write(TENSOR_MAGIC)
        fh.write(
            struct.pack(
                "<5I",
                TENSOR_VERSION,
                field.width,
                field.height,
                field.dim,
                len(level_dims),
            )
        )
        fh.write(struct.pack(f"<{len(level_dims)}I", *level_dims))
        fh.write(field.data.astype("<f4").tobytes())


def load_external_field(path) -> DescriptorField:
    """Load a PXNT tensor file as an externally produced descriptor field."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != TENSOR_MAGIC:
        raise ValueError(f"bad magic {blob[:4]!r}, expected {TENSOR_MAGIC!r}")
    if len(blob) < 24:
        raise ValueError(f"truncated header: {len(blob)} bytes")
    version, width, height, dim, level_count = struct.unpack_from("<5I", blob, 4)
    if version != TENSOR_VERSION:
        raise ValueError(f"unsupported tensor format version {version}")
    header_end = 24 + 4 * level_count
    if len(blob) < header_end:
        raise ValueError(f"truncated level table: {len(blob)} bytes")
    level_dims = struct.unpack_from(f"<{level_count}I", blob, 24)
    if sum(level_dims) != dim:
        raise ValueError(f"level dims {level_dims} do not sum to dim {dim}")
    expected = width * height * dim * 4
    payload = blob[header_end:]
    if len(payload) != expected:
        raise ValueError(
            f"payload length mismatch: declared {width}x{height}x{dim} "
            f"needs {expected} bytes, file has {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(height, width, dim)
    bad = ~np.isfinite(data)
    if bad.any():
        offset = int(np.flatnonzero(bad.ravel())[0])
        raise ValueError(f"non-finite descriptor value at float offset {offset}")
    return DescriptorField(data, config_hash="external", level_dims=level_dims)
