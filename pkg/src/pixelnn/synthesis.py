"""Residual-transfer synthesis: global exemplar match, compositional match,
candidate grids, and candidate selection.

Every output pixel i is f_x[i] plus the residual (target - regressed) of
some training pixel j in some exemplar k, chosen by nearest-neighbor search
over descriptors. The sum is grouped as target[j] + (f_x[i] - regressed[j])
so that matching a pixel against its own exemplar reproduces the target
bit-for-bit; results are clamped to [0, 1] per channel and the number of
clamped channel values is recorded. The correspondence map is a complete
provenance record: replaying it over the database reproduces the candidate.
"""

from __future__ import annotations

import random
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ._parallel import thread_count
from .database import ExemplarDatabase
from .descriptor import (
    DescriptorField,
    compute_field,
    cosine_distance,
    global_descriptor,
)
from .image import ImageRGB, LowFreqImage, bicubic_resample, load_png, psnr
from .search import SearchConfig, exemplar_arrays, global_knn, match_field_prefixes

CORRESPONDENCE_MAGIC = b"PXNC"
CORRESPONDENCE_VERSION = 1

_PXNC_DTYPE = np.dtype(
    [("k", "<u4"), ("row", "<u4"), ("col", "<u4"), ("dist", "<f4")]
)


@dataclass(frozen=True)
class CorrespondenceMap:
    """Per output pixel: which (exemplar, source pixel) supplied its residual."""

    exemplar_ids: np.ndarray
    source_rows: np.ndarray
    source_cols: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        def owned(raw, dtype):
            arr = np.ascontiguousarray(raw, dtype=dtype)
            return arr.copy() if arr is raw else arr

        ids = owned(self.exemplar_ids, np.int32)
        rows = owned(self.source_rows, np.int32)
        cols = owned(self.source_cols, np.int32)
        dist = owned(self.distances, np.float32)
        shapes = {ids.shape, rows.shape, cols.shape, dist.shape}
        if len(shapes) != 1 or ids.ndim != 2:
            raise ValueError(f"correspondence arrays must share one 2D shape, got {shapes}")
        h, w = ids.shape
        if ids.min() < 0:
            raise ValueError("negative exemplar id in correspondence map")
        if rows.min() < 0 or rows.max() >= h or cols.min() < 0 or cols.max() >= w:
            raise ValueError("source pixel outside image bounds")
        if not np.all(np.isfinite(dist)) or dist.min() < 0 or dist.max() > 2.0 + 1e-6:
            raise ValueError("correspondence distances must be finite and in [0, 2]")
        for name, arr in (("exemplar_ids", ids), ("source_rows", rows),
                          ("source_cols", cols), ("distances", dist)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def width(self) -> int:
        return self.exemplar_ids.shape[1]

    @property
    def height(self) -> int:
        return self.exemplar_ids.shape[0]


@dataclass(frozen=True)
class Candidate:
    """One synthesized output plus the settings and provenance behind it."""

    image: ImageRGB
    config: SearchConfig
    correspondence: CorrespondenceMap
    clamped_pixel_count: int


def stage1(source, mode: str, target_size: tuple[int, int]) -> LowFreqImage:
    """Produce the mid-frequency image f(x) to be refined.

    mode "bicubic" upsamples a smaller input to target_size with the
    built-in Catmull-Rom resampler; mode "external" accepts a ready-made
    regressor output that must already have the target size. source may be
    an image or a PNG path.
    """
    if isinstance(source, (str, Path)):
        source = load_png(source)
    tw, th = target_size
    if mode == "bicubic":
        if source.width > tw or source.height > th:
            raise ValueError(
                f"bicubic stage-1 expects an input no larger than {tw}x{th}, "
                f"got {source.width}x{source.height}"
            )
        return bicubic_resample(source, tw, th)
    if mode == "external":
        if (source.width, source.height) != (tw, th):
            raise ValueError(
                f"external stage-1 image is {source.width}x{source.height}, "
                f"expected {tw}x{th}"
            )
        return LowFreqImage(source.data, provenance="external-file")
    raise ValueError(f"unknown stage-1 mode {mode!r}")


def _compose(
    f_x: LowFreqImage,
    db: ExemplarDatabase,
    kmap: np.ndarray,
    jmap: np.ndarray,
) -> tuple[ImageRGB, int]:
    """Apply residuals selected by (kmap, jmap) onto f_x; count clamped values.

    Accumulated in float64 so that both exact cases hold bit-for-bit after
    the float32 cast: a pixel matched to its own exemplar reproduces the
    target, and a zero-residual exemplar reproduces f_x.
    """
    h, w = f_x.height, f_x.width
    fq = f_x.data.astype(np.float64)
    pre = np.empty((h, w, 3), dtype=np.float64)
    for ex_id in np.unique(kmap):
        ex = db.get(int(ex_id))
        mask = kmap == ex_id
        j = jmap[mask]
        rows, cols = j // w, j % w
        pre[mask] = ex.target.data[rows, cols].astype(np.float64) + (
            fq[mask] - ex.regressed.data[rows, cols].astype(np.float64)
        )
    clamped = int(np.count_nonzero((pre < 0.0) | (pre > 1.0)))
    return ImageRGB(np.clip(pre, 0.0, 1.0).astype(np.float32)), clamped


def _candidate_from_match(
    f_x: LowFreqImage,
    db: ExemplarDatabase,
    cfg: SearchConfig,
    dist: np.ndarray,
    kmap: np.ndarray,
    jmap: np.ndarray,
) -> Candidate:
    w = f_x.width
    image, clamped = _compose(f_x, db, kmap, jmap)
    corr = CorrespondenceMap(
        exemplar_ids=kmap.astype(np.int32),
        source_rows=(jmap // w).astype(np.int32),
        source_cols=(jmap % w).astype(np.int32),
        distances=dist.astype(np.float32),
    )
    return Candidate(image, cfg, corr, clamped)


def reconstruct_from_correspondence(
    f_x: LowFreqImage, db: ExemplarDatabase, corr: CorrespondenceMap
) -> ImageRGB:
    """Replay a correspondence map over the database; reproduces the candidate."""
    w = f_x.width
    jmap = corr.source_rows.astype(np.int64) * w + corr.source_cols.astype(np.int64)
    image, _ = _compose(f_x, db, corr.exemplar_ids.astype(np.int64), jmap)
    return image


def _check_query(f_x: LowFreqImage, db: ExemplarDatabase) -> None:
    if (f_x.width, f_x.height) != db.image_size:
        raise ValueError(
            f"query {f_x.width}x{f_x.height} does not match database "
            f"image size {db.image_size[0]}x{db.image_size[1]}"
        )


def _query_field(f_x: LowFreqImage, db: ExemplarDatabase) -> DescriptorField:
    if db.descriptor_config is None:
        raise ValueError(
            "database uses external descriptors; compute the query field "
            "externally and pass it in"
        )
    return compute_field(f_x, db.descriptor_config)


def exemplar_synthesize(
    f_x: LowFreqImage,
    db: ExemplarDatabase,
    query_field: DescriptorField | None = None,
) -> Candidate:
    """Whole-image residual transfer from the single best global match.

    Every output pixel copies the residual of the same exemplar at its own
    position; the correspondence distance is the global descriptor distance
    that selected it.
    """
    _check_query(f_x, db)
    if query_field is None:
        query_field = _query_field(f_x, db)
    elif query_field.config_hash != db.config_hash:
        raise ValueError(
            f"query field config {query_field.config_hash!r} does not match "
            f"database config {db.config_hash!r}"
        )
    gd = global_descriptor(query_field)
    best_id = global_knn(gd, db, 1)[0]
    ex = db.get(best_id)
    d = cosine_distance(gd.data, ex.global_desc.data)
    h, w = f_x.height, f_x.width
    kmap = np.full((h, w), best_id, dtype=np.int64)
    jmap = (np.arange(h * w, dtype=np.int64)).reshape(h, w)
    dist = np.full((h, w), d, dtype=np.float64)
    return _candidate_from_match(f_x, db, SearchConfig(1, 1), dist, kmap, jmap)


def compositional_synthesize(
    f_x: LowFreqImage,
    query_field: DescriptorField,
    db: ExemplarDatabase,
    cfg: SearchConfig,
) -> Candidate:
    """Per-pixel residual transfer: each output pixel independently picks its
    (exemplar, source pixel) among the K global neighbors' T x T windows."""
    _check_query(f_x, db)
    if query_field.config_hash != db.config_hash:
        raise ValueError(
            f"query field config {query_field.config_hash!r} does not match "
            f"database config {db.config_hash!r}"
        )
    if (query_field.width, query_field.height) != db.image_size:
        raise ValueError("query field dimensions do not match the database")
    ranked = global_knn(global_descriptor(query_field), db, cfg.k_global)
    prefixes = match_field_prefixes(query_field, db, ranked, [cfg.k_global], cfg.window)
    dist, kmap, jmap = prefixes[min(cfg.k_global, len(ranked))]
    return _candidate_from_match(f_x, db, cfg, dist, kmap, jmap)


def generate_candidates(
    f_x: LowFreqImage,
    query_field: DescriptorField,
    db: ExemplarDatabase,
    ks: Sequence[int],
    ts: Sequence[int],
) -> list[Candidate]:
    """One candidate per (K, T) in the grid, ordered lexicographically.

    Duplicate K or T values are collapsed. The ranked exemplar list is
    shared across the grid, and each T column is computed in one pass over
    the ranked exemplars with snapshots at every requested K, so the grid
    costs far less than |Ks| x |Ts| independent searches. Results are
    identical to calling compositional_synthesize per cell.
    """
    if not ks or not ts:
        raise ValueError("Ks and Ts must be non-empty")
    ks_sorted = sorted({int(k) for k in ks})
    ts_sorted = sorted({int(t) for t in ts})
    if ks_sorted[0] < 1 or ts_sorted[0] < 1:
        raise ValueError("all K and T values must be >= 1")
    _check_query(f_x, db)
    if query_field.config_hash != db.config_hash:
        raise ValueError(
            f"query field config {query_field.config_hash!r} does not match "
            f"database config {db.config_hash!r}"
        )
    ranked = global_knn(global_descriptor(query_field), db, ks_sorted[-1])
    cache = {ex_id: exemplar_arrays(db.get(ex_id).field) for ex_id in ranked}

    def column(t: int) -> dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]]:
        return match_field_prefixes(query_field, db, ranked, ks_sorted, t, cache)

    workers = min(thread_count(), len(ts_sorted))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            columns = dict(zip(ts_sorted, pool.map(column, ts_sorted)))
    else:
        columns = {t: column(t) for t in ts_sorted}

    out = []
    for k in ks_sorted:
        for t in ts_sorted:
            dist, kmap, jmap = columns[t][min(k, len(ranked))]
            out.append(
                _candidate_from_match(f_x, db, SearchConfig(k, t), dist, kmap, jmap)
            )
    return out


def select(
    candidates: Sequence[Candidate],
    ground_truth: ImageRGB | None = None,
    policy: str = "oracle-psnr",
    seed: int = 0,
    metric: Callable[[Candidate], float] | None = None,
) -> Candidate:
    """Pick one candidate: by oracle PSNR, oracle mean angular error, or
    seeded random draw. Oracle ties go to the lowest (K, T). A metric
    callback (higher is better) may stand in for ground truth under any
    oracle policy."""
    if not candidates:
        raise ValueError("no candidates to select from")
    if policy == "random":
        return candidates[random.Random(seed).randrange(len(candidates))]
    if metric is not None:

        def key(c: Candidate):
            return (-metric(c), c.config.k_global, c.config.window)

        return min(candidates, key=key)
    if ground_truth is None:
        raise ValueError(f"policy {policy!r} requires ground truth or a metric callback")
    if policy == "oracle-psnr":

        def key(c: Candidate):
            return (-psnr(c.image, ground_truth), c.config.k_global, c.config.window)

    elif policy == "oracle-normal-mean":
        from .metrics import angular_stats, normal_map_from_image

        gt_normals = normal_map_from_image(ground_truth)

        def key(c: Candidate):
            err = angular_stats(normal_map_from_image(c.image), gt_normals).mean
            return (err, c.config.k_global, c.config.window)

    else:
        raise ValueError(f"unknown selection policy {policy!r}")
    return min(candidates, key=key)


def save_correspondence(corr: CorrespondenceMap, path) -> None:
    """Write a correspondence map in the PXNC format."""
    rec = np.empty(corr.height * corr.width, dtype=_PXNC_DTYPE)
    rec["k"] = corr.exemplar_ids.ravel()
    rec["row"] = corr.source_rows.ravel()
    rec["col"] = corr.source_cols.ravel()
    rec["dist"] = corr.distances.ravel()
    with open(path, "wb") as fh:
        fh.write(CORRESPONDENCE_MAGIC)
        fh.write(struct.pack("<3I", CORRESPONDENCE_VERSION, corr.width, corr.height))
        fh.write(rec.tobytes())


def load_correspondence(path) -> CorrespondenceMap:
    """Read a PXNC correspondence map."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CORRESPONDENCE_MAGIC:
        raise ValueError(f"bad magic {blob[:4]!r}, expected {CORRESPONDENCE_MAGIC!r}")
    if len(blob) < 16:
        raise ValueError(f"truncated header: {len(blob)} bytes")
    version, w, h = struct.unpack_from("<3I", blob, 4)
    if version != CORRESPONDENCE_VERSION:
        raise ValueError(f"unsupported correspondence version {version}")
    payload = blob[16:]
    expected = w * h * _PXNC_DTYPE.itemsize
    if len(payload) != expected:
        raise ValueError(
            f"payload length mismatch: {w}x{h} needs {expected} bytes, "
            f"file has {len(payload)}"
        )
    rec = np.frombuffer(payload, dtype=_PXNC_DTYPE)
    return CorrespondenceMap(
        exemplar_ids=rec["k"].reshape(h, w).astype(np.int32),
        source_rows=rec["row"].reshape(h, w).astype(np.int32),
        source_cols=rec["col"].reshape(h, w).astype(np.int32),
        distances=rec["dist"].reshape(h, w),
    )
