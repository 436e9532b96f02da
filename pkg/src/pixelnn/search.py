"""Two-level approximate pixel-NN search plus an exact brute-force variant.

A query is first matched globally (cosine distance between whole-image
descriptors) to retrieve K candidate exemplars; each query pixel is then
matched against a T x T window of those exemplars' pixels. The window is
always exactly min(T, image-extent) pixels per axis: centered in the
interior (with the extra pixel on the bottom/right for even T) and shifted
inward at borders rather than shrunk, so T = image size degenerates to an
exhaustive search from every pixel.

Argmin ties are broken deterministically by lower exemplar id, then lower
row-major source pixel. All distances are accumulated in float64; the
cosine is computed as 1 - dot / sqrt(|a|^2 |b|^2), which makes a pixel
matched against its own bit-identical descriptor come back at exactly 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .database import ExemplarDatabase
from .descriptor import DescriptorField, GlobalDescriptor, cosine_distance

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchConfig:
    """(K, T) pair controlling the approximation grade of the search."""

    k_global: int
    window: int
    distance: str = field(default="cosine")

    def __post_init__(self):
        if self.k_global < 1:
            raise ValueError(f"k_global must be >= 1, got {self.k_global}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.distance != "cosine":
            raise ValueError(f"only cosine distance is supported, got {self.distance!r}")


@dataclass(frozen=True)
class PixelMatch:
    """Best (exemplar, source pixel) for one query pixel."""

    exemplar_id: int
    source_pixel: tuple[int, int]
    distance: float


def window_bounds(center: int, extent: int, t: int) -> tuple[int, int]:
    """Half-open [start, end) of the search window along one axis.

    The window keeps exactly min(t, extent) pixels: floor((t-1)/2) before
    the center and floor(t/2) after in the interior, shifted (never shrunk)
    at the borders.
    """
    t_eff = min(t, extent)
    lead = (t_eff - 1) // 2
    start = min(max(center - lead, 0), extent - t_eff)
    return start, start + t_eff


def global_knn(query_global: GlobalDescriptor, db: ExemplarDatabase, k: int) -> list[int]:
    """Ids of the min(k, N) exemplars nearest to the query's global descriptor.

    Ordered by ascending cosine distance, ties by ascending id. Requests
    beyond the database size clamp with a warning.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > db.count:
        logger.warning("global_knn: K=%d exceeds database size %d; clamping", k, db.count)
    scored = sorted(
        (cosine_distance(query_global.data, e.global_desc.data), e.id)
        for e in db.exemplars
    )
    return [ex_id for _, ex_id in scored[: min(k, db.count)]]


def _pair_distances(sub: np.ndarray, qt: np.ndarray, qn2: float) -> np.ndarray:
    """Cosine distances between one query vector (tiled as qt) and rows of sub.

    All reductions run through the same einsum kernel on contiguous float64
    buffers so a bit-identical row yields exactly 0.
    """
    dots = np.einsum("nd,nd->n", sub, qt)
    xn2 = np.einsum("nd,nd->n", sub, sub)
    denom2 = qn2 * xn2
    dist = np.ones(sub.shape[0], dtype=np.float64)
    valid = denom2 > 0.0
    dist[valid] = 1.0 - dots[valid] / np.sqrt(denom2[valid])
    return np.clip(dist, 0.0, 2.0)


def windowed_match(
    query_field: DescriptorField,
    pixel: tuple[int, int],
    db: ExemplarDatabase,
    candidate_ids: Sequence[int],
    t: int,
) -> PixelMatch:
    """Best match for one query pixel within the T x T windows of candidates."""
    if not candidate_ids:
        raise ValueError("candidate_ids must be non-empty")
    r, c = pixel
    h, w = query_field.height, query_field.width
    if not (0 <= r < h and 0 <= c < w):
        raise ValueError(f"pixel {pixel} outside image {w}x{h}")
    if (h, w) != (db.image_size[1], db.image_size[0]):
        raise ValueError(
            f"query field {w}x{h} does not match database {db.image_size}"
        )
    r0, r1 = window_bounds(r, h, t)
    c0, c1 = window_bounds(c, w, t)
    n_cols = c1 - c0
    n_win = (r1 - r0) * n_cols
    q = query_field.data[r, c].astype(np.float64)
    qt = np.ascontiguousarray(np.broadcast_to(q, (n_win, q.shape[0])))
    qn2 = float(np.einsum("nd,nd->n", qt[:1], qt[:1])[0])
    best: tuple[float, int, int] | None = None
    for ex_id in candidate_ids:
        ex = db.get(ex_id)
        sub = ex.field.data[r0:r1, c0:c1].astype(np.float64)
        dist = _pair_distances(sub.reshape(n_win, -1), qt, qn2)
        local = int(np.argmin(dist))  # first minimum = lowest row-major j
        j = (r0 + local // n_cols) * w + (c0 + local % n_cols)
        cand = (float(dist[local]), ex_id, j)
        if best is None or cand < best:
            best = cand
    d, ex_id, j = best
    return PixelMatch(ex_id, (j // w, j % w), d)


def brute_force_match(
    query_field: DescriptorField,
    pixel: tuple[int, int],
    db: ExemplarDatabase,
) -> PixelMatch:
    """Exhaustive pixel match over every pixel of every exemplar."""
    h, w = query_field.height, query_field.width
    all_ids = [e.id for e in db.exemplars]
    return windowed_match(query_field, pixel, db, all_ids, max(h, w))


# ---------------------------------------------------------------------------
# Batch matching (whole query field at once), used by synthesis.


def exemplar_arrays(ex_field: DescriptorField) -> tuple[np.ndarray, np.ndarray]:
    """Float64 field and per-pixel squared norms for repeated matching."""
    xd = np.ascontiguousarray(ex_field.data, dtype=np.float64)
    xn2 = np.einsum("rcd,rcd->rc", xd, xd)
    return xd, xn2


def _distances_full(
    qd: np.ndarray, qn2: np.ndarray, xd: np.ndarray, xn2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Best (distance, source index) per query pixel over a whole exemplar.

    For a fixed query pixel, argmin of cosine distance equals argmax of the
    dot product against source-normalized exemplar vectors (zero-norm
    sources stay at score 0, which maps to the neutral distance 1), so one
    GEMM plus a row argmax replaces the full distance matrix. The winner's
    distance is then recomputed with the same einsum kernel the windowed
    path uses, keeping values bit-consistent across paths.
    """
    h, w, d = qd.shape
    p = h * w
    qf = qd.reshape(p, d)
    xf = xd.reshape(p, d)
    qn = qn2.reshape(p)
    xn = xn2.reshape(p)
    inv = np.zeros(p, dtype=np.float64)
    nz = xn > 0.0
    inv[nz] = 1.0 / np.sqrt(xn[nz])
    xnorm = xf * inv[:, None]
    best_d = np.empty(p, dtype=np.float64)
    best_j = np.empty(p, dtype=np.int64)
    chunk = max(1, int(4_000_000 // max(p, 1)))
    for s in range(0, p, chunk):
        e = min(s + chunk, p)
        scores = qf[s:e] @ xnorm.T
        j = np.argmax(scores, axis=1)  # first maximum = lowest row-major j
        win = np.ascontiguousarray(xf[j])
        dots = np.einsum("nd,nd->n", np.ascontiguousarray(qf[s:e]), win)
        denom2 = qn[s:e] * xn[j]
        dist = np.ones(e - s, dtype=np.float64)
        valid = denom2 > 0.0
        dist[valid] = 1.0 - dots[valid] / np.sqrt(denom2[valid])
        best_d[s:e] = np.clip(dist, 0.0, 2.0)
        best_j[s:e] = j
    return best_d.reshape(h, w), best_j.reshape(h, w)


def _distances_windowed(
    qd: np.ndarray, qn2: np.ndarray, xd: np.ndarray, xn2: np.ndarray, t: int
) -> tuple[np.ndarray, np.ndarray]:
    """Best (distance, source index) per query pixel inside its T x T window."""
    h, w, _ = qd.shape
    t_r, t_c = min(t, h), min(t, w)
    start_r = np.clip(np.arange(h) - (t_r - 1) // 2, 0, h - t_r)
    start_c = np.clip(np.arange(w) - (t_c - 1) // 2, 0, w - t_c)
    best_d = np.full((h, w), np.inf)
    best_j = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)
    for m_r in range(t_r):
        jr = start_r + m_r
        x_rows = xd[jr]
        n_rows = xn2[jr]
        for m_c in range(t_c):
            jc = start_c + m_c
            xg = np.ascontiguousarray(x_rows[:, jc])
            dots = np.einsum("rcd,rcd->rc", qd, xg)
            denom2 = qn2 * n_rows[:, jc]
            dist = np.ones((h, w), dtype=np.float64)
            valid = denom2 > 0.0
            dist[valid] = 1.0 - dots[valid] / np.sqrt(denom2[valid])
            np.clip(dist, 0.0, 2.0, out=dist)
            j = jr[:, None] * w + jc[None, :]
            upd = (dist < best_d) | ((dist == best_d) & (j < best_j))
            best_d[upd] = dist[upd]
            best_j[upd] = j[upd]
    return best_d, best_j


def match_field_prefixes(
    query_field: DescriptorField,
    db: ExemplarDatabase,
    ranked_ids: Sequence[int],
    ks: Sequence[int],
    t: int,
    cache: dict[int, tuple[np.ndarray, np.ndarray]] | None = None,
) -> dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Per-pixel best matches for every prefix size K of the ranked ids.

    Returns {K: (distance (h,w) f64, exemplar id (h,w), row-major source
    index (h,w))}. Processing one ranked exemplar at a time and snapshotting
    at each requested K makes a whole (K, T) column cost a single pass.
    Requests beyond len(ranked_ids) clamp to the full list.
    """
    h, w = query_field.height, query_field.width
    qd = np.ascontiguousarray(query_field.data, dtype=np.float64)
    qn2 = np.einsum("rcd,rcd->rc", qd, qd)
    full = min(t, h) == h and min(t, w) == w

    best_d = np.full((h, w), np.inf)
    best_k = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)
    best_j = np.full((h, w), np.iinfo(np.int64).max, dtype=np.int64)
    wanted = {min(k, len(ranked_ids)) for k in ks}
    out: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}
    for rank, ex_id in enumerate(ranked_ids, start=1):
        if cache is not None and ex_id in cache:
            xd, xn2 = cache[ex_id]
        else:
            xd, xn2 = exemplar_arrays(db.get(ex_id).field)
            if cache is not None:
                cache[ex_id] = (xd, xn2)
        if full:
            d, j = _distances_full(qd, qn2, xd, xn2)
        else:
            d, j = _distances_windowed(qd, qn2, xd, xn2, t)
        upd = (d < best_d) | (
            (d == best_d) & ((ex_id < best_k) | ((ex_id == best_k) & (j < best_j)))
        )
        best_d[upd] = d[upd]
        best_k[upd] = ex_id
        best_j[upd] = j[upd]
        if rank in wanted:
            out[rank] = (best_d.copy(), best_k.copy(), best_j.copy())
    return out
