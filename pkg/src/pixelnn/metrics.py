"""Quantitative evaluation: angular-error statistics over normal maps,
average precision for edge maps, and per-candidate reports.

A full evaluation pipeline would run a pretrained network over synthesized
outputs to extract normals/edges; here the auxiliary ground truth is
supplied directly, and candidate images are interpreted as RGB-encoded
normal maps (n = 2v - 1, renormalized) or as edge-probability maps
(luminance) when those comparisons are requested.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .descriptor import load_external_field
from .image import ImageRGB, luminance, psnr

# Guards the inclusive threshold comparison against float32 storage and
# arccos rounding, so a vector constructed exactly at a threshold stays on
# the inclusive side; matches the 1e-4 unit-norm tolerance of NormalMap.
_THRESHOLD_GUARD_DEG = 1e-4

ANGULAR_THRESHOLDS_DEG = (11.25, 22.5, 30.0)


@dataclass(frozen=True)
class NormalMap:
    """Per-pixel unit 3-vectors, float32 (h, w, 3)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr is self.data:
            arr = arr.copy()  # never freeze a caller-owned buffer
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"normal map must have shape (h, w, 3), got {arr.shape}")
        norms = np.sqrt(np.einsum("hwc,hwc->hw", arr.astype(np.float64), arr.astype(np.float64)))
        worst = float(np.abs(norms - 1.0).max())
        if worst > 1e-4:
            raise ValueError(f"non-unit normals: worst |norm - 1| = {worst:.3g} > 1e-4")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class AngularErrorStats:
    """The six standard angular-error statistics, in degrees / percent."""

    mean: float
    median: float
    rmse: float
    pct_11_25: float
    pct_22_5: float
    pct_30: float


def normal_map_from_image(img: ImageRGB) -> NormalMap:
    """Decode an RGB-encoded normal map: n = 2v - 1, renormalized.

    Zero-length vectors (mid-gray pixels) decode to the canonical up
    vector (0, 0, 1).
    """
    n = 2.0 * img.data.astype(np.float64) - 1.0
    norms = np.sqrt(np.einsum("hwc,hwc->hw", n, n))
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    n = n / safe[:, :, None]
    n[zero] = (0.0, 0.0, 1.0)
    return NormalMap(n.astype(np.float32))


def normal_map_from_tensor_file(path) -> NormalMap:
    """Load a PXNT tensor file with dim=3 as a normal map, renormalizing."""
    field = load_external_field(path)
    if field.dim != 3:
        raise ValueError(f"normal map tensor must have dim 3, got {field.dim}")
    n = field.data.astype(np.float64)
    norms = np.sqrt(np.einsum("hwc,hwc->hw", n, n))
    if (norms == 0.0).any():
        bad = np.argwhere(norms == 0.0)[0]
        raise ValueError(f"zero-length normal at pixel (row={bad[0]}, col={bad[1]})")
    return NormalMap((n / norms[:, :, None]).astype(np.float32))


def angular_stats(pred: NormalMap, gt: NormalMap) -> AngularErrorStats:
    """Angular error statistics between two normal maps.

    Thresholds are inclusive; the median is the lower middle element for
    even counts.
    """
    if pred.data.shape != gt.data.shape:
        raise ValueError(
            f"normal map dimension mismatch: {pred.data.shape} vs {gt.data.shape}"
        )
    p = pred.data.astype(np.float64)
    g = gt.data.astype(np.float64)
    dots = np.einsum("hwc,hwc->hw", p, g)
    # Normalize by the actual norms: stored float32 vectors are unit only to
    # ~1e-8, and identical maps must come out at exactly zero error.
    denom2 = np.einsum("hwc,hwc->hw", p, p) * np.einsum("hwc,hwc->hw", g, g)
    cos = dots / np.sqrt(denom2)
    err = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))).ravel()
    ordered = np.sort(err)
    median = float(ordered[(len(ordered) - 1) // 2])
    pcts = [
        100.0 * float(np.mean(err <= thr + _THRESHOLD_GUARD_DEG))
        for thr in ANGULAR_THRESHOLDS_DEG
    ]
    return AngularErrorStats(
        mean=float(err.mean()),
        median=median,
        rmse=float(np.sqrt(np.mean(err * err))),
        pct_11_25=pcts[0],
        pct_22_5=pcts[1],
        pct_30=pcts[2],
    )


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """All-points average precision of a per-pixel score map.

    Pixels are ranked by descending score, ties broken by ascending pixel
    index; no interpolation is applied.
    """
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(bool)
    if s.shape != y.shape:
        raise ValueError(f"scores and labels differ in size: {s.shape} vs {y.shape}")
    n_pos = int(y.sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive label")
    order = np.argsort(-s, kind="stable")
    hits = y[order]
    precision = np.cumsum(hits) / np.arange(1, len(hits) + 1)
    return float(precision[hits].sum() / n_pos)


@dataclass(frozen=True)
class ReportRow:
    """Evaluation of one candidate (or of a selection summary)."""

    k: int
    t: int
    psnr: float
    angular: AngularErrorStats | None = None
    ap: float | None = None

    def as_record(self) -> dict:
        a = self.angular
        return {
            "k": self.k,
            "t": self.t,
            "psnr": self.psnr,
            "mean": a.mean if a else None,
            "median": a.median if a else None,
            "rmse": a.rmse if a else None,
            "pct11": a.pct_11_25 if a else None,
            "pct22": a.pct_22_5 if a else None,
            "pct30": a.pct_30 if a else None,
            "ap": self.ap,
        }


@dataclass(frozen=True)
class EvaluationReport:
    rows: tuple[ReportRow, ...]
    oracle: ReportRow
    random: ReportRow
    seed: int

    def to_json_lines(self) -> str:
        lines = [json.dumps(r.as_record()) for r in self.rows]
        lines.append(json.dumps({"selection": "oracle", **self.oracle.as_record()}))
        lines.append(
            json.dumps(
                {"selection": f"random(seed={self.seed})", **self.random.as_record()}
            )
        )
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        def fmt(v, width=8, prec=2):
            if v is None:
                return " " * (width - 1) + "-"
            if isinstance(v, float) and math.isinf(v):
                return f"{'inf':>{width}}"
            return f"{v:>{width}.{prec}f}"

        header = (
            f"{'K':>4} {'T':>4} {'PSNR':>8} {'mean':>8} {'median':>8} "
            f"{'rmse':>8} {'11.25':>8} {'22.5':>8} {'30':>8} {'AP':>8}"
        )
        out = [header, "-" * len(header)]
        labeled = [(f"{r.k:>4} {r.t:>4}", r) for r in self.rows]
        labeled.append((f"{'oracle':>9}", self.oracle))
        labeled.append((f"{'random':>9}", self.random))
        for label, r in labeled:
            rec = r.as_record()
            out.append(
                f"{label} {fmt(rec['psnr'])} {fmt(rec['mean'])} {fmt(rec['median'])} "
                f"{fmt(rec['rmse'])} {fmt(rec['pct11'])} {fmt(rec['pct22'])} "
                f"{fmt(rec['pct30'])} {fmt(rec['ap'], prec=4)}"
            )
        return "\n".join(out) + "\n"


def _entry(candidate) -> tuple[int, int, ImageRGB]:
    if hasattr(candidate, "image"):
        return candidate.config.k_global, candidate.config.window, candidate.image
    k, t, image = candidate
    return int(k), int(t), image


def evaluate_candidates(
    candidates: Sequence,
    gt: ImageRGB,
    gt_normals: NormalMap | None = None,
    gt_edges: np.ndarray | ImageRGB | None = None,
    seed: int = 0,
) -> EvaluationReport:
    """Score candidates against ground truth and summarize oracle vs random.

    Accepts synthesis Candidate objects or bare (k, t, image) tuples. When
    gt_normals is given, candidate images are decoded as RGB-encoded normal
    maps; when gt_edges is given (binary map or image thresholded at 0.5),
    candidate luminance is scored by average precision.
    """
    if not candidates:
        raise ValueError("no candidates to evaluate")
    edges = None
    if gt_edges is not None:
        edges = (
            luminance(gt_edges) > 0.5
            if isinstance(gt_edges, ImageRGB)
            else np.asarray(gt_edges).astype(bool)
        )
    rows = []
    for cand in candidates:
        k, t, image = _entry(cand)
        if image.data.shape != gt.data.shape:
            raise ValueError(
                f"candidate K={k},T={t} size {image.data.shape} does not match "
                f"ground truth {gt.data.shape}"
            )
        angular = None
        if gt_normals is not None:
            angular = angular_stats(normal_map_from_image(image), gt_normals)
        ap = None
        if edges is not None:
            ap = average_precision(luminance(image), edges)
        rows.append(ReportRow(k=k, t=t, psnr=psnr(image, gt), angular=angular, ap=ap))
    oracle = min(rows, key=lambda r: (-r.psnr, r.k, r.t))
    pick = random.Random(seed).randrange(len(rows))
    return EvaluationReport(tuple(rows), oracle, rows[pick], seed)
