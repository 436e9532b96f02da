"""Independent naive reference implementations used as test oracles.

Everything here is written as plain scalar loops over the defining
formulas, deliberately sharing no code with the package under test.
"""

from __future__ import annotations

import math

import numpy as np


def dft2_magnitude(lum: np.ndarray) -> np.ndarray:
    """Brute-force centered 2D DFT magnitude of a (h, w) float array."""
    h, w = lum.shape
    mag = np.zeros((h, w))
    for u in range(h):
        for v in range(w):
            acc = 0.0 + 0.0j
            for y in range(h):
                for x in range(w):
                    acc += lum[y, x] * np.exp(-2j * math.pi * (u * y / h + v * x / w))
            mag[u, v] = abs(acc)
    # Center DC the same way fftshift does.
    return np.roll(np.roll(mag, h // 2, axis=0), w // 2, axis=1)


def catmull_rom_weight(t: float) -> float:
    a = -0.5
    t = abs(t)
    if t <= 1.0:
        return (a + 2.0) * t**3 - (a + 3.0) * t**2 + 1.0
    if t < 2.0:
        return a * (t**3 - 5.0 * t**2 + 8.0 * t - 4.0)
    return 0.0


def bicubic_pixel(data: np.ndarray, out_x: int, out_y: int, out_w: int, out_h: int) -> np.ndarray:
    """One output pixel of a Catmull-Rom resample, fully scalar."""
    h, w = data.shape[:2]
    src_x = (out_x + 0.5) * (w / out_w) - 0.5
    src_y = (out_y + 0.5) * (h / out_h) - 0.5
    bx, by = math.floor(src_x), math.floor(src_y)
    out = np.zeros(3)
    for dy in (-1, 0, 1, 2):
        wy = catmull_rom_weight((by + dy) - src_y)
        ty = min(max(by + dy, 0), h - 1)
        for dx in (-1, 0, 1, 2):
            wx = catmull_rom_weight((bx + dx) - src_x)
            tx = min(max(bx + dx, 0), w - 1)
            out += wy * wx * data[ty, tx]
    return np.clip(out, 0.0, 1.0)


def cosine_distance(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    na = math.sqrt(float(np.dot(a, a)))
    nb = math.sqrt(float(np.dot(b, b)))
    if na == 0.0 or nb == 0.0:
        return 1.0
    return min(max(1.0 - float(np.dot(a, b)) / (na * nb), 0.0), 2.0)


def gaussian_blur(data: np.ndarray, sigma: float) -> np.ndarray:
    """Scalar separable Gaussian blur: truncated at ceil(3*sigma), edge clamp."""
    radius = int(math.ceil(3.0 * sigma))
    kernel = [math.exp(-(i * i) / (2.0 * sigma * sigma)) for i in range(-radius, radius + 1)]
    total = sum(kernel)
    kernel = [k / total for k in kernel]
    h, w, c = data.shape
    tmp = np.zeros_like(data, dtype=np.float64)
    for y in range(h):
        for x in range(w):
            for ch in range(c):
                acc = 0.0
                for i, k in enumerate(kernel):
                    yy = min(max(y + i - radius, 0), h - 1)
                    acc += k * data[yy, x, ch]
                tmp[y, x, ch] = acc
    out = np.zeros_like(tmp)
    for y in range(h):
        for x in range(w):
            for ch in range(c):
                acc = 0.0
                for i, k in enumerate(kernel):
                    xx = min(max(x + i - radius, 0), w - 1)
                    acc += k * tmp[y, xx, ch]
                out[y, x, ch] = acc
    return out


def brute_force_match(query_field: np.ndarray, pixel, fields: dict[int, np.ndarray]):
    """Triple-loop exhaustive match over {exemplar id -> (h, w, d) field}.

    Returns (exemplar_id, (row, col), distance) with ties broken by lower
    id then lower row-major source index.
    """
    r, c = pixel
    q = query_field[r, c]
    best = None
    for ex_id in sorted(fields):
        f = fields[ex_id]
        h, w = f.shape[:2]
        for row in range(h):
            for col in range(w):
                d = cosine_distance(q, f[row, col])
                key = (d, ex_id, row * w + col)
                if best is None or key < best:
                    best = key
    d, ex_id, j = best
    w = fields[ex_id].shape[1]
    return ex_id, (j // w, j % w), d


def compositional_full_search(
    f_x: np.ndarray,
    query_field: np.ndarray,
    exemplars: list[tuple[int, np.ndarray, np.ndarray, np.ndarray]],
) -> tuple[np.ndarray, np.ndarray]:
    """Naive full-search compositional synthesis.

    exemplars holds (id, field, target, regressed); every output pixel i
    picks its residual source by exhaustive cosine argmin over every pixel
    of every exemplar (ties: lower id, then lower row-major j), then
    output = target[j] + (f_x[i] - regressed[j]) clamped to [0, 1], with
    the arithmetic in float64 and a final float32 cast like the engine.
    Returns (output, picks) where picks[r, c] = (exemplar id, row-major j).
    """
    by_id = {ex_id: (field, target, regressed) for ex_id, field, target, regressed in exemplars}
    h, w = f_x.shape[:2]
    out = np.zeros((h, w, 3), dtype=np.float32)
    picks = np.zeros((h, w, 2), dtype=np.int64)
    for r in range(h):
        for c in range(w):
            q = query_field[r, c]
            best = None
            for ex_id in sorted(by_id):
                field = by_id[ex_id][0]
                for row in range(h):
                    for col in range(w):
                        d = cosine_distance(q, field[row, col])
                        key = (d, ex_id, row * w + col)
                        if best is None or key < best:
                            best = key
            _, ex_id, j = best
            picks[r, c] = (ex_id, j)
            _, target, regressed = by_id[ex_id]
            jr, jc = j // w, j % w
            for ch in range(3):
                v = float(target[jr, jc, ch]) + (
                    float(f_x[r, c, ch]) - float(regressed[jr, jc, ch])
                )
                out[r, c, ch] = np.float32(min(max(v, 0.0), 1.0))
    return out, picks


def rotate_normals(normals: np.ndarray, degrees: float, rng) -> np.ndarray:
    """Rotate every unit normal by exactly `degrees` about a random axis
    orthogonal to it (Rodrigues, float64)."""
    h, w = normals.shape[:2]
    out = np.empty((h, w, 3))
    theta = math.radians(degrees)
    for r in range(h):
        for c in range(w):
            n = normals[r, c].astype(np.float64)
            axis = np.cross(n, rng.standard_normal(3))
            while np.linalg.norm(axis) < 1e-6:
                axis = np.cross(n, rng.standard_normal(3))
            axis /= np.linalg.norm(axis)
            out[r, c] = n * math.cos(theta) + np.cross(axis, n) * math.sin(theta)
    return out / np.linalg.norm(out, axis=2, keepdims=True)


def angular_error_stats(pred: np.ndarray, gt: np.ndarray) -> dict:
    """Scalar-loop angular statistics between two (h, w, 3) unit normal maps."""
    errs = []
    h, w = pred.shape[:2]
    for r in range(h):
        for c in range(w):
            p = pred[r, c].astype(np.float64)
            g = gt[r, c].astype(np.float64)
            cos = float(np.dot(p, g)) / (np.linalg.norm(p) * np.linalg.norm(g))
            cos = min(max(cos, -1.0), 1.0)
            errs.append(math.degrees(math.acos(cos)))
    errs_sorted = sorted(errs)
    n = len(errs)
    return {
        "mean": sum(errs) / n,
        "median": errs_sorted[(n - 1) // 2],
        "rmse": math.sqrt(sum(e * e for e in errs) / n),
        "pct_11_25": 100.0 * sum(1 for e in errs if e <= 11.25) / n,
        "pct_22_5": 100.0 * sum(1 for e in errs if e <= 22.5) / n,
        "pct_30": 100.0 * sum(1 for e in errs if e <= 30.0) / n,
    }


def average_precision(scores: np.ndarray, labels: np.ndarray) -> float:
    """Textbook all-points PR-curve AP with the same ranking convention."""
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(bool)
    order = sorted(range(len(s)), key=lambda i: (-s[i], i))
    n_pos = int(y.sum())
    ap = 0.0
    tp = 0
    prev_recall = 0.0
    for rank, idx in enumerate(order, start=1):
        if y[idx]:
            tp += 1
            recall = tp / n_pos
            precision = tp / rank
            ap += (recall - prev_recall) * precision
            prev_recall = recall
    return ap
