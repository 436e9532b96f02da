"""metrics module: angular statistics, average precision, candidate reports."""

import json
import math

import numpy as np
import pytest

from pixelnn import (
    ImageRGB,
    NormalMap,
    angular_stats,
    average_precision,
    evaluate_candidates,
    normal_map_from_image,
    normal_map_from_tensor_file,
    psnr,
)
from pixelnn.descriptor import DescriptorField, save_field

from conftest import rand_image
from oracles import angular_error_stats as oracle_stats
from oracles import average_precision as oracle_ap
from oracles import rotate_normals


def random_normals(rng, h, w):
    v = rng.standard_normal((h, w, 3))
    v /= np.linalg.norm(v, axis=2, keepdims=True)
    return NormalMap(v.astype(np.float32))


def rotate_about(normals: NormalMap, degrees: float, rng) -> NormalMap:
    return NormalMap(rotate_normals(normals.data, degrees, rng).astype(np.float32))


class TestNormalMap:
    def test_rejects_non_unit(self):
        with pytest.raises(ValueError, match="non-unit"):
            NormalMap(np.full((2, 2, 3), 0.9, dtype=np.float32))

    def test_from_image_renormalizes(self, rng):
        img = rand_image(rng, 4, 4)
        nm = normal_map_from_image(img)
        norms = np.linalg.norm(nm.data.astype(np.float64), axis=2)
        assert np.allclose(norms, 1.0, atol=1e-6)

    def test_mid_gray_decodes_to_up(self):
        img = ImageRGB(np.full((2, 2, 3), 0.5, dtype=np.float32))
        nm = normal_map_from_image(img)
        assert np.allclose(nm.data, [0.0, 0.0, 1.0])

    def test_from_tensor_file(self, tmp_path, rng):
        nm = random_normals(rng, 3, 4)
        field = DescriptorField(nm.data, config_hash="external", level_dims=(3,))
        p = tmp_path / "n.pxnt"
        save_field(field, p)
        loaded = normal_map_from_tensor_file(p)
        assert np.allclose(loaded.data, nm.data, atol=1e-6)

    def test_tensor_file_wrong_dim(self, tmp_path, rng):
        field = DescriptorField(rng.random((3, 3, 5)).astype(np.float32), "external", (5,))
        p = tmp_path / "bad.pxnt"
        save_field(field, p)
        with pytest.raises(ValueError, match="dim 3"):
            normal_map_from_tensor_file(p)


class TestAngularStats:
    def test_identical_maps(self, rng):
        nm = random_normals(rng, 4, 4)
        s = angular_stats(nm, nm)
        assert s.mean == 0.0 and s.median == 0.0 and s.rmse == 0.0
        assert s.pct_11_25 == 100.0 and s.pct_22_5 == 100.0 and s.pct_30 == 100.0

    def test_exact_30_degree_rotation(self, rng):
        gt = random_normals(rng, 6, 6)
        pred = rotate_about(gt, 30.0, rng)
        s = angular_stats(pred, gt)
        assert abs(s.mean - 30.0) <= 1e-4
        assert s.pct_30 == 100.0
        assert s.pct_22_5 == 0.0

    def test_exactly_at_threshold_is_inclusive(self, rng):
        gt = random_normals(rng, 4, 4)
        for thr, attr in [(11.25, "pct_11_25"), (22.5, "pct_22_5"), (30.0, "pct_30")]:
            pred = rotate_about(gt, thr, rng)
            s = angular_stats(pred, gt)
            assert getattr(s, attr) == 100.0

    def test_random_maps_match_loop_oracle(self, rng):
        pred, gt = random_normals(rng, 8, 8), random_normals(rng, 8, 8)
        s = angular_stats(pred, gt)
        o = oracle_stats(pred.data, gt.data)
        assert s.mean == pytest.approx(o["mean"], abs=1e-6)
        assert s.median == pytest.approx(o["median"], abs=1e-6)
        assert s.rmse == pytest.approx(o["rmse"], abs=1e-6)
        assert s.pct_11_25 == pytest.approx(o["pct_11_25"], abs=1e-9)
        assert s.pct_22_5 == pytest.approx(o["pct_22_5"], abs=1e-9)
        assert s.pct_30 == pytest.approx(o["pct_30"], abs=1e-9)

    def test_symmetry(self, rng):
        a, b = random_normals(rng, 5, 5), random_normals(rng, 5, 5)
        assert angular_stats(a, b) == angular_stats(b, a)

    def test_threshold_monotonicity(self, rng):
        for _ in range(20):
            a, b = random_normals(rng, 4, 4), random_normals(rng, 4, 4)
            s = angular_stats(a, b)
            assert s.pct_11_25 <= s.pct_22_5 <= s.pct_30

    def test_median_lower_middle_for_even_count(self, rng):
        gt = random_normals(rng, 1, 4)
        pred = gt.data.copy().astype(np.float64)
        s = angular_stats(NormalMap(pred.astype(np.float32)), gt)
        assert s.median == 0.0

    def test_dim_mismatch(self, rng):
        with pytest.raises(ValueError):
            angular_stats(random_normals(rng, 3, 3), random_normals(rng, 3, 4))


class TestAveragePrecision:
    def test_perfect_ranking(self):
        assert average_precision([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_positive_ranked_last(self):
        assert average_precision([0.9, 0.1], [0, 1]) == 0.5

    def test_requires_a_positive(self):
        with pytest.raises(ValueError, match="positive"):
            average_precision([0.5, 0.5], [0, 0])

    def test_matches_pr_oracle_on_random_instances(self, rng):
        for _ in range(100):
            n = int(rng.integers(5, 60))
            scores = rng.random(n)
            labels = rng.integers(0, 2, n)
            if labels.sum() == 0:
                labels[int(rng.integers(0, n))] = 1
            assert average_precision(scores, labels) == pytest.approx(
                oracle_ap(scores, labels), abs=1e-9
            )

    def test_ties_break_by_pixel_index(self):
        # equal scores: earlier pixels rank first
        ap_pos_first = average_precision([0.5, 0.5], [1, 0])
        ap_pos_second = average_precision([0.5, 0.5], [0, 1])
        assert ap_pos_first == 1.0
        assert ap_pos_second == 0.5

    def test_invariant_under_monotone_transform(self, rng):
        scores = rng.random(50)
        labels = rng.integers(0, 2, 50)
        labels[0] = 1
        base = average_precision(scores, labels)
        assert average_precision(3.0 * scores + 2.0, labels) == pytest.approx(base, abs=1e-12)
        assert average_precision(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)


class TestEvaluateCandidates:
    def test_gt_itself_gives_infinite_oracle(self, rng):
        gt = rand_image(rng, 6, 6)
        report = evaluate_candidates([(1, 1, gt)], gt)
        assert report.oracle.psnr == math.inf

    def test_oracle_picks_exact_candidate(self, rng):
        gt = rand_image(rng, 6, 6)
        other = rand_image(rng, 6, 6)
        report = evaluate_candidates([(1, 1, other), (2, 3, gt)], gt)
        assert (report.oracle.k, report.oracle.t) == (2, 3)

    def test_oracle_row_dominates_every_row(self, rng):
        gt = rand_image(rng, 6, 6)
        cands = [(k, t, rand_image(rng, 6, 6)) for k in (1, 2) for t in (1, 3)]
        report = evaluate_candidates(cands, gt)
        recomputed = max(r.psnr for r in report.rows)
        assert report.oracle.psnr == recomputed
        for row in report.rows:
            assert report.oracle.psnr >= row.psnr

    def test_aux_metrics_and_json_lines(self, rng):
        gt = rand_image(rng, 6, 6)
        gt_normals = random_normals(rng, 6, 6)
        edges = np.zeros((6, 6), dtype=bool)
        edges[2:4, 2:4] = True
        report = evaluate_candidates(
            [(1, 1, rand_image(rng, 6, 6)), (1, 3, rand_image(rng, 6, 6))],
            gt,
            gt_normals=gt_normals,
            gt_edges=edges,
            seed=5,
        )
        lines = report.to_json_lines().strip().split("\n")
        assert len(lines) == 4  # 2 candidates + oracle + random
        first = json.loads(lines[0])
        assert set(first) == {
            "k", "t", "psnr", "mean", "median", "rmse", "pct11", "pct22", "pct30", "ap",
        }
        assert first["ap"] is not None and first["mean"] is not None
        assert "oracle" in lines[2]
        table = report.to_table()
        assert "PSNR" in table and "oracle" in table

    def test_random_row_is_seeded(self, rng):
        gt = rand_image(rng, 6, 6)
        cands = [(k, 1, rand_image(rng, 6, 6)) for k in range(1, 6)]
        a = evaluate_candidates(cands, gt, seed=9)
        b = evaluate_candidates(cands, gt, seed=9)
        assert (a.random.k, a.random.t) == (b.random.k, b.random.t)

    def test_psnr_row_matches_direct_call(self, rng):
        gt = rand_image(rng, 6, 6)
        img = rand_image(rng, 6, 6)
        report = evaluate_candidates([(4, 7, img)], gt)
        assert report.rows[0].psnr == psnr(img, gt)
