import numpy as np
import pytest

from riskcluster.cluster import ClusterParams, cluster_points
from riskcluster.datagen import SyntheticSpec, generate
from riskcluster.model import PointSet

from oracle import pair_counting_ari, reference_cluster

SHAPES = ("blobs", "moons", "circles", "varied_variance",
          "anisotropic", "uniform_noise")


class TestParamsResolve:
    def test_defaults_chain(self):
        r = ClusterParams(min_cluster_size=10).resolve(1000)
        assert r["min_samples"] == 10
        assert r["k"] == 10
        assert r["mode"] == "exact"
        assert r["nlist"] == 32  # rounded sqrt(1000)
        assert r["nprobe"] >= 1

    def test_clamps_to_n_minus_one(self):
        r = ClusterParams(min_cluster_size=5, min_samples=50, k=80).resolve(20)
        assert r["min_samples"] == 19
        assert r["k"] == 19

    def test_explicit_values_kept(self):
        r = ClusterParams(
            min_cluster_size=5, min_samples=7, k=12, mode="ivf",
            nlist=4, nprobe=2, seed=9).resolve(100)
        assert (r["min_samples"], r["k"]) == (7, 12)
        assert (r["nlist"], r["nprobe"], r["seed"]) == (4, 2, 9)

    def test_rejects_small_mcs(self):
        with pytest.raises(ValueError, match="min_cluster_size"):
            ClusterParams(min_cluster_size=1).resolve(10)

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError, match="mode"):
            ClusterParams(min_cluster_size=5, mode="annoy").resolve(10)

    def test_rejects_k_below_min_samples(self):
        with pytest.raises(ValueError, match="min_samples"):
            ClusterParams(min_cluster_size=5, min_samples=10, k=4).resolve(50)

    def test_nlist_clamped_to_n(self):
        r = ClusterParams(min_cluster_size=2, nlist=500).resolve(30)
        assert r["nlist"] == 30


class TestOracleEquivalence:
    @pytest.mark.parametrize("shape", SHAPES)
    def test_exact_full_k_matches_reference(self, shape):
        pts, _ = generate(SyntheticSpec(shape=shape, n=140, seed=5))
        params = ClusterParams(min_cluster_size=8, min_samples=5, k=pts.n - 1)
        res = cluster_points(pts, params)
        want_labels, want_strengths = reference_cluster(
            pts.data, min_samples=5, min_cluster_size=8)
        assert pair_counting_ari(res.labels, want_labels) == 1.0
        assert np.array_equal(res.strengths, want_strengths)

    def test_restricted_k_still_agrees_on_separated_blobs(self):
        pts, _ = generate(
            SyntheticSpec(shape="blobs", n=300, seed=2, std=0.4))
        res = cluster_points(
            pts, ClusterParams(min_cluster_size=15, min_samples=10))
        want, _ = reference_cluster(
            pts.data, min_samples=10, min_cluster_size=15)
        assert pair_counting_ari(res.labels, want) == 1.0


class TestEndToEnd:
    def test_single_point(self):
        res = cluster_points(
            PointSet(np.array([[0.5, 0.5]])), ClusterParams(
                min_cluster_size=2))
        assert res.labels.tolist() == [-1]
        assert res.strengths.tolist() == [0.0]
        assert res.component_count == 1
        assert res.num_clusters == 0

    def test_timings_keys(self):
        pts, _ = generate(SyntheticSpec(shape="moons", n=120, seed=0))
        res = cluster_points(
            pts, ClusterParams(min_cluster_size=8, min_samples=5))
        assert set(res.timings) == {
            "quantizer", "knn", "reach", "mst", "hierarchy", "condense",
            "extract", "total"}
        assert res.timings["quantizer"] == 0.0  # exact mode skips it
        assert res.timings["total"] > 0.0

    def test_ivf_mode_populates_quantizer_timing(self):
        pts, _ = generate(SyntheticSpec(shape="blobs", n=400, seed=1))
        res = cluster_points(pts, ClusterParams(
            min_cluster_size=10, min_samples=5, mode="ivf", nlist=8,
            nprobe=8))
        assert res.timings["quantizer"] > 0.0

    def test_ivf_full_probe_matches_exact(self):
        pts, _ = generate(
            SyntheticSpec(shape="varied_variance", n=350, seed=3))
        exact = cluster_points(
            pts, ClusterParams(min_cluster_size=12, min_samples=6))
        ivf = cluster_points(pts, ClusterParams(
            min_cluster_size=12, min_samples=6, mode="ivf", nlist=10,
            nprobe=10))
        assert np.array_equal(exact.labels, ivf.labels)
        assert np.array_equal(exact.strengths, ivf.strengths)

    def test_thread_count_does_not_change_output(self):
        pts, _ = generate(SyntheticSpec(shape="circles", n=260, seed=4))
        params = ClusterParams(min_cluster_size=10, min_samples=5)
        one = cluster_points(pts, params, threads=1)
        many = cluster_points(pts, params, threads=8)
        assert np.array_equal(one.labels, many.labels)
        assert np.array_equal(one.strengths, many.strengths)

    def test_same_seed_same_result_ivf(self):
        pts, _ = generate(SyntheticSpec(shape="blobs", n=500, seed=6))
        params = ClusterParams(
            min_cluster_size=10, min_samples=5, mode="ivf", nlist=16,
            nprobe=4, seed=11)
        a = cluster_points(pts, params)
        b = cluster_points(pts, params)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.strengths, b.strengths)

    def test_result_accessors_consistent(self):
        pts, _ = generate(SyntheticSpec(shape="moons", n=180, seed=8))
        res = cluster_points(
            pts, ClusterParams(min_cluster_size=9, min_samples=5))
        labels = res.labels
        assert res.noise_count == int((labels == -1).sum())
        if res.num_clusters:
            assert labels.max() == res.num_clusters - 1
        assert res.component_count >= 1
