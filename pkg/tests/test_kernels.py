"""Kernel twins: the jit and numpy implementations must agree exactly, and
both must match hand-worked examples and the naive oracles."""

import os
import subprocess
import sys

import numpy as np
import pytest

import kda._kernels as kernels
from kda._kernels import EUCLIDEAN, MANHATTAN, _numpy_impl

import reference

try:
    from kda._kernels import _jit_impl
except ImportError:  # pragma: no cover
    _jit_impl = None

BOTH = [_numpy_impl] + ([_jit_impl] if _jit_impl is not None else [])


def rand_sets(n_sets, max_n, dims, seed):
    rng = np.random.default_rng(seed)
    for _ in range(n_sets):
        n = int(rng.integers(2, max_n + 1))
        yield rng.normal(size=(n, dims)) * rng.uniform(0.5, 20.0)


@pytest.mark.parametrize("impl", BOTH, ids=lambda m: m.__name__.rsplit("_", 1)[-1])
class TestHandExamples:
    def test_pairwise_dist(self, impl):
        X = np.array([[0.0, 0.0], [3.0, 4.0]])
        assert impl.pairwise_dist(X, EUCLIDEAN)[0, 1] == 5.0
        assert impl.pairwise_dist(X, MANHATTAN)[0, 1] == 7.0

    def test_dbscan_cluster_and_noise(self, impl):
        # {0,1,2} chain within eps 2, 100 isolated
        X = np.array([[0.0], [1.0], [2.0], [100.0]])
        D = impl.pairwise_dist(X, EUCLIDEAN)
        labels = impl.dbscan_labels(D, 2.0, 2)
        assert labels.tolist() == [0, 0, 0, -1]

    def test_dbscan_min_pts_one_no_noise(self, impl):
        X = np.array([[0.0], [50.0], [900.0]])
        D = impl.pairwise_dist(X, EUCLIDEAN)
        assert impl.dbscan_labels(D, 1.0, 1).tolist() == [0, 1, 2]

    def test_average_link_two_pairs(self, impl):
        X = np.array([[0.0], [1.0], [10.0], [11.0]])
        D = impl.pairwise_dist(X, EUCLIDEAN)
        a, b, h = impl.average_link(D)
        # third merge joins {0,1} and {10,11}: (10+11+9+10)/4 = 10
        assert h.tolist() == [1.0, 1.0, 10.0]
        assert (a[0], b[0]) == (0, 1)
        assert (a[1], b[1]) == (2, 3)
        assert (a[2], b[2]) == (4, 5)

    def test_lloyd_tie_goes_to_lowest_centroid(self, impl):
        # point at 0 is equidistant from the two centroids
        X = np.array([[0.0], [-1.0], [1.0]])
        cents0 = np.array([[-1.0], [1.0]])
        _, assign, _, _ = impl.lloyd_run(X, cents0, 100, EUCLIDEAN)
        assert assign[0] == 0

    def test_lloyd_repairs_empty_cluster(self, impl):
        # second centroid starts so far away it captures nothing
        X = np.array([[0.0], [1.0], [10.0], [11.0]])
        cents0 = np.array([[0.5], [1000.0]])
        cents, assign, hist, iters = impl.lloyd_run(X, cents0, 100, EUCLIDEAN)
        assert sorted(np.bincount(assign, minlength=2).tolist()) == [2, 2]
        assert hist[iters - 1] == 1.0

    def test_lof_single_point(self, impl):
        assert impl.lof_from_dmat(np.zeros((1, 1)), 1).tolist() == [1.0]

    def test_lof_coincident_neighbors_propagate_inf(self, impl):
        X = np.array([[0.0], [0.0], [1.0]])
        D = impl.pairwise_dist(X, EUCLIDEAN)
        lof = impl.lof_from_dmat(D, 1)
        # coincident pair has infinite density, scored 1.0 by convention;
        # their finite-density neighbor inherits inf
        assert lof[0] == 1.0 and lof[1] == 1.0
        assert np.isinf(lof[2])


@pytest.mark.skipif(_jit_impl is None, reason="jit backend unavailable")
class TestBackendParity:
    """Same inputs through both backends, bit-for-bit comparable outputs."""

    def test_pairwise(self):
        for X in rand_sets(20, 60, 6, seed=101):
            for metric in (EUCLIDEAN, MANHATTAN):
                a = _numpy_impl.pairwise_dist(X, metric)
                b = _jit_impl.pairwise_dist(X, metric)
                assert np.allclose(a, b, rtol=0, atol=1e-12)

    def test_lloyd(self):
        rng = np.random.default_rng(55)
        for X in rand_sets(20, 50, 6, seed=102):
            k = int(rng.integers(1, min(8, len(X)) + 1))
            cents0 = X[rng.choice(len(X), size=k, replace=False)].copy()
            ca, aa, ha, ia = _numpy_impl.lloyd_run(X, cents0, 100, EUCLIDEAN)
            cb, ab, hb, ib = _jit_impl.lloyd_run(X, cents0, 100, EUCLIDEAN)
            assert ia == ib
            assert aa.tolist() == ab.tolist()
            assert np.allclose(ca, cb, rtol=0, atol=1e-9)
            assert np.allclose(ha[:ia], hb[:ib], rtol=1e-12, atol=0)

    def test_dbscan(self):
        rng = np.random.default_rng(56)
        for X in rand_sets(20, 60, 3, seed=103):
            D = _numpy_impl.pairwise_dist(X, EUCLIDEAN)
            eps = float(rng.uniform(0.1, 1.0) * np.median(D))
            mp = int(rng.integers(1, 5))
            assert (
                _numpy_impl.dbscan_labels(D, eps, mp).tolist()
                == _jit_impl.dbscan_labels(D, eps, mp).tolist()
            )

    def test_lof(self):
        rng = np.random.default_rng(57)
        for X in rand_sets(20, 50, 4, seed=104):
            D = _numpy_impl.pairwise_dist(X, EUCLIDEAN)
            k = int(rng.integers(1, len(X)))
            a = _numpy_impl.lof_from_dmat(D, k)
            b = _jit_impl.lof_from_dmat(D, k)
            assert np.allclose(a, b, rtol=1e-12, atol=1e-12)

    def test_average_link(self):
        for X in rand_sets(20, 40, 3, seed=105):
            D = _numpy_impl.pairwise_dist(X, EUCLIDEAN)
            aa, ab, ah = _numpy_impl.average_link(D)
            ba, bb, bh = _jit_impl.average_link(D)
            assert aa.tolist() == ba.tolist()
            assert ab.tolist() == bb.tolist()
            assert np.allclose(ah, bh, rtol=1e-12, atol=0)


class TestOracles:
    def test_dbscan_matches_naive(self):
        rng = np.random.default_rng(58)
        for X in rand_sets(25, 40, 2, seed=106):
            D = _numpy_impl.pairwise_dist(X, EUCLIDEAN)
            eps = float(rng.uniform(0.2, 1.2) * np.median(D))
            mp = int(rng.integers(1, 5))
            labels = kernels.dbscan_labels(D, eps, mp)
            noise, core_parts = reference.dbscan_naive(D, eps, mp)
            assert {i for i, l in enumerate(labels) if l == -1} == noise
            core = {i for part in core_parts for i in part}
            got = {
                frozenset(i for i in part_ids if i in core)
                for part_ids in (
                    np.flatnonzero(labels == c) for c in range(labels.max() + 1)
                )
            }
            assert got == core_parts

    def test_average_link_matches_naive(self):
        for X in rand_sets(15, 20, 2, seed=107):
            D = _numpy_impl.pairwise_dist(X, EUCLIDEAN)
            _, _, h = kernels.average_link(D)
            ref_h, _ = reference.average_link_naive(D)
            assert np.allclose(h, ref_h, rtol=0, atol=1e-9)


class TestBackendSwitch:
    def _probe(self, env_value):
        env = dict(os.environ)
        if env_value is None:
            env.pop("KDA_NUMBA", None)
        else:
            env["KDA_NUMBA"] = env_value
        out = subprocess.run(
            [sys.executable, "-c", "import kda._kernels as k; print(k.BACKEND)"],
            capture_output=True, text=True, env=env, check=True,
        )
        return out.stdout.strip()

    def test_env_flag_selects_numpy(self):
        assert self._probe("0") == "numpy"
        assert self._probe("off") == "numpy"

    @pytest.mark.skipif(_jit_impl is None, reason="jit backend unavailable")
    def test_default_prefers_jit(self):
        assert self._probe(None) == "numba"
        assert self._probe("1") == "numba"
