import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgemigrate.baselines import (NOISE, Calibration, DbscanParams, RandomDmParams,
                                   RandomDmState, dbscan, dbscan_dm_dominant, dbscan_dm_step,
                                   derive_calibration, random_dm_step)
from edgemigrate.core import RequestInterval
from edgemigrate.ensemble import EnsembleConfig, ReceptorState
from oracles import reachability_dbscan

P = DbscanParams()


def _core_partition(res):
    return {frozenset(int(i) for i in c if res.core[i]) for c in res.clusters()}


def test_collinear_points_one_cluster():
    pts = np.array([[0.1 + 0.01 * i, 0.5] for i in range(5)])
    res = dbscan(pts, P)
    assert res.n_clusters == 1 and len(res.noise) == 0
    partition, noise = reachability_dbscan(pts, P.eps, P.min_samples)
    assert _core_partition(res) == partition and noise == set()


def test_sparse_points_all_noise():
    pts = np.array([[0.1 * i, 0.1 * i + 0.05] for i in range(8)])
    res = dbscan(pts, P)
    assert res.n_clusters == 0 and np.all(res.labels == NOISE)


def test_two_blobs_two_clusters():
    rng = np.random.default_rng(0)
    a = rng.normal([0.2, 0.4], 0.003, size=(10, 2))
    b = a + 10 * P.eps
    res = dbscan(np.vstack([a, b]), P)
    assert res.n_clusters == 2
    assert set(res.labels[:10]) == {0} and set(res.labels[10:]) == {1}


@pytest.mark.parametrize("seed", range(20))
def test_matches_reachability_oracle(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(5, 201))
    centres = rng.random((3, 2))
    pts = centres[rng.integers(3, size=n)] + rng.normal(0, 0.03, size=(n, 2))
    res = dbscan(pts, P)
    partition, noise = reachability_dbscan(pts, P.eps, P.min_samples)
    assert _core_partition(res) == partition
    assert set(res.noise.tolist()) == noise


@given(st.integers(0, 10_000))
def test_core_partition_invariant_under_shuffle(seed):
    rng = np.random.default_rng(seed)
    pts = rng.normal(0.5, 0.04, size=(60, 2))
    perm = rng.permutation(60)
    a = _core_partition(dbscan(pts, P))
    b = {frozenset(int(perm[i]) for i in c) for c in _core_partition(dbscan(pts[perm], P))}
    assert a == b


def test_border_point_joins_first_cluster_in_scan_order():
    eps = 0.085
    left = [[0.0, 0.0], [-0.01, 0.0], [-0.02, 0.0], [-0.01, 0.01]]
    right = [[0.16, 0.0], [0.17, 0.0], [0.18, 0.0], [0.17, 0.01]]
    border = [[0.08, 0.0]]  # within eps of one core point on each side
    res = dbscan(np.array(left + right + border), DbscanParams(eps, 4))
    assert res.n_clusters == 2
    assert not res.core[8] and res.labels[8] == 0


def test_dbscan_dm_centroid_of_largest_cluster():
    rng = np.random.default_rng(1)
    big = np.array([0.3, 0.6]) + rng.normal(0, 0.002, size=(12, 2))
    small = np.array([0.7, 0.8]) + rng.normal(0, 0.002, size=(5, 2))
    d = dbscan_dm_dominant(np.vstack([small, big]), P)
    cx, cy = big.mean(axis=0)
    assert d.interval.low == pytest.approx(cx, abs=1e-15)
    assert d.interval.high == pytest.approx(cy, abs=1e-15)
    assert dbscan_dm_dominant(np.array([[0.1, 0.2], [0.5, 0.9]]), P) is None


def test_dbscan_dm_step_targets_top_requestors():
    cfg = EnsembleConfig()
    state = ReceptorState(0, cfg.window, cfg.lr)
    counts = {"A": 9, "B": 5, "C": 1}
    order = [r for r, k in counts.items() for _ in range(k)]
    order += ["D"] * (20 - len(order))
    iv = RequestInterval(0.3, 0.6)
    outs = [dbscan_dm_step(state, r, iv, P, 2, cfg, t) for t, r in enumerate(order)]
    assert all(o == [] for o in outs[:19])
    assert [d.target for d in outs[19]] == ["A", "B"]
    got = outs[19][0].interval
    assert (got.low, got.high) == pytest.approx((0.3, 0.6), abs=1e-12)


def test_random_dm_forced_branches():
    never = RandomDmState(RandomDmParams(0.0, 2, seed=1))
    assert all(random_dm_step(never, 0, range(10)) == [] for _ in range(100))
    always = RandomDmState(RandomDmParams(1.0, 2, seed=1))
    for _ in range(100):
        out = random_dm_step(always, 3, range(10))
        assert len(out) == 2 and len({d.target for d in out}) == 2
        assert all(d.target != 3 and d.source == 3 for d in out)
        assert out[0].interval == out[1].interval


def test_random_dm_binomial_rate_and_reproducibility():
    state = RandomDmState(RandomDmParams(0.02, 1, seed=7))
    hits = sum(bool(random_dm_step(state, 0, range(1, 20))) for _ in range(100_000))
    assert 1700 <= hits <= 2300
    a = RandomDmState(RandomDmParams(0.3, 2, seed=9))
    b = RandomDmState(RandomDmParams(0.3, 2, seed=9))
    for _ in range(200):
        assert random_dm_step(a, 0, range(1, 8)) == random_dm_step(b, 0, range(1, 8))


class _Rec:
    def __init__(self, total, initiating, directives):
        self.r_total, self.requests_with_migration, self.n_directives = (total, initiating,
                                                                          directives)


def test_calibration_arithmetic():
    assert derive_calibration(_Rec(1000, 20, 44)) == Calibration(0.02, 2, 1000, 20, 44)
    assert derive_calibration(_Rec(1000, 0, 0)).p_migrate == 0.0
    assert derive_calibration(_Rec(1000, 0, 0)).qnm == 1
    assert derive_calibration(_Rec(0, 0, 0)).qnm == 1
    # half-way rounds up
    assert derive_calibration(_Rec(100, 2, 5)).qnm == 3
    assert derive_calibration(_Rec(100, 4, 7)).qnm == 2
