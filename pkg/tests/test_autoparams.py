import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from autodbscan import dbscan
from autodbscan.autoparams import (
    AutoConfig,
    CellGaps,
    ParamPair,
    cell_params,
    cluster_auto,
    generate_pairs,
    merge_pairs,
    prioritize,
    round_half_up,
    run_auto,
)
from autodbscan.datagen import BlobSpec, GenSpec, generate
from autodbscan.geometry import NOISE, Dataset, DistanceSpec, distance
from autodbscan.kdtree import KdTree

from conftest import linear_range, naive_distance

TOL02 = AutoConfig(merge_tol_eps=0.2)


def linear_kdist(X, k):
    """k-th smallest distance (self first) from each row to the others, by plain loops."""
    return [sorted(naive_distance(a, b) for b in X)[k - 1] for a in X]


class TestCellParams:
    def test_unit_square(self):
        d = Dataset([[0, 0], [1, 0], [0, 1], [1, 1]])
        p = cell_params([0, 1, 2, 3], d, cfg=AutoConfig(min_pts_floor=2))
        assert p.min_pts == 2 and p.eps == 1.0 and p.population == 4

    def test_two_points(self):
        d = Dataset([[0.0, 0.0], [3.0, 4.0]])
        p = cell_params([0, 1], d, cfg=AutoConfig(min_pts_floor=2))
        assert p.min_pts == 2 and p.eps == 5.0

    def test_64_point_gaussian(self, rng):
        X = rng.normal(size=(64, 2))
        d = Dataset(X)
        p = cell_params(range(64), d)
        assert p.min_pts == max(4, 6) and p.eps > 0
        kd = linear_kdist(X, p.min_pts)
        median = float(np.median(kd))
        expect = max(v for v in kd if v <= 5.0 * median)
        assert p.eps == pytest.approx(expect, rel=1e-12)

    def test_min_pts_capped_at_cell_size(self):
        d = Dataset([[0.0], [1.0], [3.0]])
        assert cell_params([0, 1, 2], d).min_pts == 3

    def test_fence_ignores_stray_member(self):
        X = np.vstack([np.arange(15.0)[:, None] * [0.1, 0], [[500.0, 0]]])
        p = cell_params(range(16), Dataset(X))
        assert p.eps == pytest.approx(0.3)

    def test_zero_spread_cell_uses_smallest_positive_distance(self):
        d = Dataset([[1.0, 1.0]] * 5 + [[1.25, 1.0], [9.0, 9.0]])
        p = cell_params(range(5), d)
        assert p.eps == 0.25

    def test_single_point_rejected(self):
        with pytest.raises(ValueError):
            cell_params([0], Dataset([[0.0]]))

    def test_round_half_up(self):
        assert [round_half_up(x) for x in (2.5, 3.5, 4.49, 4.5)] == [3, 4, 4, 5]


class TestMerge:
    def test_single_pair_passthrough(self):
        p = ParamPair(1.0, 4, 10, source_cells=(3,))
        assert merge_pairs([p], TOL02) == [p]

    def test_close_pairs_merge(self):
        out = merge_pairs([ParamPair(1.00, 4, 10, source_cells=(0,)),
                           ParamPair(1.05, 4, 30, source_cells=(1,))], TOL02)
        assert len(out) == 1
        assert out[0].eps == pytest.approx((1.00 * 10 + 1.05 * 30) / 40)
        assert out[0].min_pts == 4 and out[0].population == 40
        assert out[0].source_cells == (0, 1)

    def test_distant_pairs_survive(self):
        out = merge_pairs([ParamPair(10, 4, 5, source_cells=(1,)),
                           ParamPair(1, 4, 5, source_cells=(0,))], TOL02)
        assert [p.eps for p in out] == [1, 10]

    def test_unequal_min_pts_never_merge(self):
        out = merge_pairs([ParamPair(1.0, 4, 5), ParamPair(1.0, 5, 5)], TOL02)
        assert len(out) == 2

    def test_closest_couple_first(self):
        # 1.0 and 1.1 fuse first (gap 0.09), leaving 1.06 vs 1.5 (gap 0.29 > 0.2)
        out = merge_pairs([ParamPair(1.0, 4, 10, source_cells=(0,)),
                           ParamPair(1.1, 4, 10, source_cells=(1,)),
                           ParamPair(1.5, 4, 10, source_cells=(2,))], TOL02)
        assert [p.source_cells for p in out] == [(0, 1), (2,)]

    def test_embedded_dense_core_merges(self):
        # a tight, small core bucket touching a wider, more populous one
        X = np.vstack([np.linspace(-0.5, 0.5, 16)[:, None] * [1, 0],
                       np.linspace(0.6, 30, 16)[:, None] * [1, 0]])
        tree = KdTree(Dataset(X), leaf_capacity=16)
        core = ParamPair(0.2, 4, 16, source_cells=(0,))
        wide = ParamPair(5.9, 4, 40, source_cells=(1,))
        assert len(merge_pairs([core, wide], TOL02)) == 2
        merged = merge_pairs([core, wide], TOL02, CellGaps(tree))
        assert len(merged) == 1 and merged[0].population == 56
        # equal populations: neither is embedded in the other
        same = ParamPair(5.9, 4, 16, source_cells=(1,))
        assert len(merge_pairs([core, same], TOL02, CellGaps(tree))) == 2

    def test_separate_dense_cluster_does_not_merge(self):
        X = np.vstack([np.linspace(-0.5, 0.5, 16)[:, None] * [1, 0],
                       np.linspace(100, 130, 16)[:, None] * [1, 0]])
        tree = KdTree(Dataset(X), leaf_capacity=16)
        core = ParamPair(0.2, 4, 16, source_cells=(0,))
        wide = ParamPair(5.9, 4, 40, source_cells=(1,))
        assert len(merge_pairs([core, wide], TOL02, CellGaps(tree))) == 2


pair_strategy = st.builds(
    ParamPair,
    eps=st.floats(0.01, 100),
    min_pts=st.integers(3, 5),
    population=st.integers(1, 50),
    source_cells=st.just(()),
)


@settings(max_examples=150, deadline=None)
@given(st.lists(pair_strategy, min_size=1, max_size=12), st.floats(0.01, 1.0))
def test_merge_invariants(pairs, tol):
    pairs = [ParamPair(p.eps, p.min_pts, p.population, source_cells=(i,))
             for i, p in enumerate(pairs)]
    out = merge_pairs(pairs, AutoConfig(merge_tol_eps=tol))
    assert len(out) <= len(pairs)
    assert sum(p.population for p in out) == sum(p.population for p in pairs)
    cells = sorted(c for p in out for c in p.source_cells)
    assert cells == list(range(len(pairs)))
    assert [p.eps for p in out] == sorted(p.eps for p in out)
    # no surviving couple is still mergeable
    for i, a in enumerate(out):
        for b in out[i + 1:]:
            if a.min_pts == b.min_pts:
                assert abs(a.eps - b.eps) / max(a.eps, b.eps) > tol


class TestPrioritize:
    def test_ascending_eps(self):
        out = prioritize([ParamPair(3, 4, 1), ParamPair(1, 4, 1), ParamPair(2, 4, 1)])
        assert [p.eps for p in out] == [1, 2, 3]
        assert [p.priority for p in out] == [1, 2, 3]

    def test_population_tie_break(self):
        out = prioritize([ParamPair(1, 4, 5), ParamPair(1, 4, 50)])
        assert [p.population for p in out] == [50, 5]

    def test_idempotent(self):
        ps = [ParamPair(2, 4, 3), ParamPair(1, 5, 3), ParamPair(1, 4, 3)]
        assert prioritize(prioritize(ps)) == prioritize(ps)


@settings(max_examples=150, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([0.5, 1.0, 2.0]), st.integers(1, 4),
                          st.integers(1, 4)), min_size=0, max_size=12))
def test_prioritize_matches_independent_sort(rows):
    pairs = [ParamPair(e, m, pop, source_cells=(i,)) for i, (e, m, pop) in enumerate(rows)]
    got = [(p.eps, p.population, p.min_pts) for p in prioritize(pairs)]
    expect = sorted(((e, pop, m) for e, m, pop in rows), key=lambda t: (t[0], -t[1], t[2]))
    assert got == expect


class TestAutoPipeline:
    def test_tiny_inputs(self):
        lab, pairs = cluster_auto(Dataset([[1.0, 2.0]]))
        assert lab.label.tolist() == [NOISE] and pairs == []

    def test_np1_degeneracy(self, rng):
        d = Dataset(rng.normal(size=(300, 2)))
        res = run_auto(d)
        assert len(res.pairs) == 1
        plain = dbscan.cluster(d, KdTree(d), res.pairs[0].params)
        assert res.labeling.same_as(plain)

    def test_two_density_example(self):
        # 100-point tight blob and 100-point sparse blob, 200 apart
        spec = GenSpec(2, (BlobSpec((0, 0), 1, 100, 0), BlobSpec((200, 0), 20, 100, 1)),
                       rng_seed=20113)
        d = generate(spec)
        lab, pairs = cluster_auto(d)
        assert lab.cluster_count >= 2
        for k in (0, 1):
            got = lab.label[d.truth == k]
            got = got[got != NOISE]
            assert np.bincount(got).max() >= 90

    def test_sparse_uniform_noise(self):
        r = np.random.default_rng(5)
        d = Dataset(r.uniform(0, 1e6, size=(50, 3)))
        lab, pairs = cluster_auto(d, cfg=AutoConfig(min_pts_floor=4))
        assert lab.noise_count > 25
        for p in pairs:
            counts = [len(linear_range(d.coords, x, p.eps)) for x in d.coords]
            assert all(c < p.min_pts for c in counts)

    def test_pair_sanity(self, rng):
        X = np.vstack([rng.normal(0, 1, (150, 2)), rng.normal(30, 4, (150, 2)),
                       rng.uniform(-20, 50, (40, 2))])
        d = Dataset(X)
        res = run_auto(d)
        diameter = max(distance(a, b) for a in X[::7] for b in X[::7])
        biggest = max(len(idx) for _, idx in res.tree.leaf_cells())
        for p in res.pairs:
            assert 0 < p.eps <= diameter * 1.01 and p.min_pts <= biggest

    def test_exhaustive_single_assignment(self, rng):
        X = np.vstack([rng.normal(0, 0.5, (100, 2)), rng.normal(20, 5, (100, 2))])
        res = run_auto(Dataset(X))
        lab = res.labeling
        assert np.all((lab.label == NOISE) | ((lab.label >= 0) & (lab.label < lab.cluster_count)))
        assert sum(res.passes) == lab.cluster_count
        assert set(np.unique(lab.label[lab.label >= 0])) == set(range(lab.cluster_count))

    def test_seed_mode_restricts_cells(self, rng):
        X = np.vstack([rng.normal(0, 0.5, (100, 2)), rng.normal(50, 0.5, (100, 2))])
        d = Dataset(X)
        tree = KdTree(d)
        seeded = generate_pairs(d, tree, cfg=AutoConfig(seeds=[[0.0, 0.0]]))
        allp = generate_pairs(d, tree)
        wanted = tree.locate([0.0, 0.0])
        assert [p.source_cells for p in seeded] == [(wanted,)]
        assert len(allp) > 1
        assert AutoConfig(seeds=[[0, 0], [1, 1]]).seed_count == 2

    def test_zero_weight_axis_is_ignored(self, rng):
        # two blobs along x; y is wide noise that a zero weight switches off
        x = np.concatenate([rng.normal(0, 1, 150), rng.normal(50, 1, 150)])
        X = np.column_stack([x, rng.normal(0, 1000, 300)])
        lab, _ = cluster_auto(Dataset(X), DistanceSpec(weights=[1.0, 0.0]))
        assert lab.cluster_count == 2
        assert len(set(lab.label[:150]) - {NOISE}) == 1

    def test_determinism(self, rng):
        X = rng.normal(size=(300, 2))
        a, _ = cluster_auto(Dataset(X))
        b, _ = cluster_auto(Dataset(X))
        assert a.same_as(b)


@pytest.mark.parametrize("kwargs", [
    dict(merge_tol_eps=0.0), dict(merge_tol_eps=1.5), dict(min_pts_floor=0),
    dict(leaf_capacity=0), dict(density_contrast=-1), dict(density_k=1), dict(kdist_fence=0.5),
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        AutoConfig(**kwargs)


def test_pair_validation():
    with pytest.raises(ValueError):
        ParamPair(0.0, 4, 1)
    with pytest.raises(ValueError):
        ParamPair(1.0, 0, 1)
    assert math.isinf(ParamPair(1.0, 4, 1).density_contrast)
