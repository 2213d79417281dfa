"""Automatic (eps, min_pts) generation and the multi-pass clustering pipeline.

Every kd-tree leaf bucket proposes one parameter pair from its own k-distance
statistics. Buckets no denser than uniform background are dropped, similar
pairs are merged, the survivors are ordered densest first, and DBSCAN runs
once per pair over the points that earlier passes left unlabelled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from . import dbscan
from .dbscan import Labeling, Params, Role
from .geometry import (
    EUCLIDEAN,
    NOISE,
    Dataset,
    DistanceSpec,
    box_gap,
    box_lower_bound,
    pairwise_distances,
    unit_ball_volume,
    weighted_distances,
)
from .kdtree import KdTree, SplitRule


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ParamPair:
    eps: float
    min_pts: int
    population: int
    priority: float = 0.0
    source_cells: tuple = ()
    density_contrast: float = math.inf

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("pair eps must be positive")
        if self.min_pts < 1 or self.population < 1:
            raise ValueError("pair min_pts and population must be >= 1")
        object.__setattr__(self, "source_cells", tuple(self.source_cells))

    @property
    def params(self) -> Params:
        return Params(self.eps, self.min_pts)


@dataclass(frozen=True)
class AutoConfig:
    """Knobs of the automatic pipeline.

    ``seeds`` switches on the user-object input mode: only buckets holding at
    least one seed propose pairs. ``density_contrast`` drops buckets whose
    ``density_k``-NN density is below that multiple of the density the same
    points would have spread uniformly over the data's bounding box; 0
    disables the filter. ``kdist_fence`` bounds which members set a bucket's
    eps: k-distances above that multiple of the bucket median are ignored.
    """

    leaf_capacity: Optional[int] = None
    split_rule: Union[SplitRule, str] = SplitRule.MEDIAN
    merge_tol_eps: float = 0.75
    min_pts_floor: int = 4
    seeds: Optional[np.ndarray] = None
    density_contrast: float = 2.5
    density_k: int = 16
    kdist_fence: float = 5.0

    def __post_init__(self):
        if not 0 < self.merge_tol_eps <= 1:
            raise ValueError("merge_tol_eps must lie in (0, 1]")
        if self.min_pts_floor < 1:
            raise ValueError("min_pts_floor must be >= 1")
        if self.leaf_capacity is not None and self.leaf_capacity < 1:
            raise ValueError("leaf_capacity must be >= 1")
        if self.density_contrast < 0:
            raise ValueError("density_contrast must be non-negative")
        if self.density_k < 2:
            raise ValueError("density_k must be >= 2")
        if not self.kdist_fence >= 1:
            raise ValueError("kdist_fence must be >= 1")
        object.__setattr__(self, "split_rule", SplitRule(self.split_rule))
        if self.seeds is not None:
            s = np.asarray(self.seeds, dtype=float)
            object.__setattr__(self, "seeds", s.reshape(len(s), -1) if s.size else s.reshape(0, 1))

    @property
    def seed_count(self) -> int:
        return 0 if self.seeds is None else len(self.seeds)


def _smallest_positive_distance(data: Dataset, spec: DistanceSpec) -> float:
    best = math.inf
    X = data.coords
    for i in range(data.n):
        d = weighted_distances(X[i + 1:], X[i], spec)
        d = d[d > 0]
        if d.size:
            best = min(best, float(d.min()))
    return best if math.isfinite(best) else 1.0


def cell_params(cell_points: Sequence[int], data: Dataset, tree: Optional[KdTree] = None,
                spec: DistanceSpec = EUCLIDEAN, cfg: AutoConfig = AutoConfig(),
                cell_id: int = 0) -> ParamPair:
    """Parameter pair proposed by one bucket.

    ``min_pts = max(floor, round(log2(size)))``, capped at the bucket size.
    Each member's k-distance is its distance to the ``min_pts``-th nearest
    bucket member (the member itself ranks first). ``eps`` is the largest
    k-distance not above ``kdist_fence`` times the bucket median, so every
    typical member passes the core test using bucket members alone while a
    stray point sharing the bucket cannot inflate the radius.
    """
    idx = np.asarray(cell_points, dtype=np.int64)
    size = len(idx)
    if size < 2:
        raise ValueError("cell_params needs at least two points")
    min_pts = min(max(cfg.min_pts_floor, round_half_up(math.log2(size))), size)
    D = pairwise_distances(data.coords[idx], spec)
    D.sort(axis=1)
    kdist = D[:, min_pts - 1]
    kdist = kdist[kdist <= cfg.kdist_fence * np.median(kdist)]
    eps = float(np.max(kdist))
    if eps <= 0:
        eps = _smallest_positive_distance(data, spec)
    return ParamPair(eps, min_pts, size, source_cells=(cell_id,))


class Background:
    """Uniform-density reference over the data's bounding box.

    Only axes with positive weight and positive extent take part, and local
    densities are measured in that same sub-space.
    """

    def __init__(self, data: Dataset, spec: DistanceSpec = EUCLIDEAN):
        w = spec.weights_for(data.dim)
        extent = np.ptp(data.coords, axis=0)
        axes = (w > 0) & (extent > 0)
        self.usable = bool(axes.any())
        self.m = int(axes.sum())
        if self.usable:
            self.ball = unit_ball_volume(DistanceSpec(spec.q, w[axes]), self.m)
            self.density = data.n / float(np.prod(extent[axes]))

    def contrast(self, points: np.ndarray, k: int, tree: KdTree,
                 spec: DistanceSpec = EUCLIDEAN) -> np.ndarray:
        """k-NN density of each point divided by the background density.

        The point itself is the first of its ``k`` neighbours, so ``k - 1``
        others fall inside the measured radius.
        """
        k = min(k, tree.n)
        if not self.usable or k < 2:
            return np.full(len(points), math.inf)
        r = np.array([tree.knn_query(tree.data.coords[i], k, spec)[-1][1] for i in points])
        with np.errstate(divide="ignore"):
            local = (k - 1) / (self.ball * r ** self.m)
        return local / self.density


class CellGaps:
    """Lazy smallest point-to-point distance between two leaf buckets."""

    def __init__(self, tree: KdTree, spec: DistanceSpec = EUCLIDEAN):
        self._cells = tree.leaf_cells()
        self._X = tree.data.coords
        self._spec = spec
        self._cache: dict[tuple[int, int], float] = {}

    def __call__(self, a: int, b: int, reach: float) -> float:
        """Exact gap when it is at most ``reach``; otherwise any value above ``reach``."""
        key = (a, b) if a < b else (b, a)
        if key in self._cache:
            return self._cache[key]
        (box_a, ia), (box_b, ib) = self._cells[a], self._cells[b]
        gap = box_gap(box_a.min, box_a.max, box_b.min, box_b.max, self._spec)
        if gap <= reach:
            Xb = self._X[ib]
            gap = min(float(weighted_distances(Xb, self._X[i], self._spec).min()) for i in ia)
            self._cache[key] = gap
        return gap


def _embedded(small: ParamPair, large: ParamPair, gaps: CellGaps) -> bool:
    """``small`` is the denser, less populous pair and touches ``large`` within its own eps."""
    if not (small.eps <= large.eps and small.population < large.population):
        return False
    return any(gaps(ca, cb, small.eps) <= small.eps
               for ca in small.source_cells for cb in large.source_cells)


def merge_pairs(pairs: Sequence[ParamPair], cfg: AutoConfig = AutoConfig(),
                gaps: Optional[CellGaps] = None) -> list[ParamPair]:
    """Agglomerate pairs with equal ``min_pts`` whose eps are close.

    A couple qualifies when its relative eps gap is at most ``merge_tol_eps``.
    With ``gaps`` it also qualifies when the pair with smaller eps has the
    smaller population and one of its points lies within its eps of a point
    of the other pair: a dense core inside a larger region of the same
    cluster. The qualifying couple with the smallest gap is fused first into
    a population-weighted pair; this repeats until no couple qualifies.
    Output is sorted by eps.
    """
    pool = list(pairs)
    while len(pool) > 1:
        best = None
        for a in range(len(pool)):
            for b in range(a + 1, len(pool)):
                pa, pb = pool[a], pool[b]
                if pa.min_pts != pb.min_pts:
                    continue
                gap = abs(pa.eps - pb.eps) / max(pa.eps, pb.eps)
                if best is not None and gap >= best[0]:
                    continue
                lo, hi = (pa, pb) if (pa.eps, pa.population) <= (pb.eps, pb.population) else (pb, pa)
                if gap <= cfg.merge_tol_eps or (gaps is not None and _embedded(lo, hi, gaps)):
                    best = (gap, a, b)
        if best is None:
            break
        _, a, b = best
        pa, pb = pool[a], pool[b]
        pop = pa.population + pb.population
        fused = ParamPair(
            eps=(pa.eps * pa.population + pb.eps * pb.population) / pop,
            min_pts=round_half_up((pa.min_pts * pa.population + pb.min_pts * pb.population) / pop),
            population=pop,
            source_cells=tuple(sorted(pa.source_cells + pb.source_cells)),
            density_contrast=min(pa.density_contrast, pb.density_contrast),
        )
        pool = [p for k, p in enumerate(pool) if k not in (a, b)] + [fused]
    return sorted(pool, key=lambda p: (p.eps, -p.population, p.min_pts))


def prioritize(pairs: Sequence[ParamPair]) -> list[ParamPair]:
    """Densest regime first: ascending eps, then larger population, then smaller min_pts."""
    ranked = sorted(pairs, key=lambda p: (p.eps, -p.population, p.min_pts, p.source_cells))
    return [replace(p, priority=p.eps) for p in ranked]


def generate_pairs(data: Dataset, tree: KdTree, spec: DistanceSpec = EUCLIDEAN,
                   cfg: AutoConfig = AutoConfig()) -> list[ParamPair]:
    """Per-bucket pairs before merging, in leaf order."""
    cells = tree.leaf_cells()
    if cfg.seeds is None:
        wanted = range(len(cells))
    else:
        wanted = sorted({tree.locate(s) for s in cfg.seeds})
    background = Background(data, spec)
    pairs: dict[int, ParamPair] = {}
    singles = []
    for cid in wanted:
        idx = cells[cid][1]
        if len(idx) < 2:
            singles.append(cid)
            continue
        pair = cell_params(idx, data, tree, spec, cfg, cell_id=cid)
        if cfg.density_contrast > 0 and background.usable:
            contrast = float(np.median(background.contrast(idx, cfg.density_k, tree, spec)))
            if contrast < cfg.density_contrast:
                continue
            pair = replace(pair, density_contrast=contrast)
        pairs[cid] = pair
    # a singleton bucket counts toward the nearest surviving bucket's pair
    for cid in singles:
        if not pairs:
            break
        x = data.coords[cells[cid][1][0]]
        host = min(pairs, key=lambda h: (box_lower_bound(cells[h][0].min, cells[h][0].max,
                                                         x, spec), h))
        p = pairs[host]
        pairs[host] = replace(p, population=p.population + 1,
                              source_cells=tuple(sorted(p.source_cells + (cid,))))
    return [pairs[c] for c in sorted(pairs)]


@dataclass
class AutoResult:
    labeling: Labeling
    pairs: list
    passes: list = field(default_factory=list)  # clusters found by each pass
    tree: Optional[KdTree] = None


def run_auto(data: Dataset, spec: DistanceSpec = EUCLIDEAN,
             cfg: AutoConfig = AutoConfig(), tree: Optional[KdTree] = None) -> AutoResult:
    """Generate, merge and rank pairs, then run one DBSCAN pass per pair."""
    spec.weights_for(data.dim)
    n = data.n
    if n < 2:
        return AutoResult(Labeling.all_noise(n), [])
    if tree is None:
        tree = KdTree(data, cfg.leaf_capacity, cfg.split_rule)
    pairs = prioritize(merge_pairs(generate_pairs(data, tree, spec, cfg), cfg, CellGaps(tree, spec)))
    if not pairs:
        return AutoResult(Labeling.all_noise(n), [], tree=tree)

    label = np.full(n, NOISE, dtype=np.int64)
    role = np.full(n, Role.NOISE_PT, dtype=np.int8)
    ambiguous = np.zeros(n, dtype=bool)
    next_id = 0
    found = []
    for pair in pairs:
        active = np.flatnonzero(label == NOISE)
        if active.size == 0:
            found.append(0)
            continue
        part = dbscan.cluster(data, tree, pair.params, spec,
                              active=None if active.size == n else active)
        hit = part.label != NOISE
        label[hit] = part.label[hit] + next_id
        role[hit] = part.role[hit]
        ambiguous[hit] = part.ambiguous[hit]
        next_id += part.cluster_count
        found.append(part.cluster_count)
    return AutoResult(Labeling(label, role, next_id, ambiguous), pairs, found, tree)


def cluster_auto(data: Dataset, spec: DistanceSpec = EUCLIDEAN,
                 cfg: AutoConfig = AutoConfig()) -> tuple[Labeling, list[ParamPair]]:
    """Multi-pass clustering with generated pairs; returns labels and the pairs used."""
    res = run_auto(data, spec, cfg)
    return res.labeling, res.pairs
