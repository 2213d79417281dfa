"""DBSCAN over the kd-tree, and an independent O(n^2) reference.

Conventions shared by both implementations:

* neighbourhoods are closed (``distance <= eps``) and include the point itself;
* cluster ids follow the smallest core index of each cluster, so the first
  core point met by an ascending scan opens cluster 0;
* a border point within ``eps`` of cores from several clusters joins the
  lowest-numbered one and is flagged in ``Labeling.ambiguous``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Optional

import numpy as np

from .geometry import NOISE, Dataset, DistanceSpec, EUCLIDEAN, weighted_distances
from .kdtree import KdTree

ORACLE_CAP = 2000


class Role(IntEnum):
    CORE = 0
    BORDER = 1
    NOISE_PT = 2


@dataclass(frozen=True)
class Params:
    eps: float
    min_pts: int

    def __post_init__(self):
        if not (np.isfinite(self.eps) and self.eps > 0):
            raise ValueError(f"eps must be a positive finite number, got {self.eps}")
        if int(self.min_pts) != self.min_pts or self.min_pts < 1:
            raise ValueError(f"min_pts must be a positive integer, got {self.min_pts}")
        object.__setattr__(self, "eps", float(self.eps))
        object.__setattr__(self, "min_pts", int(self.min_pts))


@dataclass(eq=False)
class Labeling:
    """Per-point cluster ids (``NOISE`` = -1) and roles."""

    label: np.ndarray
    role: np.ndarray
    cluster_count: int
    ambiguous: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.ambiguous is None:
            self.ambiguous = np.zeros(len(self.label), dtype=bool)

    @classmethod
    def all_noise(cls, n: int) -> "Labeling":
        return cls(np.full(n, NOISE, dtype=np.int64),
                   np.full(n, Role.NOISE_PT, dtype=np.int8), 0)

    def __len__(self):
        return len(self.label)

    @property
    def noise_count(self) -> int:
        return int(np.sum(self.label == NOISE))

    def same_as(self, other: "Labeling") -> bool:
        return (self.cluster_count == other.cluster_count
                and np.array_equal(self.label, other.label)
                and np.array_equal(self.role, other.role)
                and np.array_equal(self.ambiguous, other.ambiguous))


def _active_mask(n: int, active: Optional[Iterable[int]]) -> np.ndarray:
    if active is None:
        return np.ones(n, dtype=bool)
    mask = np.zeros(n, dtype=bool)
    idx = np.asarray(list(active) if not isinstance(active, np.ndarray) else active,
                     dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError("active set contains indices outside the dataset")
    mask[idx] = True
    return mask


def _finish(label: np.ndarray, is_core: np.ndarray, neighbours, cluster_count: int) -> Labeling:
    n = len(label)
    role = np.full(n, Role.NOISE_PT, dtype=np.int8)
    role[(label != NOISE) & ~is_core] = Role.BORDER
    role[is_core] = Role.CORE
    ambiguous = np.zeros(n, dtype=bool)
    for i in np.flatnonzero(role == Role.BORDER):
        nb = neighbours(i)
        owners = set(label[nb[is_core[nb]]].tolist())
        ambiguous[i] = len(owners) > 1
    return Labeling(label, role, cluster_count, ambiguous)


def cluster(data: Dataset, tree: KdTree, params: Params, spec: DistanceSpec = EUCLIDEAN,
            active: Optional[Iterable[int]] = None) -> Labeling:
    """Label ``data`` with DBSCAN using ``tree`` for neighbourhood queries.

    When ``active`` is given, points outside it are ignored entirely: they are
    neither seeds nor neighbours, and come back labelled as noise.
    """
    if tree.n != data.n:
        raise ValueError("tree was built over a different dataset")
    n = data.n
    mask = _active_mask(n, active)
    label = np.full(n, NOISE, dtype=np.int64)
    is_core = np.zeros(n, dtype=bool)
    if not mask.any():
        return Labeling.all_noise(n)

    neighbourhoods: dict[int, np.ndarray] = {}
    for i in np.flatnonzero(mask).tolist():
        nb = tree.range_query(data.coords[i], params.eps, spec)
        nb = nb[mask[nb]]
        neighbourhoods[i] = nb
        is_core[i] = len(nb) >= params.min_pts

    cid = 0
    for i in np.flatnonzero(mask).tolist():
        if label[i] != NOISE or not is_core[i]:
            continue
        label[i] = cid
        queue = deque([i])
        while queue:
            p = queue.popleft()
            if not is_core[p]:
                continue
            for q in neighbourhoods[p].tolist():
                if label[q] == NOISE:
                    label[q] = cid
                    queue.append(q)
        cid += 1
    return _finish(label, is_core, neighbourhoods.__getitem__, cid)


def brute_force_reference(data: Dataset, params: Params, spec: DistanceSpec = EUCLIDEAN,
                          active: Optional[Iterable[int]] = None,
                          cap: int = ORACLE_CAP) -> Labeling:
    """DBSCAN by explicit closure over the full distance matrix.

    Core points are joined by union-find over the eps-graph; each cluster is
    numbered by its smallest core index, and every non-core point within eps
    of a core takes the smallest such cluster id.
    """
    n = data.n
    if n > cap:
        raise ValueError(f"reference oracle refuses {n} points (cap {cap})")
    mask = _active_mask(n, active)
    act = np.flatnonzero(mask)
    if act.size == 0:
        return Labeling.all_noise(n)

    X = data.coords
    adj = np.zeros((n, n), dtype=bool)
    for i in act.tolist():
        adj[i] = weighted_distances(X, X[i], spec) <= params.eps
    adj &= mask[None, :]
    adj &= mask[:, None]
    is_core = adj.sum(axis=1) >= params.min_pts

    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    cores = np.flatnonzero(is_core)
    for i in cores.tolist():
        for j in np.flatnonzero(adj[i] & is_core).tolist():
            ri, rj = find(i), find(j)
            if ri != rj:
                parent[max(ri, rj)] = min(ri, rj)

    label = np.full(n, NOISE, dtype=np.int64)
    roots = sorted({find(i) for i in cores.tolist()})
    cid_of = {r: k for k, r in enumerate(roots)}
    for i in cores.tolist():
        label[i] = cid_of[find(i)]
    for i in act.tolist():
        if is_core[i]:
            continue
        near = np.flatnonzero(adj[i] & is_core)
        if near.size:
            label[i] = label[near].min()

    return _finish(label, is_core, lambda i: np.flatnonzero(adj[i]), len(roots))
