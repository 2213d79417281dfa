"""Bucketed kd-tree with longest-dimension splits.

Nodes carry the tight bounding box of the points below them. Queries prune
subtrees by the weighted distance from the query to that box, which is a
valid lower bound for any exponent q >= 1 and any non-negative weights, so
range and k-nearest-neighbour results are exact.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

import numpy as np

from .geometry import (
    EUCLIDEAN,
    Dataset,
    DimensionError,
    DistanceSpec,
    EmptyInputError,
    Point,
    as_vector,
    box_lower_bound,
    weighted_distances,
)


class SplitRule(str, Enum):
    MEDIAN = "median"
    MEAN = "mean"


@dataclass(frozen=True, eq=False)
class BoundingBox:
    min: np.ndarray
    max: np.ndarray

    @classmethod
    def of(cls, X: np.ndarray) -> "BoundingBox":
        return cls(X.min(axis=0), X.max(axis=0))

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(self.min <= x) and np.all(x <= self.max))


class KdNode:
    __slots__ = ("box", "split_dim", "split_value", "left", "right", "point_indices")

    def __init__(self, box: BoundingBox, split_dim: Optional[int] = None,
                 split_value: Optional[float] = None, left: "KdNode" = None,
                 right: "KdNode" = None, point_indices: Optional[np.ndarray] = None):
        self.box = box
        self.split_dim = split_dim
        self.split_value = split_value
        self.left = left
        self.right = right
        self.point_indices = point_indices

    @property
    def is_leaf(self) -> bool:
        return self.point_indices is not None

    def __repr__(self):
        if self.is_leaf:
            return f"KdNode(leaf, n={len(self.point_indices)})"
        return f"KdNode(split_dim={self.split_dim}, split_value={self.split_value})"


def default_leaf_capacity(n: int) -> int:
    return max(16, math.ceil(n / 64))


def _split_value(values: np.ndarray, rule: SplitRule) -> float:
    if rule is SplitRule.MEAN:
        return float(np.mean(values))
    # lower median: the ceil(n/2)-th smallest value
    k = (len(values) + 1) // 2 - 1
    return float(np.partition(values, k)[k])


def _choose_split(X: np.ndarray, box: BoundingBox, rule: SplitRule):
    """Pick (dim, value) giving two non-empty sides, longest dimension first."""
    extent = box.extent
    # stable sort keeps the lowest dimension index on ties
    order = np.argsort(-extent, kind="stable")
    for d in order:
        if extent[d] <= 0:
            break
        v = _split_value(X[:, d], rule)
        if v < box.max[d]:
            return int(d), v
    d = int(order[0])
    col = X[:, d]
    # every rule value hit the max: move the max-valued points right
    return d, float(col[col < box.max[d]].max())


class KdTree:
    """Immutable kd-tree over a :class:`Dataset`.

    Parameters
    ----------
    data : Dataset
        Points to index; must be non-empty.
    leaf_capacity : int, optional
        Largest bucket size. Defaults to ``max(16, ceil(n / 64))``.
    split_rule : SplitRule or str
        ``"median"`` (lower median, ties go left) or ``"mean"``.
    """

    def __init__(self, data: Dataset, leaf_capacity: Optional[int] = None,
                 split_rule: Union[SplitRule, str] = SplitRule.MEDIAN):
        if data.n == 0:
            raise EmptyInputError("cannot build a kd-tree over an empty dataset")
        if leaf_capacity is None:
            leaf_capacity = default_leaf_capacity(data.n)
        if leaf_capacity < 1:
            raise ValueError("leaf_capacity must be >= 1")
        self.data = data
        self.leaf_capacity = int(leaf_capacity)
        self.split_rule = SplitRule(split_rule)
        self.root = self._build(np.arange(data.n))

    def _build(self, idx: np.ndarray) -> KdNode:
        X = self.data.coords[idx]
        box = BoundingBox.of(X)
        if len(idx) <= self.leaf_capacity or not np.any(box.extent > 0):
            return KdNode(box, point_indices=idx)
        d, v = _choose_split(X, box, self.split_rule)
        go_left = X[:, d] <= v
        return KdNode(box, split_dim=d, split_value=v,
                      left=self._build(idx[go_left]),
                      right=self._build(idx[~go_left]))

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def dim(self) -> int:
        return self.data.dim

    def _center(self, center) -> np.ndarray:
        c = as_vector(center)
        if c.size != self.dim:
            raise DimensionError(f"query has dim {c.size}, tree has dim {self.dim}")
        return c

    def leaves(self) -> list[KdNode]:
        out, stack = [], [self.root]
        while stack:
            node = stack.pop()
            if node.is_leaf:
                out.append(node)
            else:
                stack.append(node.right)
                stack.append(node.left)
        return out

    def leaf_cells(self) -> list[tuple[BoundingBox, np.ndarray]]:
        """Leaf buckets in left-to-right order as ``(box, indices)`` pairs."""
        return [(leaf.box, leaf.point_indices) for leaf in self.leaves()]

    def locate(self, x) -> int:
        """Position in :meth:`leaf_cells` of the bucket whose region holds ``x``."""
        c = self._center(x)
        node = self.root
        while not node.is_leaf:
            node = node.left if c[node.split_dim] <= node.split_value else node.right
        for i, leaf in enumerate(self.leaves()):
            if leaf is node:
                return i
        raise AssertionError("leaf not found")

    def range_query(self, center: Union[Point, np.ndarray], eps: float,
                    spec: DistanceSpec = EUCLIDEAN) -> np.ndarray:
        """Sorted indices of all points within ``eps`` (inclusive) of ``center``."""
        if not eps > 0:
            raise ValueError("eps must be positive")
        c = self._center(center)
        coords = self.data.coords
        found = []
        stack = [self.root]
        while stack:
            node = stack.pop()
            if box_lower_bound(node.box.min, node.box.max, c, spec) > eps:
                continue
            if node.is_leaf:
                idx = node.point_indices
                d = weighted_distances(coords[idx], c, spec)
                found.append(idx[d <= eps])
            else:
                stack.append(node.right)
                stack.append(node.left)
        if not found:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(found))

    def knn_query(self, center: Union[Point, np.ndarray], k: int,
                  spec: DistanceSpec = EUCLIDEAN) -> list[tuple[int, float]]:
        """The ``k`` nearest points as ``(index, distance)``, ascending.

        Ties in distance are broken by the lower index.
        """
        if not 1 <= k <= self.n:
            raise ValueError(f"k must be in [1, {self.n}], got {k}")
        c = self._center(center)
        coords = self.data.coords
        best: list[tuple[float, int]] = []  # max-heap of (-dist, -index)
        frontier = [(0.0, 0, self.root)]
        tiebreak = 1
        while frontier:
            lb, _, node = heapq.heappop(frontier)
            if len(best) == k and lb > -best[0][0]:
                break
            if node.is_leaf:
                idx = node.point_indices
                d = weighted_distances(coords[idx], c, spec)
                for i, di in zip(idx.tolist(), d.tolist()):
                    item = (-di, -i)
                    if len(best) < k:
                        heapq.heappush(best, item)
                    elif item > best[0]:
                        heapq.heapreplace(best, item)
                continue
            for child in (node.left, node.right):
                clb = box_lower_bound(child.box.min, child.box.max, c, spec)
                if len(best) < k or clb <= -best[0][0]:
                    heapq.heappush(frontier, (clb, tiebreak, child))
                    tiebreak += 1
        return sorted(((-ni, -nd) for nd, ni in best), key=lambda t: (t[1], t[0]))


def build(data: Dataset, leaf_capacity: Optional[int] = None,
          split_rule: Union[SplitRule, str] = SplitRule.MEDIAN) -> KdTree:
    return KdTree(data, leaf_capacity, split_rule)


def range_query(tree: KdTree, center, eps: float, spec: DistanceSpec = EUCLIDEAN) -> np.ndarray:
    return tree.range_query(center, eps, spec)


def knn_query(tree: KdTree, center, k: int, spec: DistanceSpec = EUCLIDEAN):
    return tree.knn_query(center, k, spec)


def leaf_cells(tree: KdTree):
    return tree.leaf_cells()
