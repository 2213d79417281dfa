"""Core data types and the weighted Minkowski distance.

All distance evaluations in the package go through :func:`weighted_distances`
so that the kd-tree, the brute-force oracle and the public :func:`distance`
agree bit-for-bit on every pair.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, lgamma, exp, log
from typing import Optional, Sequence, Union

import numpy as np

NOISE = -1


class DimensionError(ValueError):
    """Raised when vectors of different dimensionality are combined."""


class EmptyInputError(ValueError):
    """Raised when an operation needs at least one point and gets none."""


@dataclass(frozen=True)
class Point:
    index: int
    coords: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.coords)


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered point set with optional ground-truth class labels.

    Coordinates are held as one read-only ``(n, dim)`` float array; ``Point``
    views are produced on demand. Truth labels use ``NOISE`` (-1) for points
    that belong to no class.
    """

    coords: np.ndarray
    truth: Optional[np.ndarray] = None

    def __post_init__(self):
        coords = np.array(self.coords, dtype=float, copy=True)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1) if coords.size else coords.reshape(0, 1)
        if coords.ndim != 2 or coords.shape[1] < 1:
            raise DimensionError(f"coords must be an (n, m>=1) array, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise ValueError("coordinates must be finite")
        coords.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        if self.truth is not None:
            truth = np.array(self.truth, dtype=np.int64, copy=True)
            if truth.shape != (coords.shape[0],):
                raise ValueError(
                    f"truth has {truth.size} labels for {coords.shape[0]} points")
            truth.setflags(write=False)
            object.__setattr__(self, "truth", truth)

    def __len__(self) -> int:
        return self.coords.shape[0]

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def point(self, i: int) -> Point:
        return Point(int(i), self.coords[i])

    @property
    def points(self) -> list[Point]:
        return [Point(i, row) for i, row in enumerate(self.coords)]


@dataclass(frozen=True, eq=False)
class DistanceSpec:
    """Exponent ``q`` and per-axis weights of the weighted Minkowski distance.

    ``weights=None`` means all ones, resolved against the data dimension with
    :meth:`resolve`.
    """

    q: float = 2.0
    weights: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        q = float(self.q)
        if not np.isfinite(q) or q < 1:
            raise ValueError(f"exponent q must be >= 1, got {self.q}")
        object.__setattr__(self, "q", q)
        if self.weights is not None:
            w = np.array(self.weights, dtype=float, copy=True).reshape(-1)
            if w.size == 0 or not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ValueError("weights must be finite and non-negative")
            if not np.any(w > 0):
                raise ValueError("at least one weight must be positive")
            w.setflags(write=False)
            object.__setattr__(self, "weights", w)

    def weights_for(self, dim: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(dim)
        if self.weights.size != dim:
            raise DimensionError(
                f"{self.weights.size} weights given for {dim}-dimensional data")
        return self.weights

    def resolve(self, dim: int) -> "DistanceSpec":
        return DistanceSpec(self.q, self.weights_for(dim))


EUCLIDEAN = DistanceSpec()

VectorLike = Union[Point, Sequence[float], np.ndarray]


def as_vector(x: VectorLike) -> np.ndarray:
    if isinstance(x, Point):
        return np.asarray(x.coords, dtype=float)
    return np.asarray(x, dtype=float).reshape(-1)


def _root(s, q: float):
    if q == 1.0:
        return s
    if q == 2.0:
        return np.sqrt(s)
    return np.power(s, 1.0 / q)


def weighted_power_sum(absdiff: np.ndarray, weights: np.ndarray, q: float) -> np.ndarray:
    """Sum of ``w_j * |d_j|**q`` over the last axis."""
    if q == 1.0:
        powered = absdiff
    elif q == 2.0:
        powered = absdiff * absdiff
    else:
        powered = np.power(absdiff, q)
    return np.sum(powered * weights, axis=-1)


def weighted_distances(X: np.ndarray, center: np.ndarray, spec: DistanceSpec) -> np.ndarray:
    """Distances from every row of ``X`` to ``center``."""
    w = spec.weights_for(X.shape[-1])
    return _root(weighted_power_sum(np.abs(X - center), w, spec.q), spec.q)


def box_lower_bound(lo: np.ndarray, hi: np.ndarray, center: np.ndarray,
                    spec: DistanceSpec) -> float:
    """Smallest possible distance from ``center`` to any point in ``[lo, hi]``.

    Never exceeds the computed distance to a point inside the box, because
    every step (subtraction, power, weighted sum, root) is monotone under
    IEEE rounding and the summation order matches :func:`weighted_distances`.
    """
    gap = np.maximum(np.maximum(lo - center, center - hi), 0.0)
    w = spec.weights_for(center.shape[-1])
    return float(_root(weighted_power_sum(gap, w, spec.q), spec.q))


def box_gap(lo_a: np.ndarray, hi_a: np.ndarray, lo_b: np.ndarray, hi_b: np.ndarray,
            spec: DistanceSpec) -> float:
    """Smallest possible distance between a point of box ``a`` and a point of box ``b``."""
    gap = np.maximum(np.maximum(lo_b - hi_a, lo_a - hi_b), 0.0)
    w = spec.weights_for(gap.shape[-1])
    return float(_root(weighted_power_sum(gap, w, spec.q), spec.q))


def distance(a: VectorLike, b: VectorLike, spec: DistanceSpec = EUCLIDEAN) -> float:
    """Weighted Minkowski distance ``(sum_j w_j |a_j - b_j|**q) ** (1/q)``.

    >>> distance((0, 0), (3, 4))
    5.0
    """
    va, vb = as_vector(a), as_vector(b)
    if va.shape != vb.shape:
        raise DimensionError(f"dimension mismatch: {va.size} vs {vb.size}")
    if not (np.all(np.isfinite(va)) and np.all(np.isfinite(vb))):
        raise ValueError("distance inputs must be finite")
    return float(weighted_distances(va[None, :], vb, spec)[0])


def pairwise_distances(X: np.ndarray, spec: DistanceSpec) -> np.ndarray:
    """Full ``(n, n)`` distance matrix, row ``i`` computed as distances to ``X[i]``."""
    X = np.asarray(X, dtype=float)
    out = np.empty((X.shape[0], X.shape[0]))
    for i in range(X.shape[0]):
        out[i] = weighted_distances(X, X[i], spec)
    return out


def unit_ball_volume(spec: DistanceSpec, dim: int) -> float:
    """Volume of ``{x : sum_j w_j |x_j|**q <= 1}`` restricted to positive-weight axes.

    Zero-weight axes are ignored; callers must measure the matching
    sub-space volume on their side.
    """
    w = spec.weights_for(dim)
    pos = w[w > 0]
    m = pos.size
    q = spec.q
    log_vol = m * log(2.0 * gamma(1.0 + 1.0 / q)) - lgamma(1.0 + m / q)
    log_vol -= float(np.sum(np.log(pos))) / q
    return exp(log_vol)
