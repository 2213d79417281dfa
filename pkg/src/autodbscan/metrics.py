"""External quality measures against ground-truth labels.

Noise convention for ARI: every point labelled ``NOISE`` on either side is
treated as its own singleton class, so noise agreement earns no credit from
pairs and unlabelled points never collapse into one giant class.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, fields
from math import comb
from typing import Union

import numpy as np

from .dbscan import Labeling
from .geometry import NOISE

ARI_NOISE_CONVENTION = "noise points are singleton classes on both sides"

LabelsLike = Union[Labeling, np.ndarray, list]


def _labels(x: LabelsLike) -> np.ndarray:
    if isinstance(x, Labeling):
        return np.asarray(x.label, dtype=np.int64)
    return np.asarray(x, dtype=np.int64).reshape(-1)


def _singletonise(lab: np.ndarray) -> np.ndarray:
    """Relabel each noise point to a fresh id above every cluster id."""
    out = lab.copy()
    noise = out == NOISE
    top = int(out[~noise].max()) + 1 if (~noise).any() else 0
    out[noise] = top + np.arange(int(noise.sum()))
    return out


def _contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _, ia = np.unique(a, return_inverse=True)
    _, ib = np.unique(b, return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def adjusted_rand_index(pred: LabelsLike, truth: LabelsLike) -> float:
    """Adjusted Rand index with noise as singleton classes.

    Two partitions that are both all-singletons (or both one block) are
    identical, and score 1.0 rather than the undefined 0/0.
    """
    p, t = _labels(pred), _labels(truth)
    if p.shape != t.shape:
        raise ValueError(f"label length mismatch: {p.size} vs {t.size}")
    n = p.size
    if n < 2:
        return 1.0
    table = _contingency(_singletonise(p), _singletonise(t))
    sum_ij = sum(comb(int(v), 2) for v in table.ravel() if v > 1)
    sum_a = sum(comb(int(v), 2) for v in table.sum(axis=1))
    sum_b = sum(comb(int(v), 2) for v in table.sum(axis=0))
    total = comb(n, 2)
    expected = sum_a * sum_b / total
    top = (sum_a + sum_b) / 2
    if top == expected:
        return 1.0
    return float((sum_ij - expected) / (top - expected))


def purity(pred: LabelsLike, truth: LabelsLike) -> float:
    """Share of non-noise points that carry their cluster's majority truth label.

    Returns 0.0 and emits a ``RuntimeWarning`` when every point is noise.
    """
    p, t = _labels(pred), _labels(truth)
    if p.shape != t.shape:
        raise ValueError(f"label length mismatch: {p.size} vs {t.size}")
    keep = p != NOISE
    if not keep.any():
        warnings.warn("purity undefined: every point is noise; reporting 0", RuntimeWarning,
                      stacklevel=2)
        return 0.0
    table = _contingency(p[keep], t[keep])
    return float(table.max(axis=1).sum() / keep.sum())


@dataclass(frozen=True)
class QualityReport:
    ari: float
    purity: float
    noise_ratio: float
    cluster_count: int
    pair_count: int
    runtime_ms: float
    ari_noise_convention: str = ARI_NOISE_CONVENTION

    def __post_init__(self):
        if not -1.0 <= self.ari <= 1.0 + 1e-12:
            raise ValueError("ari outside [-1, 1]")
        if not 0.0 <= self.purity <= 1.0 or not 0.0 <= self.noise_ratio <= 1.0:
            raise ValueError("purity and noise_ratio must lie in [0, 1]")
        if self.runtime_ms < 0:
            raise ValueError("runtime_ms must be non-negative")

    @classmethod
    def build(cls, labeling: Labeling, truth: LabelsLike, pair_count: int,
              runtime_ms: float) -> "QualityReport":
        n = len(labeling)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            pur = purity(labeling, truth)
        return cls(
            ari=adjusted_rand_index(labeling, truth),
            purity=pur,
            noise_ratio=labeling.noise_count / n if n else 0.0,
            cluster_count=labeling.cluster_count,
            pair_count=pair_count,
            runtime_ms=float(runtime_ms),
        )

    @staticmethod
    def _fmt(v) -> str:
        return repr(v) if isinstance(v, float) else str(v)

    def as_text(self) -> str:
        """``key=value`` lines, one field per line."""
        return "".join(f"{k}={self._fmt(v)}\n" for k, v in asdict(self).items())

    @classmethod
    def csv_header(cls) -> str:
        return ",".join(f.name for f in fields(cls))

    def as_csv_row(self) -> str:
        return ",".join(self._fmt(v) for v in asdict(self).values())
