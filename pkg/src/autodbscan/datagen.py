"""Deterministic synthetic datasets with ground truth.

Random numbers come from PCG64 (the 128-bit LCG with XSL-RR output) whose
state is set directly from the seed, not through NumPy's SeedSequence, so the
stream is reproducible by any PCG64 implementation:

* state = ``seed mod 2**128``, increment = ``PCG_INCREMENT``;
* uniform doubles are ``(raw >> 11) * 2**-53``;
* Gaussians use the Box-Muller cosine branch, one uniform pair per variate,
  with ``u1`` replaced by ``1 - u1`` so the logarithm never sees zero.

Blob points are generated blob by blob, row-major (point then axis), and the
uniform noise points follow after all blobs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import NOISE, Dataset, EmptyInputError

PCG_INCREMENT = 0xDA3E39CB94B95BDB_6A09E667F3BCC909 | 1
PRESET_VERSION = 1


class PortableRng:
    """Uniform and Gaussian doubles from a directly seeded PCG64 stream."""

    def __init__(self, seed: int):
        self._bitgen = np.random.PCG64()
        self._bitgen.state = {
            "bit_generator": "PCG64",
            "state": {"state": int(seed) % (1 << 128), "inc": PCG_INCREMENT},
            "has_uint32": 0,
            "uinteger": 0,
        }

    def uniform(self, size: int) -> np.ndarray:
        raw = self._bitgen.random_raw(size)
        return (raw >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def normal(self, size: int) -> np.ndarray:
        u = self.uniform(2 * size).reshape(size, 2)
        r = np.sqrt(-2.0 * np.log(1.0 - u[:, 0]))
        return r * np.cos(2.0 * np.pi * u[:, 1])


@dataclass(frozen=True)
class BlobSpec:
    center: tuple
    spread: float
    count: int
    label: int

    def __post_init__(self):
        if not self.spread > 0:
            raise ValueError("blob spread must be positive")
        if self.count < 1:
            raise ValueError("blob count must be >= 1")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))


@dataclass(frozen=True)
class GenSpec:
    dim: int
    blobs: tuple = ()
    noise_count: int = 0
    noise_box: Optional[tuple] = None  # (min vector, max vector)
    rng_seed: int = 0
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "blobs", tuple(self.blobs))
        for b in self.blobs:
            if len(b.center) != self.dim:
                raise ValueError(f"blob center {b.center} is not {self.dim}-dimensional")
            if b.label == NOISE:
                raise ValueError("blob labels must differ from the noise label")
        if self.noise_count < 0:
            raise ValueError("noise_count must be non-negative")
        if self.noise_count and self.noise_box is None:
            raise ValueError("noise points need a noise_box")
        if self.noise_box is not None:
            lo, hi = (tuple(float(v) for v in side) for side in self.noise_box)
            if len(lo) != self.dim or len(hi) != self.dim or any(a > b for a, b in zip(lo, hi)):
                raise ValueError("noise_box must be (min, max) with min <= max per axis")
            object.__setattr__(self, "noise_box", (lo, hi))

    @property
    def size(self) -> int:
        return sum(b.count for b in self.blobs) + self.noise_count


def generate(spec: GenSpec) -> Dataset:
    if spec.size == 0:
        raise EmptyInputError("generator spec produces no points")
    rng = PortableRng(spec.rng_seed)
    parts, labels = [], []
    for b in spec.blobs:
        z = rng.normal(b.count * spec.dim).reshape(b.count, spec.dim)
        parts.append(np.asarray(b.center) + b.spread * z)
        labels.append(np.full(b.count, b.label, dtype=np.int64))
    if spec.noise_count:
        lo, hi = (np.asarray(v) for v in spec.noise_box)
        u = rng.uniform(spec.noise_count * spec.dim).reshape(spec.noise_count, spec.dim)
        parts.append(lo + u * (hi - lo))
        labels.append(np.full(spec.noise_count, NOISE, dtype=np.int64))
    return Dataset(np.vstack(parts), np.concatenate(labels))


def _blobs(centers: Sequence[Sequence[float]], spreads: Sequence[float],
           counts: Sequence[int]) -> tuple:
    return tuple(BlobSpec(tuple(c), s, n, k)
                 for k, (c, s, n) in enumerate(zip(centers, spreads, counts)))


def _paper_ds1() -> GenSpec:
    return GenSpec(
        dim=2,
        blobs=_blobs([(0.0, 0.0), (12.0, 0.0), (6.0, 10.0)], [1.0, 1.0, 1.0], [84, 83, 83]),
        rng_seed=20111,
        name="paper_ds1",
    )


def _paper_ds2() -> GenSpec:
    centers = [
        (0.0, 0.0, 0.0, 0.0, 0.0),
        (10.0, 0.0, 0.0, 0.0, 0.0),
        (0.0, 10.0, 0.0, 10.0, 0.0),
        (0.0, 0.0, 10.0, 0.0, 10.0),
    ]
    return GenSpec(dim=5, blobs=_blobs(centers, [1.0] * 4, [125] * 4),
                   rng_seed=20112, name="paper_ds2")


def _two_density() -> GenSpec:
    return GenSpec(
        dim=2,
        blobs=_blobs([(0.0, 0.0), (200.0, 0.0)], [1.0, 20.0], [100, 100]),
        noise_count=30,
        noise_box=((-100.0, -100.0), (300.0, 100.0)),
        rng_seed=20113,
        name="two_density",
    )


def _pure_noise() -> GenSpec:
    return GenSpec(dim=2, noise_count=200,
                   noise_box=((0.0, 0.0), (1000.0, 1000.0)),
                   rng_seed=20114, name="pure_noise")


PRESETS = {
    "paper_ds1": _paper_ds1,
    "paper_ds2": _paper_ds2,
    "two_density": _two_density,
    "pure_noise": _pure_noise,
}


def preset(name: str, rng_seed: Optional[int] = None) -> GenSpec:
    """Named generator spec; ``rng_seed`` overrides the preset's fixed seed."""
    try:
        spec = PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; valid presets: {', '.join(PRESETS)}") from None
    if rng_seed is not None:
        spec = GenSpec(spec.dim, spec.blobs, spec.noise_count, spec.noise_box,
                       rng_seed, spec.name)
    return spec
