import itertools

import numpy as np
import pytest

from autodbscan.datagen import (
    PCG_INCREMENT,
    PRESETS,
    BlobSpec,
    GenSpec,
    PortableRng,
    generate,
    preset,
)
from autodbscan.geometry import NOISE, EmptyInputError, distance

from conftest import box_muller, pcg64_raw


class TestPortableRng:
    @pytest.mark.parametrize("seed", [0, 7, 20111, 2**130 + 5])
    def test_uniform_matches_pure_python_pcg64(self, seed):
        raw = pcg64_raw(seed, PCG_INCREMENT, 32)
        expect = [(r >> 11) * 2.0 ** -53 for r in raw]
        assert PortableRng(seed).uniform(32).tolist() == expect

    def test_normal_is_box_muller_cosine(self):
        u = [(r >> 11) * 2.0 ** -53 for r in pcg64_raw(99, PCG_INCREMENT, 20)]
        expect = [box_muller(u[2 * k], u[2 * k + 1]) for k in range(10)]
        got = PortableRng(99).normal(10)
        assert np.allclose(got, expect, rtol=0, atol=1e-14)

    def test_frozen_first_values(self):
        # seed 7, independently computed with the pure-Python PCG64 above
        assert PortableRng(7).uniform(4).tolist() == [
            0.48212349953881295, 0.16402840445645173, 0.6069833072495885, 0.3827356395234439]

    def test_uniform_range(self):
        u = PortableRng(1).uniform(10000)
        assert u.min() >= 0.0 and u.max() < 1.0


class TestGenerate:
    def test_counts_and_truth(self):
        spec = GenSpec(3, (BlobSpec((0, 0, 0), 1, 7, 0), BlobSpec((9, 9, 9), 2, 5, 4)), 3,
                       ((0, 0, 0), (1, 1, 1)), 11)
        d = generate(spec)
        assert d.n == spec.size == 15 and d.dim == 3
        assert d.truth.tolist() == [0] * 7 + [4] * 5 + [NOISE] * 3
        assert np.all((d.coords[12:] >= 0) & (d.coords[12:] <= 1))

    def test_determinism(self):
        for name in PRESETS:
            a, b = generate(preset(name)), generate(preset(name))
            assert a.coords.tobytes() == b.coords.tobytes()
            assert a.truth.tobytes() == b.truth.tobytes()

    def test_seed_changes_output(self):
        assert not np.array_equal(generate(preset("paper_ds1")).coords,
                                  generate(preset("paper_ds1", rng_seed=1)).coords)

    def test_empty_spec(self):
        with pytest.raises(EmptyInputError):
            generate(GenSpec(2))

    @pytest.mark.parametrize("kwargs", [
        dict(dim=2, blobs=(BlobSpec((0, 0, 0), 1, 3, 0),)),
        dict(dim=2, blobs=(BlobSpec((0, 0), 1, 3, NOISE),)),
        dict(dim=2, noise_count=3),
        dict(dim=2, noise_count=-1),
        dict(dim=2, noise_count=1, noise_box=((1, 1), (0, 0))),
    ])
    def test_invalid_specs(self, kwargs):
        with pytest.raises(ValueError):
            GenSpec(**kwargs)

    @pytest.mark.parametrize("kwargs", [dict(spread=0), dict(count=0)])
    def test_invalid_blob(self, kwargs):
        base = dict(center=(0,), spread=1.0, count=1, label=0)
        with pytest.raises(ValueError):
            BlobSpec(**{**base, **kwargs})


class TestPresets:
    def test_paper_ds1(self):
        d = generate(preset("paper_ds1"))
        assert d.n == 250 and d.dim == 2
        assert sorted(np.bincount(d.truth).tolist()) == [83, 83, 84]

    def test_paper_ds2(self):
        d = generate(preset("paper_ds2"))
        assert d.n == 500 and d.dim == 5 and np.bincount(d.truth).tolist() == [125] * 4

    def test_pure_noise(self):
        spec = preset("pure_noise")
        assert spec.blobs == () and np.all(generate(spec).truth == NOISE)

    def test_two_density_spread_ratio(self):
        spreads = sorted(b.spread for b in preset("two_density").blobs)
        assert len(spreads) == 2 and spreads[1] >= 10 * spreads[0]

    @pytest.mark.parametrize("name", ["paper_ds1", "paper_ds2", "two_density"])
    def test_separation_sanity(self, name):
        blobs = preset(name).blobs
        for a, b in itertools.combinations(blobs, 2):
            assert distance(a.center, b.center) > 6 * max(a.spread, b.spread)

    def test_unknown_preset_lists_names(self):
        with pytest.raises(KeyError, match="paper_ds1"):
            preset("nope")
