from collections import Counter

import numpy as np
import pytest

from faceuniq.scoring import dataset_uniqueness
from faceuniq.synth import SpecError, SynthSpec, generate, inject_twins, subject_means


def test_deterministic():
    spec = SynthSpec(2, 2, 1, 1.0, 0.1, 0.0, 0.0, 7)
    a, b = generate(spec), generate(spec)
    assert a == b
    assert a.vectors.tobytes() == b.vectors.tobytes()
    assert generate(SynthSpec(2, 2, 1, 1.0, 0.1, 0.0, 0.0, 8)) != a


def test_counts_and_meta():
    ds = generate(SynthSpec(7, 3, 4, seed=1))
    assert ds.n_subjects == 7 and len(ds) == 21 and ds.dimension == 4
    assert [ds.meta_for(i).gender for i in range(4)] == ["F", "M", "F", "M"]
    assert ds.meta_for(5).age == 25


def test_twin_means():
    spec = SynthSpec(40, 2, 5, twin_fraction=0.5, seed=3)
    means = subject_means(spec)
    base = {tuple(m) for m in means[:20]}
    assert sum(tuple(m) in base for m in means[20:]) == 20
    assert len(base) == 20


def test_bases_independent_of_twin_count():
    a = subject_means(SynthSpec(10, 2, 3, seed=5))
    b = subject_means(SynthSpec(10, 2, 3, twin_fraction=0.5, seed=5))
    np.testing.assert_array_equal(a[:5], b[:5])


@pytest.mark.parametrize("field,kw", [
    ("subjects", dict(subjects=1)),
    ("samples_per_subject", dict(samples_per_subject=1)),
    ("dimension", dict(dimension=0)),
    ("between_spread", dict(between_spread=0.0)),
    ("within_spread", dict(within_spread=-1.0)),
    ("twin_fraction", dict(twin_fraction=1.0)),
    ("twin_noise", dict(twin_noise=-0.1)),
])
def test_invalid_spec_names_field(field, kw):
    args = dict(subjects=4, samples_per_subject=2, dimension=2) | kw
    with pytest.raises(SpecError) as exc:
        SynthSpec(**args)
    assert exc.value.field == field


def test_separation_monotone_in_majority():
    wins = 0
    for seed in range(5):
        lo = dataset_uniqueness(generate(SynthSpec(10, 10, 16, 0.5, 1.0, seed=seed)), seed).u
        hi = dataset_uniqueness(generate(SynthSpec(10, 10, 16, 4.0, 1.0, seed=seed)), seed).u
        wins += hi > lo
    assert wins >= 3


class TestInjectTwins:
    def test_zero_count_returns_input(self):
        ds = generate(SynthSpec(5, 3, 2, seed=0))
        assert inject_twins(ds, 0.1) is ds

    def test_exact_copies(self):
        ds = generate(SynthSpec(10, 4, 3, seed=0))
        out = inject_twins(ds, 0.5, 0.0, 1)
        assert out.n_subjects == 10
        assert out.subjects == (0, 1, 2, 3, 4, 10, 11, 12, 13, 14)
        for j, sid in enumerate(range(10, 15)):
            donor = j % 5
            assert Counter(map(tuple, out.samples(sid))) == Counter(map(tuple, ds.samples(donor)))

    def test_noisy_copies_deterministic(self):
        ds = generate(SynthSpec(6, 4, 3, seed=0))
        a, b = inject_twins(ds, 0.5, 0.2, 9), inject_twins(ds, 0.5, 0.2, 9)
        assert a == b
        diff = a.samples(6) - ds.samples(0)
        assert 0 < np.abs(diff).max() < 2

    def test_round_robin_over_few_survivors(self):
        ds = generate(SynthSpec(6, 2, 2, seed=0))
        out = inject_twins(ds, 0.6, 0.0, 0)
        donors = [next(d for d in (0, 1, 2) if np.array_equal(out.samples(s), ds.samples(d))) for s in (6, 7, 8)]
        assert donors == [0, 1, 2]

    def test_errors(self):
        ds = generate(SynthSpec(4, 2, 2, seed=0))
        with pytest.raises(ValueError, match="survivors"):
            inject_twins(ds, 0.75)
        with pytest.raises(ValueError):
            inject_twins(ds, 1.0)
