"""Seeded synthetic populations of Gaussian subject clusters, with twin injection."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from faceuniq.dataset import Dataset, SubjectMeta
from faceuniq.streams import SYNTH, derive_seed, stream

# stream indices under the synthetic seed
_MEANS, _TWINS, _GROUPS, _SAMPLES = 0, 1, 2, 3
_INJECT = 4


class SpecError(ValueError):
    def __init__(self, field: str, value) -> None:
        super().__init__(f"invalid {field}: {value!r}")
        self.field = field


@dataclass(frozen=True)
class SynthSpec:
    """Population description.

    ``group_spread`` is an extension: when positive, subjects of each
    synthetic gender share an extra offset drawn with that spread, making
    the F and M groups tighter sub-clusters of the whole population.
    """

    subjects: int
    samples_per_subject: int
    dimension: int
    between_spread: float = 1.0
    within_spread: float = 1.0
    twin_fraction: float = 0.0
    twin_noise: float = 0.0
    seed: int = 0
    group_spread: float = 0.0

    def __post_init__(self) -> None:
        checks = [
            ("subjects", self.subjects >= 2),
            ("samples_per_subject", self.samples_per_subject >= 2),
            ("dimension", self.dimension >= 1),
            ("between_spread", self.between_spread > 0),
            ("within_spread", self.within_spread > 0),
            ("twin_fraction", 0 <= self.twin_fraction < 1),
            ("twin_noise", self.twin_noise >= 0),
            ("seed", self.seed >= 0),
            ("group_spread", self.group_spread >= 0),
        ]
        for name, ok in checks:
            if not ok:
                raise SpecError(name, getattr(self, name))

    @property
    def n_twins(self) -> int:
        return int(self.twin_fraction * self.subjects)

    @property
    def n_bases(self) -> int:
        return self.subjects - self.n_twins

    def as_dict(self) -> dict:
        return asdict(self)


def synthetic_meta(ordinal: int, subject_id: int) -> SubjectMeta:
    return SubjectMeta(subject_id, "FM"[ordinal % 2], 20 + ordinal % 60)


def subject_means(spec: SynthSpec) -> np.ndarray:
    """``(c, D)`` cluster centres; rows past ``n_bases`` are twins of the bases."""
    key = derive_seed(spec.seed, SYNTH)
    c, D = spec.subjects, spec.dimension
    means = np.empty((c, D))
    # one stream per ordinal so base draws do not depend on the twin count
    for i in range(spec.n_bases):
        means[i] = stream(derive_seed(key, _MEANS), i).normal(0.0, spec.between_spread, D)
    for j in range(spec.n_twins):
        donor = j % spec.n_bases
        noise = stream(derive_seed(key, _TWINS), j).normal(0.0, 1.0, D) * spec.twin_noise
        means[spec.n_bases + j] = means[donor] + noise
    if spec.group_spread > 0:
        offsets = stream(derive_seed(key, _GROUPS), 0).normal(0.0, spec.group_spread, (2, D))
        means += offsets[np.arange(c) % 2]
    return means


def generate(spec: SynthSpec) -> Dataset:
    """Draw ``samples_per_subject`` Gaussian samples around each subject mean.

    Subject ids are ``0 .. c-1`` and sample ids ``0 .. m-1``. Metadata
    alternates gender F/M by ordinal and sets age ``20 + ordinal % 60``.
    """
    key = derive_seed(spec.seed, SYNTH)
    means = subject_means(spec)
    c, m, D = spec.subjects, spec.samples_per_subject, spec.dimension
    sample_key = derive_seed(key, _SAMPLES)
    vectors = np.empty((c * m, D))
    for i in range(c):
        noise = stream(sample_key, i).normal(0.0, spec.within_spread, (m, D))
        vectors[i * m:(i + 1) * m] = means[i] + noise
    subj = np.repeat(np.arange(c), m)
    samp = np.tile(np.arange(m), c)
    meta = {i: synthetic_meta(i, i) for i in range(c)}
    return Dataset(subj, samp, vectors, meta)


def inject_twins(ds: Dataset, fraction: float, twin_noise: float = 0.0, seed: int = 0) -> Dataset:
    """Replace the ``floor(fraction * c)`` highest-id subjects by twins of survivors.

    Twin ``j`` copies the samples of survivor ``j mod survivors`` (round-robin
    in ascending id order), perturbed per coordinate with spread
    ``twin_noise``, under a fresh id above every existing id. Returns ``ds``
    itself when nothing is replaced.
    """
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    if twin_noise < 0:
        raise ValueError("twin_noise must be >= 0")
    c = ds.n_subjects
    k = int(fraction * c)
    if k == 0:
        return ds
    survivors = list(ds.subjects[: c - k])
    if len(survivors) < 2:
        raise ValueError(f"fraction {fraction} leaves fewer than 2 survivors")
    key = derive_seed(seed, SYNTH, _INJECT)
    next_id = max(ds.subjects) + 1
    subj = [ds.subject_ids[: ds.block(survivors[-1]).stop]]
    samp = [ds.sample_ids[: ds.block(survivors[-1]).stop]]
    vecs = [ds.vectors[: ds.block(survivors[-1]).stop]]
    meta = {s: ds.meta[s] for s in survivors if s in ds.meta}
    for j in range(k):
        donor = survivors[j % len(survivors)]
        block = ds.block(donor)
        v = ds.vectors[block]
        if twin_noise > 0:
            v = v + stream(key, j).normal(0.0, twin_noise, v.shape)
        sid = next_id + j
        subj.append(np.full(len(v), sid))
        samp.append(ds.sample_ids[block])
        vecs.append(v)
        if donor in ds.meta:
            meta[sid] = SubjectMeta(sid, ds.meta[donor].gender, ds.meta[donor].age)
    return Dataset(np.concatenate(subj), np.concatenate(samp), np.concatenate(vecs), meta)
