"""Dataset-level uniqueness: per-subject divergences, their mean, and sigmoid scores."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from faceuniq.dataset import Dataset
from faceuniq.estimator import DEFAULT_EPSILON, EstimatorParams, resolve_params, subsampled
from faceuniq.streams import pair_seed, subject_seed
from faceuniq.synth import inject_twins


class EligibilityError(ValueError):
    """Dataset does not satisfy the preconditions for scoring."""


def sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@dataclass(frozen=True)
class SubjectDivergence:
    subject_id: int
    divergence: float
    genuine_size: int
    impostor_size: int
    params_used: EstimatorParams
    floored_terms: int = 0
    min_divergence: float | None = None
    min_impostor_id: int | None = None


@dataclass
class UniquenessReport:
    per_subject: list[SubjectDivergence]
    d_bar: float
    u: float
    seed: int
    n_subjects: int
    n_samples: int
    dimension: int
    skipped_subjects: list[int] = field(default_factory=list)
    d_bar_min: float | None = None
    u_min: float | None = None
    min_pair: dict[int, int] | None = None
    overrides: dict = field(default_factory=dict)


def _eligible(ds: Dataset) -> list[int]:
    eligible = ds.eligible_subjects()
    if ds.n_subjects < 2 or len(eligible) < 2:
        raise EligibilityError("insufficient eligible subjects")
    return eligible


def _map(fn, items, workers: int | None):
    if workers is None or workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def subject_divergence(
    ds: Dataset,
    subject_id: int,
    seed: int = 0,
    *,
    r: int | None = None,
    n: int | None = None,
    epsilon: float = DEFAULT_EPSILON,
) -> SubjectDivergence:
    """Divergence of one subject's samples against the rest of the dataset.

    The subject's RNG stream is derived from ``seed`` and its ordinal in
    ascending-id order. Overrides for ``r``/``n`` are clamped per subject.
    """
    block = ds.block(subject_id)
    g_size = block.stop - block.start
    if g_size < 2:
        raise EligibilityError(f"subject {subject_id} has fewer than 2 samples")
    if ds.n_subjects < 2:
        raise EligibilityError("insufficient eligible subjects")
    i_size = len(ds) - g_size
    params = resolve_params(g_size, i_size, subject_seed(seed, ds.ordinal(subject_id)), r, n, epsilon)
    vectors = ds.vectors
    start = block.start

    def fetch(idx: np.ndarray) -> np.ndarray:
        # pool = all rows outside the subject's contiguous block
        return vectors[np.where(idx >= start, idx + g_size, idx)]

    d = subsampled(vectors[block], i_size, fetch, params)
    return SubjectDivergence(subject_id, d.value, g_size, i_size, params, d.floored_terms)


def pair_divergence(ds: Dataset, p: int, q: int, seed: int = 0, epsilon: float = DEFAULT_EPSILON) -> SubjectDivergence:
    """Divergence of subject ``p`` against subject ``q`` alone as the impostor."""
    G, I = ds.samples(p), ds.samples(q)
    params = resolve_params(len(G), len(I), pair_seed(seed, ds.ordinal(p), ds.ordinal(q)), epsilon=epsilon)
    d = subsampled(G, len(I), I.__getitem__, params)
    return SubjectDivergence(p, d.value, len(G), len(I), params, d.floored_terms)


def dataset_uniqueness(
    ds: Dataset,
    seed: int = 0,
    *,
    r: int | None = None,
    n: int | None = None,
    epsilon: float = DEFAULT_EPSILON,
    workers: int | None = None,
) -> UniquenessReport:
    """Mean subject divergence ``d_bar`` and its sigmoid ``u``.

    Subjects with a single sample are skipped in the genuine role but stay in
    every other subject's impostor pool.
    """
    eligible = _eligible(ds)
    per = _map(
        lambda p: subject_divergence(ds, p, seed, r=r, n=n, epsilon=epsilon), eligible, workers
    )
    d_bar = math.fsum(s.divergence for s in per) / len(per)
    overrides = {k: v for k, v in (("r", r), ("n", n)) if v is not None}
    return UniquenessReport(
        per_subject=per,
        d_bar=d_bar,
        u=sigmoid(d_bar),
        seed=seed,
        n_subjects=ds.n_subjects,
        n_samples=len(ds),
        dimension=ds.dimension,
        skipped_subjects=[s for s in ds.subjects if ds.sample_count(s) < 2],
        overrides=overrides,
    )


def min_divergences(
    ds: Dataset, seed: int = 0, *, epsilon: float = DEFAULT_EPSILON, workers: int | None = None
) -> dict[int, SubjectDivergence]:
    """For each eligible p, the smallest pairwise divergence over all q != p.

    Ties go to the smaller q. Single-sample subjects are valid impostors.
    """
    eligible = _eligible(ds)

    def best(p: int) -> SubjectDivergence:
        found = None
        for q in ds.subjects:
            if q == p:
                continue
            d = pair_divergence(ds, p, q, seed, epsilon)
            if found is None or d.divergence < found[0].divergence:
                found = (d, q)
        d, q = found
        return SubjectDivergence(p, d.divergence, d.genuine_size, d.impostor_size, d.params_used,
                                 d.floored_terms, d.divergence, q)

    return dict(zip(eligible, _map(best, eligible, workers)))


def dataset_uniqueness_min(
    ds: Dataset,
    seed: int = 0,
    *,
    r: int | None = None,
    n: int | None = None,
    epsilon: float = DEFAULT_EPSILON,
    workers: int | None = None,
) -> UniquenessReport:
    """Full report with both the remainder-based and the closest-rival scores.

    Costs ``c * (c - 1)`` pairwise estimator runs on top of the ``c`` runs of
    :func:`dataset_uniqueness`.
    """
    report = dataset_uniqueness(ds, seed, r=r, n=n, epsilon=epsilon, workers=workers)
    mins = min_divergences(ds, seed, epsilon=epsilon, workers=workers)
    report.per_subject = [
        SubjectDivergence(s.subject_id, s.divergence, s.genuine_size, s.impostor_size, s.params_used,
                          s.floored_terms, mins[s.subject_id].divergence, mins[s.subject_id].min_impostor_id)
        for s in report.per_subject
    ]
    report.d_bar_min = math.fsum(m.divergence for m in mins.values()) / len(mins)
    report.u_min = sigmoid(report.d_bar_min)
    report.min_pair = {p: m.min_impostor_id for p, m in mins.items()}
    return report


@dataclass(frozen=True)
class TwinDilution:
    u_before: float
    u_after: float
    u_min_before: float
    u_min_after: float

    @property
    def relative_u_change(self) -> float:
        return abs(self.u_after - self.u_before) / self.u_before


def twin_dilution_check(ds: Dataset, twin_fraction: float, seed: int = 0, twin_noise: float = 0.0) -> TwinDilution:
    """Scores before and after replacing a fraction of subjects by twins of the rest."""
    if not 0 < twin_fraction < 1:
        raise ValueError(f"twin_fraction must lie in (0, 1), got {twin_fraction}")
    before = dataset_uniqueness_min(ds, seed)
    twinned = inject_twins(ds, twin_fraction, twin_noise, seed)
    after = before if twinned is ds else dataset_uniqueness_min(twinned, seed)
    return TwinDilution(before.u, after.u, before.u_min, after.u_min)
