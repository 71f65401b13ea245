"""Embedding datasets: in-memory model, CSV/UEMB ingestion, metadata and group splits."""

from __future__ import annotations

import csv
import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

MAGIC = b"UEMB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBIQ")
_RECORD_IDS = struct.Struct("<II")
GENDERS = ("F", "M", "U")
UNKNOWN = "unknown"


class DataFormatError(ValueError):
    """Malformed embedding, metadata or image file."""


class MetadataWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EmbeddingRecord:
    subject_id: int
    sample_id: int
    vector: np.ndarray


@dataclass(frozen=True)
class SubjectMeta:
    subject_id: int
    gender: str = "U"
    age: int | None = None

    def __post_init__(self) -> None:
        if self.gender not in GENDERS:
            raise ValueError(f"gender must be F|M|U, got {self.gender!r}")
        if self.age is not None and not 0 <= self.age <= 130:
            raise ValueError(f"age out of range [0, 130]: {self.age}")


@dataclass(frozen=True)
class GroupKey:
    kind: str
    value: str

    def __str__(self) -> str:
        return f"{self.kind}={self.value}"


def age_decade(age: int) -> str:
    lo = (age // 10) * 10
    return f"{lo}-{lo + 9}"


class Dataset:
    """Immutable collection of embedding records grouped by subject.

    Records are held as one ``(N, D)`` float64 matrix sorted by
    ``(subject_id, sample_id)``, so each subject's samples form a contiguous
    block of rows. The arrays are marked read-only; a Dataset can be shared
    between threads without copying.
    """

    def __init__(
        self,
        subject_ids,
        sample_ids,
        vectors,
        meta: Mapping[int, SubjectMeta] | None = None,
    ) -> None:
        vectors = np.array(vectors, dtype=np.float64, copy=True)
        if vectors.ndim != 2 or vectors.shape[1] < 1:
            raise ValueError("vectors must form an (N, D) matrix with D >= 1")
        subj = np.asarray(subject_ids, dtype=np.int64)
        samp = np.asarray(sample_ids, dtype=np.int64)
        if subj.shape != (len(vectors),) or samp.shape != (len(vectors),):
            raise ValueError("subject_ids and sample_ids must match the record count")
        if len(vectors) and (subj.min() < 0 or samp.min() < 0):
            raise ValueError("identifiers must be non-negative")
        if not np.isfinite(vectors).all():
            raise ValueError("vectors contain non-finite values")

        order = np.lexsort((samp, subj))
        subj, samp, vectors = subj[order], samp[order], vectors[order]
        dup = (np.diff(subj) == 0) & (np.diff(samp) == 0)
        if dup.any():
            i = int(np.flatnonzero(dup)[0])
            raise ValueError(f"duplicate record (subject {subj[i]}, sample {samp[i]})")

        for arr in (subj, samp, vectors):
            arr.setflags(write=False)
        self.subject_ids = subj
        self.sample_ids = samp
        self.vectors = vectors

        ids, starts, counts = np.unique(subj, return_index=True, return_counts=True)
        self._blocks = {
            int(s): slice(int(a), int(a + n)) for s, a, n in zip(ids, starts, counts)
        }
        self.subjects: tuple[int, ...] = tuple(int(s) for s in ids)
        self._ordinals = {s: i for i, s in enumerate(self.subjects)}
        self.meta: dict[int, SubjectMeta] = {}
        if meta:
            self.meta = {k: v for k, v in sorted(meta.items()) if k in self._blocks}

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vectors)

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)

    def block(self, subject_id: int) -> slice:
        """Row range holding the samples of ``subject_id``."""
        try:
            return self._blocks[subject_id]
        except KeyError:
            raise KeyError(f"unknown subject {subject_id}") from None

    def samples(self, subject_id: int) -> np.ndarray:
        return self.vectors[self.block(subject_id)]

    def sample_count(self, subject_id: int) -> int:
        b = self.block(subject_id)
        return b.stop - b.start

    def ordinal(self, subject_id: int) -> int:
        try:
            return self._ordinals[subject_id]
        except KeyError:
            raise KeyError(f"unknown subject {subject_id}") from None

    def eligible_subjects(self) -> list[int]:
        """Subjects with at least two samples (allowed in the genuine role)."""
        return [s for s in self.subjects if self.sample_count(s) >= 2]

    @property
    def records(self) -> list[EmbeddingRecord]:
        return list(self)

    def __iter__(self) -> Iterator[EmbeddingRecord]:
        for s, k, v in zip(self.subject_ids, self.sample_ids, self.vectors):
            yield EmbeddingRecord(int(s), int(k), v)

    def meta_for(self, subject_id: int) -> SubjectMeta:
        return self.meta.get(subject_id, SubjectMeta(subject_id))

    def with_meta(self, meta: Mapping[int, SubjectMeta]) -> Dataset:
        return Dataset(self.subject_ids, self.sample_ids, self.vectors, meta)

    def with_vectors(self, vectors) -> Dataset:
        """Same records and metadata, new coordinates (row order preserved)."""
        return Dataset(self.subject_ids, self.sample_ids, vectors, self.meta)

    def restrict(self, subject_ids) -> Dataset:
        keep = np.isin(self.subject_ids, np.fromiter(subject_ids, dtype=np.int64))
        return Dataset(
            self.subject_ids[keep], self.sample_ids[keep], self.vectors[keep], self.meta
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            np.array_equal(self.subject_ids, other.subject_ids)
            and np.array_equal(self.sample_ids, other.sample_ids)
            and np.array_equal(self.vectors, other.vectors)
            and self.meta == other.meta
        )

    def __repr__(self) -> str:
        return f"Dataset(subjects={self.n_subjects}, records={len(self)}, dimension={self.dimension})"


# --- CSV ---------------------------------------------------------------------


def _parse_id(text: str, row: int, name: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise DataFormatError(f"row {row}: {name} is not an integer: {text!r}") from None
    if value < 0:
        raise DataFormatError(f"row {row}: {name} must be non-negative")
    return value


def load_csv(path) -> Dataset:
    """Read ``subject_id,sample_id,f0,...,f{D-1}`` rows into a Dataset."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataFormatError("row 1: empty file")
        header = [h.strip() for h in header]
        dim = len(header) - 2
        expected = ["subject_id", "sample_id"] + [f"f{i}" for i in range(dim)]
        if dim < 1 or header != expected:
            raise DataFormatError(
                "row 1: header must be subject_id,sample_id,f0,...,f{D-1}"
            )
        width = dim + 2
        subj, samp, vecs = [], [], []
        seen: dict[tuple[int, int], int] = {}
        for row, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != width:
                raise DataFormatError(f"row {row}: expected {width} fields, got {len(fields)}")
            s = _parse_id(fields[0], row, "subject_id")
            k = _parse_id(fields[1], row, "sample_id")
            try:
                v = [float(x) for x in fields[2:]]
            except ValueError:
                raise DataFormatError(f"row {row}: non-numeric field") from None
            if not all(math.isfinite(x) for x in v):
                raise DataFormatError(f"row {row}: non-finite value")
            if (s, k) in seen:
                raise DataFormatError(
                    f"row {row}: duplicate (subject_id, sample_id) ({s}, {k}), first at row {seen[s, k]}"
                )
            seen[s, k] = row
            subj.append(s)
            samp.append(k)
            vecs.append(v)
    if not vecs:
        raise DataFormatError("no records")
    return Dataset(subj, samp, np.array(vecs, dtype=np.float64).reshape(len(vecs), dim))


def write_csv(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject_id", "sample_id"] + [f"f{i}" for i in range(ds.dimension)])
        for s, k, v in zip(ds.subject_ids, ds.sample_ids, ds.vectors):
            w.writerow([int(s), int(k)] + [repr(float(x)) for x in v])


# --- UEMB binary -------------------------------------------------------------


def write_binary(ds: Dataset, path) -> None:
    """Write the UEMB v1 format: header, then (u32 subject, u32 sample, D x f32) records."""
    if len(ds) == 0:
        raise ValueError("cannot write an empty dataset")
    if ds.subject_ids.max() > 0xFFFFFFFF or ds.sample_ids.max() > 0xFFFFFFFF:
        raise ValueError("identifiers exceed u32")
    vec32 = ds.vectors.astype("<f4")
    if not np.isfinite(vec32).all():
        raise ValueError("vectors overflow 32-bit floats")
    rec = np.dtype([("subject", "<u4"), ("sample", "<u4"), ("vector", "<f4", (ds.dimension,))])
    out = np.empty(len(ds), dtype=rec)
    out["subject"] = ds.subject_ids
    out["sample"] = ds.sample_ids
    out["vector"] = vec32
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, ds.dimension, len(ds)))
        fh.write(out.tobytes())


def load_binary(path) -> Dataset:
    data = Path(path).read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise DataFormatError("bad magic at offset 0")
    if len(data) < _HEADER.size:
        raise DataFormatError(f"truncated header at offset {len(data)}")
    _, version, dim, count = _HEADER.unpack_from(data, 0)
    if version != FORMAT_VERSION:
        raise DataFormatError(f"unsupported version {version} at offset 4")
    if dim == 0:
        raise DataFormatError("zero dimension at offset 5")
    if count == 0:
        raise DataFormatError("record count is zero at offset 9")
    rec_size = _RECORD_IDS.size + 4 * dim
    need = _HEADER.size + count * rec_size
    if len(data) < need:
        have = (len(data) - _HEADER.size) // rec_size
        raise DataFormatError(
            f"truncated payload at offset {len(data)}: declared {count} records, found {have}"
        )
    if len(data) > need:
        raise DataFormatError(f"trailing bytes at offset {need}")
    rec = np.dtype([("subject", "<u4"), ("sample", "<u4"), ("vector", "<f4", (dim,))])
    arr = np.frombuffer(data, dtype=rec, count=count, offset=_HEADER.size)
    vectors = arr["vector"].astype(np.float64)
    bad = ~np.isfinite(vectors).all(axis=1)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DataFormatError(f"non-finite value in record {i} at offset {_HEADER.size + i * rec_size}")
    try:
        return Dataset(arr["subject"], arr["sample"], vectors)
    except ValueError as exc:
        raise DataFormatError(str(exc)) from None


def load_embeddings(path) -> Dataset:
    """Dispatch on content: UEMB magic means binary, anything else is parsed as CSV."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return load_binary(path)
    if Path(path).suffix.lower() == ".csv" or head.startswith(b"subj"):
        return load_csv(path)
    raise DataFormatError("bad magic at offset 0")


# --- metadata ----------------------------------------------------------------


def load_metadata(path, ds: Dataset) -> Dataset:
    """Attach ``subject_id,gender,age`` annotations to ``ds``.

    Rows for subjects not present in ``ds`` are skipped with a
    :class:`MetadataWarning` each. Subjects absent from the file keep the
    default (gender U, no age).
    """
    meta: dict[int, SubjectMeta] = {}
    known = set(ds.subjects)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header != ["subject_id", "gender", "age"]:
            raise DataFormatError("row 1: header must be subject_id,gender,age")
        for row, fields in enumerate(reader, start=2):
            if not fields:
                continue
            if len(fields) != 3:
                raise DataFormatError(f"row {row}: expected 3 fields, got {len(fields)}")
            sid = _parse_id(fields[0].strip(), row, "subject_id")
            gender = fields[1].strip()
            if gender not in GENDERS:
                raise DataFormatError(f"row {row}: gender must be F|M|U")
            age_text = fields[2].strip()
            age = None
            if age_text:
                try:
                    age = int(age_text)
                except ValueError:
                    raise DataFormatError(f"row {row}: age is not an integer") from None
                if not 0 <= age <= 130:
                    raise DataFormatError(f"row {row}: age out of range [0, 130]")
            if sid in meta:
                raise DataFormatError(f"row {row}: duplicate metadata for subject {sid}")
            if sid not in known:
                warnings.warn(f"row {row}: unknown subject {sid}, skipped", MetadataWarning, stacklevel=2)
                continue
            meta[sid] = SubjectMeta(sid, gender, age)
    return ds.with_meta(meta)


def write_metadata(ds: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subject_id", "gender", "age"])
        for sid in ds.subjects:
            m = ds.meta_for(sid)
            w.writerow([sid, m.gender, "" if m.age is None else m.age])


# --- group splits ------------------------------------------------------------


@dataclass
class GroupSplit:
    """One bucket of a split; ``usable`` is False for buckets under two subjects."""

    key: GroupKey
    dataset: Dataset
    usable: bool = field(init=False)

    def __post_init__(self) -> None:
        self.usable = self.dataset.n_subjects >= 2


def _label(ds: Dataset, sid: int, kind: str) -> str:
    m = ds.meta_for(sid)
    if kind == "gender":
        return m.gender
    return UNKNOWN if m.age is None else age_decade(m.age)


def split_by_group(ds: Dataset, kind: str) -> dict[GroupKey, GroupSplit]:
    """Partition subjects by gender or by 10-year age block.

    Buckets are returned in label order. Subjects without the needed
    annotation land in ``U`` (gender) or ``unknown`` (age).
    """
    if kind not in ("gender", "age_decade"):
        raise ValueError(f"unknown group kind {kind!r}")
    if kind == "age_decade" and not any(m.age is not None for m in ds.meta.values()):
        raise ValueError("no age annotations")
    buckets: dict[str, list[int]] = {}
    for sid in ds.subjects:
        buckets.setdefault(_label(ds, sid, kind), []).append(sid)

    def order(label: str):
        if label == UNKNOWN:
            return (1, 0)
        if kind == "age_decade":
            return (0, int(label.split("-")[0]))
        return (0, GENDERS.index(label))

    out = {}
    for label in sorted(buckets, key=order):
        key = GroupKey(kind, label)
        out[key] = GroupSplit(key, ds.restrict(buckets[label]))
    return out
