"""JSON and TSV serialization of uniqueness reports."""

from __future__ import annotations

import json

from faceuniq.scoring import UniquenessReport

REPORT_VERSION = 1
DIGITS = 6
TSV_COLUMNS = ("subject_id", "divergence", "genuine_size", "impostor_size", "min_impostor_id")


def _f(x: float | None) -> float | None:
    return None if x is None else round(x, DIGITS)


def report_to_dict(report: UniquenessReport) -> dict:
    subjects = []
    for s in report.per_subject:
        p = s.params_used
        entry = {
            "subject_id": s.subject_id,
            "divergence": _f(s.divergence),
            "genuine_size": s.genuine_size,
            "impostor_size": s.impostor_size,
            "r": p.r,
            "n": p.n,
            "stream_seed": p.seed,
            "floored_terms": s.floored_terms,
        }
        if "r" in report.overrides:
            entry["r_clamped"] = p.r != report.overrides["r"]
        if s.min_impostor_id is not None:
            entry["min_divergence"] = _f(s.min_divergence)
            entry["min_impostor_id"] = s.min_impostor_id
        subjects.append(entry)
    out = {
        "format_version": REPORT_VERSION,
        "seed": report.seed,
        "dataset": {
            "subjects": report.n_subjects,
            "samples": report.n_samples,
            "dimension": report.dimension,
            "eligible_subjects": len(report.per_subject),
            "skipped_subjects": list(report.skipped_subjects),
        },
        "d_bar": _f(report.d_bar),
        "u": _f(report.u),
        "subjects": subjects,
    }
    if report.u_min is not None:
        out["d_bar_min"] = _f(report.d_bar_min)
        out["u_min"] = _f(report.u_min)
        out["min_pair"] = {str(k): v for k, v in report.min_pair.items()}
    return out


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def report_to_tsv(report: UniquenessReport) -> str:
    lines = ["\t".join(TSV_COLUMNS)]
    for s in report.per_subject:
        lines.append("\t".join([
            str(s.subject_id),
            f"{s.divergence:.{DIGITS}f}",
            str(s.genuine_size),
            str(s.impostor_size),
            "" if s.min_impostor_id is None else str(s.min_impostor_id),
        ]))
    return "\n".join(lines) + "\n"
