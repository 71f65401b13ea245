"""Command-line entry point: ``faceuniq {score,score-min,group,entropy,simulate}``.

Exit codes: 0 success, 1 I/O or parse failure, 2 eligibility or precondition
failure, 3 refused quadratic-cost run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from faceuniq import report as rpt
from faceuniq.dataset import DataFormatError, load_embeddings, load_metadata, split_by_group, write_binary, write_metadata
from faceuniq.entropy import channel_entropies, image_entropy, load_pnm, resample
from faceuniq.estimator import DEFAULT_EPSILON
from faceuniq.scoring import EligibilityError, dataset_uniqueness, dataset_uniqueness_min
from faceuniq.synth import SpecError, SynthSpec, generate

SEED_ENV = "FACEUNIQ_SEED"
MIN_SUBJECT_LIMIT = 2000

EXIT_OK, EXIT_IO, EXIT_PRECONDITION, EXIT_REFUSED = 0, 1, 2, 3


_SPEC_FLAGS = {
    "subjects": "--subjects",
    "samples_per_subject": "--samples",
    "dimension": "--dim",
    "between_spread": "--sep",
    "within_spread": "--within",
    "twin_fraction": "--twin-frac",
    "twin_noise": "--twin-noise",
    "seed": "--seed",
    "group_spread": "--group-spread",
}


class Refused(Exception):
    pass


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "42"))


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _r_value(text: str) -> int | None:
    return None if text == "auto" else _positive_int(text)


def _err(msg: str) -> None:
    print(f"faceuniq: {msg}", file=sys.stderr)


def _load(args):
    ds = load_embeddings(args.input)
    if getattr(args, "meta", None):
        ds = load_metadata(args.meta, ds)
    return ds


def _config(args, command: str) -> dict:
    return {
        "command": command,
        "input": str(args.input),
        "meta": None if args.meta is None else str(args.meta),
        "seed": args.seed,
        "r": "auto" if args.r is None else args.r,
        "n": "auto" if args.n is None else args.n,
        "epsilon": args.epsilon,
    }


def _write(prefix: str, doc: dict, tsv: str) -> tuple[Path, Path]:
    jp, tp = Path(prefix + ".json"), Path(prefix + ".tsv")
    jp.parent.mkdir(parents=True, exist_ok=True)
    jp.write_text(rpt.dumps(doc))
    tp.write_text(tsv)
    return jp, tp


def _check_quadratic(n_subjects: int, args) -> None:
    if n_subjects > args.max_subjects and not args.allow_quadratic:
        runs = n_subjects * (n_subjects - 1)
        raise Refused(
            f"minimum-divergence scoring of {n_subjects} subjects needs ~{runs:.1e} pairwise "
            f"estimator runs ({runs} exactly); above the limit of {args.max_subjects} subjects. "
            "Pass --allow-quadratic to proceed."
        )


def _score(args, use_min: bool) -> int:
    t0 = time.perf_counter()
    ds = _load(args)
    kw = dict(r=args.r, n=args.n, epsilon=args.epsilon, workers=args.workers)
    if use_min:
        _check_quadratic(ds.n_subjects, args)
        report = dataset_uniqueness_min(ds, args.seed, **kw)
    else:
        report = dataset_uniqueness(ds, args.seed, **kw)
    doc = rpt.report_to_dict(report)
    doc["config"] = _config(args, "score-min" if use_min else "score")
    jp, tp = _write(args.out, doc, rpt.report_to_tsv(report))
    print(f"subjects\t{ds.n_subjects}")
    print(f"samples\t{len(ds)}")
    print(f"d_bar\t{report.d_bar:.6f}")
    print(f"u\t{report.u:.6f}")
    if use_min:
        print(f"d_bar_min\t{report.d_bar_min:.6f}")
        print(f"u_min\t{report.u_min:.6f}")
    print(f"skipped\t{len(report.skipped_subjects)}")
    print(f"elapsed_s\t{time.perf_counter() - t0:.3f}")
    print(f"wrote\t{jp}\t{tp}")
    return EXIT_OK


def cmd_score(args) -> int:
    return _score(args, use_min=args.min)


def cmd_score_min(args) -> int:
    return _score(args, use_min=True)


def cmd_group(args) -> int:
    ds = _load(args)
    kind = "age_decade" if args.by in ("age", "age_decade") else args.by
    buckets = split_by_group(ds, kind)
    kw = dict(r=args.r, n=args.n, epsilon=args.epsilon, workers=args.workers)
    full = dataset_uniqueness(ds, args.seed, **kw)
    rows = [("full", ds.n_subjects, len(ds), f"{full.d_bar:.6f}", f"{full.u:.6f}")]
    groups = []
    for key, split in buckets.items():
        entry = {"label": key.value, "subjects": split.dataset.n_subjects, "usable": split.usable}
        if split.usable:
            try:
                rep = dataset_uniqueness(split.dataset, args.seed, **kw)
            except EligibilityError as exc:
                entry["usable"] = False
                entry["reason"] = str(exc)
            else:
                entry["report"] = rpt.report_to_dict(rep)
                rows.append((key.value, split.dataset.n_subjects, len(split.dataset),
                             f"{rep.d_bar:.6f}", f"{rep.u:.6f}"))
        else:
            entry["reason"] = "fewer than 2 subjects"
        if not entry["usable"]:
            rows.append((key.value, split.dataset.n_subjects, len(split.dataset), "", ""))
        groups.append(entry)
    doc = {
        "format_version": rpt.REPORT_VERSION,
        "config": {**_config(args, "group"), "group_kind": kind},
        "full": rpt.report_to_dict(full),
        "groups": groups,
    }
    tsv = "\t".join(("group", "subjects", "samples", "d_bar", "u")) + "\n"
    tsv += "".join("\t".join(map(str, r)) + "\n" for r in rows)
    jp, tp = _write(args.out, doc, tsv)
    for r in rows:
        flag = "" if r[3] else "\tunusable"
        print(f"{r[0]}\t{r[1]}\t{r[4] or '-'}{flag}")
    print(f"wrote\t{jp}\t{tp}")
    return EXIT_OK


def cmd_entropy(args) -> int:
    rows = []
    for path in args.paths:
        try:
            img = load_pnm(path)
            if args.resize:
                img = resample(img, *args.resize)
            h = image_entropy(img)
        except (OSError, DataFormatError, ValueError) as exc:
            _err(f"{path}: {exc}")
            continue
        per = channel_entropies(img) if args.per_channel else None
        rows.append((str(path), img.width, img.height, h, per))
    if not rows:
        return EXIT_IO
    header = ["path", "width", "height", "entropy_bits"] + (["channel_entropy_bits"] if args.per_channel else [])
    lines = ["\t".join(header)]
    for path, w, h, H, per in rows:
        cols = [path, str(w), str(h), f"{H:.4f}"]
        if per is not None:
            cols.append(",".join(f"{x:.4f}" for x in per))
        lines.append("\t".join(cols))
    mean = sum(r[3] for r in rows) / len(rows)
    lines.append("\t".join(["mean", "", "", f"{mean:.4f}"] + ([""] if args.per_channel else [])))
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.tsv:
        Path(args.tsv).write_text(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        spec = SynthSpec(
            subjects=args.subjects,
            samples_per_subject=args.samples,
            dimension=args.dim,
            between_spread=args.sep * args.within,
            within_spread=args.within,
            twin_fraction=args.twin_frac,
            twin_noise=args.twin_noise,
            seed=args.seed,
            group_spread=args.group_spread,
        )
    except SpecError as exc:
        raise EligibilityError(f"{_SPEC_FLAGS[exc.field]}: {exc}") from None
    ds = generate(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    emb, meta = Path(f"{out}.uemb"), Path(f"{out}_meta.csv")
    write_binary(ds, emb)
    write_metadata(ds, meta)
    print(json.dumps(spec.as_dict(), sort_keys=True))
    print(f"wrote\t{emb}\t{meta}")
    return EXIT_OK


def _add_scoring_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="embeddings file (CSV or UEMB binary)")
    p.add_argument("--meta", help="metadata CSV (subject_id,gender,age)")
    p.add_argument("--seed", type=int, default=None, help=f"global seed (default ${SEED_ENV} or 42)")
    p.add_argument("--r", type=_r_value, default=None, help="subset size override, clamped per subject (default auto)")
    p.add_argument("--n", type=_r_value, default=None, help="repetition count override (default auto)")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON)
    p.add_argument("--out", default="uniqueness_report", help="output prefix for .json and .tsv")
    p.add_argument("--workers", type=_positive_int, default=None, help="threads for per-subject scoring")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="faceuniq", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    for name, fn in (("score", cmd_score), ("score-min", cmd_score_min)):
        p = sub.add_parser(name, help="dataset uniqueness" + (" with closest-rival variant" if name == "score-min" else ""))
        _add_scoring_flags(p)
        if name == "score":
            p.add_argument("--min", action="store_true", help="also compute the minimum-divergence variant")
        p.add_argument("--allow-quadratic", action="store_true", help="permit min-variant runs above --max-subjects")
        p.add_argument("--max-subjects", type=int, default=MIN_SUBJECT_LIMIT)
        p.set_defaults(func=fn)

    p = sub.add_parser("group", help="uniqueness per gender or age-decade bucket")
    _add_scoring_flags(p)
    p.add_argument("--by", choices=("gender", "age", "age_decade"), default="gender")
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("entropy", help="color-histogram entropy of PGM/PPM images")
    p.add_argument("paths", nargs="+")
    p.add_argument("--resize", nargs=2, type=_positive_int, metavar=("W", "H"))
    p.add_argument("--per-channel", action="store_true", help="also report per-channel entropies")
    p.add_argument("--tsv", help="write the listing to this TSV file")
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("simulate", help="write a synthetic population as UEMB + metadata CSV")
    p.add_argument("--subjects", type=int, required=True)
    p.add_argument("--samples", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--sep", type=float, default=3.0, help="between/within spread ratio")
    p.add_argument("--within", type=float, default=1.0, help="within-subject spread")
    p.add_argument("--twin-frac", type=float, default=0.0)
    p.add_argument("--twin-noise", type=float, default=0.0)
    p.add_argument("--group-spread", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default="synthetic", help="output prefix")
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "seed", 0) is None:
        args.seed = _default_seed()
    try:
        return args.func(args)
    except Refused as exc:
        _err(str(exc))
        return EXIT_REFUSED
    except (OSError, DataFormatError) as exc:
        _err(str(exc))
        return EXIT_IO
    except (EligibilityError, ValueError, KeyError) as exc:
        _err(str(exc))
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
