"""Command-line entry point.

Exit codes: 0 on success (diagnostics included), 2 on input, schema or
configuration errors, 1 on internal errors.  Every output directory gets a
``manifest.json``; all other files are byte-identical across reruns with the
same inputs, flags and seeds.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as dt
import hashlib
import json
import logging
import math
import statistics
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .aggregation import AggregationMethod, aggregate
from .errors import PeerGradeError
from .ingest import (
    ReviewDataset,
    build_dataset,
    format_number,
    parse_engagement,
    parse_essays,
    parse_instructor,
    parse_quizzes,
    parse_reviews,
)
from .peerrank import GradeMatrix, PeerRankConfig, peerrank, peerrank_to_grades
from .simulate import RNG_ALGORITHM, CohortConfig, generate_cohort, parse_config_text
from .validity import ValidityReport, build_validity_report, pearson, series_label
from .weighting import WeightScheme, weights_for_raters

log = logging.getLogger("peergrade")

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    """Raised for any problem with user-supplied files or flags."""


# -- helpers -------------------------------------------------------------------

def _num(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    if isinstance(x, float) and math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format_number(x) if isinstance(x, int) else repr(float(x))


def _write(path: Path, lines: Sequence[str]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def _read(path: str | None) -> bytes | None:
    if path is None:
        return None
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _digests(paths: dict[str, str | None]) -> dict[str, str]:
    return {
        name: hashlib.sha256(Path(p).read_bytes()).hexdigest()
        for name, p in sorted(paths.items())
        if p is not None
    }


def _write_manifest(out_dir: Path, command: str, args: argparse.Namespace, inputs: dict[str, str | None],
                    seeds: Sequence[int] = (), extra: dict | None = None) -> None:
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "command")}
    manifest = {
        "command": command,
        "parameters": params,
        "inputs": _digests(inputs),
        "seeds": list(seeds),
        "version": __version__,
        "timestamp": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if extra:
        manifest.update(extra)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def _parse(label: str, parser, data: bytes, *args) -> object:
    try:
        records, errors = parser(data, *args)
    except PeerGradeError as exc:
        raise InputError(f"{label}: {exc}") from None
    except UnicodeDecodeError:
        raise InputError(f"{label}: not valid UTF-8") from None
    if errors:
        raise InputError("\n".join(f"{label}:{e.line}: {e.code}: {e.message}" for e in errors))
    return records


def _list(text: str, parse) -> list:
    try:
        return [parse(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _load_dataset(args: argparse.Namespace, require_instructor: bool) -> ReviewDataset:
    reviews = _parse("reviews", parse_reviews, _read(args.reviews))
    authors = _parse("essays", parse_essays, _read(args.essays))
    instructor = None
    if getattr(args, "instructor", None):
        instructor = _parse("instructor", parse_instructor, _read(args.instructor))
    elif require_instructor:
        raise InputError("--instructor is required")
    engagement = performance = None
    if getattr(args, "engagement", None):
        engagement = _parse("engagement", parse_engagement, _read(args.engagement))
    if getattr(args, "quizzes", None):
        performance = _parse("quizzes", parse_quizzes, _read(args.quizzes), getattr(args, "total_quizzes", None))
    return build_dataset(
        reviews, instructor, engagement, performance,
        min_reviews=args.min_reviews, authors=authors,
        require_instructor=instructor is not None,
    )


def _exclusion_lines(dataset: ReviewDataset) -> list[str]:
    return ["essay_id,reason"] + [f"{e},{reason}" for e, reason in dataset.exclusions]


def _diagnostic_lines(dataset: ReviewDataset) -> list[str]:
    return ["essay_id,code"] + [f"{e},{code}" for e, code in dataset.diagnostics]


def grid_lines(report: ValidityReport) -> list[str]:
    lines = ["method,scheme,r,t,p,m,flags"]
    for (method, scheme), c in report.cells.items():
        lines.append(",".join([
            method.value, scheme.value, _num(c.r), _num(c.t_statistic), _num(c.p_value), str(c.m),
            ";".join(c.flags),
        ]))
    return lines


def report_lines(report: ValidityReport) -> list[str]:
    lines = [f"essays={len(report.essay_ids)}"]
    lines += [f"meta.{k}={v}" for k, v in sorted(report.metadata.items())]
    for (method, scheme), c in report.cells.items():
        key = f"cell.{series_label(method, scheme)}"
        lines += [f"{key}.r={_num(c.r)}", f"{key}.t={_num(c.t_statistic)}", f"{key}.p={_num(c.p_value)}",
                  f"{key}.m={c.m}", f"{key}.flags={';'.join(c.flags)}"]
    for label, s in report.stats.items():
        lines += [f"stats.{label}.{name}={_num(getattr(s, name))}" for name in ("mean", "sd", "min", "max", "count")]
    lines += [f"diagnostics.{k}={v}" for k, v in report.diagnostics.items()]
    return lines


def _write_report(out_dir: Path, report: ValidityReport) -> None:
    _write(out_dir / "grid.csv", grid_lines(report))
    _write(out_dir / "report.txt", report_lines(report))
    for label, bins in report.histograms.items():
        name = label.replace("/", "_")
        _write(out_dir / "plots" / f"histogram_{name}.csv",
               ["bin_lower,count"] + [f"{_num(lo)},{n}" for lo, n in bins])
    for label, b in report.boxplots.items():
        name = label.replace("/", "_")
        _write(out_dir / "plots" / f"five_number_{name}.csv",
               ["min,q1,median,q3,max", ",".join(_num(v) for v in (b.min, b.q1, b.median, b.q3, b.max))])


# -- commands --------------------------------------------------------------------

def cmd_aggregate(args: argparse.Namespace) -> int:
    method = _list(args.method, AggregationMethod.parse)
    scheme = _list(args.scheme, WeightScheme.parse)
    if len(method) != 1 or len(scheme) != 1:
        raise InputError("--method and --scheme take a single value")
    method, scheme = method[0], scheme[0]
    dataset = _load_dataset(args, require_instructor=False)

    lines = ["essay_id,aggregated_grade,method,scheme,diagnostics"]
    for essay in dataset.essays:
        grades = [r.grade for r in essay.peer_reviews]
        flags: list[str] = []
        if scheme is WeightScheme.NONE:
            result = aggregate(grades, method)
        else:
            weights, missing = weights_for_raters(
                [r.rater_id for r in essay.peer_reviews], scheme, dataset.engagement, dataset.performance
            )
            flags += sorted({code for _, code in missing})
            result = aggregate(grades, method, weights)
        flags += result.diagnostics
        lines.append(f"{essay.essay_id},{_num(result.value)},{method.value},{scheme.value},{';'.join(flags)}")

    out = Path(args.out_dir)
    _write(out / "grades.csv", lines)
    _write(out / "exclusions.csv", _exclusion_lines(dataset))
    _write(out / "diagnostics.csv", _diagnostic_lines(dataset))
    _write_manifest(out, "aggregate", args, _inputs(args))
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    methods = _list(args.methods, AggregationMethod.parse)
    schemes = _list(args.schemes, WeightScheme.parse)
    dataset = _load_dataset(args, require_instructor=True)
    try:
        report = build_validity_report(dataset, methods, schemes, bin_width=args.bin_width)
    except PeerGradeError as exc:
        raise InputError(str(exc)) from None
    out = Path(args.out_dir)
    _write_report(out, report)
    _write(out / "exclusions.csv", _exclusion_lines(dataset))
    _write(out / "diagnostics.csv", _diagnostic_lines(dataset))
    _write_manifest(out, "validate", args, _inputs(args))
    return EXIT_OK


def cmd_peerrank(args: argparse.Namespace) -> int:
    try:
        config = PeerRankConfig(args.alpha, args.beta, args.tolerance, args.max_iter)
    except PeerGradeError as exc:
        raise InputError(str(exc)) from None
    dataset = _load_dataset(args, require_instructor=False)

    essays = [e for e in dataset.essays if e.author_id is not None]
    index = {e.author_id: k for k, e in enumerate(essays)}
    entries: dict[tuple[int, int], float] = {}
    dropped = 0
    for j, essay in enumerate(essays):
        for review in essay.peer_reviews:
            i = index.get(review.rater_id)
            if i is None:
                dropped += 1  # rater authored no retained essay, so has no PeerRank grade
                continue
            entries[(i, j)] = review.grade / 10.0
    try:
        result = peerrank(GradeMatrix(len(essays), entries), config)
    except PeerGradeError as exc:
        raise InputError(str(exc)) from None
    grades = peerrank_to_grades(result)

    out = Path(args.out_dir)
    _write(out / "peerrank.csv", ["essay_id,author_id,grade"] + [
        f"{e.essay_id},{e.author_id},{_num(g)}" for e, g in zip(essays, grades)
    ])
    summary = [
        f"alpha={_num(config.alpha)}", f"beta={_num(config.beta)}",
        f"tolerance={_num(config.tolerance)}", f"max_iterations={config.max_iterations}",
        f"iterations_used={result.iterations_used}", f"converged={str(result.converged).lower()}",
        f"trajectory_max_delta={_num(result.trajectory_max_delta)}",
        f"dropped_reviews={dropped}",
    ]
    instructor = [e.instructor_grade for e in essays]
    if essays and all(g is not None for g in instructor):
        try:
            summary.append(f"r={_num(pearson(grades, instructor))}")
        except PeerGradeError as exc:
            summary.append("r=nan")
            summary.append(f"r_flag={exc.code}")
    _write(out / "summary.txt", summary)
    _write(out / "exclusions.csv", _exclusion_lines(dataset))
    _write_manifest(out, "peerrank", args, _inputs(args))
    return EXIT_OK


_SIM_FLAGS = ("n_students", "reviews_per_student", "sd_max", "sd_min", "leniency", "bias_sd",
              "engagement_coupling", "seed")


def resolve_cohort_config(args: argparse.Namespace) -> CohortConfig:
    values: dict[str, str] = {}
    if args.config:
        values.update(parse_config_text(_read(args.config).decode("utf-8")))
    for name in _SIM_FLAGS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = str(flag)
    try:
        return CohortConfig.from_mapping(values)
    except PeerGradeError as exc:
        raise InputError(str(exc)) from None


def cmd_simulate(args: argparse.Namespace) -> int:
    config = resolve_cohort_config(args)
    methods = _list(args.methods, AggregationMethod.parse)
    schemes = _list(args.schemes, WeightScheme.parse)
    if args.replications < 1:
        raise InputError("--replications must be at least 1")
    out = Path(args.out_dir)

    reports = []
    for rep in range(args.replications):
        cohort = generate_cohort(dataclasses.replace(config, seed=config.seed + rep))
        report = build_validity_report(cohort.dataset, methods, schemes)
        report.metadata.update(rng_algorithm=RNG_ALGORITHM, seed=str(config.seed + rep), replication=str(rep))
        rep_dir = out / f"rep_{rep:03d}"
        _write_report(rep_dir, report)
        if args.export_csv:
            for name, data in cohort.export_csv().items():
                path = rep_dir / "cohort" / name
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_bytes(data)
        reports.append(report)

    lines = ["method,scheme,mean_r,min_r,max_r,replications"]
    for key in reports[0].cells:
        rs = [r.cells[key].r for r in reports if not math.isnan(r.cells[key].r)]
        stats = (statistics.fmean(rs), min(rs), max(rs)) if rs else (math.nan,) * 3
        lines.append(",".join([key[0].value, key[1].value, *(_num(v) for v in stats), str(len(rs))]))
    _write(out / "summary.csv", lines)
    _write(out / "config.txt", [f"{k}={v}" for k, v in config.to_mapping().items()])
    seeds = [config.seed + r for r in range(args.replications)]
    _write_manifest(out, "simulate", args, {"config": args.config}, seeds,
                    {"rng_algorithm": RNG_ALGORITHM, "cohort_config": config.to_mapping()})
    return EXIT_OK


def _inputs(args: argparse.Namespace) -> dict[str, str | None]:
    names = ("reviews", "essays", "instructor", "engagement", "quizzes")
    return {n: getattr(args, n, None) for n in names}


# -- argument parsing ---------------------------------------------------------------

ALL_METHODS = ",".join(m.value for m in AggregationMethod)
ALL_SCHEMES = ",".join(s.value for s in WeightScheme)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="peergrade", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def inputs(p: argparse.ArgumentParser, instructor_required: bool = False) -> None:
        p.add_argument("--reviews", required=True)
        p.add_argument("--essays", required=True)
        p.add_argument("--instructor", required=instructor_required)
        p.add_argument("--out-dir", required=True)
        p.add_argument("--min-reviews", type=int, default=3)

    def weights(p: argparse.ArgumentParser) -> None:
        p.add_argument("--engagement")
        p.add_argument("--quizzes")
        p.add_argument("--total-quizzes", type=int, default=None,
                       help="quizzes in the course (default: distinct quiz ids in --quizzes)")

    p = sub.add_parser("aggregate", help="aggregate peer grades per essay")
    inputs(p)
    weights(p)
    p.add_argument("--method", default="MEDIAN")
    p.add_argument("--scheme", default="NONE")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("validate", help="correlate aggregated grades with instructor grades")
    inputs(p, instructor_required=True)
    weights(p)
    p.add_argument("--methods", default=ALL_METHODS)
    p.add_argument("--schemes", default=ALL_SCHEMES)
    p.add_argument("--bin-width", type=float, default=0.5)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("peerrank", help="PeerRank / Generalized PeerRank grades")
    inputs(p)
    p.add_argument("--alpha", type=float, default=0.2)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--max-iter", type=int, default=1000)
    p.set_defaults(func=cmd_peerrank)

    p = sub.add_parser("simulate", help="synthetic cohorts and their validity grids")
    p.add_argument("--config", help="key=value file of cohort parameters")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-students", type=int)
    p.add_argument("--reviews-per-student", type=int)
    p.add_argument("--sd-max", type=float)
    p.add_argument("--sd-min", type=float)
    p.add_argument("--leniency", type=float)
    p.add_argument("--bias-sd", type=float)
    p.add_argument("--engagement-coupling", type=float)
    p.add_argument("--replications", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--export-csv", action="store_true")
    p.add_argument("--methods", default=ALL_METHODS)
    p.add_argument("--schemes", default=ALL_SCHEMES)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
