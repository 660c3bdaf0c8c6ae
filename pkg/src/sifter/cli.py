"""Command-line entry point: ingest, search, run-r1, serve, simulate, eval, export."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import statistics
import sys
from dataclasses import replace

from . import __version__
from .corpus import ingest_manifest, make_frame_loader, parse_timestamp, search_by_keywords
from .errors import SifterError, ValidationError
from .evaluation import (
    QueryEvent,
    RatingSample,
    StageTiming,
    bonferroni_significant,
    curator_job_time,
    paired_t_test,
    per_video_time,
    relative_ratings,
    sifter_time,
)
from .filters import R1Config, run_r1, write_verdicts_jsonl
from .pipeline import Job, load_job_config, read_event_log, write_event_log
from .reporting import render_eval_report, render_simulation_report, write_json
from .simworkers import generate_latent_quality, load_profiles, run_end_to_end

logger = logging.getLogger(__name__)


def _add_r1_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--min-duration", type=float, help="minimum duration in seconds")
    parser.add_argument("--motion-threshold", type=float, help="pixel-difference threshold")
    parser.add_argument("--colorfulness-threshold", type=float, help="aesthetics threshold")
    parser.add_argument("--dedup-window", type=float, help="same-session window in seconds")


def _r1_config(cfg: dict, args: argparse.Namespace) -> R1Config:
    data = dict(cfg)
    if args.min_duration is not None:
        data["min_duration"] = args.min_duration
    if args.motion_threshold is not None:
        data["motion_diff_threshold"] = args.motion_threshold
    if args.colorfulness_threshold is not None:
        data["colorfulness_threshold"] = args.colorfulness_threshold
    if args.dedup_window is not None:
        data["dedup_window"] = args.dedup_window
    return R1Config.from_dict(data)


def _prepare_job(args: argparse.Namespace) -> dict:
    cfg = load_job_config(args.job)
    if cfg["corpus"] is None:
        raise ValidationError("job config must name a corpus manifest")
    job_spec = cfg["job"]
    if getattr(args, "seed", None) is not None:
        job_spec = replace(job_spec, params=replace(job_spec.params, random_seed=args.seed))
    manifest = ingest_manifest(cfg["corpus"])
    loader = make_frame_loader(manifest)
    matched = search_by_keywords(job_spec.keywords, manifest)
    candidates = sorted(matched, key=lambda a: a.id)
    if not candidates:
        raise ValidationError("no corpus videos match the job keywords")
    return {
        "job": job_spec,
        "r1_config": _r1_config(cfg["r1"], args),
        "manifest": manifest,
        "loader": loader,
        "candidates": candidates,
    }


def cmd_ingest(args: argparse.Namespace) -> int:
    manifest = ingest_manifest(args.corpus)
    uploaders = {a.uploader_id for a in manifest.entries}
    print(f"{len(manifest)} videos from {len(uploaders)} uploaders in {args.corpus}")
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    manifest = ingest_manifest(args.corpus)
    keywords = [k.strip() for k in args.keywords.split(",") if k.strip()]
    matches = search_by_keywords(keywords, manifest)
    for video_id in sorted(a.id for a in matches):
        print(video_id)
    logger.info("%d of %d videos matched", len(matches), len(manifest))
    return 0


def cmd_run_r1(args: argparse.Namespace) -> int:
    prep = _prepare_job(args)
    kept, verdicts = run_r1(
        prep["candidates"], prep["r1_config"], prep["loader"], max_workers=args.max_workers
    )
    if args.out:
        write_verdicts_jsonl(verdicts, args.out)
    if args.kept_out:
        write_json(args.kept_out, {
            "job_id": prep["job"].job_id,
            "kept": [a.id for a in kept],
        })
    if args.events_out:
        job = Job(prep["job"], created_at=0.0)
        job.record_r1([a.id for a in kept], at=0.0)
        write_event_log(job.events, args.events_out)
    reasons: dict[str, int] = {}
    for verdict in verdicts:
        reasons[verdict.reason] = reasons.get(verdict.reason, 0) + 1
    print(
        f"kept {len(kept)} of {len(prep['candidates'])} matched videos "
        f"({', '.join(f'{k}={v}' for k, v in sorted(reasons.items()))})"
    )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .registry import JobRegistry
    from .service import create_app

    registry = JobRegistry(log_dir=args.log_dir)
    for config_path in args.job or []:
        entry = registry.create_job(config_path)
        logger.info("loaded job %s", entry.job_id)
    app = create_app(registry, grace=args.grace, media_base=args.media_base)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    prep = _prepare_job(args)
    kept, _ = run_r1(
        prep["candidates"], prep["r1_config"], prep["loader"], max_workers=args.max_workers
    )
    kept_ids = [a.id for a in kept]
    if not kept_ids:
        raise ValidationError("the automated prefilter removed every candidate")
    profiles = load_profiles(args.profiles)
    latent = generate_latent_quality(kept_ids, args.seed)

    trials = []
    last_result = None
    for i in range(args.trials):
        result = run_end_to_end(
            prep["job"], profiles, latent, seed=args.seed + i, r1_kept=kept_ids
        )
        last_result = result
        trials.append({
            "trial": i,
            "seed": args.seed + i,
            "finalized": result.finalized,
            "output_size": result.output_size,
            "under_supplied": result.under_supplied,
            "overlap_fraction": result.overlap_fraction,
            "pipeline_minutes": result.pipeline_minutes,
            "timings": {
                "selection": dict(result.timing.selection),
                "agreement": dict(result.timing.agreement),
            },
            "output": list(result.output.videos) if result.output else [],
        })
    sizes = [t["output_size"] for t in trials]
    overlaps = [t["overlap_fraction"] for t in trials if t["overlap_fraction"] is not None]
    minutes = [t["pipeline_minutes"] for t in trials if t["pipeline_minutes"] is not None]
    report = {
        "job_id": prep["job"].job_id,
        "seed": args.seed,
        "trials_requested": args.trials,
        "r1": {"matched": len(prep["candidates"]), "kept": len(kept_ids)},
        "trials": trials,
        "summary": {
            "mean_output_size": statistics.fmean(sizes) if sizes else None,
            "sd_output_size": statistics.stdev(sizes) if len(sizes) > 1 else None,
            "mean_overlap_fraction": statistics.fmean(overlaps) if overlaps else None,
            "under_supplied_rate": sum(t["under_supplied"] for t in trials) / len(trials),
            "mean_pipeline_minutes": statistics.fmean(minutes) if minutes else None,
        },
    }
    artifacts = render_simulation_report(report, args.report)
    if args.events_out and last_result is not None:
        write_event_log(last_result.events, args.events_out)
        artifacts["events"] = args.events_out
    for name, path in sorted(artifacts.items()):
        print(f"{name}: {path}")
    return 0


def _load_query_events(path: str) -> tuple[dict[str, list[QueryEvent]], dict[str, int]]:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    videos_per_job: dict[str, int] = {}
    if isinstance(data, dict):
        videos_per_job = {str(k): int(v) for k, v in data.get("videos_per_job", {}).items()}
        data = data.get("events", [])
    events: dict[str, list[QueryEvent]] = {}
    for record in data:
        events.setdefault(str(record["job_id"]), []).append(
            QueryEvent(curator_id=str(record.get("curator_id", "curator")),
                       at=parse_timestamp(record["at"]))
        )
    return events, videos_per_job


def _load_ratings(path: str) -> dict[str, dict[str, list[RatingSample]]]:
    """CSV columns: rater_id, condition, video_id, score[, job_id]."""
    by_job: dict[str, dict[str, list[RatingSample]]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"rater_id", "condition", "video_id", "score"}
        missing = required - set(reader.fieldnames or [])
        if missing:
            raise ValidationError(f"ratings file missing columns: {sorted(missing)}")
        for row in reader:
            sample = RatingSample(
                rater_id=row["rater_id"],
                condition=row["condition"],
                video_id=row["video_id"],
                score=int(row["score"]),
            )
            job_id = row.get("job_id") or "all"
            by_job.setdefault(job_id, {}).setdefault(sample.condition, []).append(sample)
    return by_job


def _rating_comparisons(
    by_job: dict[str, dict[str, list[RatingSample]]], m: int | None, alpha: float
) -> dict:
    comparisons = []
    relative_scores: dict[str, dict[str, list[float]]] = {}
    jobs = sorted(by_job)
    effective_m = m if m is not None else max(1, len(jobs))
    for job_id in jobs:
        conditions = by_job[job_id]
        baseline = conditions.get("baseline", [])
        per_rater: dict[str, dict[str, list[float]]] = {}
        for condition in ("sifter", "curator"):
            samples = conditions.get(condition, [])
            if not samples or not baseline:
                continue
            relatives, _ = relative_ratings(samples, baseline)
            relative_scores.setdefault(job_id, {})[condition] = relatives
            for sample, rel in zip(samples, relatives):
                per_rater.setdefault(sample.rater_id, {}).setdefault(condition, []).append(rel)
        paired = [
            (sum(v["sifter"]) / len(v["sifter"]), sum(v["curator"]) / len(v["curator"]))
            for _, v in sorted(per_rater.items())
            if "sifter" in v and "curator" in v
        ]
        row: dict = {"job_id": job_id, "n_pairs": len(paired)}
        if len(paired) >= 2:
            a = [p[0] for p in paired]
            b = [p[1] for p in paired]
            row["mean_a"] = statistics.fmean(a)
            row["mean_b"] = statistics.fmean(b)
            try:
                result = paired_t_test(a, b)
            except ValidationError as exc:
                row["error"] = str(exc)
            else:
                row.update({
                    "t": result.t,
                    "df": result.df,
                    "p": result.p,
                    "significant": bonferroni_significant(result.p, effective_m, alpha),
                })
        comparisons.append(row)
    return {
        "comparisons": comparisons,
        "relative_scores": relative_scores,
        "m": effective_m,
        "alpha": alpha,
        "per_comparison_alpha": alpha / effective_m,
    }


def cmd_eval(args: argparse.Namespace) -> int:
    report: dict = {}

    if args.timings:
        with open(args.timings, "r", encoding="utf-8") as fh:
            timing_data = json.load(fh)
        per_job = []
        ratio_inputs = []
        for record in timing_data:
            timing = StageTiming(
                job_id=str(record["job_id"]),
                selection={k: float(v) for k, v in record.get("selection", {}).items()},
                agreement={k: float(v) for k, v in record.get("agreement", {}).items()},
            )
            minutes = sifter_time(timing)
            row = {"job_id": timing.job_id, "minutes": minutes}
            if record.get("videos"):
                row["videos"] = int(record["videos"])
                ratio_inputs.append((minutes, int(record["videos"])))
            per_job.append(row)
        values = [r["minutes"] for r in per_job]
        report["pipeline_time"] = {
            "per_job": per_job,
            "mean": statistics.fmean(values),
            "sd": statistics.stdev(values) if len(values) > 1 else None,
        }
        if ratio_inputs:
            mean, sd = per_video_time(ratio_inputs)
            report["pipeline_time"]["per_video"] = {"mean": mean, "sd": sd}

    if args.query_log:
        events_by_job, videos_per_job = _load_query_events(args.query_log)
        per_job = []
        ratio_inputs = []
        for job_id in sorted(events_by_job):
            total, breakdown = curator_job_time(events_by_job[job_id], args.timeout)
            row = {"job_id": job_id, "minutes": total, "per_curator": breakdown}
            if job_id in videos_per_job:
                row["videos"] = videos_per_job[job_id]
                ratio_inputs.append((total, videos_per_job[job_id]))
            per_job.append(row)
        values = [r["minutes"] for r in per_job]
        report["curator_time"] = {
            "per_job": per_job,
            "timeout_minutes": args.timeout,
            "mean": statistics.fmean(values) if values else None,
            "sd": statistics.stdev(values) if len(values) > 1 else None,
        }
        if ratio_inputs:
            mean, sd = per_video_time(ratio_inputs)
            report["curator_time"]["per_video"] = {"mean": mean, "sd": sd}

    if args.ratings:
        report["ratings"] = _rating_comparisons(_load_ratings(args.ratings), args.m, args.alpha)

    if not report:
        raise ValidationError("nothing to evaluate: pass --timings, --query-log, or --ratings")
    artifacts = render_eval_report(report, args.report)
    for name, path in sorted(artifacts.items()):
        print(f"{name}: {path}")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    events = read_event_log(args.events)
    job = Job.from_events(events)
    if args.state:
        write_json(args.state, job.state.to_dict())
    if job.state.output is None:
        raise ValidationError("event log does not contain a finalized output")
    write_json(args.out, job.state.output)
    print(f"output: {args.out} ({len(job.state.output['videos'])} videos)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sifter",
        description="Hybrid human-machine curation of themed short-video compilations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--verbose", action="store_true", help="enable info logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a corpus manifest")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("search", help="keyword search over a corpus")
    p.add_argument("--keywords", required=True, help="comma-separated keywords")
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("run-r1", help="run the automated prefilters for a job")
    p.add_argument("--job", required=True, help="job config JSON")
    p.add_argument("--out", help="verdicts JSONL output")
    p.add_argument("--kept-out", help="kept ids JSON output")
    p.add_argument("--events-out", help="event log JSONL output")
    p.add_argument("--seed", type=int, help="override the job's random seed")
    p.add_argument("--max-workers", type=int, default=1)
    _add_r1_flags(p)
    p.set_defaults(func=cmd_run_r1)

    p = sub.add_parser("serve", help="start the task service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8040)
    p.add_argument("--grace", type=float, default=5.0)
    p.add_argument("--media-base", default="")
    p.add_argument("--job", action="append", help="job config to preload (repeatable)")
    p.add_argument("--log-dir", help="directory for per-job event logs")
    p.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("simulate", help="drive a job end to end with synthetic workers")
    p.add_argument("--job", required=True)
    p.add_argument("--profiles", required=True, help="worker profiles JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--report", required=True, help="report JSON output")
    p.add_argument("--events-out", help="event log of the last trial")
    p.add_argument("--max-workers", type=int, default=1)
    _add_r1_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="timing and rating analyses")
    p.add_argument("--timings", help="per-job stage timings JSON")
    p.add_argument("--query-log", help="curator query events JSON")
    p.add_argument("--ratings", help="ratings CSV (rater_id,condition,video_id,score[,job_id])")
    p.add_argument("--timeout", type=float, default=30.0, help="session timeout in minutes")
    p.add_argument("--m", type=int, help="number of comparisons for Bonferroni")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="export a finalized output from an event log")
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--state", help="also write the full replayed state JSON")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except SifterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
