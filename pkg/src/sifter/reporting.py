"""Report rendering: CSV summaries and matplotlib figures next to JSON reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def write_json(path: str | Path, data: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def write_csv(path: str | Path, fieldnames: Sequence[str], rows: Iterable[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def render_simulation_report(report: dict, out_path: str | Path) -> dict[str, str]:
    """Write the simulation report JSON plus a per-trial CSV and figures."""
    out_path = Path(out_path)
    stem = out_path.with_suffix("")
    artifacts = {"report": str(write_json(out_path, report))}

    trials = report.get("trials", [])
    if trials:
        fields = ["trial", "seed", "output_size", "under_supplied",
                  "overlap_fraction", "pipeline_minutes"]
        artifacts["csv"] = str(write_csv(
            Path(f"{stem}_trials.csv"), fields,
            [{k: t.get(k) for k in fields} for t in trials],
        ))

        sizes = [t["output_size"] for t in trials]
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.hist(sizes, bins=range(0, max(sizes) + 2), color="#4878a8", edgecolor="white")
        ax.set_xlabel("final output size (videos)")
        ax.set_ylabel("trials")
        ax.set_title("Unanimous-consent output size")
        fig.tight_layout()
        size_fig = Path(f"{stem}_output_sizes.png")
        fig.savefig(size_fig, dpi=120)
        plt.close(fig)
        artifacts["output_sizes_figure"] = str(size_fig)

        overlaps = [t["overlap_fraction"] for t in trials if t.get("overlap_fraction") is not None]
        if overlaps:
            fig, ax = plt.subplots(figsize=(6, 4))
            ax.hist(overlaps, bins=20, range=(0.0, 1.0), color="#a85448", edgecolor="white")
            ax.axvspan(0.4, 0.5, color="gray", alpha=0.25, label="target band")
            ax.set_xlabel("pairwise agreement-stage overlap fraction")
            ax.set_ylabel("trials")
            ax.set_title("Worker agreement")
            ax.legend()
            fig.tight_layout()
            overlap_fig = Path(f"{stem}_overlap.png")
            fig.savefig(overlap_fig, dpi=120)
            plt.close(fig)
            artifacts["overlap_figure"] = str(overlap_fig)
    return artifacts


def render_eval_report(report: dict, out_path: str | Path) -> dict[str, str]:
    """Write the evaluation report JSON plus comparison CSV and a ratings figure."""
    out_path = Path(out_path)
    stem = out_path.with_suffix("")
    artifacts = {"report": str(write_json(out_path, report))}

    comparisons = report.get("ratings", {}).get("comparisons", [])
    if comparisons:
        fields = ["job_id", "n_pairs", "mean_a", "mean_b", "t", "df", "p", "significant"]
        artifacts["csv"] = str(write_csv(
            Path(f"{stem}_comparisons.csv"), fields,
            [{k: c.get(k) for k in fields} for c in comparisons],
        ))

    distributions = report.get("ratings", {}).get("relative_scores", {})
    if distributions:
        jobs = sorted(distributions)
        conditions = sorted({c for job in jobs for c in distributions[job]})
        fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(jobs) + 2), 4.5))
        width = 0.8 / max(1, len(conditions))
        colors = ["#4878a8", "#a85448", "#6a994e", "#bc8034"]
        for ci, condition in enumerate(conditions):
            data, positions = [], []
            for ji, job in enumerate(jobs):
                scores = distributions[job].get(condition)
                if scores:
                    data.append(scores)
                    positions.append(ji + (ci - (len(conditions) - 1) / 2) * width)
            if not data:
                continue
            box = ax.boxplot(data, positions=positions, widths=width * 0.9,
                             patch_artist=True, manage_ticks=False)
            for patch in box["boxes"]:
                patch.set_facecolor(colors[ci % len(colors)])
            ax.plot([], [], color=colors[ci % len(colors)], label=condition, linewidth=6)
        ax.axhline(0.0, color="gray", linewidth=0.8)
        ax.set_xticks(range(len(jobs)))
        ax.set_xticklabels(jobs, rotation=45, ha="right")
        ax.set_ylabel("baseline-relative rating")
        ax.set_title("Relative ratings by compilation")
        ax.legend()
        fig.tight_layout()
        ratings_fig = Path(f"{stem}_ratings.png")
        fig.savefig(ratings_fig, dpi=120)
        plt.close(fig)
        artifacts["ratings_figure"] = str(ratings_fig)
    return artifacts
