"""Command-line entry point: one subcommand per pipeline stage."""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import augment as aug
from . import generation as gen
from .config import ConfigError, PipelineConfig, load_config
from .degrade import DegradeParams, degrade_chain
from .images import load_png
from .loss import emit_weight_matrix
from .manifest import (load_manifest, positive_train_count, save_manifest,
                       split_stats)
from .metrics import confusion, write_metrics_report
from .prompts import (PromptSpec, SeedPlan, batch_prompts,
                      default_template, default_wildcard_table,
                      load_wildcard_table)
from .review import serve
from .scoring import (AttributeScore, aggregate_cross_dataset, rank_attributes,
                      score_attribute)
from .services import resolve_detector, resolve_diffusion


class Ctx:
    def __init__(self):
        self.config = PipelineConfig()
        self.seed: int | None = None


pass_ctx = click.make_pass_decorator(Ctx, ensure=True)


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="Pipeline config JSON.")
@click.option("--seed", type=int, default=None, help="Override initial seed.")
@click.pass_context
def main(ctx, config_path, seed):
    obj = Ctx()
    if config_path is not None:
        try:
            obj.config = load_config(config_path)
        except ConfigError as exc:
            raise click.ClickException(str(exc))
    obj.seed = seed
    ctx.obj = obj


def _initial_seed(ctx: Ctx) -> int:
    return ctx.seed if ctx.seed is not None else ctx.config.initial_seed


def _read_scorer_inputs(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            rows.append(row)
    if not rows:
        raise click.ClickException(f"{path}: no data rows")
    return rows


@main.command()
@pass_ctx
@click.option("--metrics", "metrics_path", required=True, type=click.Path(exists=True),
              help="CSV with attribute, train_f1, test_f1, positive_train"
                   "[, total_train].")
@click.option("--manifest", "manifest_path", type=click.Path(exists=True),
              help="Manifest used to derive the training-split total.")
@click.option("--total-train", type=int, default=None)
@click.option("--scores-out", type=click.Path(), default="scores.csv")
@click.option("--ranking-out", type=click.Path(), default=None,
              help="Also write the top-k ranking of these scores.")
@click.option("--k", type=int, default=10)
@click.option("--exclude/--no-exclude", default=True)
def score(ctx, metrics_path, manifest_path, total_train, scores_out,
          ranking_out, k, exclude):
    """Score every attribute on the three weakness criteria."""
    rows = _read_scorer_inputs(metrics_path)
    if total_train is None and manifest_path:
        total_train = split_stats(load_manifest(manifest_path)).total_train
    scores = []
    with open(scores_out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["attribute", "low", "test", "drop", "total"])
        for row in rows:
            total = total_train or int(row["total_train"])
            s = score_attribute(row["attribute"], float(row["train_f1"]),
                                float(row["test_f1"]),
                                int(row["positive_train"]), total,
                                ctx.config.thresholds)
            scores.append(s)
            w.writerow([s.attribute, s.low_train_score, s.test_score,
                        s.drop_score, s.total])
    click.echo(f"wrote {scores_out}")
    if ranking_out:
        tags = (frozenset({"action-", "-Others", "-Other"}) if exclude
                else frozenset())
        try:
            report = rank_attributes(scores, exclude=tags, k=k)
        except ValueError as exc:
            raise click.ClickException(str(exc))
        with open(ranking_out, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["rank", "attribute", "total"])
            for pos, (attr, total) in enumerate(report.top, start=1):
                w.writerow([pos, attr, total])
        click.echo(f"wrote {ranking_out}")


@main.command()
@pass_ctx
@click.option("--scores", "scores_paths", multiple=True, required=True,
              type=click.Path(exists=True), help="Scores CSV (repeatable).")
@click.option("--k", type=int, default=10)
@click.option("--exclude/--no-exclude", default=True,
              help="Drop action-* and *-Other(s) attributes.")
@click.option("--ranking-out", type=click.Path(), default="ranking.csv")
@click.option("--aggregate-out", type=click.Path(), default=None)
def rank(ctx, scores_paths, k, exclude, ranking_out, aggregate_out):
    """Rank scored attributes (worst first); optionally aggregate datasets."""
    tags = frozenset({"action-", "-Others", "-Other"}) if exclude else frozenset()
    reports = []
    with open(ranking_out, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["dataset", "rank", "attribute", "total"])
        for path in scores_paths:
            scores = []
            with open(path, newline="", encoding="utf-8") as sf:
                for row in csv.DictReader(sf):
                    scores.append(AttributeScore(
                        attribute=row["attribute"],
                        low_train_score=int(row["low"]),
                        test_score=int(row["test"]),
                        drop_score=int(row["drop"]),
                        total=int(row["total"]),
                        evidence=(0.0, 0.0, 0, 1)))
            try:
                report = rank_attributes(scores, exclude=tags, k=k)
            except ValueError as exc:
                raise click.ClickException(str(exc))
            reports.append(report)
            name = Path(path).stem
            for pos, (attr, total) in enumerate(report.top, start=1):
                w.writerow([name, pos, attr, total])
    click.echo(f"wrote {ranking_out}")
    if aggregate_out:
        agg = aggregate_cross_dataset(reports, k)
        with open(aggregate_out, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["attribute", "datasets_in_top_k"])
            w.writerows(agg)
        click.echo(f"wrote {aggregate_out}")


@main.command()
@pass_ctx
@click.option("--target", required=True)
@click.option("--n", "count", type=int, default=1)
@click.option("--seed", "seed_override", type=int, default=None,
              help="Initial seed (same as the global --seed).")
@click.option("--batch-number", type=int, default=1)
@click.option("--wildcards", "wildcards_path", type=click.Path(exists=True))
@click.option("--out", "out_path", type=click.Path(), default="-")
def prompts(ctx, target, count, seed_override, batch_number, wildcards_path,
            out_path):
    """Compile seeded prompts; JSON lines, one PromptSpec per line."""
    table = (load_wildcard_table(wildcards_path) if wildcards_path
             else default_wildcard_table())
    initial = seed_override if seed_override is not None else _initial_seed(ctx)
    plan = SeedPlan(initial_seed=initial, batch_size=count,
                    batch_number=batch_number)
    try:
        specs = batch_prompts(default_template(), table, target, plan)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    out = sys.stdout if out_path == "-" else open(out_path, "w", encoding="utf-8")
    try:
        for spec in specs:
            out.write(spec.to_json() + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
            click.echo(f"wrote {out_path}")


@main.command()
@pass_ctx
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--target", required=True)
@click.option("--pct", type=int, default=500)
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--batch-size", type=int, default=100)
@click.option("--oversample", type=float, default=gen.DEFAULT_OVERSAMPLE)
@click.option("--batch-id", default=None)
@click.option("--wildcards", "wildcards_path", type=click.Path(exists=True))
def generate(ctx, manifest_path, target, pct, out_dir, batch_size, oversample,
             batch_id, wildcards_path):
    """Plan and run one generation batch (resumable)."""
    cfg = ctx.config
    manifest = load_manifest(manifest_path)
    try:
        plan = gen.plan_augmentation(manifest, target, pct,
                                     batch_size=batch_size,
                                     oversample_factor=oversample,
                                     initial_seed=_initial_seed(ctx))
    except gen.PlanError as exc:
        raise click.ClickException(str(exc))
    table = (load_wildcard_table(wildcards_path) if wildcards_path
             else default_wildcard_table())
    try:
        table.validate_schema(manifest.schema.names)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    ledger = gen.run_generation_batch(
        plan, default_template(), table,
        resolve_diffusion(cfg.endpoints.diffusion),
        resolve_detector(cfg.endpoints.detector),
        cfg.degrade, out_dir, batch_id=batch_id,
        parallelism=cfg.parallelism)
    by_status: dict[str, int] = {}
    for row in ledger.rows:
        by_status[row.status] = by_status.get(row.status, 0) + 1
    click.echo(f"batch {ledger.batch_id}: {json.dumps(by_status, sort_keys=True)}")


@main.command()
@pass_ctx
@click.option("--in-dir", required=True, type=click.Path(exists=True))
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--params", "params_path", type=click.Path(exists=True),
              help="JSON file overriding degradation parameters.")
def degrade(ctx, in_dir, out_dir, params_path):
    """Degrade every PNG in a directory to surveillance quality."""
    params = ctx.config.degrade
    if params_path:
        data = json.loads(Path(params_path).read_text(encoding="utf-8"))
        if "noise_size" in data:
            data["noise_size"] = tuple(data["noise_size"])
        params = DegradeParams(**data)
    in_dir, out_dir = Path(in_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for path in sorted(in_dir.glob("*.png")):
        degrade_chain(load_png(path), params).save_png(out_dir / path.name)
        count += 1
    click.echo(f"degraded {count} images into {out_dir}")


@main.command("review-serve")
@pass_ctx
@click.option("--batch-dir", required=True, type=click.Path(exists=True))
@click.option("--port", type=int, default=8017)
@click.option("--ui-dir", type=click.Path(), default=None,
              help="Static UI bundle to serve (defaults to frontend/dist "
                   "when present).")
def review_serve(ctx, batch_dir, port, ui_dir):
    """Serve the review API (and UI, if built) over a batch directory."""
    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    serve(batch_dir, port=port, ui_dir=ui_dir)


@main.command()
@pass_ctx
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--batch-dir", required=True, type=click.Path(exists=True))
@click.option("--discards", "discards_path", type=click.Path(exists=True),
              help="Discard list JSON; defaults to no rejections.")
@click.option("--out", "out_path", required=True, type=click.Path())
def merge(ctx, manifest_path, batch_dir, discards_path, out_path):
    """Merge accepted synthetic candidates into a training manifest."""
    base = load_manifest(manifest_path)
    ledger = gen.read_ledger(batch_dir)
    plan = gen.plan_from_config(gen.read_batch_config(batch_dir))
    discards = (aug.read_discards(discards_path) if discards_path
                else aug.DiscardList(batch=ledger.batch_id, rejected=()))
    try:
        accepted = aug.apply_discards(ledger, discards, plan.n_images)
        images = aug.accepted_images(ledger, base.schema, accepted,
                                     path_prefix=f"{batch_dir}/")
        merged = aug.merge_manifests(base, images)
    except (aug.AugmentError, ValueError) as exc:
        raise click.ClickException(str(exc))
    save_manifest(merged, out_path)
    summary = {
        "batch": ledger.batch_id,
        "target": plan.target,
        "required": plan.n_images,
        "accepted": len(accepted),
        "shortfall": max(0, plan.n_images - len(accepted)),
        "rejected": list(discards.rejected),
    }
    Path(f"{out_path}.merge.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if summary["shortfall"]:
        click.echo(f"warning: only {len(accepted)} of {plan.n_images} "
                   f"required images accepted (shortfall "
                   f"{summary['shortfall']})", err=True)
    before = positive_train_count(base, plan.target)
    after = positive_train_count(merged, plan.target)
    click.echo(f"wrote {out_path}: {plan.target} positives {before} -> {after}")


@main.command("emit-weights")
@pass_ctx
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--weight-augmented", type=float, default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
def emit_weights(ctx, manifest_path, weight_augmented, out_path):
    """Export per-record training targets and loss weights."""
    if weight_augmented is None:
        weight_augmented = ctx.config.weight_augmented
    m = load_manifest(manifest_path)
    rows = emit_weight_matrix(m, weight_augmented, out_path)
    click.echo(f"wrote {out_path} ({rows} train rows)")


@main.command("metrics")
@pass_ctx
@click.option("--preds", "preds_path", required=True, type=click.Path(exists=True),
              help="CSV of 0/1 predictions, header = attribute names.")
@click.option("--truth", "truth_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def metrics_cmd(ctx, preds_path, truth_path, out_path):
    """Per-attribute metrics report from prediction/truth matrices."""
    def read_matrix(path):
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.reader(f)
            header = next(reader)
            data = [[int(v) for v in row] for row in reader if row]
        return header, np.asarray(data, dtype=np.int64)

    names_p, preds = read_matrix(preds_path)
    names_t, truth = read_matrix(truth_path)
    if names_p != names_t:
        raise click.ClickException("prediction/truth attribute headers differ")
    try:
        counts = confusion(preds, truth)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    write_metrics_report(out_path, names_p, counts)
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
