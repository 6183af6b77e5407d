"""Operator command line: ingest -> fit / grid-search -> evaluate -> serve.

Exit codes: 0 success, 1 user or data error (bad flags, unreadable
files, schema violations), 2 unexpected internal error. All results go
to stdout, diagnostics to stderr. Every source of randomness hangs off
an explicit --seed flag defaulting to 42, and report files contain no
timestamps, so rerunning a pipeline yields byte-identical reports.

Report paths fan out: ``--report out.json`` also writes ``out.csv``
(flat delimited cells) and ``out.png`` (rendered figure) next to it.
"""

from __future__ import annotations

import csv
import functools
import json
import sys
from pathlib import Path

import click

from .core import (
    Bag,
    RawBag,
    build_vocabulary,
    index_bags,
    read_bags_jsonl,
    write_bags_jsonl,
)
from .errors import LabrecError, ParameterError
from .evaluation import (
    DEFAULT_EVAL_KS,
    DEFAULT_FOLDS,
    DEFAULT_S_GRID,
    DEFAULT_SCORING_K,
    DEFAULT_SEED,
    DEFAULT_TEST_FRACTION,
    PRIMARY_PROTOCOL,
    SECONDARY_PROTOCOL,
    EvalResult,
    GridSpec,
    SplitSpec,
    evaluate as evaluate_bags,
    evaluate_leave_out,
    grid_search,
    metrics_table_text,
    split_indices,
)
from .ingest import extract_bags, join_item_names, parse_labevents, summarize
from .persistence import load_model, save_model, source_digest
from .recommender import DEFAULT_K, DEFAULT_S, FittedModel, HyperParams, fit, recommend
from .similarity import Metric

DEFAULT_METRIC_NAMES = ",".join(m.value for m in Metric)
DEFAULT_S_LIST = ",".join(str(s) for s in DEFAULT_S_GRID)
DEFAULT_K_LIST = ",".join(str(k) for k in DEFAULT_EVAL_KS)


def guarded(fn):
    """Map exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (LabrecError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(1)
        except (SystemExit, KeyboardInterrupt, click.ClickException):
            raise
        except Exception as exc:
            click.echo(f"internal error: {exc!r}", err=True)
            raise SystemExit(2)

    return wrapper


def _parse_int_list(text: str, flag: str) -> list[int]:
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            value = int(part)
        except ValueError:
            raise ParameterError(f"{flag} expects comma-separated integers, got {part!r}")
        if value < 1:
            raise ParameterError(f"{flag} values must be >= 1, got {value}")
        values.append(value)
    if not values:
        raise ParameterError(f"{flag} must list at least one value")
    return values


def _parse_metric_list(text: str) -> list[Metric]:
    metrics = []
    for part in text.split(","):
        part = part.strip()
        if part:
            metrics.append(Metric.parse(part))
    if not metrics:
        raise ParameterError("--metrics must list at least one metric")
    return metrics


def _load_indexed_bags(path: str):
    raw_bags = read_bags_jsonl(path)
    vocabulary = build_vocabulary(raw_bags)
    return raw_bags, vocabulary, index_bags(raw_bags, vocabulary)


def _bags_for_model(raw_bags: list[RawBag], model: FittedModel) -> tuple[list[Bag], int]:
    """Map interchange bags onto the model's vocabulary.

    Items the model has never seen are dropped; bags left empty are
    counted and excluded rather than failing the run.
    """
    bags: list[Bag] = []
    dropped = 0
    for raw in raw_bags:
        indices = sorted(
            {
                idx
                for idx in (model.vocabulary.index_of(item) for item in raw.item_ids)
                if idx is not None
            }
        )
        if indices:
            bags.append(Bag(item_indices=tuple(indices)))
        else:
            dropped += 1
    return bags, dropped


def _write_json_report(path: Path, record: dict) -> None:
    path.write_text(json.dumps(record, indent=2) + "\n", encoding="utf-8")


def _write_csv_report(path: Path, fieldnames: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


@click.group()
def cli() -> None:
    """Neighbourhood-based recommender for laboratory test order entry."""


@cli.command()
@click.option("--labevents", "labevents_path", required=True, help="LABEVENTS CSV path.")
@click.option(
    "--d-labitems",
    "d_labitems_path",
    default=None,
    help="Optional D_LABITEMS CSV for display names.",
)
@click.option("--out", "out_path", required=True, help="Bags interchange file to write.")
@click.option(
    "--include-hadm-id",
    is_flag=True,
    default=False,
    help="Group bags by (subject, admission, charttime) instead of (subject, charttime).",
)
@guarded
def ingest(labevents_path, d_labitems_path, out_path, include_hadm_id) -> None:
    """Extract order bags from a LABEVENTS CSV into the interchange format."""
    parse = parse_labevents(labevents_path)
    bags = extract_bags(parse.rows, include_hadm_id=include_hadm_id)
    grouping = (
        "subject_id,hadm_id,charttime" if include_hadm_id else "subject_id,charttime"
    )
    summary = summarize(parse, bags, grouping)
    count = write_bags_jsonl(bags, out_path)
    if count == 0:
        click.echo("warning: no bags extracted", err=True)
    click.echo(f"grouping: {summary.grouping}")
    click.echo(f"rows parsed: {summary.rows_parsed}")
    click.echo(f"rows skipped (no charttime): {summary.rows_skipped_no_charttime}")
    click.echo(f"rows skipped (incomplete): {summary.rows_skipped_incomplete}")
    click.echo(f"bags extracted: {summary.bags}")
    click.echo(f"distinct items: {summary.distinct_items}")
    click.echo(f"distinct patients: {summary.distinct_patients}")
    if d_labitems_path is not None and count > 0:
        click.echo(f"item names: {d_labitems_path}")
    click.echo(f"bags written: {out_path}")


@cli.command(name="fit")
@click.option("--bags", "bags_path", required=True, help="Bags interchange file.")
@click.option("--s", "s", type=int, default=DEFAULT_S, show_default=True)
@click.option("--metric", "metric_name", default=Metric.JACCARD.value, show_default=True)
@click.option("--out", "out_path", required=True, help="Model file to write.")
@click.option(
    "--test-fraction",
    type=float,
    default=DEFAULT_TEST_FRACTION,
    show_default="1/3",
    help="Held-out fraction; 0 trains on every bag.",
)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option(
    "--d-labitems",
    "d_labitems_path",
    default=None,
    help="Item dictionary CSV; joins display names into the model vocabulary.",
)
@guarded
def fit_command(bags_path, s, metric_name, out_path, test_fraction, seed, d_labitems_path) -> None:
    """Split the bags, fit on the training side, write model and manifest."""
    raw_bags, vocabulary, bags = _load_indexed_bags(bags_path)
    if d_labitems_path is not None:
        vocabulary = join_item_names(vocabulary, d_labitems_path)
    params = HyperParams(s=s, metric=Metric.parse(metric_name))
    m = len(bags)
    if test_fraction == 0:
        train_idx, test_idx = list(range(m)), []
    else:
        train_idx, test_idx = split_indices(
            m, SplitSpec(test_fraction=test_fraction, seed=seed)
        )
    model = fit([bags[i] for i in train_idx], vocabulary, params)
    save_model(model, out_path)
    manifest = {
        "seed": seed,
        "test_fraction": test_fraction,
        "bags_total": m,
        "train_indices": train_idx,
        "test_indices": test_idx,
    }
    manifest_path = Path(f"{out_path}.split.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    click.echo(f"bags: {m}")
    click.echo(f"train: {len(train_idx)}")
    click.echo(f"test: {len(test_idx)}")
    click.echo(f"model written: {out_path}")
    click.echo(f"split manifest: {manifest_path}")
    if test_idx:
        train_path = Path(f"{out_path}.train.jsonl")
        test_path = Path(f"{out_path}.test.jsonl")
        write_bags_jsonl([raw_bags[i] for i in train_idx], train_path)
        write_bags_jsonl([raw_bags[i] for i in test_idx], test_path)
        click.echo(f"train bags: {train_path}")
        click.echo(f"test bags: {test_path}")


@cli.command(name="grid-search")
@click.option("--bags", "bags_path", required=True, help="Training bags interchange file.")
@click.option("--s", "s_list", default=DEFAULT_S_LIST, show_default=True)
@click.option("--metrics", "metrics_list", default=DEFAULT_METRIC_NAMES, show_default=True)
@click.option("--folds", type=int, default=DEFAULT_FOLDS, show_default=True)
@click.option("--scoring-k", type=int, default=DEFAULT_SCORING_K, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--report", "report_path", required=True, help="Report JSON path.")
@guarded
def grid_search_command(
    bags_path, s_list, metrics_list, folds, scoring_k, seed, report_path
) -> None:
    """Cross-validate every (s, metric) cell and report the winner."""
    _, vocabulary, bags = _load_indexed_bags(bags_path)
    grid = GridSpec(
        s_values=tuple(_parse_int_list(s_list, "--s")),
        metrics=tuple(_parse_metric_list(metrics_list)),
        folds=folds,
        scoring_k=scoring_k,
        seed=seed,
    )
    report = grid_search(bags, vocabulary, grid)
    click.echo(report.table_text())
    click.echo(
        f"best: metric={report.best.metric.value} s={report.best.s} "
        f"(mean CV MAP@{report.scoring_k} {report.best_score * 100:.2f}%)"
    )
    base = Path(report_path)
    _write_json_report(base, report.to_record())
    _write_csv_report(
        base.with_suffix(".csv"),
        ["metric", "s", "mean_cv_map"],
        [
            {"metric": name, "s": s, "mean_cv_map": repr(report.cv_scores[(name, s)])}
            for name, s in sorted(report.cv_scores)
        ],
    )
    from .figures import render_grid_figure

    render_grid_figure(report, base.with_suffix(".png"))
    click.echo(f"report written: {base}")


@cli.command(name="evaluate")
@click.option("--model", "model_path", required=True, help="Model file.")
@click.option("--bags", "bags_path", required=True, help="Held-out bags interchange file.")
@click.option("--k", "k_list", default=DEFAULT_K_LIST, show_default=True)
@click.option(
    "--report",
    "report_path",
    default=None,
    help="Optional report JSON path (also writes .csv and .png).",
)
@guarded
def evaluate_command(model_path, bags_path, k_list, report_path) -> None:
    """Score a model on held-out bags; print MAP@k and MAR@k per k."""
    model = load_model(model_path)
    raw_bags = read_bags_jsonl(bags_path)
    bags, dropped = _bags_for_model(raw_bags, model)
    if not bags:
        raise ParameterError("no bag shares any item with the model vocabulary")
    ks = _parse_int_list(k_list, "--k")
    primary = {k: evaluate_bags(model, bags, k) for k in ks}
    secondary = {}
    for k in ks:
        try:
            secondary[k] = evaluate_leave_out(model, bags, k, holdout=1, seed=DEFAULT_SEED)
        except ParameterError:
            break
    click.echo(f"bags evaluated: {len(bags)} (dropped {dropped} with no known items)")
    click.echo(metrics_table_text(primary))
    if secondary:
        click.echo("")
        click.echo("secondary leave-one-out protocol (not comparable with the above):")
        click.echo(metrics_table_text(secondary))
    if report_path is not None:
        record = {
            "kind": "evaluation_report",
            "format_version": 1,
            "model": {
                "metric": model.params.metric.value,
                "s": model.params.s,
                "m": model.m,
                "n": model.n,
                "source_digest": source_digest(
                    model.params,
                    model.vocabulary,
                    [list(model.matrix.decode_row(u)) for u in range(model.m)],
                ),
            },
            "dataset": {
                "bags_read": len(raw_bags),
                "bags_evaluated": len(bags),
                "bags_dropped_unknown_only": dropped,
            },
            "primary": _results_record(primary, PRIMARY_PROTOCOL),
        }
        if secondary:
            record["secondary_leave_out"] = _results_record(secondary, SECONDARY_PROTOCOL)
        base = Path(report_path)
        _write_json_report(base, record)
        rows = []
        for label, results in (("primary", primary), ("secondary_leave_out", secondary)):
            for k in sorted(results):
                r = results[k]
                rows.append(
                    {
                        "protocol": label,
                        "k": k,
                        "map": repr(r.map_at_k),
                        "mar": repr(r.mar_at_k),
                        "queries_evaluated": r.queries_evaluated,
                        "queries_skipped": r.queries_skipped,
                    }
                )
        _write_csv_report(
            base.with_suffix(".csv"),
            ["protocol", "k", "map", "mar", "queries_evaluated", "queries_skipped"],
            rows,
        )
        from .figures import render_metrics_figure

        render_metrics_figure(
            primary, base.with_suffix(".png"), secondary=secondary or None
        )
        click.echo(f"report written: {base}")


def _results_record(by_k: dict[int, EvalResult], protocol: dict) -> dict:
    return {
        "protocol": dict(protocol),
        "by_k": [
            {
                "k": k,
                "map": by_k[k].map_at_k,
                "mar": by_k[k].mar_at_k,
                "queries_evaluated": by_k[k].queries_evaluated,
                "queries_skipped": by_k[k].queries_skipped,
            }
            for k in sorted(by_k)
        ],
    }


@cli.command(name="recommend")
@click.option("--model", "model_path", required=True, help="Model file.")
@click.option("--items", "items_text", required=True, help="Comma-separated ids or names.")
@click.option("--k", type=int, default=DEFAULT_K, show_default=True)
@click.option(
    "--include-query-items",
    is_flag=True,
    default=False,
    help="Allow query items to appear among the recommendations.",
)
@guarded
def recommend_command(model_path, items_text, k, include_query_items) -> None:
    """Print the top-k recommended items for a partial order."""
    if k < 1:
        raise ParameterError(f"--k must be >= 1, got {k}")
    model = load_model(model_path)
    items = [part for part in (p.strip() for p in items_text.split(",")) if part]
    ranked, unknown = recommend(
        model, items, k=k, exclude_query_items=not include_query_items
    )
    if unknown:
        click.echo(f"warning: unknown items ignored: {', '.join(unknown)}", err=True)
    neighbors = max(ranked.neighbors_used, 1)
    for rank, (item, count) in enumerate(ranked.entries, start=1):
        click.echo(f"{rank}\t{item.item_id}\t{item.name}\t{count / neighbors:.4f}")


@cli.command(name="serve")
@click.option("--model", "model_path", required=True, help="Model file.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8080, show_default=True)
@click.option(
    "--cors",
    is_flag=True,
    default=False,
    help="Enable permissive CORS for UI development.",
)
@click.option(
    "--ui-dir",
    "ui_dir",
    default=None,
    help="Built UI bundle to serve at /; defaults to ./frontend/dist when present.",
)
@guarded
def serve_command(model_path, host, port, cors, ui_dir) -> None:
    """Load a model and serve the HTTP API (and UI bundle, if available)."""
    import uvicorn

    from .service import create_app

    model = load_model(model_path)
    if ui_dir is None:
        candidate = Path("frontend") / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    app = create_app(model, enable_cors=cors, static_dir=ui_dir)
    click.echo(
        f"serving model (metric={model.params.metric.value}, s={model.params.s}, "
        f"m={model.m}, n={model.n}) on {host}:{port}",
        err=True,
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


def main(argv=None) -> None:
    """Entry point that maps click's own usage failures onto exit code 1."""
    try:
        # without standalone mode click returns --help's exit code
        # instead of raising, and usage errors surface as exceptions
        code = cli.main(args=argv, standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        sys.exit(1)
    sys.exit(code if isinstance(code, int) else 0)


if __name__ == "__main__":
    main()
