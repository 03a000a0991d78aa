"""Batch command-line interface.

Subcommands: generate, extract, train, score, predict, aggregate,
evaluate, emit-sql.  Data goes to files or standard output; diagnostics
go to standard error.  Exit codes:

* 0 success
* 1 usage error
* 2 data or validation error
* 3 numerical fitting failure (non-convergence, separation, rank)
* 4 privacy denial

Every command is deterministic given its inputs (plus the seed for
generate; set SOURCE_DATE_EPOCH to pin the timestamp train embeds in
artifacts).  Flags override values from an optional ``--config`` JSON
file whose keys are the long flag names with dashes as underscores.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import codegen, metrics, pipeline
from .dates import parse_iso_date
from .errors import (
    DataValidationError,
    GradPredictError,
    NumericalFitError,
    PrivacyDeniedError,
)
from .featurize import FEATURE_COLUMNS, extract_features, load_feature_table
from .privacy import AuditLog, default_policy, load_policy
from .registry import format_decimal, load_registry_dir, write_registry
from .synthgen import GenConfig, generate_population

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3
EXIT_PRIVACY = 4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1, not argparse's default 2
        raise _UsageError(message)


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def _load_run_config(args) -> dict:
    path = getattr(args, "config", None)
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise DataValidationError(f"config {path} must hold a JSON object")
    return raw


def _resolve(args, config: dict, key: str, default=None, required: bool = False,
             parse=None):
    """Flag value if given, else config value, else default."""
    value = getattr(args, key, None)
    if value is None:
        value = config.get(key, default)
        if value is not None and parse is not None:
            value = parse(value)
    if value is None and required:
        raise _UsageError(f"missing required option --{key.replace('_', '-')}")
    return value


def _policy_and_audit(args, config: dict):
    policy_path = _resolve(args, config, "policy")
    policy = load_policy(policy_path) if policy_path else default_policy()
    audit_path = _resolve(args, config, "audit_log", default="privacy_audit.ndjson")
    return policy, AuditLog(audit_path)


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="utf-8"), True


def _write_rows(path: str | None, header: list[str], rows: list[list[str]]) -> None:
    handle, owned = _open_out(path)
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if owned:
            handle.close()


# ---------------------------------------------------------------------------
# subcommands


def _cmd_generate(args) -> int:
    gen_config = GenConfig.from_file(args.config)
    registry = generate_population(gen_config, seed=args.seed)
    paths = write_registry(registry, args.out_dir)
    _err(f"generated {len(registry.students)} students into {args.out_dir}")
    for name in ("students", "study_rights", "credits"):
        _err(f"  {paths[name]}")
    return EXIT_OK


def _cmd_extract(args) -> int:
    config = _load_run_config(args)
    data_dir = _resolve(args, config, "data_dir", required=True)
    observation = _resolve(args, config, "observation_date", required=True,
                           parse=str)
    horizon = _resolve(args, config, "label_horizon")
    policy, audit_log = _policy_and_audit(args, config)

    registry = load_registry_dir(data_dir)
    columns = None
    if args.columns:
        columns = [c.strip() for c in args.columns.split(",") if c.strip()]
    table = extract_features(
        registry,
        parse_iso_date(observation),
        parse_iso_date(horizon) if horizon else None,
        columns=columns,
        policy=policy,
        audit_log=audit_log,
        include_boundary_start=args.include_boundary_start,
    )
    out = _resolve(args, config, "out")
    if out is None or out == "-":
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell_text(row, name) for name in table.columns])
    else:
        table.to_csv(out)
    _err(f"extracted {len(table)} cohort rows at {observation}")
    return EXIT_OK


def _cell_text(row, name: str) -> str:
    value = row.value(name)
    if value is None:
        return ""
    if name in ("sum_of_cr", "distance_to_validity_end"):
        return format_decimal(float(value))
    if name == "study_right_id":
        return str(value)
    return str(int(value))


def _cmd_train(args) -> int:
    config = _load_run_config(args)
    observation = _resolve(args, config, "observation_date", required=True, parse=str)
    horizon = _resolve(args, config, "label_horizon")
    alpha = _resolve(args, config, "alpha", default=0.05, parse=float)
    policy, audit_log = _policy_and_audit(args, config)

    table = load_feature_table(
        args.features,
        observation_date=parse_iso_date(observation),
        label_horizon=parse_iso_date(horizon) if horizon else None,
        purpose="training",
        policy=policy,
        audit_log=audit_log,
    )
    artifact = pipeline.train_model(args.model, table, alpha=float(alpha))
    pipeline.save_artifact(artifact, args.out)
    kept = [t for t in artifact.terms if t != "constant"]
    _err(f"trained {artifact.model_id} on n={artifact.n}: kept {', '.join(kept) or 'nothing'}"
         + (f"; dropped {', '.join(artifact.dropped_terms)}" if artifact.dropped_terms else ""))
    return EXIT_OK


def _load_table_for(args, config, purpose: str):
    policy, audit_log = _policy_and_audit(args, config)
    return load_feature_table(args.features, purpose=purpose,
                              policy=policy, audit_log=audit_log)


def _cmd_score(args) -> int:
    config = _load_run_config(args)
    artifact = pipeline.load_artifact(args.artifact)
    table = _load_table_for(args, config, "scoring")
    rows = [[row.study_right_id, repr(pipeline.score(artifact, row))]
            for row in table.rows]
    _write_rows(_resolve(args, config, "out"), ["study_right_id", "score"], rows)
    return EXIT_OK


def _cmd_predict(args) -> int:
    config = _load_run_config(args)
    pm2 = pipeline.load_artifact(args.pm2)
    pm3 = pipeline.load_artifact(args.pm3)
    pm1 = pipeline.load_artifact(args.pm1) if args.pm1 else None
    threshold = float(_resolve(args, config, "threshold", default=0.5, parse=float))
    table = _load_table_for(args, config, "scoring")

    rows = []
    for row in table.rows:
        outcome = pipeline.predict_two_stage(pm2, pm3, row, threshold=threshold)
        p1 = repr(pipeline.score(pm1, row)) if pm1 is not None else ""
        rows.append([
            outcome.study_right_id,
            p1,
            repr(outcome.p_graduate_4y),
            "" if outcome.time_to_degree is None else repr(outcome.time_to_degree),
            outcome.category.value,
        ])
    header = ["study_right_id", "p_graduate", "p_graduate_4y", "time_to_degree", "category"]
    _write_rows(_resolve(args, config, "out"), header, rows)
    return EXIT_OK


def _cmd_aggregate(args) -> int:
    config = _load_run_config(args)
    artifact = pipeline.load_artifact(args.artifact)
    table = _load_table_for(args, config, "aggregation")
    totals = pipeline.expected_graduates(artifact, table, group_key=args.group_by)
    rows = [[group, repr(value)] for group, value in totals.items()]
    _write_rows(_resolve(args, config, "out"), ["group", "expected_graduates"], rows)
    return EXIT_OK


def _read_predictions(path: str) -> dict[str, dict[str, str]]:
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            return {row["study_right_id"]: row for row in reader}
    except (OSError, KeyError) as exc:
        raise DataValidationError(f"cannot read predictions {path}: {exc}") from exc


def _cmd_evaluate(args) -> int:
    config = _load_run_config(args)
    predictions = _read_predictions(args.predictions)
    table = _load_table_for(args, config, "evaluation")

    if args.kind == "bands":
        predicted, actual = [], []
        for row in table.rows:
            pred = predictions.get(row.study_right_id)
            if pred is None or not pred.get("time_to_degree"):
                continue
            if row.semesters_to_degree is None:
                continue
            predicted.append(float(pred["time_to_degree"]))
            actual.append(row.semesters_to_degree)
        bands = [int(b) for b in args.bands.split(",")]
        report = metrics.precision_bands(predicted, actual, bands)
        rows = [[name, repr(pct)] for name, pct in report.percentages.items()]
        _write_rows(_resolve(args, config, "out"), ["band", "percentage"], rows)
        _err(report.to_text())
        return EXIT_OK

    threshold = float(_resolve(args, config, "threshold", default=0.5, parse=float))
    probabilities, labels = [], []
    for row in table.rows:
        pred = predictions.get(row.study_right_id)
        if pred is None or row.graduates_in_4y is None:
            continue
        probabilities.append(float(pred["p_graduate_4y"]))
        labels.append(row.graduates_in_4y)
    counts = metrics.confusion_counts(probabilities, labels, threshold)
    _write_rows(
        _resolve(args, config, "out"),
        ["tp", "fp", "tn", "fn", "threshold"],
        [[str(counts.tp), str(counts.fp), str(counts.tn), str(counts.fn), repr(threshold)]],
    )
    return EXIT_OK


def _cmd_emit_sql(args) -> int:
    config = _load_run_config(args)
    mapping = None
    if args.column_map:
        mapping = {}
        for item in args.column_map.split(","):
            if "=" not in item:
                raise _UsageError(f"bad --column-map entry {item!r}, expected term=column")
            term, column = item.split("=", 1)
            mapping[term.strip()] = column.strip()
    spec = codegen.SqlViewSpec(
        view_name=args.view_name,
        source_table=args.source_table,
        key_column=args.key_column,
        column_mapping=mapping,
        threshold=float(_resolve(args, config, "threshold", default=0.5, parse=float)),
        output_column=args.output_column,
    )
    if args.artifact:
        sql = codegen.emit_sql_view(pipeline.load_artifact(args.artifact), spec)
    else:
        if not (args.pm2 and args.pm3):
            raise _UsageError("emit-sql needs --artifact, or both --pm2 and --pm3")
        sql = codegen.emit_two_stage_sql(
            pipeline.load_artifact(args.pm2),
            pipeline.load_artifact(args.pm3),
            spec,
        )
    out = _resolve(args, config, "out")
    if out is None or out == "-":
        sys.stdout.write(sql)
    else:
        Path(out).write_text(sql, encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(sub, *, features: bool = False) -> None:
    sub.add_argument("--config", help="optional JSON file of default option values")
    sub.add_argument("--policy", help="privacy policy JSON (default: built-in policy)")
    sub.add_argument("--audit-log", dest="audit_log",
                     help="privacy audit trail path (default: privacy_audit.ndjson)")
    if features:
        sub.add_argument("--features", required=True, help="feature table CSV")
        sub.add_argument("--out", help="output path (default: stdout)")


def build_parser() -> _Parser:
    parser = _Parser(prog="gradpredict",
                     description="graduation probability and time-to-degree pipeline")
    commands = parser.add_subparsers(dest="command", metavar="command")

    sub = commands.add_parser("generate", help="generate a synthetic registry")
    sub.add_argument("--config", required=True, help="generator config JSON")
    sub.add_argument("--out-dir", dest="out_dir", required=True)
    sub.add_argument("--seed", type=int, help="override the config seed")
    sub.set_defaults(func=_cmd_generate)

    sub = commands.add_parser("extract", help="extract cohort features at a date")
    _add_common(sub)
    sub.add_argument("--data-dir", dest="data_dir", help="registry CSV directory")
    sub.add_argument("--observation-date", dest="observation_date",
                     help="cohort observation date (YYYY-MM-DD)")
    sub.add_argument("--label-horizon", dest="label_horizon",
                     help="horizon date enabling the graduated label")
    sub.add_argument("--columns", help="comma-separated requested columns")
    sub.add_argument("--include-boundary-start", action="store_true",
                     dest="include_boundary_start",
                     help="admit rights starting exactly on the 2005-08-01 boundary")
    sub.add_argument("--out", help="features CSV path (default: stdout)")
    sub.set_defaults(func=_cmd_extract)

    sub = commands.add_parser("train", help="fit PM1, PM2, or PM3")
    _add_common(sub)
    sub.add_argument("--model", required=True, choices=["pm1", "pm2", "pm3"])
    sub.add_argument("--features", required=True)
    sub.add_argument("--observation-date", dest="observation_date")
    sub.add_argument("--label-horizon", dest="label_horizon")
    sub.add_argument("--alpha", type=float, help="elimination threshold (default 0.05)")
    sub.add_argument("--out", required=True, help="artifact JSON path")
    sub.set_defaults(func=_cmd_train)

    sub = commands.add_parser("score", help="score rows with one artifact")
    _add_common(sub, features=True)
    sub.add_argument("--artifact", required=True)
    sub.set_defaults(func=_cmd_score)

    sub = commands.add_parser("predict", help="two-stage graduation prediction")
    _add_common(sub, features=True)
    sub.add_argument("--pm2", required=True, help="PM2 artifact JSON")
    sub.add_argument("--pm3", required=True, help="PM3 artifact JSON")
    sub.add_argument("--pm1", help="optional PM1 artifact for p_graduate")
    sub.add_argument("--threshold", type=float)
    sub.set_defaults(func=_cmd_predict)

    sub = commands.add_parser("aggregate", help="expected graduates per group")
    _add_common(sub, features=True)
    sub.add_argument("--artifact", required=True)
    sub.add_argument("--group-by", dest="group_by", default="all",
                     choices=["field", "gender", "all"])
    sub.set_defaults(func=_cmd_aggregate)

    sub = commands.add_parser("evaluate", help="prediction accuracy report")
    _add_common(sub, features=True)
    sub.add_argument("--predictions", required=True, help="predict output CSV")
    sub.add_argument("--kind", default="bands", choices=["bands", "confusion"])
    sub.add_argument("--bands", default="0,1,2",
                     help="comma-separated band widths (default 0,1,2)")
    sub.add_argument("--threshold", type=float)
    sub.set_defaults(func=_cmd_evaluate)

    sub = commands.add_parser("emit-sql", help="emit CREATE VIEW SQL for artifacts")
    sub.add_argument("--config", help="optional JSON file of default option values")
    sub.add_argument("--artifact", help="single artifact JSON")
    sub.add_argument("--pm2", help="PM2 artifact (two-stage view)")
    sub.add_argument("--pm3", help="PM3 artifact (two-stage view)")
    sub.add_argument("--view-name", dest="view_name", required=True)
    sub.add_argument("--source-table", dest="source_table", required=True)
    sub.add_argument("--key-column", dest="key_column", default="study_right_id")
    sub.add_argument("--threshold", type=float)
    sub.add_argument("--column-map", dest="column_map",
                     help="term=column pairs, comma separated")
    sub.add_argument("--output-column", dest="output_column")
    sub.add_argument("--out", help="SQL output path (default: stdout)")
    sub.set_defaults(func=_cmd_emit_sql)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except _UsageError as exc:
        _err(f"usage error: {exc}")
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except PrivacyDeniedError as exc:
        _err(f"privacy denial: {exc}")
        return EXIT_PRIVACY
    except NumericalFitError as exc:
        _err(f"numerical failure: {exc}")
        return EXIT_NUMERIC
    except DataValidationError as exc:
        _err(f"data error: {exc}")
        return EXIT_DATA
    except GradPredictError as exc:
        _err(str(exc))
        return EXIT_DATA


#: Documented operation name for the dispatch entry point.
run = main


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
