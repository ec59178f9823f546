"""Command-line interface.

Subcommands cover the full pipeline: generate a synthetic corpus, run the
streaming detector, export feature matrices, train a classifier, run the
shrinking-window sweep, and produce population reports. Failures exit with
one machine-parsable stderr line: `error code=<n> kind=<type> msg=...`
(2 schema error, 3 empty dataset, 4 configuration error).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import analysis, dataio, earlywarn, features, pipeline, synth
from .config import ConfigError, load_heuristic_config, parse_kv_file
from .dataio import EmptyDataset, SchemaError
from .earlywarn import ClassifierKind, CorpusBundle, DEFAULT_D_LIST
from .synth import InfeasibleConfig
from .validators import DEFAULT_CONFIG, HeuristicConfig, Label


class UsageError(Exception):
    """Bad command line; mapped to the configuration-error exit code."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _heuristic_config(args) -> HeuristicConfig:
    if getattr(args, "config", None):
        return load_heuristic_config(args.config)
    return DEFAULT_CONFIG


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    options = parse_kv_file(args.config)
    counts, seed, overrides, chooser = synth.corpus_spec_from_options(options)
    if not counts:
        raise ConfigError(f"{args.config}: no scenario counts configured")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    orders_path = out / "orders.jsonl"

    pools = []
    profiles: Dict[str, object] = {}
    labels: List[tuple] = []
    total_orders = 0
    with open(orders_path, "w") as handle:
        for scenario in synth.build_corpus(counts, seed, overrides, chooser,
                                           sort_by_address=True):
            pools.append(scenario.pool)
            profiles[scenario.pool.paired_address] = scenario.profile
            labels.append((scenario.pool.pool_address, scenario.true_label))
            for order in scenario.orders:
                row = dataio.order_to_row(order)
                if args.anonymize:
                    row = dataio.anonymize_row(row, ("hash", "pool_address", "sender"))
                handle.write(dataio.dump_row(row) + "\n")
            total_orders += len(scenario.orders)

    dataio.write_pools_jsonl(pools, out / "pools.jsonl", anonymize=args.anonymize)
    profiles = dict(sorted(profiles.items()))
    dataio.write_profiles_jsonl(profiles, out / "profiles.jsonl",
                                anonymize=args.anonymize)
    with open(out / "labels.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["pool_address", "true_label"])
        for address, label in sorted(labels):
            writer.writerow([
                dataio.anonymize_address(address) if args.anonymize else address,
                label,
            ])
    print(f"generated {len(pools)} pools, {total_orders} orders -> {out}")
    return 0


def cmd_detect(args) -> int:
    cfg = _heuristic_config(args)
    summary, _ = pipeline.stream_detect(
        args.pools, args.orders, profiles_file=args.profiles, cfg=cfg,
        out_csv=args.out, anonymize=args.anonymize)
    if summary.pools_without_profile:
        print(f"warning: {summary.pools_without_profile} pools without a security "
              "profile; honeypot layer treated as pass", file=sys.stderr)
    counts = ", ".join(f"{k}={v}" for k, v in sorted(summary.label_counts.items()))
    print(f"detect: {summary.pools} pools, {summary.orders_read} orders "
          f"({summary.orders_skipped_unknown_pool} skipped) -> {counts}")
    return 0


def _load_labels_csv(path) -> Dict[str, bool]:
    slid_kinds = {"SLID", "SlidSlow", "SlidMultiAddress"}
    labels: Dict[str, bool] = {}
    with open(path, newline="") as handle:
        for row in csv.DictReader(handle):
            value = row.get("true_label") or row.get("label") or ""
            labels[row["pool_address"]] = value in slid_kinds or value == "1"
    return labels


def cmd_features(args) -> int:
    cfg = _heuristic_config(args)
    dataset = dataio.ingest(args.pools, args.orders, profiles_file=args.profiles)
    if args.labels:
        label_map = _load_labels_csv(args.labels)
    else:
        analysis.enrich(dataset, cfg)
        label_map = {address: verdict.label == Label.SLID
                     for address, (_, verdict) in dataset.enriched.items()}
    vectors = []
    for address, pool in dataset.pools.items():
        vectors.append(features.extract_features(
            pool, dataset.orders.get(address, []), args.window, cfg,
            label=label_map.get(address, False)))
    features.write_features_csv(vectors, args.out, anonymize=args.anonymize)
    print(f"features: {len(vectors)} pools at window d={args.window} -> {args.out}")
    return 0


def cmd_train(args) -> int:
    vectors = features.read_features_csv(args.features)
    kind = ClassifierKind(args.model)
    grid = earlywarn.DEFAULT_HYPER_GRID[kind] if args.grid else None
    model = earlywarn.train(vectors, kind, seed=args.seed, hyper_grid=grid)
    earlywarn.save_model(model, args.out)
    print(f"trained {kind.value} on {len(vectors)} rows "
          f"(hyperparameters {model.hyperparameters}) -> {args.out}")
    return 0


def _bundle_from_corpus(corpus_dir, cfg: HeuristicConfig) -> CorpusBundle:
    corpus = Path(corpus_dir)
    dataset = dataio.ingest(corpus / "pools.jsonl", corpus / "orders.jsonl",
                            profiles_file=_existing(corpus / "profiles.jsonl"))
    analysis.enrich(dataset, cfg)
    labels = {address: verdict.label == Label.SLID
              for address, (_, verdict) in dataset.enriched.items()}
    return CorpusBundle(
        pools=list(dataset.pools.values()),
        orders_by_pool=dataset.orders,
        profiles=dataset.profiles,
        labels=labels,
        cfg=cfg,
    )


def _existing(path: Path) -> Optional[Path]:
    return path if path.exists() else None


def cmd_sweep(args) -> int:
    cfg = _heuristic_config(args)
    d_list = [int(part) for part in args.d_list.split(",") if part.strip()]
    if not d_list:
        raise UsageError("--d-list must name at least one window")
    bundle = _bundle_from_corpus(args.corpus, cfg)
    grid = ({kind: earlywarn.DEFAULT_HYPER_GRID[kind] for kind in ClassifierKind}
            if args.grid else None)
    results = earlywarn.sweep(bundle, d_list, seed=args.seed, hyper_grid=grid)
    with open(args.out, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["detector", "d", "accuracy", "precision", "recall",
                         "f1", "tp", "fp", "tn", "fn"])
        for m in results:
            writer.writerow([m.detector, m.window_days, repr(m.accuracy),
                             repr(m.precision), repr(m.recall), repr(m.f1),
                             *m.confusion])
    speedup = earlywarn.window_speedup(results)
    print(f"sweep: {len(results)} detector/window cells -> {args.out} "
          f"(window speedup {speedup:.2f}x)")
    return 0


def cmd_report(args) -> int:
    cfg = _heuristic_config(args)
    if args.corpus:
        corpus = Path(args.corpus)
        pools_file = corpus / "pools.jsonl"
        orders_file = corpus / "orders.jsonl"
        profiles_file = _existing(corpus / "profiles.jsonl")
    else:
        if not (args.pools and args.orders):
            raise UsageError("report needs --corpus or both --pools and --orders")
        pools_file, orders_file, profiles_file = args.pools, args.orders, args.profiles
    dataset = dataio.ingest(pools_file, orders_file, profiles_file=profiles_file)
    labels = None
    if args.labels_filter:
        analysis.enrich(dataset, cfg)
        labels = {part.strip() for part in args.labels_filter.split(",")}
    report = analysis.analyze(dataset, args.kind, labels=labels, cfg=cfg)
    analysis.write_report_csv(report, args.out)
    extra = ""
    if args.kind == "age":
        extra = f" (alive after month: {report.alive_after_fraction(30):.3f})"
    print(f"report {args.kind}: {report.pool_count} pools -> {args.out}{extra}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> _Parser:
    parser = _Parser(prog="slidscan",
                     description="Liquidity-pool drain forensics toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit a synthetic labeled corpus")
    p.add_argument("--config", required=True, help="corpus key=value config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--anonymize", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("detect", help="run the rule-based detector (streaming)")
    p.add_argument("--pools", required=True)
    p.add_argument("--orders", required=True)
    p.add_argument("--profiles")
    p.add_argument("--config", help="heuristic key=value config file")
    p.add_argument("--out", required=True, help="verdicts CSV path")
    p.add_argument("--anonymize", action="store_true")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("features", help="export the feature matrix CSV")
    p.add_argument("--pools", required=True)
    p.add_argument("--orders", required=True)
    p.add_argument("--profiles")
    p.add_argument("--labels", help="labels CSV (pool_address,true_label)")
    p.add_argument("--window", type=int, required=True, help="days of history")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--anonymize", action="store_true")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train a classifier on a feature CSV")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True,
                   choices=[k.value for k in ClassifierKind])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", action="store_true",
                   help="grid-search hyperparameters by 5-fold F1")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="shrinking-window detector evaluation")
    p.add_argument("--corpus", required=True,
                   help="directory with pools/orders/profiles JSONL")
    p.add_argument("--d-list", default=",".join(str(d) for d in DEFAULT_D_LIST))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", action="store_true")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="age / profit / trend population reports")
    p.add_argument("--kind", required=True, choices=["age", "profit", "trend"])
    p.add_argument("--corpus")
    p.add_argument("--pools")
    p.add_argument("--orders")
    p.add_argument("--profiles")
    p.add_argument("--labels-filter",
                   help="restrict to verdict labels, e.g. SLID")
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SchemaError as exc:
        return _fail(2, exc)
    except EmptyDataset as exc:
        return _fail(3, exc)
    except (ConfigError, InfeasibleConfig, UsageError) as exc:
        return _fail(4, exc)
    except FileNotFoundError as exc:
        return _fail(4, exc)


def _fail(code: int, exc: Exception) -> int:
    kind = type(exc).__name__
    message = str(exc).replace("\n", " ")
    print(f'error code={code} kind={kind} msg="{message}"', file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
