"""Streaming detection: one pass over an order file, O(pools) memory.

Orders are consumed line by line from JSONL without materializing any pool's
full history; each pool keeps a constant-size profit tracker plus its
profit-taking event list. Input must be time-sorted per pool (on-chain logs
are block-ordered, and the generator emits sorted streams).
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from .dataio import SchemaError, anonymize_address, ingest
from .metrics import ProfitReport, ProfitTracker
from .validators import DEFAULT_CONFIG, HeuristicConfig, Verdict, classify_pool

PathLike = Union[str, Path]


@dataclass
class DetectSummary:
    pools: int = 0
    orders_read: int = 0
    orders_skipped_unknown_pool: int = 0
    pools_without_profile: int = 0
    label_counts: Dict[str, int] = field(default_factory=dict)


def stream_detect(pools_file: PathLike, orders_file: PathLike,
                  profiles_file: Optional[PathLike] = None,
                  cfg: HeuristicConfig = DEFAULT_CONFIG,
                  out_csv: Optional[PathLike] = None,
                  anonymize: bool = False,
                  ) -> Tuple[DetectSummary, Dict[str, Tuple[ProfitReport, Verdict]]]:
    """Classify every pool in one streaming pass over the order file."""
    dataset = ingest(pools_file, orders_file=None, profiles_file=profiles_file)
    trackers: Dict[str, ProfitTracker] = {
        address: ProfitTracker(pool, first_month_seconds=cfg.first_month_seconds)
        for address, pool in dataset.pools.items()
    }

    summary = DetectSummary(pools=len(trackers))
    loads = json.loads
    get_tracker = trackers.get
    orders_read = 0
    skipped = 0
    with open(orders_file) as handle:
        for lineno, line in enumerate(handle, start=1):
            if len(line) < 3:
                continue
            try:
                row = loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(orders_file, lineno, f"invalid JSON: {exc}") from exc
            orders_read += 1
            tracker = get_tracker(row.get("pool_address"))
            if tracker is None:
                skipped += 1
                continue
            try:
                tracker.add(row["timestamp"], row["category"], row["sender"],
                            float(row["y_paired"]), float(row["y_base"]),
                            row["price_base"], row.get("gas_fee_usd", 0.0))
            except (KeyError, ValueError, TypeError) as exc:
                raise SchemaError(orders_file, lineno, f"bad order row: {exc}") from exc
    summary.orders_read = orders_read
    summary.orders_skipped_unknown_pool = skipped

    results: Dict[str, Tuple[ProfitReport, Verdict]] = {}
    for address, tracker in trackers.items():
        pool = dataset.pools[address]
        profile = dataset.profile_for(pool)
        if profile is None:
            summary.pools_without_profile += 1
        report = tracker.report()
        verdict = classify_pool(pool, profile, report, tracker.events, None, cfg)
        results[address] = (report, verdict)
        summary.label_counts[verdict.label.value] = (
            summary.label_counts.get(verdict.label.value, 0) + 1)

    if out_csv is not None:
        write_verdicts_csv(results, out_csv, anonymize=anonymize)
    return summary, results


def write_verdicts_csv(results: Dict[str, Tuple[ProfitReport, Verdict]],
                       path: PathLike, anonymize: bool = False) -> None:
    """Stable-ordered verdict export, one row per pool."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([
            "pool_address", "label", "honeypot_pass", "profit_pass",
            "owner_activity_pass", "realized_usd", "unrealized_1m_usd",
            "max_impact", "c",
        ])
        for address in sorted(results):
            report, verdict = results[address]
            writer.writerow([
                anonymize_address(address) if anonymize else address,
                verdict.label.value,
                int(verdict.honeypot_pass),
                int(verdict.profit_pass),
                int(verdict.owner_activity_pass),
                repr(report.realized_profit_usd),
                repr(report.unrealized_first_month_usd),
                repr(report.max_impact),
                report.profit_taking_count,
            ])


def read_verdicts_csv(path: PathLike) -> Dict[str, str]:
    """pool_address -> label map from a verdicts CSV."""
    labels: Dict[str, str] = {}
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            labels[row["pool_address"]] = row["label"]
    return labels
