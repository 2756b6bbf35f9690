"""Sweep CSV loading against the engine's normative schema.

The engine emits one row per (instance, seed, m, variant, advertiser); the
run-level columns (revenue, tv_to_opt, log_prob_opt, log_prob_ref) repeat
across an auction's advertiser rows and are deduplicated here before
aggregation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path


class SchemaError(Exception):
    pass


class EmptyData(Exception):
    pass


COLUMNS = [
    "instance_id",
    "seed",
    "m",
    "variant",
    "advertiser_id",
    "expected_reward",
    "normalized_reward",
    "expected_utility",
    "payment",
    "revenue",
    "log_prob_opt",
    "log_prob_ref",
    "tv_to_opt",
    "wall_time_ms",
]

RUN_KEY = ("instance_id", "seed", "m", "variant")


@dataclass(frozen=True)
class Row:
    instance_id: str
    seed: int
    m: int
    variant: str
    advertiser_id: int
    expected_reward: float
    normalized_reward: float
    expected_utility: float
    payment: float
    revenue: float
    log_prob_opt: float
    log_prob_ref: float
    tv_to_opt: float
    wall_time_ms: float


def load_rows(path: str | Path) -> list[Row]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != COLUMNS:
            raise SchemaError(
                f"{path}: header {reader.fieldnames} does not match the sweep schema"
            )
        rows = [
            Row(
                instance_id=raw["instance_id"],
                seed=int(raw["seed"]),
                m=int(raw["m"]),
                variant=raw["variant"],
                advertiser_id=int(raw["advertiser_id"]),
                expected_reward=float(raw["expected_reward"]),
                normalized_reward=float(raw["normalized_reward"]),
                expected_utility=float(raw["expected_utility"]),
                payment=float(raw["payment"]),
                revenue=float(raw["revenue"]),
                log_prob_opt=float(raw["log_prob_opt"]),
                log_prob_ref=float(raw["log_prob_ref"]),
                tv_to_opt=float(raw["tv_to_opt"]),
                wall_time_ms=float(raw["wall_time_ms"]),
            )
            for raw in reader
        ]
    if not rows:
        raise EmptyData(f"{path}: no data rows")
    return rows


def per_run(rows: list[Row]) -> list[Row]:
    """One row per auction run: drops duplicated advertiser rows."""
    seen = set()
    out = []
    for row in rows:
        key = (row.instance_id, row.seed, row.m, row.variant)
        if key not in seen:
            seen.add(key)
            out.append(row)
    return out
