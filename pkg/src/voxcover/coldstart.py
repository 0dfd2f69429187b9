"""Best-of-K selection and per-type adaptive quantile filtering of
reasoning traces by reward."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import InputError, InvalidRecordError


@dataclass(frozen=True)
class RewardRecord:
    """One item's K candidate traces with their rewards."""

    item_id: str
    task_type: str
    candidates: tuple  # of (trace_ref, reward)

    def __post_init__(self):
        cands = tuple((str(ref), float(r)) for ref, r in self.candidates)
        if not cands:
            raise InvalidRecordError(f"record {self.item_id!r} has no candidates")
        for _, r in cands:
            if not np.isfinite(r) or r < 0:
                raise InputError(f"record {self.item_id!r}: rewards must be finite and >= 0")
        object.__setattr__(self, "candidates", cands)


@dataclass(frozen=True)
class ColdStartResult:
    """Kept (item, best trace, best reward) triples plus the per-type
    thresholds that produced them and per-type retention counts."""

    kept: tuple  # of (item_id, trace_ref, reward)
    thresholds: dict
    retained_per_type: dict
    total_per_type: dict


def best_of_k(record: RewardRecord):
    """Highest-reward candidate; ties keep the lowest index."""
    best_idx = 0
    best_reward = record.candidates[0][1]
    for i, (_, r) in enumerate(record.candidates):
        if r > best_reward:
            best_idx = i
            best_reward = r
    return record.candidates[best_idx]


def type_thresholds(best_rewards, q: float = 0.5):
    """Per-type quantile (linear interpolation) of best rewards."""
    if not 0.0 < q < 1.0:
        raise InputError(f"q must lie in (0, 1), got {q}")
    grouped = defaultdict(list)
    for task_type, reward in best_rewards:
        grouped[task_type].append(reward)
    return {t: float(np.quantile(rs, q)) for t, rs in sorted(grouped.items())}


def filter_records(records, q: float = 0.5) -> ColdStartResult:
    """Keep each item's best trace when its reward clears the per-type
    quantile threshold and is strictly positive."""
    records = list(records)
    if not records:
        raise InputError("no records to filter")
    best = [(rec, *best_of_k(rec)) for rec in records]
    thresholds = type_thresholds([(rec.task_type, r) for rec, _, r in best], q=q)
    kept = []
    retained = defaultdict(int)
    total = defaultdict(int)
    for rec, ref, reward in best:
        total[rec.task_type] += 1
        if reward >= thresholds[rec.task_type] and reward > 0:
            kept.append((rec.item_id, ref, reward))
            retained[rec.task_type] += 1
    return ColdStartResult(
        kept=tuple(kept),
        thresholds=thresholds,
        retained_per_type={t: retained.get(t, 0) for t in sorted(total)},
        total_per_type=dict(sorted(total.items())),
    )
