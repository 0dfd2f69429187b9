"""Reward functions for RL fine-tuning plus benchmark scoring.

Three task-specific rewards (exact match for multiple choice, mean relative
accuracy for numbers, Levenshtein ratio for free text) are combined with a
format reward into a weighted composite. Group advantages normalize rewards
within a rollout group. Benchmark scoring aggregates the same primitives
per task type and adds EM-1 / EM-R for verbal answers.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import _kernels
from .errors import InputError, InvalidGroupError, ManifestMismatchError

# Accuracy thresholds; literal values to avoid float drift from arange.
DEFAULT_THRESHOLDS = (0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95)
DEFAULT_EPSILON = 1e-8

_ZERO_STD = 1e-12

_ARTICLES = frozenset({"a", "an", "the"})


class AnswerKind(str, Enum):
    MULTIPLE_CHOICE = "multiple_choice"
    NUMERICAL = "numerical"
    VERBAL = "verbal"


@dataclass(frozen=True)
class RewardConfig:
    """Weights, thresholds, and convention switches for reward computation.

    ``mra_convention``: "paper" compares relative error against the
    thresholds directly (error < tau); "complement" uses error < 1 - tau,
    the convention of the benchmark's public tooling.
    ``edit_cost``: "unit" gives all edits cost 1; "indel" charges
    substitutions 2, matching the common Levenshtein-ratio helper.
    """

    lambda1: float = 1.0
    lambda2: float = 1.0
    thresholds: tuple = DEFAULT_THRESHOLDS
    epsilon: float = DEFAULT_EPSILON
    mra_convention: str = "paper"
    edit_cost: str = "unit"
    think_tag: str = "think"
    answer_tag: str = "answer"

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise InputError("lambda weights must be nonnegative")
        ts = tuple(float(t) for t in self.thresholds)
        if not ts:
            raise InputError("thresholds must be nonempty")
        if any(not 0.0 < t < 1.0 for t in ts):
            raise InputError(f"thresholds must lie in (0, 1), got {ts}")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise InputError("thresholds must be strictly increasing")
        if self.epsilon <= 0:
            raise InputError("epsilon must be positive")
        if self.mra_convention not in ("paper", "complement"):
            raise InputError(f"unknown mra_convention {self.mra_convention!r}")
        if self.edit_cost not in ("unit", "indel"):
            raise InputError(f"unknown edit_cost {self.edit_cost!r}")
        object.__setattr__(self, "thresholds", ts)


@dataclass(frozen=True)
class CompositeResult:
    """Composite reward with its parts; ``task_parse_failed`` marks a
    numerical prediction that could not be parsed (task reward forced 0)."""

    total: float
    format_score: float
    task_score: float
    task_parse_failed: bool = False


def _format_regex(config: RewardConfig):
    tt, at = re.escape(config.think_tag), re.escape(config.answer_tag)
    return re.compile(
        rf"\s*<{tt}>.*?</{tt}>\s*<{at}>(.*?)</{at}>\s*",
        re.DOTALL,
    )


def extract_answer(raw_output: str, config: RewardConfig | None = None):
    """Content of the answer block if the output is well-formed, else None."""
    config = config or RewardConfig()
    for tag in (config.think_tag, config.answer_tag):
        if raw_output.count(f"<{tag}>") != 1 or raw_output.count(f"</{tag}>") != 1:
            return None
    m = _format_regex(config).fullmatch(raw_output)
    if m is None:
        return None
    answer = m.group(1).strip()
    return answer if answer else None


def format_reward(raw_output: str, config: RewardConfig | None = None) -> int:
    """1 iff the output is one think block, then one answer block with a
    non-empty answer; anything else scores 0."""
    return 1 if extract_answer(raw_output, config) is not None else 0


def _strip_fold(text: str) -> str:
    return text.strip().casefold()


def mc_reward(pred: str, gt: str) -> int:
    """Exact match after whitespace stripping and case folding."""
    return 1 if _strip_fold(pred) == _strip_fold(gt) else 0


def relative_error(pred: float, gt: float, epsilon: float = DEFAULT_EPSILON) -> float:
    """|pred - gt| / max(|gt|, epsilon).

    The epsilon guards division by zero only; for any |gt| >= epsilon the
    error is the plain relative error, so a 60% miss fails the 0.60
    threshold exactly.
    """
    return abs(pred - gt) / max(abs(gt), epsilon)


def mra_reward(pred: float, gt: float, config: RewardConfig | None = None) -> float:
    """Mean relative accuracy: the fraction of thresholds the relative
    error stays below."""
    config = config or RewardConfig()
    if not (np.isfinite(pred) and np.isfinite(gt)):
        raise InputError(f"mra_reward needs finite inputs, got pred={pred}, gt={gt}")
    err = relative_error(pred, gt, config.epsilon)
    if config.mra_convention == "paper":
        hits = sum(err < t for t in config.thresholds)
    else:
        hits = sum(err < 1.0 - t for t in config.thresholds)
    return hits / len(config.thresholds)


def normalize_verbal(text: str) -> str:
    """Lowercase, trim, and collapse internal whitespace."""
    return " ".join(text.casefold().split())


def verbal_reward(pred: str, gt: str, config: RewardConfig | None = None) -> float:
    """Levenshtein ratio 1 - D(a, b) / (|a| + |b|) on normalized text.

    Two empty strings are identical (reward 1).
    """
    config = config or RewardConfig()
    a = normalize_verbal(pred)
    b = normalize_verbal(gt)
    if not a and not b:
        return 1.0
    sub_cost = 1 if config.edit_cost == "unit" else 2
    dist = _kernels.levenshtein(a, b, sub_cost)
    return 1.0 - dist / (len(a) + len(b))


def parse_number(value) -> float | None:
    """Best-effort numeric parse of a prediction; None when hopeless."""
    if isinstance(value, (int, float)) and np.isfinite(value):
        return float(value)
    if isinstance(value, str):
        text = value.strip().replace(",", "")
        m = re.search(r"-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?", text)
        if m:
            try:
                out = float(m.group(0))
            except ValueError:
                return None
            return out if np.isfinite(out) else None
    return None


def composite_reward(
    raw_output: str,
    pred,
    gt,
    kind: AnswerKind,
    config: RewardConfig | None = None,
) -> CompositeResult:
    """lambda1 * format reward + lambda2 * task reward.

    A numerical prediction that fails to parse contributes a task reward of
    0 but still earns its format reward.
    """
    config = config or RewardConfig()
    kind = AnswerKind(kind)
    fmt = float(format_reward(raw_output, config))
    parse_failed = False
    if kind is AnswerKind.NUMERICAL:
        p = parse_number(pred)
        g = parse_number(gt)
        if g is None:
            raise InputError(f"numerical ground truth is not a number: {gt!r}")
        if p is None:
            task = 0.0
            parse_failed = True
        else:
            task = mra_reward(p, g, config)
    elif kind is AnswerKind.MULTIPLE_CHOICE:
        task = float(mc_reward(str(pred), str(gt)))
    else:
        task = verbal_reward(str(pred), str(gt), config)
    total = config.lambda1 * fmt + config.lambda2 * task
    return CompositeResult(
        total=total, format_score=fmt, task_score=task, task_parse_failed=parse_failed
    )


def group_advantages(rewards) -> np.ndarray:
    """(r - mean) / population std per group member.

    Zero-variance groups (std below 1e-12) map to all-zero advantages.
    """
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1 or len(r) < 2:
        raise InvalidGroupError(f"need at least 2 rewards in a group, got {r.shape}")
    std = float(r.std())
    if std < _ZERO_STD:
        return np.zeros_like(r)
    return (r - r.mean()) / std


def normalize_em(text: str) -> str:
    """EM normalizer: casefold, collapse whitespace, strip terminal
    punctuation, drop a leading article."""
    t = " ".join(text.casefold().split())
    t = t.rstrip(string.punctuation + " ")
    tokens = t.split()
    if tokens and tokens[0] in _ARTICLES:
        tokens = tokens[1:]
    return " ".join(tokens)


def em1(pred: str, gt_list) -> int:
    """1 iff the normalized prediction equals any normalized reference."""
    if not gt_list:
        raise InputError("gt_list must be nonempty")
    p = normalize_em(pred)
    return 1 if any(p == normalize_em(g) for g in gt_list) else 0


def _token_subsequence(needle, haystack) -> bool:
    it = iter(haystack)
    return all(tok in it for tok in needle)


def em_refined(pred: str, gt_list) -> int:
    """Refined exact match: exact hit, or token-level containment of one
    normalized answer inside the other (in either direction)."""
    if not gt_list:
        raise InputError("gt_list must be nonempty")
    p_tokens = normalize_em(pred).split()
    if not p_tokens:
        return em1(pred, gt_list)
    for g in gt_list:
        g_tokens = normalize_em(g).split()
        if not g_tokens:
            continue
        if p_tokens == g_tokens:
            return 1
        if _token_subsequence(g_tokens, p_tokens) or _token_subsequence(p_tokens, g_tokens):
            return 1
    return 0


@dataclass(frozen=True)
class ItemScore:
    id: str
    task_type: str
    answer_kind: AnswerKind
    score: float
    em1: int | None = None
    em_refined: int | None = None
    parse_failed: bool = False


@dataclass(frozen=True)
class TaskSummary:
    mean: float
    count: int
    em1_mean: float | None = None
    em_refined_mean: float | None = None


@dataclass(frozen=True)
class ScoreReport:
    """Per-task means, their unweighted overall average, and item scores."""

    per_task: dict
    overall: float
    items: tuple = field(default=())


def score_benchmark(predictions, ground_truth, config: RewardConfig | None = None) -> ScoreReport:
    """Score a prediction file against ground-truth QA pairs.

    ``predictions`` is a list of (id, raw_output, pred); every ground-truth
    id must receive exactly one prediction. Numerical items are scored by
    MRA, multiple choice by exact match, verbal by the Levenshtein ratio
    (EM-1 / EM-R reported alongside). The overall score is the unweighted
    mean of the per-task means.
    """
    config = config or RewardConfig()
    gt_by_id = {qa.id: qa for qa in ground_truth}
    if len(gt_by_id) != len(ground_truth):
        raise InputError("duplicate ids in ground truth")

    seen = set()
    duplicates = set()
    unknown = set()
    for pid, _, _ in predictions:
        if pid in seen:
            duplicates.add(pid)
        seen.add(pid)
        if pid not in gt_by_id:
            unknown.add(pid)
    missing = set(gt_by_id) - seen
    if missing or unknown or duplicates:
        raise ManifestMismatchError(
            f"prediction/ground-truth id mismatch: {len(missing)} missing, "
            f"{len(unknown)} unknown, {len(duplicates)} duplicated",
            missing=missing,
            unknown=unknown,
            duplicates=duplicates,
        )

    items = []
    for pid, _raw, pred in sorted(predictions, key=lambda t: t[0]):
        qa = gt_by_id[pid]
        kind = AnswerKind(qa.answer_kind)
        parse_failed = False
        e1 = er = None
        if kind is AnswerKind.NUMERICAL:
            p = parse_number(pred)
            if p is None:
                score = 0.0
                parse_failed = True
            else:
                score = mra_reward(p, float(qa.answer), config)
        elif kind is AnswerKind.MULTIPLE_CHOICE:
            score = float(mc_reward(str(pred), str(qa.answer)))
        else:
            refs = qa.answer if isinstance(qa.answer, (list, tuple)) else [qa.answer]
            refs = [str(r) for r in refs]
            score = max(verbal_reward(str(pred), r, config) for r in refs)
            e1 = em1(str(pred), refs)
            er = em_refined(str(pred), refs)
        items.append(
            ItemScore(
                id=pid,
                task_type=qa.task_type,
                answer_kind=kind,
                score=score,
                em1=e1,
                em_refined=er,
                parse_failed=parse_failed,
            )
        )

    per_task = {}
    for task in sorted({it.task_type for it in items}):
        group = [it for it in items if it.task_type == task]
        e1s = [it.em1 for it in group if it.em1 is not None]
        ers = [it.em_refined for it in group if it.em_refined is not None]
        per_task[task] = TaskSummary(
            mean=float(np.mean([it.score for it in group])),
            count=len(group),
            em1_mean=float(np.mean(e1s)) if e1s else None,
            em_refined_mean=float(np.mean(ers)) if ers else None,
        )
    overall = float(np.mean([s.mean for s in per_task.values()])) if per_task else 0.0
    return ScoreReport(per_task=per_task, overall=overall, items=tuple(items))
