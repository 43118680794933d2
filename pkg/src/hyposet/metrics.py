"""Scoring and analysis: validity/uniqueness/recovery, coverage curves,
failure-mode decomposition, empirical-posterior creativity measures, and
entropy/information-gain series.

Definitions over a run of N ordered proposals against an enumerated
admissible set H:

* validity rate   VR = #valid / N
* uniqueness rate NR = #novel / N   (order-respecting, all proposals)
* recovery rate   RR = #(valid and novel, canonical form in H) / |H|

Novelty compares canonical forms when an emission parses and exact raw text
otherwise, so every proposal has a comparison key. Each proposal lands in
exactly one failure category, resolved in this precedence order:
parse_failure, constraint_violation, invalid, duplicate_exact,
duplicate_canonical, valid_novel.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

CATEGORIES = (
    "parse_failure",
    "constraint_violation",
    "invalid",
    "duplicate_exact",
    "duplicate_canonical",
    "valid_novel",
)

TASK_ORDER = ("causal", "voxel", "bool")


@dataclass(frozen=True)
class TextEvaluation:
    """Outcome of checking one emission against an instance, before novelty.

    ``canonical`` is present whenever the text parses, including for
    constraint violations; ``valid`` means consistency with the observations.
    """

    canonical: str | None = None
    parse_error: str | None = None
    constraint_error: str | None = None
    valid: bool = False


@dataclass(frozen=True)
class ProposalRecord:
    """One scored emission."""

    index: int
    raw_text: str
    parsed: str | None
    category: str
    valid: int
    novel: int

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if (self.category == "valid_novel") != bool(self.valid and self.novel):
            raise ValueError("valid_novel must coincide with valid=1 and novel=1")
        if self.category == "parse_failure" and self.parsed is not None:
            raise ValueError("parse failures carry no parsed form")


def record_key(record: ProposalRecord) -> str:
    """Novelty comparison key: canonical form, or raw text as fallback."""
    return record.parsed if record.parsed is not None else record.raw_text


def is_novel(comparison_key: str, earlier_records) -> int:
    """1 iff no earlier record shares the comparison key."""
    return int(all(record_key(r) != comparison_key for r in earlier_records))


def make_record(
    index: int,
    raw_text: str,
    evaluation: TextEvaluation,
    earlier_records,
) -> ProposalRecord:
    """Classify one emission given everything emitted before it."""
    parsed = None if evaluation.parse_error is not None else evaluation.canonical
    key = parsed if parsed is not None else raw_text
    novel = is_novel(key, earlier_records)
    valid = int(evaluation.valid)
    if evaluation.parse_error is not None:
        category = "parse_failure"
    elif evaluation.constraint_error is not None:
        category = "constraint_violation"
    elif not valid:
        category = "invalid"
    elif not novel:
        if any(r.raw_text == raw_text for r in earlier_records):
            category = "duplicate_exact"
        else:
            category = "duplicate_canonical"
    else:
        category = "valid_novel"
    return ProposalRecord(
        index=index,
        raw_text=raw_text,
        parsed=parsed,
        category=category,
        valid=valid,
        novel=novel,
    )


@dataclass(frozen=True)
class MetricsSummary:
    vr: float
    nr: float
    rr: float
    rr_at_k: tuple[float, ...]
    failure_counts: dict[str, int]
    coverage: float
    c_count: int | None = None
    c_entropy_bits: float | None = None
    token_count: int | None = None


def _check_run(records, admissible_set):
    if len(records) == 0:
        raise ValueError("empty run: no records to score")
    if len(admissible_set) == 0:
        raise ValueError("admissible set must be nonempty")


def _recovered_flags(records, admissible_set):
    for r in records:
        yield r.valid and r.novel and r.parsed is not None and r.parsed in admissible_set


def score_run(records, admissible_set) -> MetricsSummary:
    """VR/NR/RR plus the RR@k curve, coverage, and per-category counts.

    ``admissible_set`` needs only ``len`` and ``in`` over canonical forms, so
    lazily counted sets work too.
    """
    records = tuple(records)
    _check_run(records, admissible_set)
    n = len(records)
    h = len(admissible_set)
    curve = []
    recovered = 0
    for flag in _recovered_flags(records, admissible_set):
        recovered += int(flag)
        curve.append(recovered / h)
    counts = Counter(r.category for r in records)
    return MetricsSummary(
        vr=sum(r.valid for r in records) / n,
        nr=sum(r.novel for r in records) / n,
        rr=recovered / h,
        rr_at_k=tuple(curve),
        failure_counts={c: counts.get(c, 0) for c in CATEGORIES},
        coverage=coverage_fraction(records, admissible_set),
    )


def rr_at_k(records, admissible_set) -> tuple[float, ...]:
    """Entry k is the recovery rate over the first k records; nondecreasing."""
    records = tuple(records)
    _check_run(records, admissible_set)
    h = len(admissible_set)
    out = []
    recovered = 0
    for flag in _recovered_flags(records, admissible_set):
        recovered += int(flag)
        out.append(recovered / h)
    return tuple(out)


def coverage_fraction(records, admissible_set) -> float:
    """Fraction of the admissible set hit by distinct valid canonical forms."""
    if len(admissible_set) == 0:
        raise ValueError("admissible set must be nonempty")
    hit = {
        r.parsed
        for r in records
        if r.valid and r.parsed is not None and r.parsed in admissible_set
    }
    return len(hit) / len(admissible_set)


def _entropy_bits(counts) -> float:
    total = sum(counts)
    return -sum((c / total) * math.log2(c / total) for c in counts if c) + 0.0


def pattern_entropy(records) -> float:
    """Shannon entropy (bits) of the empirical pattern distribution over the
    given records; the pattern of a record is its comparison key."""
    records = tuple(records)
    if not records:
        raise ValueError("pattern entropy needs a nonempty prefix")
    return _entropy_bits(Counter(record_key(r) for r in records).values())


def info_gain_series(records) -> tuple[float, ...]:
    """Stepwise entropy change: element t is H_t - H_{t-1} with H_0 = 0,
    so partial sums telescope back to the prefix entropies."""
    records = tuple(records)
    if not records:
        raise ValueError("information gain needs at least one record")
    seen: Counter[str] = Counter()
    series = []
    previous = 0.0
    for r in records:
        seen[record_key(r)] += 1
        current = _entropy_bits(seen.values())
        series.append(current - previous)
        previous = current
    return tuple(series)


def creativity_measures(
    records,
    admissible_set,
    epsilon: float = 0.0,
    *,
    posterior: str = "empirical",
) -> tuple[int, float]:
    """(hypothesis count above the plausibility threshold, posterior entropy
    in bits).

    The default posterior is the empirical frequency distribution over the
    run's valid canonical hypotheses; ``posterior="uniform"`` switches to the
    uniform distribution over the whole admissible set. A run with no valid
    proposals scores (0, 0.0).
    """
    if not 0 <= epsilon < 1:
        raise ValueError("epsilon must satisfy 0 <= epsilon < 1")
    if posterior == "uniform":
        h = len(admissible_set)
        if h == 0:
            raise ValueError("admissible set must be nonempty")
        c_count = h if 1 / h > epsilon else 0
        return c_count, math.log2(h)
    if posterior != "empirical":
        raise ValueError(f"unknown posterior {posterior!r}")
    counts = Counter(r.parsed for r in records if r.valid and r.parsed is not None)
    if not counts:
        return 0, 0.0
    total = sum(counts.values())
    probs = [c / total for c in counts.values()]
    c_count = sum(1 for p in probs if p > epsilon)
    return c_count, _entropy_bits(counts.values())


# --- aggregation --------------------------------------------------------------

@dataclass(frozen=True)
class AggregateRow:
    task: str
    difficulty: str
    metric: str
    mean: float
    std: float

    @property
    def formatted(self) -> str:
        return format_mean_std(self.mean, self.std)


def format_mean_std(mean: float, std: float) -> str:
    return f"{mean * 100:.2f}% ± {std * 100:.2f}%"


def aggregate(
    rows,
    metrics: tuple[str, ...] = ("vr", "nr", "rr"),
    *,
    difficulty_order: dict[str, int] | None = None,
) -> list[AggregateRow]:
    """Mean and sample standard deviation (n-1 divisor; single value -> 0)
    per task x difficulty group, ordered task, then difficulty, then metric.

    ``rows`` are mappings or objects exposing task, difficulty, and each
    metric as an attribute or key.
    """

    def get(row, name):
        if isinstance(row, dict):
            return row[name]
        return getattr(row, name)

    groups: dict[tuple[str, str], list] = {}
    for row in rows:
        groups.setdefault((get(row, "task"), get(row, "difficulty")), []).append(row)
    if not groups:
        raise ValueError("nothing to aggregate")

    def task_rank(task):
        return (TASK_ORDER.index(task), "") if task in TASK_ORDER else (len(TASK_ORDER), task)

    def difficulty_rank(difficulty):
        if difficulty_order and difficulty in difficulty_order:
            return (difficulty_order[difficulty], "")
        return (len(difficulty_order or ()), difficulty)

    out = []
    for task, difficulty in sorted(
        groups, key=lambda td: (task_rank(td[0]), difficulty_rank(td[1]))
    ):
        members = groups[(task, difficulty)]
        for metric in metrics:
            values = [float(get(row, metric)) for row in members]
            mean = sum(values) / len(values)
            if len(values) == 1:
                std = 0.0
            else:
                std = math.sqrt(
                    sum((v - mean) ** 2 for v in values) / (len(values) - 1)
                )
            out.append(AggregateRow(task, difficulty, metric, mean, std))
    return out
