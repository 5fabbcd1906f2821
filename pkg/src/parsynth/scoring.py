"""Attribute weakness scoring and ranking.

Each attribute gets three sub-scores (0 worst, 2 best) and their sum:

* training support: 0 when the positive training fraction is strictly
  under ``low_train_fraction`` (there is no medium case for this criterion),
  else 2;
* test performance, from test F1: above ``test_high`` scores 2, the closed
  interval [``test_low``, ``test_high``] scores 1, below scores 0;
* train-to-test drop, ``train F1 - test F1``: below ``drop_small`` scores 2
  (a negative drop is small), the closed interval up to ``drop_big`` scores
  1, above scores 0.

Low totals mark attributes worth augmenting.  Rankings sort ascending by
total with ties broken by position in the schema; cross-dataset aggregation
counts, per attribute name, how many datasets put it in their top-k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TEST_BANDS = ("Low", "Medium", "High")
DROP_BANDS = ("Big", "Medium", "Small")


@dataclass(frozen=True)
class CriteriaThresholds:
    low_train_fraction: float = 0.03
    test_high: float = 80.0
    test_low: float = 50.0
    drop_small: float = 15.0
    drop_big: float = 30.0

    def __post_init__(self):
        if not 0 < self.low_train_fraction < 1:
            raise ValueError("low_train_fraction must be in (0, 1)")
        if self.test_low >= self.test_high:
            raise ValueError("test_low must be below test_high")
        if self.drop_small >= self.drop_big:
            raise ValueError("drop_small must be below drop_big")


@dataclass(frozen=True)
class AttributeScore:
    attribute: str
    low_train_score: int
    test_score: int
    drop_score: int
    total: int
    evidence: tuple[float, float, int, int]  # train_f1, test_f1, pos, total

    @property
    def low_train(self) -> bool:
        return self.low_train_score == 0

    @property
    def test_band(self) -> str:
        return TEST_BANDS[self.test_score]

    @property
    def drop_band(self) -> str:
        return DROP_BANDS[self.drop_score]


def score_attribute(attribute: str, train_f1: float, test_f1: float,
                    positive_train: int, total_train: int,
                    thresholds: CriteriaThresholds = CriteriaThresholds(),
                    ) -> AttributeScore:
    if total_train <= 0:
        raise ValueError(f"{attribute}: total_train must be positive")
    if not (math.isfinite(train_f1) and math.isfinite(test_f1)):
        raise ValueError(f"{attribute}: non-finite F1 input")
    t = thresholds
    low_train_score = 0 if positive_train / total_train < t.low_train_fraction else 2
    if test_f1 > t.test_high:
        test_score = 2
    elif test_f1 >= t.test_low:
        test_score = 1
    else:
        test_score = 0
    drop = train_f1 - test_f1
    if drop < t.drop_small:
        drop_score = 2
    elif drop <= t.drop_big:
        drop_score = 1
    else:
        drop_score = 0
    return AttributeScore(
        attribute=attribute,
        low_train_score=low_train_score,
        test_score=test_score,
        drop_score=drop_score,
        total=low_train_score + test_score + drop_score,
        evidence=(train_f1, test_f1, positive_train, total_train),
    )


def is_excluded(name: str, exclude_tags) -> bool:
    return any(name.startswith(t) or name.endswith(t) for t in exclude_tags)


@dataclass(frozen=True)
class RankingReport:
    """Full ascending-by-total ordering after exclusion, with a top-k cut."""

    entries: tuple[tuple[str, int], ...]
    k: int
    excluded: tuple[str, ...] = ()

    @property
    def top(self) -> tuple[tuple[str, int], ...]:
        return self.entries[: self.k]

    @property
    def top_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.top)

    def bands(self) -> dict[int, list[str]]:
        """Attribute names grouped by total, over the full ordering."""
        out: dict[int, list[str]] = {}
        for name, total in self.entries:
            out.setdefault(total, []).append(name)
        return out


def rank_attributes(scores: list[AttributeScore], exclude=frozenset(),
                    k: int | None = None) -> RankingReport:
    """Ascending ranking: worst totals first, schema order inside ties."""
    kept = []
    dropped = []
    for idx, s in enumerate(scores):
        if is_excluded(s.attribute, exclude):
            dropped.append(s.attribute)
        else:
            kept.append((s.total, idx, s.attribute))
    if k is None:
        k = len(kept)
    if k > len(kept):
        raise ValueError(
            f"k={k} exceeds the {len(kept)} attributes left after exclusion")
    kept.sort()
    return RankingReport(
        entries=tuple((name, total) for total, _, name in kept),
        k=k,
        excluded=tuple(dropped),
    )


def aggregate_cross_dataset(reports: list[RankingReport], k: int,
                            ) -> list[tuple[str, int]]:
    """How many datasets place each attribute in their top-k.

    Attributes are keyed by name exactly as spelled in each dataset's
    schema.  Every attribute appearing in any report is listed, including
    zero-count ones; output is sorted by descending count, ties broken by
    first appearance across the reports' orderings.
    """
    if not reports:
        raise ValueError("aggregate_cross_dataset needs at least one report")
    first_seen: dict[str, int] = {}
    seq = 0
    for rep in reports:
        for name, _ in rep.entries:
            if name not in first_seen:
                first_seen[name] = seq
                seq += 1
    counts = {name: 0 for name in first_seen}
    for rep in reports:
        for name, _ in rep.entries[: min(k, len(rep.entries))]:
            counts[name] += 1
    return sorted(counts.items(), key=lambda kv: (-kv[1], first_seen[kv[0]]))
