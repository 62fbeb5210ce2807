"""Filtered link-prediction metrics and triple classification.

Ranking protocol: for each test triple the tail is scored against every
entity with the same head and relation, ranks count only competitors that
do not form another known-true triple, and the head side is ranked the
same way. Ties go to the test entity under the default "optimistic"
policy ("pessimistic" counts them against it).
"""

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data import FilterIndex
from .errors import EmptySplitError
from .model import CandidateScorer, ModelParams
from .training import BernoulliStats, sample_negative

TIE_POLICIES = ("optimistic", "pessimistic")

HIT_LEVELS = (1, 3, 10)


def check_tie_policy(tie_policy: str):
    if tie_policy not in TIE_POLICIES:
        raise ValueError(
            f"unknown tie policy {tie_policy!r}; expected one of {TIE_POLICIES}"
        )


@dataclass(frozen=True)
class Metrics:
    """Mean rank, mean reciprocal rank and Hit@{1,3,10} over a rank list."""

    mr: float
    mrr: float
    hit1: float
    hit3: float
    hit10: float

    @classmethod
    def from_ranks(cls, ranks) -> "Metrics":
        ranks = np.asarray(ranks, dtype=np.float64)
        if ranks.size == 0:
            raise EmptySplitError("cannot compute metrics over zero ranks")
        hits = {n: float(np.mean(ranks <= n)) for n in HIT_LEVELS}
        return cls(
            mr=float(ranks.mean()),
            mrr=float(np.mean(1.0 / ranks)),
            hit1=hits[1],
            hit3=hits[3],
            hit10=hits[10],
        )

    def to_dict(self) -> dict:
        return {
            "mr": self.mr, "mrr": self.mrr,
            "hit1": self.hit1, "hit3": self.hit3, "hit10": self.hit10,
        }


@dataclass(frozen=True)
class GroupMetrics:
    """Metrics over both corruption sides plus each side separately."""

    both: Metrics
    head: Metrics
    tail: Metrics
    n_triples: int

    @classmethod
    def from_ranks(cls, head_ranks, tail_ranks) -> "GroupMetrics":
        head_ranks = np.asarray(head_ranks)
        tail_ranks = np.asarray(tail_ranks)
        return cls(
            both=Metrics.from_ranks(np.concatenate([head_ranks, tail_ranks])),
            head=Metrics.from_ranks(head_ranks),
            tail=Metrics.from_ranks(tail_ranks),
            n_triples=len(head_ranks),
        )

    def to_dict(self) -> dict:
        return {
            "n_triples": self.n_triples,
            "both": self.both.to_dict(),
            "head": self.head.to_dict(),
            "tail": self.tail.to_dict(),
        }


@dataclass(frozen=True)
class RankingReport:
    overall: GroupMetrics
    per_relation: dict
    per_category: dict = None


def rank_from_scores(scores, target: int, filtered=None,
                     tie_policy: str = "optimistic") -> int:
    """Filtered rank of ``target`` within a full candidate score vector.

    ``filtered`` lists candidate indices to ignore (other known-true
    answers); the target itself never competes against itself, whether or
    not it appears in ``filtered``.
    """
    check_tie_policy(tie_policy)
    scores = np.asarray(scores)
    target_score = scores[target]
    mask = np.ones(len(scores), dtype=bool)
    if filtered is not None:
        mask[list(filtered)] = False
    mask[target] = False
    competitors = scores[mask]
    if tie_policy == "optimistic":
        return 1 + int(np.count_nonzero(competitors > target_score))
    return 1 + int(np.count_nonzero(competitors >= target_score))


class RankPair(NamedTuple):
    head: int
    tail: int


def rank_triple(triple, params: ModelParams, variant: str,
                filter_index: FilterIndex, tie_policy: str = "optimistic",
                scorer: CandidateScorer = None) -> RankPair:
    """Filtered head and tail ranks of one triple.

    Pass a prebuilt CandidateScorer when ranking many triples against the
    same parameters; otherwise one is built per call.
    """
    if scorer is None:
        scorer = CandidateScorer(params, variant)
    h, r, t = (int(x) for x in triple)
    tail_rank = rank_from_scores(
        scorer.all_tails(h, r), t, filter_index.true_tails(h, r), tie_policy
    )
    head_rank = rank_from_scores(
        scorer.all_heads(r, t), h, filter_index.true_heads(r, t), tie_policy
    )
    return RankPair(head=head_rank, tail=tail_rank)


def evaluate(triples, params: ModelParams, variant: str,
             filter_index: FilterIndex, *, tie_policy: str = "optimistic",
             categories: dict = None) -> RankingReport:
    """Rank every triple both ways and aggregate metrics.

    ``categories`` optionally maps relation id to a cardinality category
    label ("1-1", "1-N", ...); when given, the report carries a matching
    per-category breakdown. Relations without an entry group under "?".
    """
    check_tie_policy(tie_policy)
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    if len(triples) == 0:
        raise EmptySplitError("cannot evaluate an empty triple list")
    scorer = CandidateScorer(params, variant)
    head_ranks = np.empty(len(triples), dtype=np.int64)
    tail_ranks = np.empty(len(triples), dtype=np.int64)
    for i, triple in enumerate(triples):
        pair = rank_triple(
            triple, params, variant, filter_index, tie_policy, scorer
        )
        head_ranks[i] = pair.head
        tail_ranks[i] = pair.tail

    relations = triples[:, 1]
    per_relation = {}
    for r in sorted(set(int(x) for x in relations)):
        sel = relations == r
        per_relation[r] = GroupMetrics.from_ranks(head_ranks[sel], tail_ranks[sel])

    per_category = None
    if categories is not None:
        labels = np.array([categories.get(int(r), "?") for r in relations])
        per_category = {}
        for cat in sorted(set(labels)):
            sel = labels == cat
            per_category[cat] = GroupMetrics.from_ranks(
                head_ranks[sel], tail_ranks[sel]
            )

    return RankingReport(
        overall=GroupMetrics.from_ranks(head_ranks, tail_ranks),
        per_relation=per_relation,
        per_category=per_category,
    )


def report_to_dict(report: RankingReport, relation_names=None) -> dict:
    """JSON-ready dict; relation ids become names when a vocab is given."""
    def relation_key(r):
        return relation_names[r] if relation_names is not None else str(r)

    out = {
        "overall": report.overall.to_dict(),
        "per_relation": {
            relation_key(r): g.to_dict() for r, g in report.per_relation.items()
        },
    }
    if report.per_category is not None:
        out["per_category"] = {
            cat: g.to_dict() for cat, g in report.per_category.items()
        }
    return out


def report_to_json(report: RankingReport, relation_names=None) -> str:
    return json.dumps(report_to_dict(report, relation_names), indent=2,
                      sort_keys=True)


def report_to_tsv(report: RankingReport, relation_names=None) -> str:
    """Flat TSV: one row per (group, side), fixed metric columns."""
    rows = [("group", "side", "mr", "mrr", "hit1", "hit3", "hit10", "n_triples")]

    def add_group(name, group):
        for side in ("both", "head", "tail"):
            m = getattr(group, side)
            rows.append((
                name, side, f"{m.mr:.4f}", f"{m.mrr:.6f}", f"{m.hit1:.6f}",
                f"{m.hit3:.6f}", f"{m.hit10:.6f}", str(group.n_triples),
            ))

    add_group("overall", report.overall)
    for r, g in report.per_relation.items():
        name = relation_names[r] if relation_names is not None else f"relation:{r}"
        add_group(name, g)
    if report.per_category is not None:
        for cat, g in report.per_category.items():
            add_group(f"category:{cat}", g)
    return "\n".join("\t".join(row) for row in rows) + "\n"


@dataclass(frozen=True)
class ClassificationThresholds:
    """Score cutoffs for triple classification: score >= cutoff is true.

    Relations without their own learned cutoff use the global one.
    """

    per_relation: dict
    default: float

    def threshold(self, relation: int) -> float:
        return self.per_relation.get(int(relation), self.default)


def _best_threshold(scores: np.ndarray, labels: np.ndarray) -> float:
    # candidate cutoffs: below min, midpoints of adjacent distinct scores,
    # above max; ascending scan, first best wins, so ties are deterministic
    distinct = np.unique(scores)
    candidates = [distinct[0] - 1.0]
    candidates.extend((distinct[:-1] + distinct[1:]) / 2.0)
    candidates.append(distinct[-1] + 1.0)
    best_cut, best_acc = None, -1.0
    for cut in candidates:
        acc = float(np.mean(np.where(scores >= cut, 1.0, -1.0) == labels))
        if acc > best_acc:
            best_acc, best_cut = acc, float(cut)
    return best_cut


def learn_thresholds(scores, labels, relations) -> ClassificationThresholds:
    """Fit per-relation cutoffs (plus a global fallback) on labelled scores.

    Each cutoff maximizes accuracy on its relation's scores; labels are
    +1 / -1.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    relations = np.asarray(relations, dtype=np.int64)
    if scores.size == 0:
        raise EmptySplitError("cannot learn thresholds from zero scores")
    default = _best_threshold(scores, labels)
    per_relation = {}
    for r in sorted(set(int(x) for x in relations)):
        sel = relations == r
        per_relation[r] = _best_threshold(scores[sel], labels[sel])
    return ClassificationThresholds(per_relation=per_relation, default=default)


def classify(scores, relations, thresholds: ClassificationThresholds) -> np.ndarray:
    """Labels (+1 / -1) for scored triples under learned cutoffs."""
    scores = np.asarray(scores, dtype=np.float64)
    cuts = np.array([thresholds.threshold(r) for r in np.asarray(relations)])
    return np.where(scores >= cuts, 1, -1).astype(np.int64)


def generate_classification_negatives(triples, stats: BernoulliStats,
                                      filter_index: FilterIndex,
                                      rng) -> np.ndarray:
    """One corrupted triple per positive, same corruption rule as training."""
    triples = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
    out = np.empty_like(triples)
    for i, triple in enumerate(triples):
        out[i] = sample_negative(triple, stats, filter_index, rng)
    return out
