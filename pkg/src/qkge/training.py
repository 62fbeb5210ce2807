"""Training loop: Bernoulli negative sampling, Adagrad, best-model retention.

Each epoch shuffles the train split, cuts it into ``nbatches`` mini
batches, pairs every positive with ``negatives`` corrupted triples, and
applies one Adagrad update per mini batch. Validation runs every
``validation_interval`` epochs (and at the final epoch); the parameters
with the best validation Hit@10 are the ones returned.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, FilterIndex, build_filter_index, relation_stats
from .model import (
    TABLE_NAMES,
    ModelParams,
    check_variant,
    initialize_params,
    loss_and_grads_batch,
)

logger = logging.getLogger(__name__)

ADAGRAD_EPS = 1e-10
MAX_SAMPLE_ATTEMPTS = 100


@dataclass
class TrainConfig:
    variant: str = "quatde"
    dim: int = 100
    epochs: int = 3000
    nbatches: int = 100
    learning_rate: float = 0.1
    regularization: float = 0.1
    negatives: int = 10
    validation_interval: int = 300
    seed: int = 0

    def __post_init__(self):
        check_variant(self.variant)
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.nbatches < 1:
            raise ValueError(f"nbatches must be >= 1, got {self.nbatches}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.regularization < 0:
            raise ValueError(
                f"regularization must be >= 0, got {self.regularization}"
            )
        if self.negatives < 1:
            raise ValueError(f"negatives must be >= 1, got {self.negatives}")
        if self.validation_interval < 1:
            raise ValueError(
                f"validation_interval must be >= 1, got {self.validation_interval}"
            )


@dataclass(frozen=True)
class BernoulliStats:
    """Per-relation probability of corrupting the head side.

    For relation r with tails-per-head tph and heads-per-tail hpt, the
    head is replaced with probability tph / (tph + hpt), so the side with
    more alternatives is corrupted more often and fewer false negatives
    are drawn. Relations unseen in train fall back to 0.5.
    """

    head_prob: np.ndarray

    def head_probability(self, relation: int) -> float:
        return float(self.head_prob[relation])

    @classmethod
    def from_stats(cls, stats: dict, n_relations: int) -> "BernoulliStats":
        p = np.full(n_relations, 0.5)
        for r, s in stats.items():
            p[r] = s.tph / (s.tph + s.hpt)
        p.setflags(write=False)
        return cls(p)

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "BernoulliStats":
        return cls.from_stats(relation_stats(dataset), dataset.n_relations)

    @classmethod
    def uniform(cls, n_relations: int) -> "BernoulliStats":
        return cls.from_stats({}, n_relations)


def sample_negative(triple, stats: BernoulliStats, filter_index: FilterIndex,
                    rng) -> tuple:
    """Corrupt one side of a positive triple, avoiding known-true triples.

    Rejection-samples up to MAX_SAMPLE_ATTEMPTS times; if every draw hits
    a known-true triple the last draw is returned anyway, with a warning.
    """
    h, r, t = (int(x) for x in triple)
    corrupt_head = rng.random() < stats.head_probability(r)
    n_entities = filter_index.n_entities
    candidate = (h, r, t)
    for _ in range(MAX_SAMPLE_ATTEMPTS):
        e = int(rng.integers(n_entities))
        candidate = (e, r, t) if corrupt_head else (h, r, e)
        if candidate not in filter_index:
            return candidate
    logger.warning(
        "negative sampling exhausted %d attempts for (%d, %d, %d); "
        "returning a known-true triple", MAX_SAMPLE_ATTEMPTS, h, r, t,
    )
    return candidate


class AdagradState:
    """Per-parameter accumulated squared gradients, one array per table."""

    def __init__(self, accumulators: dict, eps: float = ADAGRAD_EPS):
        self.accumulators = accumulators
        self.eps = eps

    @classmethod
    def from_params(cls, params: ModelParams, eps: float = ADAGRAD_EPS):
        return cls(
            {name: np.zeros_like(params.table(name).data) for name in TABLE_NAMES},
            eps=eps,
        )

    def table(self, name: str) -> np.ndarray:
        return self.accumulators[name]


def adagrad_step(params: ModelParams, state: AdagradState, grads, lr: float):
    """Apply one Adagrad update from a list of (table, rows, grads) slots.

    Rows referenced by several slots have their gradients summed before
    the squared-gradient accumulation, so a row updated through two paths
    behaves exactly like one row with the combined gradient.
    """
    per_table = {}
    for name, idx, g in grads:
        per_table.setdefault(name, []).append((idx, g))
    for name, entries in per_table.items():
        idx = np.concatenate([e[0] for e in entries])
        g = np.concatenate([e[1] for e in entries], axis=0)
        rows, inverse = np.unique(idx, return_inverse=True)
        total = np.zeros((len(rows),) + g.shape[1:])
        np.add.at(total, inverse, g)
        acc = state.table(name)
        acc[rows] += total * total
        params.table(name).data[rows] -= lr * total / (np.sqrt(acc[rows]) + state.eps)


def train_epoch(dataset: Dataset, params: ModelParams, state: AdagradState,
                config: TrainConfig, stats: BernoulliStats,
                filter_index: FilterIndex, rng) -> float:
    """Run one epoch; returns the mean loss per positive triple."""
    train = dataset.train
    order = rng.permutation(len(train))
    total_loss = 0.0
    for batch_idx in np.array_split(order, config.nbatches):
        if len(batch_idx) == 0:
            continue
        pos = train[batch_idx]
        neg = np.empty((len(pos) * config.negatives, 3), dtype=np.int64)
        row = 0
        for triple in pos:
            for _ in range(config.negatives):
                neg[row] = sample_negative(triple, stats, filter_index, rng)
                row += 1
        triples = np.concatenate([pos, neg], axis=0)
        labels = np.concatenate(
            [np.ones(len(pos)), -np.ones(len(neg))]
        )
        losses, grads = loss_and_grads_batch(
            triples[:, 0], triples[:, 1], triples[:, 2], labels,
            params, config.variant, config.regularization,
        )
        total_loss += float(losses.sum())
        adagrad_step(params, state, grads, config.learning_rate)
    return total_loss / len(train)


@dataclass(frozen=True)
class TrainingLogEntry:
    epoch: int
    loss: float
    valid_mrr: float = None
    valid_hit10: float = None


@dataclass
class TrainResult:
    params: ModelParams
    log: list = field(default_factory=list)
    best_epoch: int = None
    best_hit10: float = None


def train(dataset: Dataset, config: TrainConfig) -> TrainResult:
    """Train from scratch on a dataset; returns the best-validation params.

    The filter index spans train, valid and test so negatives are never
    accidentally true. If the valid split is empty no validation runs and
    the final-epoch parameters are returned.
    """
    from .evaluation import evaluate  # deferred: evaluation imports this module

    rng = np.random.default_rng(config.seed)
    params = initialize_params(
        dataset.n_entities, dataset.n_relations, config.dim, rng
    )
    state = AdagradState.from_params(params)
    stats = BernoulliStats.from_dataset(dataset)
    filter_index = build_filter_index(dataset)

    result = TrainResult(params=params)
    best_params = None
    for epoch in range(1, config.epochs + 1):
        loss = train_epoch(
            dataset, params, state, config, stats, filter_index, rng
        )
        validate = (
            len(dataset.valid) > 0
            and (epoch % config.validation_interval == 0 or epoch == config.epochs)
        )
        if validate:
            report = evaluate(
                dataset.valid, params, config.variant, filter_index
            )
            metrics = report.overall.both
            entry = TrainingLogEntry(
                epoch, loss, valid_mrr=metrics.mrr, valid_hit10=metrics.hit10
            )
            logger.info(
                "epoch %d: loss %.6f, valid MRR %.4f, valid Hit@10 %.4f",
                epoch, loss, metrics.mrr, metrics.hit10,
            )
            if result.best_hit10 is None or metrics.hit10 > result.best_hit10:
                result.best_hit10 = metrics.hit10
                result.best_epoch = epoch
                best_params = params.copy()
        else:
            entry = TrainingLogEntry(epoch, loss)
            logger.debug("epoch %d: loss %.6f", epoch, loss)
        result.log.append(entry)
    if best_params is not None:
        result.params = best_params
    return result
