"""Scikit-learn style wrapper around the training and scoring pipeline.

QuaternionKGE follows the estimator contract: hyperparameters are stored
verbatim in ``__init__``, all learned state lives in trailing-underscore
attributes set by ``fit``, and ``get_params`` / ``clone`` work as usual.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data import Dataset, FilterIndex, build_filter_index, make_dataset
from .model import score_batch
from .training import TrainConfig, train
from .validation import check_triples


class QuaternionKGE(BaseEstimator):
    """Quaternion knowledge-graph embedding model with a fit/predict API.

    Parameters mirror TrainConfig. ``fit`` accepts either a Dataset (its
    valid split drives best-model selection) or a plain (n, 3) array of
    (head, relation, tail) train triples.
    """

    def __init__(self, variant="quatde", dim=100, epochs=3000, nbatches=100,
                 learning_rate=0.1, regularization=0.1, negatives=10,
                 validation_interval=300, seed=0):
        self.variant = variant
        self.dim = dim
        self.epochs = epochs
        self.nbatches = nbatches
        self.learning_rate = learning_rate
        self.regularization = regularization
        self.negatives = negatives
        self.validation_interval = validation_interval
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            variant=self.variant,
            dim=self.dim,
            epochs=self.epochs,
            nbatches=self.nbatches,
            learning_rate=self.learning_rate,
            regularization=self.regularization,
            negatives=self.negatives,
            validation_interval=self.validation_interval,
            seed=self.seed,
        )

    def fit(self, X, y=None):
        """Train embeddings on X (a Dataset or an (n, 3) triple array)."""
        if isinstance(X, Dataset):
            dataset = X
        else:
            triples = check_triples(X)
            n_entities = int(max(triples[:, 0].max(), triples[:, 2].max())) + 1
            n_relations = int(triples[:, 1].max()) + 1
            dataset = make_dataset(
                entities=[str(i) for i in range(n_entities)],
                relations=[str(i) for i in range(n_relations)],
                train=triples,
                valid=np.empty((0, 3), dtype=np.int64),
                test=np.empty((0, 3), dtype=np.int64),
            )
        result = train(dataset, self._config())
        self.dataset_ = dataset
        self.train_result_ = result
        self.params_ = result.params
        self.n_entities_ = dataset.n_entities
        self.n_relations_ = dataset.n_relations
        self.filter_index_ = build_filter_index(dataset)
        return self

    def predict(self, X) -> np.ndarray:
        """Plausibility scores for an (n, 3) triple array; higher is better."""
        check_is_fitted(self, "params_")
        triples = check_triples(X, self.n_entities_, self.n_relations_)
        return score_batch(
            triples[:, 0], triples[:, 1], triples[:, 2],
            self.params_, self.variant,
        )

    def rank(self, X, filter_index: FilterIndex = None,
             tie_policy: str = "optimistic") -> np.ndarray:
        """Filtered (head_rank, tail_rank) rows for an (n, 3) triple array.

        Filtering defaults to the index built from the fit dataset.
        """
        from .evaluation import rank_triple
        from .model import CandidateScorer

        check_is_fitted(self, "params_")
        triples = check_triples(X, self.n_entities_, self.n_relations_)
        if filter_index is None:
            filter_index = self.filter_index_
        scorer = CandidateScorer(self.params_, self.variant)
        out = np.empty((len(triples), 2), dtype=np.int64)
        for i, triple in enumerate(triples):
            pair = rank_triple(
                triple, self.params_, self.variant, filter_index,
                tie_policy, scorer,
            )
            out[i] = (pair.head, pair.tail)
        return out
