"""Parameter tables and the quaternion scoring function with analytic gradients.

Two scoring variants share one parameter layout:

* ``"quatde"`` maps each entity embedding through its own transfer vector and
  the relation's transfer vector before the relational rotation:
  score(h, r, t) = inner( (Q_h ⊗ p̂_h ⊗ v̂_r) ⊗ ŵ_r , Q_t ⊗ p̂_t ⊗ v̂_r )
* ``"quate"`` drops the transfer step entirely:
  score(h, r, t) = inner( Q_h ⊗ ŵ_r , Q_t )

where ⊗ is the componentwise Hamilton product and a hat marks componentwise
normalization to unit quaternions. Entity embeddings enter raw; only the
relation embedding and the transfer vectors are normalized, and the tables
store raw (un-normalized) rows. Higher score means more plausible.

Scoring is read-only over the parameters and may run from many threads;
anything that mutates tables (the optimizer) must be serialized externally.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import quaternion as qt
from .errors import IndexOutOfRangeError, LengthMismatchError
from .quaternion import QuaternionVector

VARIANTS = ("quate", "quatde")

#: Table names, in checkpoint serialization order.
TABLE_NAMES = ("entity", "relation", "entity_transfer", "relation_transfer")

#: Normalization guard used inside scoring and gradients: only exactly-zero
#: rows are degenerate. Regularized training legitimately shrinks unused
#: embedding positions to arbitrarily small magnitudes; the rescaled norm
#: keeps them normalizable, so smallness alone is not an error here.
MODEL_NORM_EPS = 0.0


def check_variant(variant: str) -> str:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    return variant


class QuaternionTable:
    """A stack of quaternion vectors stored as one (rows, 4, k) float64 array.

    Axis 1 indexes the quaternion components (a, b, c, d), so each
    per-component plane ``data[:, i, :]`` is a (rows, k) real matrix.
    """

    __slots__ = ("data",)

    def __init__(self, data: np.ndarray):
        data = np.asarray(data, dtype=np.float64)
        if data.ndim != 3 or data.shape[1] != 4:
            raise ValueError(f"expected shape (rows, 4, k), got {data.shape}")
        self.data = data

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    @property
    def k(self) -> int:
        return self.data.shape[2]

    def row(self, i: int) -> QuaternionVector:
        """Zero-copy view of row i as a quaternion vector."""
        r = self.data[i]
        return QuaternionVector(r[0], r[1], r[2], r[3])

    def set_row(self, i: int, v: QuaternionVector):
        self.data[i, 0] = v.a
        self.data[i, 1] = v.b
        self.data[i, 2] = v.c
        self.data[i, 3] = v.d

    def parts(self):
        """Per-component (rows, k) views: (a, b, c, d)."""
        d = self.data
        return (d[:, 0, :], d[:, 1, :], d[:, 2, :], d[:, 3, :])

    def copy(self) -> "QuaternionTable":
        return QuaternionTable(self.data.copy())


@dataclass
class ModelParams:
    """The four raw parameter tables of one model.

    entity / entity_transfer have one row per entity; relation /
    relation_transfer one row per relation. All share the same embedding
    dimension k. Rows are stored raw; normalization of the relation and
    transfer rows happens inside the forward pass.
    """

    entity: QuaternionTable
    relation: QuaternionTable
    entity_transfer: QuaternionTable
    relation_transfer: QuaternionTable

    def __post_init__(self):
        k = self.entity.k
        for name in TABLE_NAMES:
            if self.table(name).k != k:
                raise LengthMismatchError("all tables must share the same k")
        if self.entity_transfer.n_rows != self.entity.n_rows:
            raise LengthMismatchError("entity and entity_transfer row counts differ")
        if self.relation_transfer.n_rows != self.relation.n_rows:
            raise LengthMismatchError("relation and relation_transfer row counts differ")

    @property
    def k(self) -> int:
        return self.entity.k

    @property
    def n_entities(self) -> int:
        return self.entity.n_rows

    @property
    def n_relations(self) -> int:
        return self.relation.n_rows

    def table(self, name: str) -> QuaternionTable:
        return getattr(self, name)

    def copy(self) -> "ModelParams":
        return ModelParams(*(self.table(n).copy() for n in TABLE_NAMES))

    def equals(self, other: "ModelParams") -> bool:
        return all(
            np.array_equal(self.table(n).data, other.table(n).data)
            for n in TABLE_NAMES
        )


def initialize_params(n_entities, n_relations, k, rng) -> ModelParams:
    """Draw every component uniformly from [-1/sqrt(4k), +1/sqrt(4k)].

    Keeps initial per-quaternion norms O(1/sqrt(k)) so that initial scores
    are small and the logistic loss starts in its sensitive region.

    ``rng`` is a seeded numpy Generator (or an int seed).
    """
    if n_entities < 1 or n_relations < 1 or k < 1:
        raise ValueError("n_entities, n_relations and k must all be >= 1")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    bound = 1.0 / np.sqrt(4.0 * k)

    def table(rows):
        return QuaternionTable(rng.uniform(-bound, bound, size=(rows, 4, k)))

    return ModelParams(
        entity=table(n_entities),
        relation=table(n_relations),
        entity_transfer=table(n_entities),
        relation_transfer=table(n_relations),
    )


def _check_entity(i, params: ModelParams):
    if not 0 <= i < params.n_entities:
        raise IndexOutOfRangeError(f"entity index {i} out of range [0, {params.n_entities})")


def _check_relation(i, params: ModelParams):
    if not 0 <= i < params.n_relations:
        raise IndexOutOfRangeError(f"relation index {i} out of range [0, {params.n_relations})")


def map_entity(
    entity_row: QuaternionVector,
    transfer_row: QuaternionVector,
    relation_transfer_row: QuaternionVector,
    eps: float = qt.DEFAULT_NORM_EPS,
) -> QuaternionVector:
    """Dynamic mapping of one entity embedding into its triple context.

    Computes entity ⊗ normalize(transfer) ⊗ normalize(relation_transfer),
    left-associated. Per-component norms of the input are preserved because
    both normalized factors are unit quaternions.
    """
    if not len(entity_row) == len(transfer_row) == len(relation_transfer_row):
        raise LengthMismatchError("all rows must share the same length k")
    p_hat = qt.normalize_parts(transfer_row.parts(), eps)
    v_hat = qt.normalize_parts(relation_transfer_row.parts(), eps)
    mapped = qt.hamilton_parts(qt.hamilton_parts(entity_row.parts(), p_hat), v_hat)
    return QuaternionVector(*mapped)


def _score_parts(h_parts, r_parts, t_parts, ph_parts, pt_parts, vr_parts, variant,
                 eps=MODEL_NORM_EPS):
    """Score from raw parts; each argument is a 4-tuple of (..., k) arrays.

    Returns the score(s) with shape equal to the broadcast batch shape.
    Shared by the scalar, batched, and all-candidate scoring paths.
    """
    w_hat = qt.normalize_parts(r_parts, eps)
    if variant == "quatde":
        p_hat = qt.normalize_parts(ph_parts, eps)
        v_hat = qt.normalize_parts(vr_parts, eps)
        head = qt.hamilton_parts(qt.hamilton_parts(h_parts, p_hat), v_hat)
        q_hat = qt.normalize_parts(pt_parts, eps)
        tail = qt.hamilton_parts(qt.hamilton_parts(t_parts, q_hat), v_hat)
    else:
        head = h_parts
        tail = t_parts
    left = qt.hamilton_parts(head, w_hat)
    return np.sum(qt.inner_parts(left, tail), axis=-1)


def score(h: int, r: int, t: int, params: ModelParams, variant: str = "quatde") -> float:
    """Plausibility score of the triple (h, r, t). Higher is more plausible."""
    check_variant(variant)
    _check_entity(h, params)
    _check_entity(t, params)
    _check_relation(r, params)
    return float(
        _score_parts(
            params.entity.row(h).parts(),
            params.relation.row(r).parts(),
            params.entity.row(t).parts(),
            params.entity_transfer.row(h).parts(),
            params.entity_transfer.row(t).parts(),
            params.relation_transfer.row(r).parts(),
            variant,
        )
    )


def _gather_parts(table: QuaternionTable, idx):
    """Rows ``idx`` of a table as a parts tuple of (len(idx), k) arrays."""
    g = table.data[idx]
    return (g[:, 0, :], g[:, 1, :], g[:, 2, :], g[:, 3, :])


def score_batch(heads, rels, tails, params: ModelParams, variant: str = "quatde") -> np.ndarray:
    """Scores for aligned index arrays of triples, shape (n,)."""
    check_variant(variant)
    heads = np.asarray(heads, dtype=np.int64)
    rels = np.asarray(rels, dtype=np.int64)
    tails = np.asarray(tails, dtype=np.int64)
    for e in (heads, tails):
        if e.size and (e.min() < 0 or e.max() >= params.n_entities):
            raise IndexOutOfRangeError("entity index out of range")
    if rels.size and (rels.min() < 0 or rels.max() >= params.n_relations):
        raise IndexOutOfRangeError("relation index out of range")
    return _score_parts(
        _gather_parts(params.entity, heads),
        _gather_parts(params.relation, rels),
        _gather_parts(params.entity, tails),
        _gather_parts(params.entity_transfer, heads),
        _gather_parts(params.entity_transfer, tails),
        _gather_parts(params.relation_transfer, rels),
        variant,
    )


class CandidateScorer:
    """Scores one query side against every entity at once.

    Precomputes the relation-independent product entity ⊗ normalized
    entity-transfer over the whole entity table, so that ranking many
    queries against all candidates reduces to one table-sized product plus
    an inner product per query.
    """

    def __init__(self, params: ModelParams, variant: str = "quatde"):
        check_variant(variant)
        self.params = params
        self.variant = variant
        self.entity_parts = params.entity.parts()
        if variant == "quatde":
            p_hat = qt.normalize_parts(params.entity_transfer.parts(),
                                       MODEL_NORM_EPS)
            self.mapped_parts = qt.hamilton_parts(self.entity_parts, p_hat)
        else:
            self.mapped_parts = self.entity_parts

    def _relation_parts(self, r):
        _check_relation(r, self.params)
        w_hat = qt.normalize_parts(self.params.relation.row(r).parts(),
                                   MODEL_NORM_EPS)
        if self.variant == "quatde":
            v_hat = qt.normalize_parts(
                self.params.relation_transfer.row(r).parts(), MODEL_NORM_EPS
            )
        else:
            v_hat = None
        return w_hat, v_hat

    def all_tails(self, h: int, r: int) -> np.ndarray:
        """score(h, r, e) for every entity e, shape (n_entities,)."""
        _check_entity(h, self.params)
        w_hat, v_hat = self._relation_parts(r)
        head = tuple(p[h] for p in self.mapped_parts)
        if self.variant == "quatde":
            head = qt.hamilton_parts(head, v_hat)
        left = qt.hamilton_parts(head, w_hat)
        if self.variant == "quatde":
            # Fold the shared unit factor into the query side:
            # inner(left, M_e ⊗ v̂) == inner(left ⊗ v̂*, M_e).
            left = qt.hamilton_parts(left, qt.conjugate_parts(v_hat))
        return np.sum(qt.inner_parts(left, self.mapped_parts), axis=-1)

    def all_heads(self, r: int, t: int) -> np.ndarray:
        """score(e, r, t) for every entity e, shape (n_entities,)."""
        _check_entity(t, self.params)
        w_hat, v_hat = self._relation_parts(r)
        tail = tuple(p[t] for p in self.mapped_parts)
        if self.variant == "quatde":
            tail = qt.hamilton_parts(tail, v_hat)
        # inner(X ⊗ ŵ, tail) == inner(X, tail ⊗ ŵ*), with X the mapped head.
        right = qt.hamilton_parts(tail, qt.conjugate_parts(w_hat))
        if self.variant == "quatde":
            right = qt.hamilton_parts(right, qt.conjugate_parts(v_hat))
        return np.sum(qt.inner_parts(self.mapped_parts, right), axis=-1)


def score_all_tails(h: int, r: int, params: ModelParams, variant: str = "quatde") -> np.ndarray:
    """Vector of scores over all candidate tails; entry e equals score(h, r, e)."""
    return CandidateScorer(params, variant).all_tails(h, r)


def score_all_heads(r: int, t: int, params: ModelParams, variant: str = "quatde") -> np.ndarray:
    """Vector of scores over all candidate heads; entry e equals score(e, r, t)."""
    return CandidateScorer(params, variant).all_heads(r, t)


class GradEntry(NamedTuple):
    """Gradient of the loss with respect to one raw parameter row."""

    table: str
    row: int
    grad: np.ndarray  # shape (4, k)


def _sigmoid(x):
    # tanh form stays finite for any x
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _backprop_normalize(g_hat, hat, norm):
    """Pull a gradient back through componentwise normalization.

    For x̂ = x/|x|: dL/dx = (g - <x̂, g> x̂) / |x|, with <·,·> the
    per-component 4-part inner product.
    """
    proj = qt.inner_parts(hat, g_hat)
    return tuple((g - proj * u) / norm for g, u in zip(g_hat, hat))


def _stack_parts(p):
    """Parts tuple of (..., k) arrays -> array of shape (..., 4, k)."""
    return np.stack(p, axis=-2)


def loss_and_grads_batch(heads, rels, tails, labels, params: ModelParams,
                         variant: str = "quatde", reg: float = 0.0):
    """Per-triple logistic loss and gradients w.r.t. every touched raw row.

    ``labels`` is an array of +1 (golden) / -1 (corrupted) entries. The loss
    per triple is softplus(-label * score) plus ``reg`` times the mean
    squared component, summed over the raw rows that triple touches (six
    under "quatde", three under "quate"; a row touched twice, e.g. h == t,
    counts twice). Averaging over the 4k components keeps the penalty per
    row independent of the embedding dimension; with a per-row sum the
    weight decay overwhelms the score gradient under Adagrad and prunes
    every embedding position. Gradients differentiate through the
    in-forward normalization.

    Returns ``(losses, slot_grads)`` where losses has shape (n,) and
    slot_grads is a list of (table_name, index_array, grads (n, 4, k)).
    """
    check_variant(variant)
    heads = np.asarray(heads, dtype=np.int64)
    rels = np.asarray(rels, dtype=np.int64)
    tails = np.asarray(tails, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.float64)
    if not (heads.shape == rels.shape == tails.shape == labels.shape):
        raise LengthMismatchError("index and label arrays must be aligned")
    if heads.size == 0:
        return np.zeros(0), []
    for e in (heads, tails):
        if e.min() < 0 or e.max() >= params.n_entities:
            raise IndexOutOfRangeError("entity index out of range")
    if rels.min() < 0 or rels.max() >= params.n_relations:
        raise IndexOutOfRangeError("relation index out of range")
    if not np.all(np.abs(labels) == 1.0):
        raise ValueError("labels must be +1 or -1")

    H = _gather_parts(params.entity, heads)
    T = _gather_parts(params.entity, tails)
    W = _gather_parts(params.relation, rels)
    w_norm = qt.norm_parts(W)
    qt.check_norms(w_norm, MODEL_NORM_EPS)
    w_hat = tuple(x / w_norm for x in W)

    if variant == "quatde":
        Ph = _gather_parts(params.entity_transfer, heads)
        Pt = _gather_parts(params.entity_transfer, tails)
        V = _gather_parts(params.relation_transfer, rels)
        ph_norm = qt.norm_parts(Ph)
        pt_norm = qt.norm_parts(Pt)
        v_norm = qt.norm_parts(V)
        for norm in (ph_norm, pt_norm, v_norm):
            qt.check_norms(norm, MODEL_NORM_EPS)
        ph_hat = tuple(x / ph_norm for x in Ph)
        pt_hat = tuple(x / pt_norm for x in Pt)
        v_hat = tuple(x / v_norm for x in V)

        HP = qt.hamilton_parts(H, ph_hat)
        A = qt.hamilton_parts(HP, v_hat)
        TP = qt.hamilton_parts(T, pt_hat)
        B = qt.hamilton_parts(TP, v_hat)
    else:
        A = H
        B = T

    S = qt.hamilton_parts(A, w_hat)
    f = np.sum(qt.inner_parts(S, B), axis=-1)

    # softplus(-label*f), computed stably; weight = d(loss)/d(score)
    losses = np.logaddexp(0.0, -labels * f)
    weight = (-labels * _sigmoid(-labels * f))[:, None, None]

    w_hat_c = qt.conjugate_parts(w_hat)
    gA = qt.hamilton_parts(B, w_hat_c)
    gW_hat = qt.hamilton_parts(qt.conjugate_parts(A), B)
    gW = _stack_parts(_backprop_normalize(gW_hat, w_hat, w_norm))

    if variant == "quatde":
        v_hat_c = qt.conjugate_parts(v_hat)
        gHP = qt.hamilton_parts(gA, v_hat_c)
        gV_hat_head = qt.hamilton_parts(qt.conjugate_parts(HP), gA)
        gH = _stack_parts(qt.hamilton_parts(gHP, qt.conjugate_parts(ph_hat)))
        gPh_hat = qt.hamilton_parts(qt.conjugate_parts(H), gHP)

        gB = S
        gTP = qt.hamilton_parts(gB, v_hat_c)
        gV_hat_tail = qt.hamilton_parts(qt.conjugate_parts(TP), gB)
        gT = _stack_parts(qt.hamilton_parts(gTP, qt.conjugate_parts(pt_hat)))
        gPt_hat = qt.hamilton_parts(qt.conjugate_parts(T), gTP)

        gV_hat = tuple(x + y for x, y in zip(gV_hat_head, gV_hat_tail))
        gPh = _stack_parts(_backprop_normalize(gPh_hat, ph_hat, ph_norm))
        gPt = _stack_parts(_backprop_normalize(gPt_hat, pt_hat, pt_norm))
        gV = _stack_parts(_backprop_normalize(gV_hat, v_hat, v_norm))
    else:
        gH = _stack_parts(gA)
        gT = _stack_parts(S)

    # reg scale: mean over the 4k scalar components of each row
    rw = reg / (4.0 * params.k)
    slots = [
        ("entity", heads, weight * gH + 2.0 * rw * _stack_parts(H)),
        ("entity", tails, weight * gT + 2.0 * rw * _stack_parts(T)),
        ("relation", rels, weight * gW + 2.0 * rw * _stack_parts(W)),
    ]
    losses = losses + rw * (
        np.sum(qt.norm_sq_parts(H), axis=-1)
        + np.sum(qt.norm_sq_parts(T), axis=-1)
        + np.sum(qt.norm_sq_parts(W), axis=-1)
    )
    if variant == "quatde":
        slots += [
            ("entity_transfer", heads, weight * gPh + 2.0 * rw * _stack_parts(Ph)),
            ("entity_transfer", tails, weight * gPt + 2.0 * rw * _stack_parts(Pt)),
            ("relation_transfer", rels, weight * gV + 2.0 * rw * _stack_parts(V)),
        ]
        losses = losses + rw * (
            np.sum(qt.norm_sq_parts(Ph), axis=-1)
            + np.sum(qt.norm_sq_parts(Pt), axis=-1)
            + np.sum(qt.norm_sq_parts(V), axis=-1)
        )
    return losses, slots


def grad_triple(h, r, t, label, params: ModelParams, variant: str = "quatde",
                reg: float = 0.0):
    """Loss and sparse gradients for one labelled triple.

    Returns ``(loss, entries)`` where entries is a list of GradEntry, one
    per distinct touched raw row (entries for a row touched on both the
    head and tail side are summed).
    """
    if label not in (1, -1):
        raise ValueError(f"label must be +1 or -1, got {label!r}")
    losses, slots = loss_and_grads_batch(
        np.array([h]), np.array([r]), np.array([t]), np.array([float(label)]),
        params, variant, reg,
    )
    merged = {}
    for table, idx, grads in slots:
        key = (table, int(idx[0]))
        if key in merged:
            merged[key] = merged[key] + grads[0]
        else:
            merged[key] = grads[0].copy()
    entries = [GradEntry(table, row, g) for (table, row), g in merged.items()]
    return float(losses[0]), entries
