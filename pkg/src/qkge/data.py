"""Triple dataset loading, vocabularies, filter index, relation statistics.

Two on-disk layouts are understood:

* indexed: ``entity2id.txt``, ``relation2id.txt``, ``train2id.txt``,
  ``valid2id.txt``, ``test2id.txt``. The first line of each file is the
  record count. Triple files hold one triple per line in ``h t r`` order
  (head tail relation), single-space separated. Vocabulary files hold
  ``name<TAB>id`` lines.
* raw: ``train.txt``, ``valid.txt``, ``test.txt`` with tab-separated
  ``head  relation  tail`` name strings; vocabularies are built on the fly
  in first-appearance order.

All files are UTF-8; LF line endings with or without a trailing CR are
tolerated. In memory, every split is an (n, 3) int64 array in (h, r, t)
column order. Dataset and FilterIndex are immutable after construction and
safe for concurrent reads.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CountMismatchError,
    EmptySplitError,
    MalformedLineError,
)

logger = logging.getLogger(__name__)

SPLIT_NAMES = ("train", "valid", "test")

INDEXED_FILES = ("entity2id.txt", "relation2id.txt", "train2id.txt",
                 "valid2id.txt", "test2id.txt")
RAW_FILES = ("train.txt", "valid.txt", "test.txt")


@dataclass(frozen=True)
class Dataset:
    """Integer-indexed triples with entity/relation vocabularies."""

    entities: tuple
    relations: tuple
    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray
    entity_index: dict = field(repr=False)
    relation_index: dict = field(repr=False)

    @property
    def n_entities(self) -> int:
        return len(self.entities)

    @property
    def n_relations(self) -> int:
        return len(self.relations)

    def split(self, name: str) -> np.ndarray:
        if name not in SPLIT_NAMES:
            raise ValueError(f"unknown split {name!r}; expected one of {SPLIT_NAMES}")
        return getattr(self, name)

    def equals(self, other: "Dataset") -> bool:
        return (
            self.entities == other.entities
            and self.relations == other.relations
            and all(np.array_equal(self.split(s), other.split(s)) for s in SPLIT_NAMES)
        )


def make_dataset(entities, relations, train, valid, test) -> Dataset:
    """Assemble a Dataset from vocab lists and (n, 3) h/r/t index arrays.

    Validates index bounds and drops intra-split duplicates (with a
    warning), preserving first-occurrence order.
    """
    entities = tuple(entities)
    relations = tuple(relations)
    splits = {}
    for name, triples in (("train", train), ("valid", valid), ("test", test)):
        arr = np.asarray(triples, dtype=np.int64).reshape(-1, 3)
        if arr.size:
            if arr[:, 0].min() < 0 or arr[:, 0].max() >= len(entities) \
                    or arr[:, 2].min() < 0 or arr[:, 2].max() >= len(entities):
                raise MalformedLineError(name, 0, "entity index out of vocabulary bounds")
            if arr[:, 1].min() < 0 or arr[:, 1].max() >= len(relations):
                raise MalformedLineError(name, 0, "relation index out of vocabulary bounds")
        splits[name] = _dedup(arr, name)
    if len(splits["train"]) == 0:
        raise EmptySplitError("train split is empty")
    return Dataset(
        entities=entities,
        relations=relations,
        entity_index={name: i for i, name in enumerate(entities)},
        relation_index={name: i for i, name in enumerate(relations)},
        **splits,
    )


def _dedup(arr: np.ndarray, split_name: str) -> np.ndarray:
    seen = set()
    keep = []
    for i, row in enumerate(map(tuple, arr)):
        if row in seen:
            continue
        seen.add(row)
        keep.append(i)
    if len(keep) != len(arr):
        logger.warning(
            "%s: dropped %d duplicate triple(s)", split_name, len(arr) - len(keep)
        )
        arr = arr[keep]
    arr.setflags(write=False)
    return arr


def _read_lines(path: Path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    # tolerate trailing CR and a final empty line
    lines = [ln[:-1] if ln.endswith("\r") else ln for ln in lines]
    while lines and lines[-1] == "":
        lines.pop()
    return lines


def _parse_count(path: Path, lines) -> int:
    if not lines:
        raise CountMismatchError(f"{path}: empty file, expected a count header")
    try:
        return int(lines[0].strip())
    except ValueError:
        raise MalformedLineError(path, 1, f"expected integer count, got {lines[0]!r}")


def _load_vocab(path: Path):
    lines = _read_lines(path)
    count = _parse_count(path, lines)
    if len(lines) - 1 != count:
        raise CountMismatchError(
            f"{path}: header declares {count} records, found {len(lines) - 1}"
        )
    names = [None] * count
    for i, line in enumerate(lines[1:], start=2):
        fields = line.split("\t") if "\t" in line else line.split()
        if len(fields) != 2:
            raise MalformedLineError(path, i, f"expected 'name<TAB>id', got {line!r}")
        name, idx_s = fields
        try:
            idx = int(idx_s)
        except ValueError:
            raise MalformedLineError(path, i, f"non-integer id {idx_s!r}")
        if not 0 <= idx < count:
            raise MalformedLineError(path, i, f"id {idx} outside [0, {count})")
        if names[idx] is not None:
            raise MalformedLineError(path, i, f"duplicate id {idx}")
        names[idx] = name
    return names


def _load_indexed_triples(path: Path) -> np.ndarray:
    lines = _read_lines(path)
    count = _parse_count(path, lines)
    if len(lines) - 1 != count:
        raise CountMismatchError(
            f"{path}: header declares {count} triples, found {len(lines) - 1}"
        )
    out = np.empty((count, 3), dtype=np.int64)
    for i, line in enumerate(lines[1:]):
        fields = line.split()
        if len(fields) != 3:
            raise MalformedLineError(path, i + 2, f"expected 'h t r', got {line!r}")
        try:
            h, t, r = (int(x) for x in fields)
        except ValueError:
            raise MalformedLineError(path, i + 2, f"non-integer index in {line!r}")
        out[i] = (h, r, t)  # file order is h t r; memory order is h r t
    return out


def _load_raw(directory: Path) -> Dataset:
    entities, relations = [], []
    entity_index, relation_index = {}, {}
    eval_only_entities = eval_only_relations = 0

    def entity_id(name, in_train):
        nonlocal eval_only_entities
        idx = entity_index.get(name)
        if idx is None:
            idx = len(entities)
            entity_index[name] = idx
            entities.append(name)
            if not in_train:
                eval_only_entities += 1
        return idx

    def relation_id(name, in_train):
        nonlocal eval_only_relations
        idx = relation_index.get(name)
        if idx is None:
            idx = len(relations)
            relation_index[name] = idx
            relations.append(name)
            if not in_train:
                eval_only_relations += 1
        return idx

    splits = {}
    for split, fname in zip(SPLIT_NAMES, RAW_FILES):
        path = directory / fname
        in_train = split == "train"
        rows = []
        for i, line in enumerate(_read_lines(path), start=1):
            fields = line.split("\t")
            if len(fields) != 3:
                raise MalformedLineError(
                    path, i, f"expected 'head<TAB>relation<TAB>tail', got {line!r}"
                )
            h, r, t = fields
            rows.append(
                (entity_id(h, in_train), relation_id(r, in_train), entity_id(t, in_train))
            )
        splits[split] = rows
    if eval_only_entities or eval_only_relations:
        logger.warning(
            "vocabulary extended by %d entities / %d relations that appear only "
            "in evaluation splits", eval_only_entities, eval_only_relations,
        )
    return make_dataset(entities, relations, **splits)


def load_dataset(directory) -> Dataset:
    """Load a dataset directory in either the indexed or the raw layout."""
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {directory}")
    if (directory / "entity2id.txt").exists():
        entities = _load_vocab(directory / "entity2id.txt")
        relations = _load_vocab(directory / "relation2id.txt")
        splits = {
            name: _load_indexed_triples(directory / f"{name}2id.txt")
            for name in SPLIT_NAMES
        }
        return make_dataset(entities, relations, **splits)
    if (directory / "train.txt").exists():
        return _load_raw(directory)
    raise FileNotFoundError(
        f"{directory}: found neither entity2id.txt (indexed layout) nor "
        "train.txt (raw layout)"
    )


def save_dataset(dataset: Dataset, directory):
    """Write a dataset in the indexed layout (the round-trip format)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "entity2id.txt", "w", encoding="utf-8") as fh:
        fh.write(f"{dataset.n_entities}\n")
        for i, name in enumerate(dataset.entities):
            fh.write(f"{name}\t{i}\n")
    with open(directory / "relation2id.txt", "w", encoding="utf-8") as fh:
        fh.write(f"{dataset.n_relations}\n")
        for i, name in enumerate(dataset.relations):
            fh.write(f"{name}\t{i}\n")
    for split in SPLIT_NAMES:
        triples = dataset.split(split)
        with open(directory / f"{split}2id.txt", "w", encoding="utf-8") as fh:
            fh.write(f"{len(triples)}\n")
            for h, r, t in triples:
                fh.write(f"{h} {t} {r}\n")


class FilterIndex:
    """Membership over all known-true triples (train ∪ valid ∪ test).

    Used both to reject false negatives during sampling and to drop other
    golden answers from a ranking's candidate list.
    """

    def __init__(self, triples, n_entities: int, n_relations: int):
        self.n_entities = n_entities
        self.n_relations = n_relations
        self._members = set()
        self._tails = {}
        self._heads = {}
        for h, r, t in triples:
            key = (int(h), int(r), int(t))
            if key in self._members:
                continue
            self._members.add(key)
            self._tails.setdefault((key[0], key[1]), set()).add(key[2])
            self._heads.setdefault((key[1], key[2]), set()).add(key[0])

    def __contains__(self, triple) -> bool:
        h, r, t = triple
        return (int(h), int(r), int(t)) in self._members

    def __len__(self) -> int:
        return len(self._members)

    def true_tails(self, h: int, r: int) -> frozenset:
        """All entities e with (h, r, e) known true."""
        return frozenset(self._tails.get((h, r), ()))

    def true_heads(self, r: int, t: int) -> frozenset:
        """All entities e with (e, r, t) known true."""
        return frozenset(self._heads.get((r, t), ()))


def build_filter_index(dataset: Dataset) -> FilterIndex:
    all_triples = np.concatenate(
        [dataset.train, dataset.valid, dataset.test], axis=0
    )
    return FilterIndex(all_triples, dataset.n_entities, dataset.n_relations)


@dataclass(frozen=True)
class RelationStats:
    """Cardinality statistics of one relation, computed on train.

    tph: average tails per head; hpt: average heads per tail; category is
    "1-1", "1-N", "N-1" or "N-N" using the conventional 1.5 cut on each
    side (head side from hpt, tail side from tph).
    """

    tph: float
    hpt: float
    n_triples: int
    category: str


CATEGORY_THRESHOLD = 1.5


def relation_stats(dataset: Dataset) -> dict:
    """Per-relation statistics over the train split, keyed by relation id.

    Only relations that appear in train are present. Evaluation splits are
    deliberately excluded so no held-out information leaks into sampling.
    """
    train = dataset.train
    if len(train) == 0:
        raise EmptySplitError("relation statistics need a non-empty train split")
    counts = {}
    heads = {}
    tails = {}
    for h, r, t in train:
        r = int(r)
        counts[r] = counts.get(r, 0) + 1
        heads.setdefault(r, set()).add(int(h))
        tails.setdefault(r, set()).add(int(t))
    stats = {}
    for r, n in counts.items():
        tph = n / len(heads[r])
        hpt = n / len(tails[r])
        head_side = "N" if hpt >= CATEGORY_THRESHOLD else "1"
        tail_side = "N" if tph >= CATEGORY_THRESHOLD else "1"
        stats[r] = RelationStats(
            tph=tph, hpt=hpt, n_triples=n, category=f"{head_side}-{tail_side}"
        )
    return stats
