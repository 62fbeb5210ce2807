"""Input checks for user-facing entry points."""

import numpy as np

from .errors import IndexOutOfRangeError


def check_triples(X, n_entities: int = None, n_relations: int = None) -> np.ndarray:
    """Coerce X to an (n, 3) int64 triple array, validating indices.

    Accepts any array-like of integer (or integral float) rows in
    (head, relation, tail) order. Bounds are enforced only for the
    dimensions that are given.
    """
    arr = np.asarray(X)
    if arr.ndim == 1 and arr.size == 3:
        arr = arr.reshape(1, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(
            f"expected an (n, 3) triple array, got shape {arr.shape}"
        )
    if arr.dtype.kind == "f":
        if not np.all(arr == np.floor(arr)):
            raise ValueError("triple indices must be integers")
        arr = arr.astype(np.int64)
    elif arr.dtype.kind in "iu":
        arr = arr.astype(np.int64)
    else:
        raise ValueError(f"triple indices must be numeric, got dtype {arr.dtype}")
    if arr.size and arr.min() < 0:
        raise IndexOutOfRangeError("triple indices must be non-negative")
    if n_entities is not None and arr.size:
        worst = max(int(arr[:, 0].max()), int(arr[:, 2].max()))
        if worst >= n_entities:
            raise IndexOutOfRangeError(
                f"entity index {worst} out of range for {n_entities} entities"
            )
    if n_relations is not None and arr.size:
        worst = int(arr[:, 1].max())
        if worst >= n_relations:
            raise IndexOutOfRangeError(
                f"relation index {worst} out of range for {n_relations} relations"
            )
    return arr
