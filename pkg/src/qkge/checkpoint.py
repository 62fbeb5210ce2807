"""Binary checkpoint format for model parameters.

Layout (all integers little-endian):

    magic        4 bytes  b"QKGE"
    version      u16      currently 1
    variant      u8       0 = quate, 1 = quatde
    k            u32      embedding dimension
    n_entities   u32
    n_relations  u32
    tables                entity, relation, entity_transfer, relation_transfer,
                          each serialized as its a-plane, b-plane, c-plane,
                          d-plane in row-major little-endian float64

A "quate" checkpoint still carries the two transfer tables (ignored by that
variant's forward pass) so one format serves both variants. Save then load
reproduces the tables bit for bit.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import CheckpointFormatError
from .model import ModelParams, QuaternionTable, TABLE_NAMES, check_variant

MAGIC = b"QKGE"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHBIII")

_VARIANT_CODES = {"quate": 0, "quatde": 1}
_CODE_VARIANTS = {v: k for k, v in _VARIANT_CODES.items()}


def save_checkpoint(path, params: ModelParams, variant: str):
    """Write params to ``path``; deterministic bytes for identical params."""
    check_variant(variant)
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(
                MAGIC,
                FORMAT_VERSION,
                _VARIANT_CODES[variant],
                params.k,
                params.n_entities,
                params.n_relations,
            )
        )
        for name in TABLE_NAMES:
            data = params.table(name).data
            for comp in range(4):
                plane = np.ascontiguousarray(data[:, comp, :], dtype="<f8")
                fh.write(plane.tobytes())


def load_checkpoint(path):
    """Read a checkpoint; returns ``(params, variant)``.

    Raises CheckpointFormatError on bad magic, unknown version/variant, or
    a byte count that disagrees with the header.
    """
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise CheckpointFormatError(f"{path}: file shorter than header")
    magic, version, variant_code, k, n_entities, n_relations = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path}: bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported format version {version}")
    if variant_code not in _CODE_VARIANTS:
        raise CheckpointFormatError(f"{path}: unknown variant code {variant_code}")
    if k < 1 or n_entities < 1 or n_relations < 1:
        raise CheckpointFormatError(f"{path}: degenerate header dimensions")

    rows = {
        "entity": n_entities,
        "relation": n_relations,
        "entity_transfer": n_entities,
        "relation_transfer": n_relations,
    }
    expected = _HEADER.size + sum(rows[n] * 4 * k * 8 for n in TABLE_NAMES)
    if len(raw) != expected:
        raise CheckpointFormatError(
            f"{path}: expected {expected} bytes for header dimensions, got {len(raw)}"
        )

    offset = _HEADER.size
    tables = {}
    for name in TABLE_NAMES:
        n = rows[name]
        planes = []
        for _ in range(4):
            count = n * k
            plane = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
            planes.append(plane.reshape(n, k).astype(np.float64))
            offset += count * 8
        tables[name] = QuaternionTable(np.stack(planes, axis=1))
    return ModelParams(**tables), _CODE_VARIANTS[variant_code]
