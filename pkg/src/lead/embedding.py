"""Embedding table, special tokens and the three input-embedding constructions.

File formats
------------
JSON::

    {"format": "lead_embedding_v1", "vocab": V, "dim": d,
     "values": [... V*d floats, row-major ...],
     "specials": {"end_of_thinking": 58, ...}}      # optional

Binary (little-endian): the 8-byte magic ``LEADEMB1``, two ``uint64`` values
``V`` and ``d``, then ``V*d`` ``float64`` values in row-major order.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Literal, Optional

import numpy as np

from .errors import InvalidConfigError, InvalidInputError
from .numerics import WeightVector

BINARY_MAGIC = b"LEADEMB1"
JSON_FORMAT = "lead_embedding_v1"

InjectionVariant = Literal["convex", "additive"]


@dataclass(frozen=True)
class SpecialTokenSet:
    end_of_thinking: int
    vision_start: int
    image_pad: int
    vision_end: int
    # Not part of the core contract: answer-phase terminator and masking row.
    end_of_sequence: Optional[int] = None
    pad: Optional[int] = None

    def ids(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self) if getattr(self, f.name) is not None}

    def validate(self, vocab_size: int) -> None:
        ids = self.ids()
        for name, tok in ids.items():
            if not isinstance(tok, (int, np.integer)) or not 0 <= tok < vocab_size:
                raise InvalidInputError(f"special token {name}={tok} is outside [0, {vocab_size})")
        if len(set(ids.values())) != len(ids):
            raise InvalidInputError(f"special token ids must be distinct, got {ids}")

    @classmethod
    def reserved(cls, vocab_size: int) -> "SpecialTokenSet":
        """Specials packed into the top six ids of the vocabulary."""
        if vocab_size < 8:
            raise InvalidInputError("reserved specials need a vocabulary of at least 8 tokens")
        v = vocab_size
        return cls(end_of_thinking=v - 6, vision_start=v - 5, image_pad=v - 4,
                   vision_end=v - 3, end_of_sequence=v - 2, pad=v - 1)


class EmbeddingTable:
    """Immutable ``V x d`` matrix of token embeddings."""

    def __init__(self, rows, specials: Optional[SpecialTokenSet] = None):
        arr = np.array(rows, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInputError(f"embedding rows must form a non-empty V x d matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("embedding table has non-finite entries")
        arr.setflags(write=False)
        self._rows = arr
        if specials is not None:
            specials.validate(arr.shape[0])
        self.specials = specials
        self._anchor = None

    @property
    def rows(self) -> np.ndarray:
        return self._rows

    @property
    def vocab_size(self) -> int:
        return self._rows.shape[0]

    @property
    def dim(self) -> int:
        return self._rows.shape[1]

    def visual_anchor(self) -> np.ndarray:
        if self.specials is None:
            raise InvalidInputError("table has no special tokens registered")
        if self._anchor is None:
            self._anchor = compute_visual_anchor(self, self.specials)
        return self._anchor

    def with_specials(self, specials: SpecialTokenSet) -> "EmbeddingTable":
        return EmbeddingTable(self._rows, specials)

    def __repr__(self) -> str:
        return f"EmbeddingTable(V={self.vocab_size}, d={self.dim})"

    # -- persistence -------------------------------------------------------

    def to_json(self) -> dict:
        out = {"format": JSON_FORMAT, "vocab": self.vocab_size, "dim": self.dim,
               "values": self._rows.ravel().tolist()}
        if self.specials is not None:
            out["specials"] = {k: int(v) for k, v in self.specials.ids().items()}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "EmbeddingTable":
        try:
            v, d = int(obj["vocab"]), int(obj["dim"])
            values = np.asarray(obj["values"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed embedding JSON: {exc}") from exc
        if values.size != v * d:
            raise InvalidInputError(f"expected {v * d} values for V={v}, d={d}, got {values.size}")
        specials = SpecialTokenSet(**obj["specials"]) if obj.get("specials") else None
        return cls(values.reshape(v, d), specials)

    def save(self, path) -> None:
        path = Path(path)
        if path.suffix == ".json":
            path.write_text(json.dumps(self.to_json()))
        else:
            with open(path, "wb") as fh:
                fh.write(BINARY_MAGIC)
                fh.write(struct.pack("<QQ", self.vocab_size, self.dim))
                fh.write(self._rows.astype("<f8").tobytes(order="C"))

    @classmethod
    def load(cls, path, specials: Optional[SpecialTokenSet] = None) -> "EmbeddingTable":
        path = Path(path)
        raw = path.read_bytes()
        if raw.startswith(BINARY_MAGIC):
            header = len(BINARY_MAGIC) + 16
            v, d = struct.unpack("<QQ", raw[len(BINARY_MAGIC):header])
            body = np.frombuffer(raw, dtype="<f8", offset=header)
            if body.size != v * d:
                raise InvalidInputError(f"{path}: expected {v * d} values, found {body.size}")
            return cls(body.reshape(v, d), specials)
        table = cls.from_json(json.loads(raw.decode("utf-8")))
        return table if specials is None else table.with_specials(specials)


def lookup(table: EmbeddingTable, token: int) -> np.ndarray:
    if not 0 <= int(token) < table.vocab_size:
        raise IndexError(f"token {token} out of range for vocabulary of size {table.vocab_size}")
    return table.rows[int(token)].copy()


def expected_embedding(table: EmbeddingTable, w) -> np.ndarray:
    """``sum_v w[v] * row(v)``; with simplex weights this is ``E_{v~p}[e(v)]``."""
    weights = w.weights if isinstance(w, WeightVector) else np.asarray(w, dtype=np.float64)
    if weights.shape != (table.vocab_size,):
        raise InvalidInputError(f"weight vector of shape {weights.shape} does not match V={table.vocab_size}")
    return weights @ table.rows


def compute_visual_anchor(table: EmbeddingTable, specials: SpecialTokenSet) -> np.ndarray:
    """Mean of the vision-start, image-pad and vision-end rows."""
    ids = (specials.vision_start, specials.image_pad, specials.vision_end)
    rows = [lookup(table, t) for t in ids]
    return (rows[0] + rows[1] + rows[2]) / 3.0


def inject_anchor(base, anchor, lam: float, variant: InjectionVariant = "convex") -> np.ndarray:
    """Blend the visual anchor into a mixture embedding.

    ``convex`` gives ``(1 - lam) * base + lam * anchor``. ``additive`` gives
    ``base + lam * anchor`` so that ``lam = 0`` still disables it.
    """
    base = np.asarray(base, dtype=np.float64)
    anchor = np.asarray(anchor, dtype=np.float64)
    if base.shape != anchor.shape:
        raise InvalidInputError(f"dimension mismatch: base {base.shape} vs anchor {anchor.shape}")
    if variant == "convex":
        if not 0.0 <= lam <= 1.0:
            raise InvalidConfigError(f"lambda must lie in [0, 1] for convex injection, got {lam}")
        return (1.0 - lam) * base + lam * anchor
    if variant == "additive":
        return base + lam * anchor
    raise InvalidConfigError(f"unknown injection variant {variant!r}")
