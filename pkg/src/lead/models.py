"""Model contract plus two desk-scale backbones.

A model maps an ordered sequence of input embeddings to next-token logits. It
never sees token ids, so probability-weighted mixtures are first-class inputs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Literal, Optional, Protocol, Sequence, runtime_checkable

import numpy as np

from .embedding import EmbeddingTable, SpecialTokenSet, lookup
from .errors import InvalidInputError


@runtime_checkable
class Model(Protocol):
    table: EmbeddingTable
    specials: SpecialTokenSet

    @property
    def vocab_size(self) -> int: ...

    def next_logits(self, context: Sequence[np.ndarray]) -> np.ndarray: ...


def as_context(context, dim: int) -> np.ndarray:
    ctx = np.asarray(context, dtype=np.float64)
    if ctx.ndim != 2 or ctx.shape[0] == 0:
        raise InvalidInputError(f"context must be a non-empty sequence of vectors, got shape {ctx.shape}")
    if ctx.shape[1] != dim:
        raise InvalidInputError(f"context vectors have dimension {ctx.shape[1]}, model expects {dim}")
    return ctx


def next_logits(model: Model, context) -> np.ndarray:
    return model.next_logits(context)


def encode_multimodal_input(vision_tokens, text_tokens, table: EmbeddingTable) -> list[np.ndarray]:
    """Embeddings of the vision tokens followed by the text tokens."""
    return [lookup(table, t) for t in list(vision_tokens) + list(text_tokens)]


def random_table(vocab_size: int, dim: int, seed: int = 0,
                 specials: Optional[SpecialTokenSet] = None) -> EmbeddingTable:
    rng = np.random.default_rng(seed)
    rows = rng.standard_normal((vocab_size, dim)) / np.sqrt(dim)
    if specials is None and vocab_size >= 8:
        specials = SpecialTokenSet.reserved(vocab_size)
    return EmbeddingTable(rows, specials)


class ScriptedModel:
    """Replays a fixed list of logit rows, ignoring the content of the context.

    The row index is ``len(context) - prompt_length`` so the model stays a pure
    function of its input. Past the end of the script the index either wraps
    (``overflow="cycle"``) or sticks to the last row (``"hold"``).
    """

    def __init__(self, steps, table: Optional[EmbeddingTable] = None,
                 prompt_length: int = 1, overflow: Literal["cycle", "hold"] = "hold"):
        script = np.array(steps, dtype=np.float64)
        if script.ndim != 2 or script.shape[0] == 0 or script.shape[1] < 2:
            raise InvalidInputError(f"script must be a non-empty list of logit rows, got shape {script.shape}")
        if not np.all(np.isfinite(script)):
            raise InvalidInputError("script contains non-finite logits")
        if overflow not in ("cycle", "hold"):
            raise InvalidInputError(f"overflow must be 'cycle' or 'hold', got {overflow!r}")
        script.setflags(write=False)
        self.script = script
        self.table = table if table is not None else random_table(script.shape[1], 8)
        if self.table.vocab_size != script.shape[1]:
            raise InvalidInputError(f"script rows have length {script.shape[1]}, table has V={self.table.vocab_size}")
        self.specials = self.table.specials
        self.prompt_length = prompt_length
        self.overflow = overflow

    @property
    def vocab_size(self) -> int:
        return self.script.shape[1]

    def step_index(self, context_length: int) -> int:
        i = max(context_length - self.prompt_length, 0)
        n = len(self.script)
        if i >= n:
            i = i % n if self.overflow == "cycle" else n - 1
        return i

    def next_logits(self, context) -> np.ndarray:
        # Only the newest vector is shape-checked; content is never read.
        if len(context) == 0:
            raise InvalidInputError("context must be non-empty")
        last = np.shape(context[-1])
        if last != (self.table.dim,):
            raise InvalidInputError(f"context vectors have shape {last}, model expects ({self.table.dim},)")
        return self.script[self.step_index(len(context))].copy()

    @classmethod
    def from_json(cls, obj: dict, table: Optional[EmbeddingTable] = None) -> "ScriptedModel":
        """Build from ``{"vocab": V, "steps": [[...V floats...], ...]}``."""
        try:
            vocab, steps = int(obj["vocab"]), obj["steps"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"malformed script JSON: {exc}") from exc
        bad = [i for i, row in enumerate(steps) if len(row) != vocab]
        if bad:
            raise InvalidInputError(f"script rows {bad[:5]} do not have length vocab={vocab}")
        return cls(steps, table=table, prompt_length=int(obj.get("prompt_length", 1)),
                   overflow=obj.get("overflow", "hold"))

    @classmethod
    def load(cls, path, table: Optional[EmbeddingTable] = None) -> "ScriptedModel":
        return cls.from_json(json.loads(Path(path).read_text()), table=table)


def _layer_norm(x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps)


def _gelu(x: np.ndarray) -> np.ndarray:
    return 0.5 * x * (1.0 + np.tanh(np.sqrt(2.0 / np.pi) * (x + 0.044715 * x ** 3)))


def _sinusoidal(n: int, d: int) -> np.ndarray:
    pos = np.arange(n)[:, None]
    i = np.arange(d)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


class ToyTransformer:
    """Seeded pre-LN causal transformer that consumes raw embedding vectors.

    Every call recomputes the full forward pass, so identical contexts give
    bit-identical logits and there is no mutable cache to share.
    """

    def __init__(self, seed: int = 0, vocab_size: int = 64, dim: int = 32,
                 n_layers: int = 2, n_heads: int = 2, logit_scale: float = 3.0,
                 table: Optional[EmbeddingTable] = None):
        if dim % n_heads:
            raise InvalidInputError(f"dim={dim} is not divisible by n_heads={n_heads}")
        self.seed, self.dim, self.n_layers, self.n_heads = seed, dim, n_layers, n_heads
        self.logit_scale = logit_scale
        rng = np.random.default_rng(seed)
        self.table = table if table is not None else random_table(vocab_size, dim, seed=seed + 1)
        if self.table.dim != dim or self.table.vocab_size != vocab_size:
            raise InvalidInputError("embedding table shape does not match the transformer config")
        self.specials = self.table.specials

        def w(*shape, fan_in):
            a = rng.standard_normal(shape) / np.sqrt(fan_in)
            a.setflags(write=False)
            return a

        self.layers = []
        for _ in range(n_layers):
            self.layers.append({
                "wq": w(dim, dim, fan_in=dim), "wk": w(dim, dim, fan_in=dim),
                "wv": w(dim, dim, fan_in=dim), "wo": w(dim, dim, fan_in=dim),
                "w1": w(dim, 4 * dim, fan_in=dim), "w2": w(4 * dim, dim, fan_in=4 * dim),
            })
        self.w_out = w(dim, vocab_size, fan_in=dim)

    @property
    def vocab_size(self) -> int:
        return self.table.vocab_size

    def config(self) -> dict:
        return {"kind": "toy", "seed": self.seed, "vocab_size": self.vocab_size, "dim": self.dim,
                "n_layers": self.n_layers, "n_heads": self.n_heads, "logit_scale": self.logit_scale}

    def _attention(self, h: np.ndarray, p: dict) -> np.ndarray:
        n, d = h.shape
        hd = d // self.n_heads
        q = (h @ p["wq"]).reshape(n, self.n_heads, hd).transpose(1, 0, 2)
        k = (h @ p["wk"]).reshape(n, self.n_heads, hd).transpose(1, 0, 2)
        v = (h @ p["wv"]).reshape(n, self.n_heads, hd).transpose(1, 0, 2)
        scores = q @ k.transpose(0, 2, 1) / np.sqrt(hd)
        scores = np.where(np.tril(np.ones((n, n), dtype=bool)), scores, -np.inf)
        scores = scores - scores.max(axis=-1, keepdims=True)
        att = np.exp(scores)
        att /= att.sum(axis=-1, keepdims=True)
        out = (att @ v).transpose(1, 0, 2).reshape(n, d)
        return out @ p["wo"]

    def next_logits(self, context) -> np.ndarray:
        x = as_context(context, self.dim) + _sinusoidal(len(context), self.dim) * 0.1
        for p in self.layers:
            x = x + self._attention(_layer_norm(x), p)
            x = x + _gelu(_layer_norm(x) @ p["w1"]) @ p["w2"]
        h = _layer_norm(x[-1])
        return self.logit_scale * (h @ self.w_out)
