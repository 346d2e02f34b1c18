"""Probability-geometry primitives: softmax, entropy and weight renormalization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidConfigError, InvalidInputError, InvariantViolation

EPS_LOG = 1e-12
SIMPLEX_TOL = 1e-6

WeightMode = Literal["simplex", "l2"]


@dataclass(frozen=True)
class WeightVector:
    """Non-negative weights over the vocabulary, tagged by how they were normalized."""

    weights: np.ndarray
    normalization: WeightMode

    def __len__(self) -> int:
        return len(self.weights)


def as_logits(logits) -> np.ndarray:
    x = np.asarray(logits, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise InvalidInputError(f"logits must be a 1-d vector of length >= 2, got shape {x.shape}")
    if not np.isfinite(x).all():
        raise InvalidInputError("logits contain non-finite entries")
    return x


def check_probs(p, tol: float = SIMPLEX_TOL) -> np.ndarray:
    """Validate ``p`` as a point on the probability simplex and return it as float64."""
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 1 or p.size < 1:
        raise InvalidInputError(f"probability vector must be 1-d and non-empty, got shape {p.shape}")
    if not np.isfinite(p).all() or (p < 0).any():
        raise InvalidInputError("probability vector has negative or non-finite entries")
    if abs(p.sum() - 1.0) > tol:
        raise InvalidInputError(f"probability vector sums to {p.sum():.12g}, not 1")
    return p


def softmax(logits, temperature: float = 1.0) -> np.ndarray:
    """Max-shifted softmax of ``logits / temperature``."""
    if not temperature > 0 or not np.isfinite(temperature):
        raise InvalidConfigError(f"temperature must be positive and finite, got {temperature}")
    z = as_logits(logits) / temperature
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def entropy(p, eps_log: float = EPS_LOG) -> float:
    """Shannon entropy in nats, ``-sum p log(p + eps_log)``.

    The eps guard makes one-hot inputs evaluate to ``-log(1 + eps)``; that tiny
    negative value is clamped to zero.
    """
    return entropy_unchecked(check_probs(p), eps_log)


def entropy_unchecked(p: np.ndarray, eps_log: float = EPS_LOG) -> float:
    h = -float(np.dot(p, np.log(p + eps_log)))
    return max(h, 0.0)


def renormalize(p, mode: WeightMode = "simplex", eps: float = 0.0) -> WeightVector:
    """Turn a probability vector into mixture weights.

    ``simplex`` keeps ``p`` as is (an expectation under ``p``); ``l2`` divides by
    the Euclidean norm and then adds ``eps`` to every entry.
    """
    return renormalize_unchecked(check_probs(p), mode, eps)


def renormalize_unchecked(p: np.ndarray, mode: WeightMode = "simplex", eps: float = 0.0) -> WeightVector:
    if mode == "simplex":
        return WeightVector(p.copy(), "simplex")
    if mode == "l2":
        if eps < 0:
            raise InvalidConfigError(f"eps must be non-negative, got {eps}")
        norm = float(np.sqrt(np.dot(p, p)))
        if norm == 0.0:
            raise InvariantViolation("cannot l2-normalize a zero vector")
        return WeightVector(p / norm + eps, "l2")
    raise InvalidConfigError(f"unknown weight mode {mode!r}")
