"""Entropy statistics and token-masking ablations over decode traces."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from typing import Callable, Literal, Optional, Sequence, Union

import numpy as np

from .config import LeadConfig
from .controller import Event, Mode
from .engine import DecodeResult, StepRecord, decode
from .errors import InvalidInputError, TruncatedDistributionError
from .models import Model

Condition = Literal["mask_high_entropy", "mask_low_entropy", "mask_random"]
Segment = Union[int, Literal["all"]]
N_SEGMENTS = 5


def _records(trace) -> list[StepRecord]:
    if isinstance(trace, DecodeResult):
        trace = trace.trace
    return [r for r in trace if r.phase == "reasoning"]


@dataclass(frozen=True)
class EntropyStats:
    entropies: tuple[float, ...]
    mean: float
    max: float
    p50: float
    p90: float
    latent_steps: int
    transitions: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["entropies"] = list(self.entropies)
        return d


def entropy_summary(trace) -> EntropyStats:
    """Statistics over the reasoning-phase records, using their stored entropies."""
    recs = _records(trace)
    if not recs:
        raise InvalidInputError("entropy_summary needs at least one reasoning record")
    h = np.array([r.entropy for r in recs])
    p50, p90 = np.quantile(h, [0.5, 0.9])
    return EntropyStats(
        entropies=tuple(float(x) for x in h),
        mean=float(h.mean()),
        max=float(h.max()),
        p50=float(p50),
        p90=float(p90),
        latent_steps=sum(r.mode is Mode.LATENT for r in recs),
        transitions=sum(r.event in (Event.TO_LATENT, Event.TO_DISCRETE) for r in recs),
    )


def entropy_from_top_k(record: StepRecord, vocab_size: int, eps_log: float = 1e-12) -> float:
    """Exact entropy from the stored top-k pairs, if they cover the whole vocabulary."""
    if len(record.top_k) < vocab_size:
        raise TruncatedDistributionError(
            f"step {record.step}: only {len(record.top_k)} of {vocab_size} probabilities stored"
        )
    p = np.array([q for _, q in record.top_k])
    return max(-float(np.dot(p, np.log(p + eps_log))), 0.0)


@dataclass(frozen=True)
class MarkerReport:
    marker_mean: Optional[float]
    other_mean: Optional[float]
    difference: Optional[float]
    marker_count: int
    other_count: int

    def to_dict(self) -> dict:
        return asdict(self)


def marker_entropy_report(trace, markers) -> MarkerReport:
    """Mean entropy at steps whose sampled token is a marker versus all other steps.

    An empty side of the partition is reported as ``None``, never as zero.
    """
    recs = _records(trace)
    if not recs:
        raise InvalidInputError("marker_entropy_report needs at least one reasoning record")
    markers = set(markers)
    at = [r.entropy for r in recs if r.token in markers]
    rest = [r.entropy for r in recs if r.token not in markers]
    m = float(np.mean(at)) if at else None
    o = float(np.mean(rest)) if rest else None
    diff = m - o if m is not None and o is not None else None
    return MarkerReport(m, o, diff, len(at), len(rest))


def segment_steps(n_steps: int, segment: Segment) -> np.ndarray:
    """Step indices of one of five equal contiguous segments (1-based), or all."""
    if segment == "all":
        return np.arange(n_steps)
    if isinstance(segment, bool) or not isinstance(segment, (int, np.integer)) or not 1 <= segment <= N_SEGMENTS:
        raise InvalidInputError(f"segment must be an integer in [1, {N_SEGMENTS}] or 'all', got {segment!r}")
    return np.array_split(np.arange(n_steps), N_SEGMENTS)[segment - 1]


def select_steps(trace, condition: Condition, fraction: float = 0.25,
                 rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Pick ``ceil(fraction * n)`` reasoning steps by entropy rank, or at random.

    Ties in entropy go to the earlier step.
    """
    recs = _records(trace)
    n = len(recs)
    if not 0.0 <= fraction <= 1.0:
        raise InvalidInputError(f"fraction must lie in [0, 1], got {fraction}")
    k = math.ceil(fraction * n)
    h = np.array([r.entropy for r in recs])
    if condition == "mask_high_entropy":
        order = np.argsort(-h, kind="stable")
    elif condition == "mask_low_entropy":
        order = np.argsort(h, kind="stable")
    elif condition == "mask_random":
        order = (rng or np.random.default_rng(0)).permutation(n)
    else:
        raise InvalidInputError(f"unknown masking condition {condition!r}")
    return np.sort(order[:k])


@dataclass(frozen=True)
class MaskingReport:
    condition: str
    segment: Segment
    score_before: float
    score_after: float
    delta: float
    masked_steps: tuple[int, ...]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["masked_steps"] = list(self.masked_steps)
        return d


def masking_ablation(model: Model, vision_tokens: Sequence[int], text_tokens: Sequence[int],
                     config: LeadConfig, condition: Condition, segment: Segment,
                     score: Callable[[DecodeResult], float], *, fraction: float = 0.25,
                     seed: int = 0, baseline: Optional[DecodeResult] = None,
                     mask_embedding=None) -> MaskingReport:
    """Re-decode with selected reasoning steps' feedback replaced by the pad row.

    Steps are ranked over the whole reasoning chain, then restricted to the
    requested segment.
    """
    if baseline is None:
        baseline = decode(model, vision_tokens, text_tokens, config)
    recs = _records(baseline)
    in_segment = set(segment_steps(len(recs), segment).tolist())
    chosen = select_steps(baseline, condition, fraction, np.random.default_rng(seed))
    masked = tuple(int(s) for s in chosen if s in in_segment)
    before = float(score(baseline))
    if not masked:
        return MaskingReport(condition, segment, before, before, 0.0, ())
    if mask_embedding is None:
        if model.specials.pad is None:
            raise InvalidInputError("model specials define no pad token to mask with")
        mask_embedding = model.table.rows[model.specials.pad]
    ablated = decode(model, vision_tokens, text_tokens, config,
                     masked_steps=frozenset(masked), mask_embedding=mask_embedding)
    after = float(score(ablated))
    return MaskingReport(condition, segment, before, after, after - before, masked)


def reports_to_csv(reports: Sequence[MaskingReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["condition", "segment", "score_before", "score_after", "delta", "masked_steps"])
    for r in reports:
        writer.writerow([r.condition, r.segment, r.score_before, r.score_after, r.delta,
                         " ".join(map(str, r.masked_steps))])
    return buf.getvalue()


def reports_to_json(reports: Sequence) -> str:
    return json.dumps([r.to_dict() for r in reports], indent=2)
