"""Entropy-gated decoding loop: mode switching, embedding feedback, tracing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Literal, Optional, Sequence

import numpy as np

from .config import LeadConfig
from .controller import ControllerState, Event, Mode, budget_exceeded, step_transition
from .embedding import expected_embedding, inject_anchor, lookup
from .errors import InvalidInputError
from .models import Model, encode_multimodal_input
from .numerics import check_probs, entropy_unchecked, renormalize_unchecked, softmax

TRACE_SCHEMA = "lead_trace_v1"
TOP_K = 3

Phase = Literal["reasoning", "answer"]
Termination = Literal["natural", "budget", "step_cap"]


@dataclass(frozen=True)
class StepRecord:
    step: int
    phase: Phase
    token: int
    entropy: float
    ref_entropy: float
    mode: Mode
    event: Event
    injected: bool
    persistence: int
    switch_count: int
    top_k: tuple[tuple[int, float], ...]

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "phase": self.phase,
            "token": self.token,
            "entropy": self.entropy,
            "ref_entropy": self.ref_entropy,
            "mode": self.mode.value,
            "event": self.event.value,
            "injected": self.injected,
            "persistence": self.persistence,
            "switch_count": self.switch_count,
            "top_k": [[t, p] for t, p in self.top_k],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StepRecord":
        return cls(
            step=int(d["step"]), phase=d["phase"], token=int(d["token"]),
            entropy=float(d["entropy"]), ref_entropy=float(d["ref_entropy"]),
            mode=Mode(d["mode"]), event=Event(d["event"]), injected=bool(d["injected"]),
            persistence=int(d["persistence"]), switch_count=int(d["switch_count"]),
            top_k=tuple((int(t), float(p)) for t, p in d["top_k"]),
        )


@dataclass
class DecodeResult:
    reasoning_tokens: list[int]
    answer_tokens: list[int]
    trace: list[StepRecord]
    termination: Termination
    # Full per-step distributions, only kept when ``keep_probs=True``.
    probs: Optional[list[np.ndarray]] = field(default=None, repr=False)

    @property
    def reasoning_trace(self) -> list[StepRecord]:
        return [r for r in self.trace if r.phase == "reasoning"]

    def summary(self) -> dict:
        reasoning = self.reasoning_trace
        return {
            "termination": self.termination,
            "reasoning_length": len(self.reasoning_tokens),
            "answer_length": len(self.answer_tokens),
            "latent_steps": sum(r.mode is Mode.LATENT for r in reasoning),
            "transitions": sum(r.event in (Event.TO_LATENT, Event.TO_DISCRETE) for r in reasoning),
            "injections": sum(r.injected for r in reasoning),
            "mean_entropy": float(np.mean([r.entropy for r in reasoning])) if reasoning else None,
            "reasoning_tokens": list(self.reasoning_tokens),
            "answer_tokens": list(self.answer_tokens),
        }

    def to_json(self) -> str:
        body = {"schema": TRACE_SCHEMA, **self.summary(), "trace": [r.to_dict() for r in self.trace]}
        return json.dumps(body, sort_keys=True)


def top_k_pairs(p: np.ndarray, k: int = TOP_K) -> tuple[tuple[int, float], ...]:
    order = np.argsort(-p, kind="stable")[:k]
    return tuple((int(i), float(p[i])) for i in order)


def sample_token(p, strategy: str = "greedy", rng: Optional[np.random.Generator] = None,
                 temperature: float = 1.0) -> int:
    """Greedy argmax (lowest index wins ties) or tempered sampling from ``p``."""
    return _sample(check_probs(p), strategy, rng, temperature)


def _sample(p, strategy, rng, temperature):
    if strategy == "greedy":
        return int(np.argmax(p))
    if strategy == "temperature":
        if rng is None:
            raise InvalidInputError("temperature sampling needs a seeded rng")
        q = np.power(p, 1.0 / temperature)
        cdf = np.cumsum(q)
        idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
        return min(idx, len(p) - 1)
    raise InvalidInputError(f"unknown sampling strategy {strategy!r}")


def lead_step(model: Model, state: ControllerState, context: Sequence[np.ndarray],
              config: LeadConfig, rng: Optional[np.random.Generator] = None,
              step: int = 0) -> tuple[np.ndarray, StepRecord, ControllerState]:
    """One reasoning step: returns the embedding to feed next, its record, the new state."""
    emb, record, new_state, _ = _lead_step(model, state, context, config, rng, step)
    return emb, record, new_state


def _lead_step(model, state, context, config, rng, step):
    table, specials = model.table, model.specials
    logits = model.next_logits(context)
    p = softmax(logits)
    h = entropy_unchecked(p, config.eps_log)
    new_state, event = step_transition(state, h, config.switch)
    token = _sample(p, config.sampling, rng, config.temperature)
    injected = False

    if budget_exceeded(new_state, config.switch):
        token = specials.end_of_thinking
        emb = lookup(table, token)
        mode, event = Mode.DISCRETE, Event.FORCED_TERMINATION
    elif new_state.mode is Mode.DISCRETE:
        emb = lookup(table, token)
        mode = Mode.DISCRETE
    else:
        mode = Mode.LATENT
        emb = expected_embedding(table, renormalize_unchecked(p, config.weight_mode, config.eps))
        if not new_state.phase_injected:
            if config.injection_enabled:
                emb = inject_anchor(emb, table.visual_anchor(), config.lam, config.injection)
                injected = True
            new_state = replace(new_state, phase_injected=True)

    record = StepRecord(
        step=step, phase="reasoning", token=int(token), entropy=h,
        ref_entropy=float(new_state.ref_entropy), mode=mode, event=event, injected=injected,
        persistence=new_state.persistence, switch_count=new_state.switch_count,
        top_k=top_k_pairs(p),
    )
    return emb, record, new_state, p


def decode(model: Model, vision_tokens, text_tokens, config: Optional[LeadConfig] = None, *,
           masked_steps=frozenset(), mask_embedding=None, keep_probs: bool = False,
           skip_reasoning: bool = False) -> DecodeResult:
    """Entropy-gated reasoning phase, then a plain discrete answer phase.

    ``masked_steps`` lists reasoning step indices whose fed-back embedding is
    replaced by ``mask_embedding`` (used by the masking ablations).
    ``skip_reasoning`` feeds end-of-thinking straight away and only answers.
    """
    config = config or LeadConfig()
    specials = model.specials
    if specials is None:
        raise InvalidInputError("model has no special tokens; end_of_thinking is required")
    if masked_steps and mask_embedding is None:
        raise InvalidInputError("masked_steps given without a mask_embedding")
    context = encode_multimodal_input(vision_tokens, text_tokens, model.table)
    if not context:
        raise InvalidInputError("decode needs at least one input token")
    rng = np.random.default_rng(config.seed)
    state = ControllerState.initial(config.switch)
    trace: list[StepRecord] = []
    probs: Optional[list[np.ndarray]] = [] if keep_probs else None
    reasoning: list[int] = []
    termination: Termination = "step_cap"

    if skip_reasoning:
        context.append(lookup(model.table, specials.end_of_thinking))
        state = replace(state, ref_entropy=0.0 if state.ref_entropy is None else state.ref_entropy)
        termination = "natural"

    for step in range(0 if skip_reasoning else config.max_reasoning_steps):
        emb, record, state, p = _lead_step(model, state, context, config, rng, step)
        if probs is not None:
            probs.append(p)
        context.append(np.array(mask_embedding, dtype=np.float64) if step in masked_steps else emb)
        trace.append(record)
        reasoning.append(record.token)
        if record.event is Event.FORCED_TERMINATION:
            termination = "budget"
            break
        if record.token == specials.end_of_thinking:
            termination = "natural"
            break

    answer: list[int] = []
    for j in range(config.max_answer_steps):
        p = softmax(model.next_logits(context))
        token = _sample(p, config.sampling, rng, config.temperature)
        if probs is not None:
            probs.append(p)
        trace.append(StepRecord(
            step=len(trace), phase="answer", token=token, entropy=entropy_unchecked(p, config.eps_log),
            ref_entropy=float(state.ref_entropy), mode=Mode.DISCRETE, event=Event.NONE,
            injected=False, persistence=state.persistence, switch_count=state.switch_count,
            top_k=top_k_pairs(p),
        ))
        answer.append(token)
        context.append(lookup(model.table, token))
        if specials.end_of_sequence is not None and token == specials.end_of_sequence:
            break

    return DecodeResult(reasoning, answer, trace, termination, probs)
