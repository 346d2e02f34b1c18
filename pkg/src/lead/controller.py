"""Entropy-gated hysteresis controller for discrete/latent mode switching.

The controller is a pure transition function: ``step_transition`` takes the
current :class:`ControllerState` and this step's entropy and returns the next
state plus the event it produced. Nothing is mutated in place.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Literal, Optional

from .errors import InvalidConfigError

DEFAULT_WINDOW = 128
DEFAULT_MAX_SWITCHES = 5


class Mode(str, enum.Enum):
    DISCRETE = "DISCRETE"
    LATENT = "LATENT"


class Event(str, enum.Enum):
    NONE = "none"
    TO_DISCRETE = "to_discrete"
    TO_LATENT = "to_latent"
    FORCED_TERMINATION = "forced_termination"


ThresholdMode = Literal["dynamic", "fixed"]


@dataclass(frozen=True)
class SwitchConfig:
    """Switching parameters.

    ``window`` is the minimum dwell in DISCRETE before a switch to LATENT and may
    be ``math.inf``. ``initial_ref_entropy`` of ``None`` seeds the reference
    entropy with the first observed entropy. In ``fixed`` threshold mode the
    reference entropy stays at ``initial_ref_entropy`` forever.
    """

    window: float = DEFAULT_WINDOW
    max_switches: int = DEFAULT_MAX_SWITCHES
    initial_mode: Mode = Mode.DISCRETE
    initial_ref_entropy: Optional[float] = None
    threshold_mode: ThresholdMode = "dynamic"

    def __post_init__(self):
        for problem in self.violations():
            raise InvalidConfigError(problem)
        object.__setattr__(self, "initial_mode", Mode(self.initial_mode))

    def violations(self, prefix: str = "switch") -> list[str]:
        out = []
        w = self.window
        if isinstance(w, bool) or not isinstance(w, (int, float)) or math.isnan(w) or w < 0:
            out.append(f"{prefix}.window: must be a non-negative integer or inf, got {w!r}")
        elif not math.isinf(w) and w != int(w):
            out.append(f"{prefix}.window: must be an integer or inf, got {w!r}")
        c = self.max_switches
        if isinstance(c, bool) or not isinstance(c, int) or c < 0:
            out.append(f"{prefix}.max_switches: must be a non-negative integer, got {c!r}")
        if self.initial_mode not in (Mode.DISCRETE, Mode.LATENT, "DISCRETE", "LATENT"):
            out.append(f"{prefix}.initial_mode: must be DISCRETE or LATENT, got {self.initial_mode!r}")
        h = self.initial_ref_entropy
        if h is not None and (isinstance(h, bool) or not isinstance(h, (int, float)) or math.isnan(h) or h < 0):
            out.append(f"{prefix}.initial_ref_entropy: must be a non-negative real or inf, got {h!r}")
        if self.threshold_mode not in ("dynamic", "fixed"):
            out.append(f"{prefix}.threshold_mode: must be 'dynamic' or 'fixed', got {self.threshold_mode!r}")
        elif self.threshold_mode == "fixed" and h is None:
            out.append(f"{prefix}.initial_ref_entropy: required when threshold_mode is 'fixed'")
        return out


@dataclass(frozen=True)
class ControllerState:
    mode: Mode = Mode.DISCRETE
    ref_entropy: Optional[float] = None
    persistence: int = 0
    switch_count: int = 0
    phase_injected: bool = False

    @classmethod
    def initial(cls, config: SwitchConfig) -> "ControllerState":
        return cls(mode=config.initial_mode, ref_entropy=config.initial_ref_entropy)


def gate_discrete(entropy: float, ref_entropy: float) -> bool:
    return entropy < ref_entropy


def gate_latent(entropy: float, ref_entropy: float, persistence: int, window: float) -> bool:
    return entropy > ref_entropy and persistence >= window


def step_transition(state: ControllerState, entropy: float,
                    config: SwitchConfig) -> tuple[ControllerState, Event]:
    """Advance the controller by one step.

    The window only guards DISCRETE -> LATENT; LATENT -> DISCRETE fires as soon
    as entropy drops below the reference. On a transition the reference entropy
    takes this step's value (dynamic mode), persistence resets and the switch
    counter increments.
    """
    if state.ref_entropy is None:
        state = replace(state, ref_entropy=entropy)
    ref = state.ref_entropy

    if state.mode is Mode.DISCRETE:
        switch = gate_latent(entropy, ref, state.persistence, config.window)
        target = Mode.LATENT
    else:
        switch = gate_discrete(entropy, ref)
        target = Mode.DISCRETE

    if not switch:
        return replace(state, persistence=state.persistence + 1), Event.NONE

    new_ref = entropy if config.threshold_mode == "dynamic" else ref
    new_state = ControllerState(
        mode=target,
        ref_entropy=new_ref,
        persistence=0,
        switch_count=state.switch_count + 1,
        phase_injected=False if target is Mode.LATENT else state.phase_injected,
    )
    event = Event.TO_LATENT if target is Mode.LATENT else Event.TO_DISCRETE
    return new_state, event


def budget_exceeded(state: ControllerState, config: SwitchConfig) -> bool:
    return state.switch_count > config.max_switches
