"""Decoding configuration, its validation, and dict/YAML round-tripping."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Literal, Optional

import yaml

from .controller import DEFAULT_MAX_SWITCHES, DEFAULT_WINDOW, Mode, SwitchConfig
from .errors import InvalidConfigError

CONFIG_VERSION = 1
DEFAULT_LAMBDA = 0.4

Sampling = Literal["greedy", "temperature"]
Injection = Literal["convex", "additive", "off"]


@dataclass(frozen=True)
class LeadConfig:
    switch: SwitchConfig = field(default_factory=SwitchConfig)
    lam: float = DEFAULT_LAMBDA
    injection: Injection = "convex"
    weight_mode: Literal["simplex", "l2"] = "simplex"
    sampling: Sampling = "greedy"
    temperature: float = 1.0
    max_reasoning_steps: int = 1024
    max_answer_steps: int = 256
    eps: float = 1e-12
    eps_log: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise InvalidConfigError("; ".join(problems))

    def violations(self) -> list[str]:
        return _lead_violations(self.__dict__)

    @property
    def injection_enabled(self) -> bool:
        return self.injection != "off" and self.lam > 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d = {"lambda": d.pop("lam"), **d}
        sw = d["switch"]
        sw["initial_mode"] = Mode(sw["initial_mode"]).value
        sw["window"] = _encode_real(sw["window"])
        sw["initial_ref_entropy"] = _encode_real(sw["initial_ref_entropy"])
        return {"version": CONFIG_VERSION, **d}

    @classmethod
    def from_dict(cls, obj: dict) -> "LeadConfig":
        problems = config_violations(obj)
        if problems:
            raise InvalidConfigError("; ".join(problems))
        return _build(obj)

    def override(self, dotted: dict[str, Any]) -> "LeadConfig":
        d = self.to_dict()
        for path, value in dotted.items():
            set_dotted(d, path, value)
        return LeadConfig.from_dict(d)


def _encode_real(x):
    if x is None:
        return None
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return int(x) if isinstance(x, float) and x.is_integer() and not isinstance(x, bool) else x


def _decode_real(x):
    if isinstance(x, str):
        try:
            return float(x.strip().lstrip("."))
        except ValueError:
            return x
    return x


def _is_real(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and not math.isnan(x)


def _lead_violations(d: dict) -> list[str]:
    out = []
    lam = d.get("lam")
    if not _is_real(lam) or not 0.0 <= lam <= 1.0:
        out.append(f"lambda: must lie in [0, 1], got {lam!r}")
    if d.get("injection") not in ("convex", "additive", "off"):
        out.append(f"injection: must be one of convex, additive, off; got {d.get('injection')!r}")
    if d.get("weight_mode") not in ("simplex", "l2"):
        out.append(f"weight_mode: must be simplex or l2, got {d.get('weight_mode')!r}")
    if d.get("sampling") not in ("greedy", "temperature"):
        out.append(f"sampling: must be greedy or temperature, got {d.get('sampling')!r}")
    t = d.get("temperature")
    if not _is_real(t) or not 0 < t < math.inf:
        out.append(f"temperature: must be a positive real, got {t!r}")
    for name in ("max_reasoning_steps", "max_answer_steps"):
        v = d.get(name)
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            out.append(f"{name}: must be a positive integer, got {v!r}")
    for name in ("eps", "eps_log"):
        v = d.get(name)
        if not _is_real(v) or v < 0:
            out.append(f"{name}: must be a non-negative real, got {v!r}")
    seed = d.get("seed")
    if isinstance(seed, bool) or not isinstance(seed, int):
        out.append(f"seed: must be an integer, got {seed!r}")
    return out


_TOP_KEYS = {f.name for f in fields(LeadConfig)} - {"lam"} | {"lambda", "version"}
_SWITCH_KEYS = {f.name for f in fields(SwitchConfig)}


_REAL_TOP = ("lam", "temperature", "eps", "eps_log")
_REAL_SWITCH = ("window", "initial_ref_entropy")


def _merged(obj: dict) -> tuple[dict, Any]:
    defaults = LeadConfig().to_dict()
    top = {**defaults, **{k: v for k, v in obj.items() if k != "switch"}}
    top.pop("version")
    top.pop("switch")
    top["lam"] = top.pop("lambda")
    for k in _REAL_TOP:
        top[k] = _decode_real(top[k])
    sw = obj.get("switch", {})
    if isinstance(sw, dict):
        sw = {**defaults["switch"], **sw}
        for k in _REAL_SWITCH:
            sw[k] = _decode_real(sw[k])
    return top, sw


def config_violations(obj: Any) -> list[str]:
    """Every schema and invariant violation in a raw config mapping."""
    if not isinstance(obj, dict):
        return [f"<root>: expected a mapping, got {type(obj).__name__}"]
    out = [f"{k}: unknown field" for k in obj if k not in _TOP_KEYS]
    version = obj.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        out.append(f"version: unsupported config version {version!r} (expected {CONFIG_VERSION})")
    top, sw = _merged(obj)
    out += _lead_violations(top)
    if not isinstance(sw, dict):
        return out + [f"switch: expected a mapping, got {type(sw).__name__}"]
    out += [f"switch.{k}: unknown field" for k in obj.get("switch", {}) if k not in _SWITCH_KEYS]
    probe = object.__new__(SwitchConfig)
    for k in _SWITCH_KEYS:
        object.__setattr__(probe, k, sw[k])
    out += probe.violations()
    return out


def _build(obj: dict) -> LeadConfig:
    top, sw = _merged(obj)
    sw = {k: sw[k] for k in _SWITCH_KEYS}
    if not math.isinf(sw["window"]):
        sw["window"] = int(sw["window"])
    return LeadConfig(switch=SwitchConfig(**sw), **top)


def set_dotted(d: dict, path: str, value) -> None:
    keys = path.split(".")
    cur = d
    for k in keys[:-1]:
        nxt = cur.get(k)
        if not isinstance(nxt, dict):
            nxt = cur[k] = {}
        cur = nxt
    cur[keys[-1]] = value


def load_config(path) -> LeadConfig:
    return LeadConfig.from_dict(read_config_file(path))


def read_config_file(path) -> dict:
    """Parse a YAML (or JSON) config file into a plain mapping."""
    text = Path(path).read_text()
    try:
        obj = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise InvalidConfigError(f"{path}: cannot parse config: {exc}") from exc
    return {} if obj is None else obj


def default_config_path() -> Path:
    return Path(__file__).with_name("data") / "default.yaml"
