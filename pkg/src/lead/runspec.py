"""Declarative run files for the command-line front end.

A run file is YAML with these top-level sections, all optional::

    version: 1
    model:    {kind: toy, seed: 7, vocab_size: 64, dim: 32, n_layers: 2, n_heads: 2}
              # or {kind: scripted, path: script.json, embeddings: table.json}
              # or {kind: branch_task, n_filler: 9}
    inputs:   {vision: [...], text: [...]}   # vision defaults to the three vision specials
    lead:     {...decoding config...}
    sweep:    {axis: lambda, values: [0, 0.2, 0.4, 0.6], seeds: [0, 1, 2]}
    analysis: {markers: [...]}
    ablation: {conditions: [...], segments: [1, 2, 3, 4, 5], fraction: 0.25}
    score:    {expected: [...]}                # answer prefix counted as correct
    output:   {path: out.jsonl, format: jsonl}

Relative paths are resolved against the run file's directory.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .config import CONFIG_VERSION, LeadConfig, _decode_real, config_violations, read_config_file, set_dotted
from .embedding import EmbeddingTable
from .errors import InvalidConfigError
from .models import ScriptedModel, ToyTransformer
from .tasks import BranchTaskModel

SECTIONS = ("version", "model", "inputs", "lead", "sweep", "analysis", "ablation", "score", "output")
SWEEP_AXES = ("lambda", "window", "weight_mode", "injection_variant", "threshold_mode")
CONDITIONS = ("mask_high_entropy", "mask_low_entropy", "mask_random")
TOY_DEFAULTS = {"kind": "toy", "seed": 0, "vocab_size": 64, "dim": 32, "n_layers": 2,
                "n_heads": 2, "logit_scale": 3.0}


def default_run() -> dict:
    return {
        "version": CONFIG_VERSION,
        "model": dict(TOY_DEFAULTS),
        "inputs": {"vision": None, "text": [1, 2, 3]},
        "lead": LeadConfig().to_dict(),
        "output": {"format": "jsonl"},
    }


@dataclass
class RunSpec:
    raw: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_file(cls, path) -> "RunSpec":
        path = Path(path)
        raw = read_config_file(path)
        if "lead" not in raw and any(k in raw for k in ("switch", "lambda", "injection")):
            # a bare decoding config
            raw = {"lead": {k: v for k, v in raw.items()}}
        return cls(raw, path.parent)

    def resolved(self) -> dict:
        """The run file merged over defaults; this is what artifacts echo."""
        out = default_run()
        for key, value in self.raw.items():
            if isinstance(value, dict) and isinstance(out.get(key), dict):
                if key == "model" and value.get("kind", "toy") != "toy":
                    out[key] = copy.deepcopy(value)
                else:
                    out[key] = _deep_merge(out[key], value)
            else:
                out[key] = copy.deepcopy(value)
        if not self.violations():
            out["lead"] = self.lead_config().to_dict()
        if out["inputs"].get("vision") is None and not self.violations():
            sp = self.build_model().specials
            out["inputs"]["vision"] = [sp.vision_start, sp.image_pad, sp.vision_end]
        return out

    def apply_overrides(self, overrides: dict[str, Any]) -> "RunSpec":
        raw = copy.deepcopy(self.raw)
        for path, value in overrides.items():
            head = path.split(".", 1)[0]
            if head in SECTIONS:
                set_dotted(raw, path, value)
            else:
                set_dotted(raw.setdefault("lead", {}), path, value)
        return RunSpec(raw, self.base_dir)

    def path(self, p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    # -- validation --------------------------------------------------------

    def violations(self) -> list[str]:
        raw = self.raw
        if not isinstance(raw, dict):
            return ["<root>: expected a mapping"]
        out = [f"{k}: unknown section" for k in raw if k not in SECTIONS]
        if raw.get("version", CONFIG_VERSION) != CONFIG_VERSION:
            out.append(f"version: unsupported run file version {raw.get('version')!r}")
        lead = raw.get("lead", {})
        out += [f"lead.{v}" for v in config_violations(lead)]
        out += self._model_violations()
        vocab = None if any(v.startswith("model") for v in out) else self._vocab_size()
        inputs = raw.get("inputs", {}) or {}
        for key in ("vision", "text"):
            ids = inputs.get(key)
            if ids is None:
                continue
            if not isinstance(ids, list) or not all(isinstance(t, int) and not isinstance(t, bool) for t in ids):
                out.append(f"inputs.{key}: must be a list of token ids")
            elif vocab is not None and any(not 0 <= t < vocab for t in ids):
                out.append(f"inputs.{key}: token ids must lie in [0, {vocab})")
        if not (inputs.get("vision") or []) and not (inputs.get("text", [1]) or []):
            out.append("inputs: at least one input token is required")
        out += self._sweep_violations()
        ab = raw.get("ablation")
        if ab is not None:
            for c in ab.get("conditions", []):
                if c not in CONDITIONS:
                    out.append(f"ablation.conditions: unknown condition {c!r}")
            for s in ab.get("segments", []):
                if s != "all" and (not isinstance(s, int) or not 1 <= s <= 5):
                    out.append(f"ablation.segments: segment {s!r} must be 1-5 or 'all'")
            fr = ab.get("fraction", 0.25)
            if not isinstance(fr, (int, float)) or not 0 <= fr <= 1:
                out.append(f"ablation.fraction: must lie in [0, 1], got {fr!r}")
        fmt = (raw.get("output") or {}).get("format", "jsonl")
        if fmt not in ("jsonl", "csv"):
            out.append(f"output.format: must be jsonl or csv, got {fmt!r}")
        return out

    def _model_violations(self) -> list[str]:
        m = self.raw.get("model", {})
        if not isinstance(m, dict):
            return ["model: expected a mapping"]
        kind = m.get("kind", "toy")
        out = []
        if kind == "toy":
            merged = {**TOY_DEFAULTS, **m}
            for k in ("seed", "vocab_size", "dim", "n_layers", "n_heads"):
                v = merged[k]
                if not isinstance(v, int) or isinstance(v, bool) or (k != "seed" and v < 1):
                    out.append(f"model.{k}: must be a positive integer, got {v!r}")
            if not out:
                if merged["vocab_size"] < 8:
                    out.append("model.vocab_size: must be at least 8 to reserve special tokens")
                if merged["dim"] % merged["n_heads"]:
                    out.append("model.dim: must be divisible by model.n_heads")
            unknown = set(m) - set(TOY_DEFAULTS)
            out += [f"model.{k}: unknown field" for k in sorted(unknown)]
        elif kind == "scripted":
            if "path" not in m:
                out.append("model.path: required for scripted models")
            elif not self.path(m["path"]).is_file():
                out.append(f"model.path: file not found: {m['path']}")
            if "embeddings" in m and not self.path(m["embeddings"]).is_file():
                out.append(f"model.embeddings: file not found: {m['embeddings']}")
        elif kind == "branch_task":
            n = m.get("n_filler", 9)
            if not isinstance(n, int) or n < 0:
                out.append(f"model.n_filler: must be a non-negative integer, got {n!r}")
        else:
            out.append(f"model.kind: must be toy, scripted or branch_task, got {kind!r}")
        return out

    def _sweep_violations(self) -> list[str]:
        sw = self.raw.get("sweep")
        if sw is None:
            return []
        out = []
        axis = sw.get("axis")
        if axis not in SWEEP_AXES:
            out.append(f"sweep.axis: must be one of {', '.join(SWEEP_AXES)}, got {axis!r}")
        values = sw.get("values")
        if not isinstance(values, list) or not values:
            out.append("sweep.values: must be a non-empty list")
        elif axis in SWEEP_AXES:
            base = self.raw.get("lead", {})
            for v in values:
                try:
                    problems = config_violations(sweep_override(base, axis, v))
                except InvalidConfigError as exc:
                    problems = [str(exc)]
                out += [f"sweep.values[{v!r}]: {p}" for p in problems]
        seeds = sw.get("seeds", [0])
        if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) for s in seeds):
            out.append("sweep.seeds: must be a non-empty list of integers")
        return out

    def _vocab_size(self) -> Optional[int]:
        m = self.raw.get("model", {})
        kind = m.get("kind", "toy")
        if kind == "toy":
            return {**TOY_DEFAULTS, **m}["vocab_size"]
        if kind == "branch_task":
            return BranchTaskModel.vocab
        try:
            import json
            return int(json.loads(self.path(m["path"]).read_text())["vocab"])
        except Exception:
            return None

    # -- construction ------------------------------------------------------

    def lead_config(self) -> LeadConfig:
        return LeadConfig.from_dict(self.raw.get("lead", {}))

    def build_model(self, seed_offset: int = 0):
        m = self.raw.get("model", {})
        kind = m.get("kind", "toy")
        if kind == "toy":
            p = {**TOY_DEFAULTS, **m}
            return ToyTransformer(seed=p["seed"] + seed_offset, vocab_size=p["vocab_size"], dim=p["dim"],
                                  n_layers=p["n_layers"], n_heads=p["n_heads"], logit_scale=p["logit_scale"])
        if kind == "branch_task":
            return BranchTaskModel(n_filler=m.get("n_filler", 9))
        table = EmbeddingTable.load(self.path(m["embeddings"])) if "embeddings" in m else None
        return ScriptedModel.load(self.path(m["path"]), table=table)

    def inputs(self) -> tuple[list[int], list[int]]:
        inp = self.resolved()["inputs"]
        return list(inp.get("vision") or []), list(inp.get("text") or [])


def sweep_override(lead: dict, axis: str, value) -> dict:
    """The decoding config with one sweep axis set to ``value``."""
    d = copy.deepcopy(lead)
    sw = d.setdefault("switch", {})
    if axis == "lambda":
        d["lambda"] = value
    elif axis == "window":
        sw["window"] = value
    elif axis == "weight_mode":
        d["weight_mode"] = value
    elif axis == "injection_variant":
        d["injection"] = value
    elif axis == "threshold_mode":
        if value in ("dynamic", "delta"):
            sw["threshold_mode"] = "dynamic"
        else:
            real = _decode_real(value)
            if not isinstance(real, (int, float)) or math.isnan(real):
                raise InvalidConfigError(f"threshold value must be 'dynamic' or a real, got {value!r}")
            sw["threshold_mode"] = "fixed"
            sw["initial_ref_entropy"] = value
    return d


def _deep_merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out
