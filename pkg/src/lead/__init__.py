"""Entropy-aware switching between discrete and latent reasoning feedback."""

from .analysis import (EntropyStats, MarkerReport, MaskingReport, entropy_from_top_k,
                       entropy_summary, marker_entropy_report, masking_ablation, segment_steps,
                       select_steps)
from .config import LeadConfig, config_violations, default_config_path, load_config
from .controller import (ControllerState, Event, Mode, SwitchConfig, budget_exceeded,
                         gate_discrete, gate_latent, step_transition)
from .embedding import (EmbeddingTable, SpecialTokenSet, compute_visual_anchor,
                        expected_embedding, inject_anchor, lookup)
from .engine import DecodeResult, StepRecord, decode, lead_step, sample_token
from .errors import (InvalidConfigError, InvalidInputError, InvariantViolation, LeadError,
                     TruncatedDistributionError)
from .models import Model, ScriptedModel, ToyTransformer, encode_multimodal_input, next_logits
from .numerics import WeightVector, entropy, renormalize, softmax

__version__ = "0.1.0"
