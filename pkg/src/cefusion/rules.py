"""Rule-based mapping from fused basic-emotion scores to compound expressions.

* ``rule1``: zero every class score below a threshold (default 1/7),
  then score each compound as the plain sum of its two emotions.
* ``rule2``: score each compound as the weighted pair sum using the
  frequency weights of :data:`~cefusion.emotions.DEFAULT_TABLE`.
* ``none``: plain pair sums on the unmasked vector.

All functions broadcast over leading axes: ``(..., 7) -> (..., 7)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .emotions import (
    DEFAULT_TABLE,
    N_CLASSES,
    BasicEmotion,
    CompoundExpression,
    CompoundWeightTable,
    pair_sum_table,
)
from .exceptions import ConfigurationError, ParameterError, ShapeError

RULES = ("rule1", "rule2", "none")
ALL_MASKED_POLICIES = ("use_unmasked", "first_class")
DEFAULT_THRESHOLD = 1.0 / 7.0

_PAIR_SUMS = pair_sum_table()


def _as_scores(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.shape[-1:] != (N_CLASSES,):
        raise ShapeError(f"expected last axis of size {N_CLASSES}, got shape {a.shape}")
    return a


def normalize_rule(rule) -> str:
    """Accept ``1``, ``"1"``, ``"rule1"``, ``"none"``... and return the canonical name."""
    r = str(rule).strip().lower()
    if r in ("1", "2"):
        r = "rule" + r
    if r in ("no", "off", "w/o", "without"):
        r = "none"
    if r not in RULES:
        raise ParameterError(f"rule must be one of {RULES}, got {rule!r}")
    return r


@dataclass(frozen=True)
class RuleConfig:
    rule: str = "rule2"
    mask_threshold: float = DEFAULT_THRESHOLD
    table: CompoundWeightTable = field(default=DEFAULT_TABLE)
    all_masked_policy: str = "use_unmasked"

    def __post_init__(self):
        object.__setattr__(self, "rule", normalize_rule(self.rule))
        # 0 is admitted: it turns masking into the identity.
        if not 0.0 <= self.mask_threshold < 1.0:
            raise ParameterError(f"mask_threshold must be in [0, 1), got {self.mask_threshold}")
        if self.all_masked_policy not in ALL_MASKED_POLICIES:
            raise ParameterError(
                f"all_masked_policy must be one of {ALL_MASKED_POLICIES}, got {self.all_masked_policy!r}"
            )


def rule1_mask(fused, threshold: float = DEFAULT_THRESHOLD) -> np.ndarray:
    """Zero entries strictly below ``threshold``; no renormalization."""
    p = _as_scores(fused)
    return np.where(p < threshold, 0.0, p)


def pair_scores(probs, table: CompoundWeightTable) -> np.ndarray:
    p = _as_scores(probs)
    return p[..., table.first_index] * table.first_weights + p[..., table.second_index] * table.second_weights


def rule1_scores(masked) -> np.ndarray:
    """Unweighted pair sum per compound expression."""
    return pair_scores(masked, _PAIR_SUMS)


def rule2_scores(fused, table: CompoundWeightTable = DEFAULT_TABLE) -> np.ndarray:
    """Frequency-weighted pair sum per compound expression."""
    return pair_scores(fused, table)


def decide(scores) -> np.ndarray | CompoundExpression:
    """Argmax over compound classes; ties go to the lowest canonical index.

    Returns a :class:`CompoundExpression` for a single 7-vector, an int
    array otherwise.
    """
    s = _as_scores(scores)
    idx = np.argmax(s, axis=-1)  # np.argmax returns the first maximum
    if s.ndim == 1:
        return CompoundExpression(int(idx))
    return idx


def _masked_flags(fused, cfg: RuleConfig):
    p = _as_scores(fused)
    masked = rule1_mask(p, cfg.mask_threshold)
    alive = masked > 0
    all_masked = ~alive.any(axis=-1)
    emotion_alive = np.delete(alive, int(BasicEmotion.NEUTRAL), axis=-1).any(axis=-1)
    neutral_only = alive[..., int(BasicEmotion.NEUTRAL)] & ~emotion_alive
    return masked, all_masked, neutral_only


def compound_scores(fused, cfg: RuleConfig, fusion_mode: str = "dirichlet") -> np.ndarray:
    """Scores the configured rule assigns to every compound expression."""
    if cfg.rule == "rule1" and fusion_mode != "dirichlet":
        raise ConfigurationError("Rule 1 only applies to Dirichlet-fused outputs, not hierarchical")
    p = _as_scores(fused)
    if cfg.rule == "rule2":
        return rule2_scores(p, cfg.table)
    if cfg.rule == "none":
        return rule1_scores(p)
    masked, all_masked, neutral_only = _masked_flags(p, cfg)
    scores = rule1_scores(masked)
    if cfg.all_masked_policy == "use_unmasked":
        fallback = all_masked | neutral_only
        if np.any(fallback):
            scores = np.where(fallback[..., None], rule1_scores(p), scores)
    return scores


def predict_ce(fused, cfg: RuleConfig | None = None, fusion_mode: str = "dirichlet"):
    """Return ``(decision, scores)`` for one vector or a stack of vectors."""
    cfg = cfg or RuleConfig()
    scores = compound_scores(fused, cfg, fusion_mode)
    return decide(scores), scores


def rule_diagnostics(fused, cfg: RuleConfig) -> dict[str, np.ndarray]:
    """Per-vector flags for the degenerate Rule 1 cases.

    ``all_masked``: every class fell below the threshold.
    ``neutral_dominant``: only Neutral survived, so every compound score is 0.
    Both are all-False for rules other than ``rule1``.
    """
    p = _as_scores(fused)
    if cfg.rule != "rule1":
        z = np.zeros(p.shape[:-1], dtype=bool)
        return {"all_masked": z, "neutral_dominant": z.copy()}
    _, all_masked, neutral_only = _masked_flags(p, cfg)
    return {"all_masked": all_masked, "neutral_dominant": neutral_only}
