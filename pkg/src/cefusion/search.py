"""Random search over fusion weights on a labelled validation set.

Trial 0 is always the uniform parameter set (every weight-matrix entry
1/M, every model importance 0.5). Trial ``t >= 1`` draws its weights
from the child seed ``(seed, t)``, so any subset of trials can be
scored in any order, or in parallel, with identical results.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .emotions import N_CLASSES
from .exceptions import ConfigurationError, DataError, ParameterError
from .fusion import (
    MODES,
    V_DEFAULT,
    V_GRID,
    FusionParameters,
    sample_model_weights,
    sample_weight_matrix,
    seed_sequence,
    uniform_weight_matrix,
)
from .metrics import confusion, macro_f1, normalize_metric, uar

logger = logging.getLogger(__name__)

V_STRATEGIES = ("grid_random", "grid_exhaustive")
MAX_EXHAUSTIVE_MODELS = 3


@dataclass(frozen=True)
class SearchConfig:
    trials: int = 10_000
    seed: int = 0
    alpha: float = 1.0
    metric: str = "macro_f1"
    mode: str = "dirichlet"
    v_strategy: str = "grid_random"
    n_jobs: int | None = None
    keep_trace: bool = False

    def __post_init__(self):
        if int(self.trials) < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be > 0, got {self.alpha}")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.v_strategy not in V_STRATEGIES:
            raise ParameterError(f"v_strategy must be one of {V_STRATEGIES}, got {self.v_strategy!r}")
        object.__setattr__(self, "metric", normalize_metric(self.metric))
        object.__setattr__(self, "trials", int(self.trials))


@dataclass(frozen=True)
class SearchResult:
    best_params: FusionParameters
    best_score: float
    trial_index: int
    score_trace: list[tuple[int, float]] | None = field(default=None, compare=False)


def check_validation_data(probs, labels, model_ids=None):
    """Validate stacked ``(n_frames, n_models, 7)`` streams and integer labels."""
    p = np.asarray(probs, dtype=float)
    if p.ndim != 3 or p.shape[2] != N_CLASSES:
        raise DataError(f"streams must be (n_frames, n_models, {N_CLASSES}), got {p.shape}")
    if p.shape[0] == 0:
        raise DataError("validation set has no frames")
    y = np.asarray(labels)
    if y.shape != (p.shape[0],):
        raise DataError(f"{y.shape} labels for {p.shape[0]} frames")
    if model_ids is not None and len(model_ids) != p.shape[1]:
        raise DataError(f"{len(model_ids)} model ids for {p.shape[1]} aligned streams")
    if y.min() < 0 or y.max() >= N_CLASSES:
        raise DataError(f"labels must lie in [0, {N_CLASSES})")
    return p, y.astype(np.int64)


def _metric_from_preds(y, pred, metric: str) -> float:
    cm = confusion(y, pred, N_CLASSES)
    return macro_f1(cm) if metric == "macro_f1" else uar(cm)


def evaluate_params(params: FusionParameters, probs, labels, metric: str = "macro_f1") -> float:
    """Fuse every frame, take the argmax emotion and score it against ``labels``."""
    p, y = check_validation_data(probs, labels, params.model_ids)
    pred = np.argmax(params.fuse(p), axis=-1)
    return _metric_from_preds(y, pred, normalize_metric(metric))


def trial_params(t: int, cfg: SearchConfig, model_ids) -> FusionParameters:
    """Parameters examined at trial ``t`` (pure function of ``t`` and ``cfg``)."""
    m = len(model_ids)
    if t == 0:
        return FusionParameters.uniform(model_ids, cfg.mode)
    rng = np.random.default_rng(seed_sequence(cfg.seed, t))
    w = sample_weight_matrix(rng, m, cfg.alpha)
    if cfg.mode == "hierarchical" and cfg.v_strategy == "grid_random":
        v = sample_model_weights(rng, m)
    else:
        v = np.full(m, V_DEFAULT)
    return FusionParameters(w, v, tuple(model_ids), cfg.mode)


def _score_trials(trials, cfg, model_ids, p, y):
    out = []
    for t in trials:
        params = trial_params(t, cfg, model_ids)
        pred = np.argmax(params.fuse(p), axis=-1)
        out.append(_metric_from_preds(y, pred, cfg.metric))
    return out


def _argmax_first(scores) -> int:
    s = np.asarray(scores)
    return int(np.flatnonzero(s == s.max())[0])


def _scan_model_weights(weight_matrix, p, y, metric: str) -> tuple[np.ndarray, float]:
    """Exhaustively score every grid combination of model importances."""
    m = p.shape[1]
    weighted = p * weight_matrix
    best_v, best = None, -np.inf
    # Batch over the last model's grid; iterate the rest in lexicographic order.
    for head in itertools.product(range(V_GRID.size), repeat=m - 1):
        vs = np.empty((V_GRID.size, m))
        vs[:, : m - 1] = V_GRID[list(head)]
        vs[:, m - 1] = V_GRID
        fused = np.einsum("nmc,bm->bnc", weighted, vs)
        preds = np.argmax(fused, axis=-1)
        scores = [_metric_from_preds(y, pr, metric) for pr in preds]
        i = _argmax_first(scores)
        if scores[i] > best:
            best, best_v = scores[i], vs[i].copy()
    return best_v, float(best)


def search(cfg: SearchConfig, probs, labels, model_ids=None) -> SearchResult:
    """Return the best-scoring parameters among ``cfg.trials`` trials.

    Ties resolve to the lowest trial index. With ``v_strategy="grid_exhaustive"``
    in hierarchical mode the weight matrix is searched first and the model
    importances are then scanned over the full grid for that matrix.
    """
    p, y = check_validation_data(probs, labels, model_ids)
    m = p.shape[1]
    model_ids = tuple(model_ids) if model_ids is not None else tuple(f"model{i}" for i in range(m))
    exhaustive = cfg.mode == "hierarchical" and cfg.v_strategy == "grid_exhaustive"
    if exhaustive and m > MAX_EXHAUSTIVE_MODELS:
        raise ConfigurationError(f"grid_exhaustive supports at most {MAX_EXHAUSTIVE_MODELS} models, got {m}")

    trials = np.arange(cfg.trials)
    n_jobs = cfg.n_jobs or 1
    if n_jobs == 1:
        scores = _score_trials(trials, cfg, model_ids, p, y)
    else:
        chunks = np.array_split(trials, max(1, min(len(trials), 8 * abs(n_jobs))))
        parts = Parallel(n_jobs=n_jobs)(delayed(_score_trials)(c, cfg, model_ids, p, y) for c in chunks)
        scores = [s for part in parts for s in part]

    best_t = _argmax_first(scores)
    best = trial_params(best_t, cfg, model_ids)
    best_score = float(scores[best_t])
    logger.info("best trial %d of %d: %s = %.4f (uniform baseline %.4f)",
                best_t, cfg.trials, cfg.metric, best_score, scores[0])

    if exhaustive:
        v, v_score = _scan_model_weights(best.weight_matrix, p, y, cfg.metric)
        best = FusionParameters(best.weight_matrix, v, model_ids, cfg.mode)
        best_score = v_score
        logger.info("model-weight scan: %s = %.4f with v = %s", cfg.metric, best_score, v)

    trace = [(int(t), float(s)) for t, s in zip(trials, scores)] if cfg.keep_trace else None
    return SearchResult(best, best_score, best_t, trace)
