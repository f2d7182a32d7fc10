"""Two-stage probability-level fusion.

Stage one scales every model's class probabilities by a per-class,
per-model weight matrix whose columns lie on the simplex. Stage two
either sums the weighted vectors (``"dirichlet"`` mode) or sums them
scaled by scalar per-model importances (``"hierarchical"`` mode).

Array conventions: ``weights`` is ``(n_models, 7)``; stacked model
outputs are ``(..., n_models, 7)`` so whole streams fuse in one call.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .emotions import N_CLASSES
from .exceptions import ParameterError, ShapeError

MODES = ("dirichlet", "hierarchical")

# Admissible model-importance values: 0.01, 0.015, ..., 0.5 (99 values).
V_GRID_STEP = 0.005
V_GRID_MIN = 0.01
V_GRID_MAX = 0.5
V_GRID = (np.arange(2, 101) / 200.0)
V_DEFAULT = 0.5


def seed_sequence(seed: int, *key: int) -> np.random.SeedSequence:
    """Child stream ``key`` of the root ``seed``; independent of call order."""
    return np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in key))


def sample_weight_matrix(rng_seed, num_models: int, alpha: float = 1.0) -> np.ndarray:
    """Draw an ``(num_models, 7)`` matrix whose columns are i.i.d. symmetric Dirichlet.

    ``rng_seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    if int(num_models) < 1:
        raise ParameterError(f"num_models must be >= 1, got {num_models}")
    if not alpha > 0:
        raise ParameterError(f"alpha must be > 0, got {alpha}")
    if num_models == 1:
        return np.ones((1, N_CLASSES))
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    cols = rng.dirichlet(np.full(num_models, float(alpha)), size=N_CLASSES)
    return np.ascontiguousarray(cols.T)


def sample_model_weights(rng_seed, num_models: int) -> np.ndarray:
    """Draw one importance per model uniformly from the 0.005-step grid on [0.01, 0.5]."""
    if int(num_models) < 1:
        raise ParameterError(f"num_models must be >= 1, got {num_models}")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    return V_GRID[rng.integers(0, V_GRID.size, size=num_models)]


def uniform_weight_matrix(num_models: int) -> np.ndarray:
    return np.full((num_models, N_CLASSES), 1.0 / num_models)


def check_weight_matrix(weights, num_models: int | None = None) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2 or w.shape[1] != N_CLASSES:
        raise ShapeError(f"weight matrix must be (n_models, {N_CLASSES}), got {w.shape}")
    if num_models is not None and w.shape[0] != num_models:
        raise ShapeError(f"weight matrix has {w.shape[0]} rows for {num_models} models")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ParameterError("weight matrix entries must be finite and >= 0")
    if not np.allclose(w.sum(axis=0), 1.0, rtol=0, atol=1e-9):
        raise ParameterError("weight matrix columns must each sum to 1")
    return w


def is_grid_value(v) -> np.ndarray:
    """Elementwise test for membership in the model-importance grid."""
    v = np.asarray(v, dtype=float)
    k = (v - V_GRID_MIN) / V_GRID_STEP
    return (v >= V_GRID_MIN - 1e-12) & (v <= V_GRID_MAX + 1e-12) & (np.abs(k - np.round(k)) * V_GRID_STEP <= 1e-12)


def check_model_weights(model_weights, num_models: int | None = None) -> np.ndarray:
    v = np.asarray(model_weights, dtype=float)
    if v.ndim != 1:
        raise ShapeError(f"model weights must be 1-D, got shape {v.shape}")
    if num_models is not None and v.size != num_models:
        raise ShapeError(f"{v.size} model weights for {num_models} models")
    if not np.all(is_grid_value(v)):
        raise ParameterError(f"model weights must lie on the grid {V_GRID_MIN}:{V_GRID_STEP}:{V_GRID_MAX}, got {v}")
    return v


def first_weighting(probs, weights) -> np.ndarray:
    """Elementwise product of model probabilities and their weight rows.

    Accepts a single 7-vector with a 7-row, or stacked ``(..., M, 7)``
    probabilities with an ``(M, 7)`` matrix.
    """
    p = np.asarray(probs, dtype=float)
    w = np.asarray(weights, dtype=float)
    if p.shape[-1] != N_CLASSES or w.shape[-1] != N_CLASSES:
        raise ShapeError(f"last axis must have {N_CLASSES} classes: {p.shape} vs {w.shape}")
    if p.ndim >= 2 and w.ndim == 2 and p.shape[-2] != w.shape[0]:
        raise ShapeError(f"{p.shape[-2]} model streams but {w.shape[0]} weight rows")
    return p * w


def dirichlet_fuse(weighted) -> np.ndarray:
    """Per-class sum over the model axis (second to last) of first-weighted vectors."""
    pw = np.asarray(weighted, dtype=float)
    if pw.ndim < 2 or pw.shape[-2] == 0:
        raise ParameterError("need at least one weighted vector to fuse")
    if pw.shape[-1] != N_CLASSES:
        raise ShapeError(f"last axis must have {N_CLASSES} classes, got {pw.shape}")
    return pw.sum(axis=-2)


def hierarchical_fuse(weighted, model_weights) -> np.ndarray:
    """Sum of first-weighted vectors, each scaled by its model importance."""
    pw = np.asarray(weighted, dtype=float)
    v = np.asarray(model_weights, dtype=float)
    if pw.ndim < 2 or pw.shape[-1] != N_CLASSES:
        raise ShapeError(f"expected (..., n_models, {N_CLASSES}), got {pw.shape}")
    if v.ndim != 1 or v.size != pw.shape[-2]:
        raise ShapeError(f"{v.size} model weights for {pw.shape[-2]} weighted vectors")
    return np.einsum("...mc,m->...c", pw, v)


@dataclass(frozen=True, eq=False)
class FusionParameters:
    """Fusion weights bound to named model streams.

    ``model_weights`` is ignored in ``"dirichlet"`` mode but kept so a
    parameter set always has one importance per model.
    """

    weight_matrix: np.ndarray
    model_weights: np.ndarray
    model_ids: tuple[str, ...]
    mode: str = "dirichlet"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        ids = tuple(str(m) for m in self.model_ids)
        if len(set(ids)) != len(ids):
            raise ParameterError(f"model ids must be unique: {ids}")
        w = check_weight_matrix(self.weight_matrix, len(ids)).copy()
        v = check_model_weights(self.model_weights, len(ids)).copy()
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "weight_matrix", w)
        object.__setattr__(self, "model_weights", v)
        object.__setattr__(self, "model_ids", ids)

    def __eq__(self, other):
        if not isinstance(other, FusionParameters):
            return NotImplemented
        return (self.mode == other.mode and self.model_ids == other.model_ids
                and self.weight_matrix.tobytes() == other.weight_matrix.tobytes()
                and self.model_weights.tobytes() == other.model_weights.tobytes())

    def __hash__(self):
        return hash((self.mode, self.model_ids, self.weight_matrix.tobytes(), self.model_weights.tobytes()))

    @property
    def n_models(self) -> int:
        return len(self.model_ids)

    @classmethod
    def uniform(cls, model_ids, mode: str = "dirichlet") -> "FusionParameters":
        m = len(model_ids)
        return cls(uniform_weight_matrix(m), np.full(m, V_DEFAULT), tuple(model_ids), mode)

    def fuse(self, probs) -> np.ndarray:
        """Fuse stacked ``(..., n_models, 7)`` probabilities into ``(..., 7)`` scores."""
        weighted = first_weighting(probs, self.weight_matrix)
        if self.mode == "hierarchical":
            return hierarchical_fuse(weighted, self.model_weights)
        return dirichlet_fuse(weighted)
