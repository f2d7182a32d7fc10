"""scikit-learn compatible wrappers.

``DirichletFusionClassifier`` learns fusion weights by random search in
``fit`` and fuses stacked model outputs in ``transform``.
``CompoundExpressionClassifier`` turns fused scores into compound
expressions with Rule 1 / Rule 2. Chained in a ``Pipeline`` they map
raw model streams to compound expression decisions::

    Pipeline([("fuse", DirichletFusionClassifier()),
              ("rules", CompoundExpressionClassifier(rule="rule2"))])

Inputs ``X`` are ``(n_frames, n_models, 7)`` arrays, or 2-D arrays with
``n_models * 7`` columns laid out model by model.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .emotions import BASIC_NAMES, COMPOUND_NAMES, DEFAULT_TABLE, N_CLASSES, parse_basic
from .exceptions import DataError, ShapeError
from .fusion import FusionParameters
from .metrics import evaluate, normalize_metric
from .rules import RuleConfig, compound_scores, decide, rule_diagnostics
from .search import SearchConfig, evaluate_params, search


def check_streams(X, n_models: int | None = None) -> np.ndarray:
    """Validate and reshape ``X`` to ``(n_frames, n_models, 7)``."""
    X = check_array(X, allow_nd=True, dtype=np.float64, ensure_min_samples=1)
    if X.ndim == 2:
        if X.shape[1] % N_CLASSES:
            raise ShapeError(f"2-D input needs a multiple of {N_CLASSES} columns, got {X.shape[1]}")
        X = X.reshape(X.shape[0], -1, N_CLASSES)
    if X.ndim != 3 or X.shape[2] != N_CLASSES:
        raise ShapeError(f"expected (n_frames, n_models, {N_CLASSES}), got {X.shape}")
    if n_models is not None and X.shape[1] != n_models:
        raise ShapeError(f"fitted on {n_models} models, got {X.shape[1]}")
    if np.any(X < 0):
        raise DataError("probabilities must be >= 0")
    return X


def check_scores(X) -> np.ndarray:
    X = check_array(X, dtype=np.float64, ensure_min_samples=1)
    if X.shape[1] != N_CLASSES:
        raise ShapeError(f"expected {N_CLASSES} fused scores per frame, got {X.shape[1]}")
    if np.any(X < 0):
        raise DataError("fused scores must be >= 0")
    return X


def _encode_basic(y) -> np.ndarray:
    y = np.asarray(y)
    if y.dtype.kind in "OUS":
        return np.array([int(parse_basic(v)) for v in y])
    return y.astype(np.int64)


class DirichletFusionClassifier(TransformerMixin, ClassifierMixin, BaseEstimator):
    """Weighted late fusion of per-model emotion probabilities.

    Parameters
    ----------
    mode : {"dirichlet", "hierarchical"}
        ``dirichlet`` sums the class-weighted model vectors;
        ``hierarchical`` additionally scales each model by a grid weight.
    n_trials : int
        Random-search budget; trial 0 is always the uniform weighting.
    alpha : float
        Symmetric Dirichlet concentration for each weight-matrix column.
    metric : {"macro_f1", "uar"}
        Validation metric maximized by ``fit``.
    v_strategy : {"grid_random", "grid_exhaustive"}
        How model weights are searched in hierarchical mode.
    random_state : int
        Root seed of the search.
    n_jobs : int or None
        Parallel workers for the search; results do not depend on it.
    model_ids : sequence of str or None
        Names of the model streams, in ``X`` order.
    """

    def __init__(self, mode="dirichlet", n_trials=10_000, alpha=1.0, metric="macro_f1",
                 v_strategy="grid_random", random_state=0, n_jobs=None, model_ids=None):
        self.mode = mode
        self.n_trials = n_trials
        self.alpha = alpha
        self.metric = metric
        self.v_strategy = v_strategy
        self.random_state = random_state
        self.n_jobs = n_jobs
        self.model_ids = model_ids

    def _model_ids(self, n_models):
        if self.model_ids is None:
            return tuple(f"model{i}" for i in range(n_models))
        if len(self.model_ids) != n_models:
            raise ShapeError(f"{len(self.model_ids)} model ids for {n_models} streams")
        return tuple(self.model_ids)

    def fit(self, X, y):
        X = check_streams(X)
        y = _encode_basic(y)
        if y.shape != (X.shape[0],):
            raise DataError(f"{y.shape[0] if y.ndim else 0} labels for {X.shape[0]} frames")
        cfg = SearchConfig(
            trials=self.n_trials, seed=self.random_state, alpha=self.alpha, metric=self.metric,
            mode=self.mode, v_strategy=self.v_strategy, n_jobs=self.n_jobs,
        )
        result = search(cfg, X, y, self._model_ids(X.shape[1]))
        self._set_params(result.best_params)
        self.search_result_ = result
        self.best_score_ = result.best_score
        return self

    def _set_params(self, params: FusionParameters):
        self.params_ = params
        self.weight_matrix_ = np.array(params.weight_matrix)
        self.model_weights_ = np.array(params.model_weights)
        self.n_models_ = params.n_models
        self.classes_ = np.arange(N_CLASSES)

    @classmethod
    def from_params(cls, params: FusionParameters, **kwargs) -> "DirichletFusionClassifier":
        """Build an already-fitted estimator from stored weights."""
        est = cls(mode=params.mode, model_ids=list(params.model_ids), **kwargs)
        est._set_params(params)
        return est

    def transform(self, X):
        """Fused, unnormalized class scores ``(n_frames, 7)``."""
        check_is_fitted(self, "params_")
        X = check_streams(X, self.n_models_)
        return self.params_.fuse(X)

    decision_function = transform

    def predict(self, X):
        return np.argmax(self.transform(X), axis=1)

    def score(self, X, y, sample_weight=None):
        """Validation metric (``self.metric``) of the fused argmax."""
        check_is_fitted(self, "params_")
        return evaluate_params(self.params_, check_streams(X, self.n_models_), _encode_basic(y),
                               normalize_metric(self.metric))

    def evaluate(self, X, y):
        return evaluate(_encode_basic(y), self.predict(X), BASIC_NAMES)


class CompoundExpressionClassifier(ClassifierMixin, BaseEstimator):
    """Rule-based compound expression decision on fused basic-emotion scores.

    Stateless: ``fit`` only validates the configuration. ``fusion_mode``
    records where the input scores come from; Rule 1 refuses
    hierarchical-fusion input.
    """

    def __init__(self, rule="rule2", mask_threshold=1.0 / 7.0, all_masked_policy="use_unmasked",
                 fusion_mode="dirichlet", table=DEFAULT_TABLE):
        self.rule = rule
        self.mask_threshold = mask_threshold
        self.all_masked_policy = all_masked_policy
        self.fusion_mode = fusion_mode
        self.table = table

    def _config(self) -> RuleConfig:
        return RuleConfig(self.rule, self.mask_threshold, self.table, self.all_masked_policy)

    def fit(self, X=None, y=None):
        cfg = self._config()
        # surface the Rule 1 / hierarchical conflict at fit time
        compound_scores(np.full(N_CLASSES, 1.0 / N_CLASSES), cfg, self.fusion_mode)
        self.config_ = cfg
        self.classes_ = np.arange(N_CLASSES)
        return self

    def _cfg(self):
        return self.config_ if hasattr(self, "config_") else self.fit().config_

    def decision_function(self, X):
        return compound_scores(check_scores(X), self._cfg(), self.fusion_mode)

    def predict(self, X):
        return decide(self.decision_function(X))

    def diagnostics(self, X) -> dict[str, np.ndarray]:
        return rule_diagnostics(check_scores(X), self._cfg())

    def score(self, X, y, sample_weight=None):
        """Macro-F1 over compound classes; frames with label -1 are skipped."""
        y = np.asarray(y)
        keep = y >= 0
        return evaluate(y[keep], self.predict(X)[keep], COMPOUND_NAMES).macro_f1

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags
