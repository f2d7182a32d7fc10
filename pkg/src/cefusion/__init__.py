"""Late fusion of basic-emotion probability streams and rule-based compound expression recognition."""

__version__ = "0.1.0"

from .emotions import (
    BASIC_NAMES,
    COMPOUND_NAMES,
    DEFAULT_TABLE,
    BasicEmotion,
    CompoundExpression,
    CompoundWeightTable,
    ProbabilityVector,
    pair_sum_table,
)
from .estimators import CompoundExpressionClassifier, DirichletFusionClassifier
from .fusion import (
    FusionParameters,
    dirichlet_fuse,
    first_weighting,
    hierarchical_fuse,
    sample_model_weights,
    sample_weight_matrix,
)
from .metrics import EvaluationReport, confusion, evaluate, macro_f1, uar
from .rules import RuleConfig, decide, predict_ce, rule1_mask, rule1_scores, rule2_scores
from .search import SearchConfig, SearchResult, evaluate_params, search

__all__ = [
    "BASIC_NAMES", "COMPOUND_NAMES", "DEFAULT_TABLE", "BasicEmotion", "CompoundExpression",
    "CompoundWeightTable", "ProbabilityVector", "pair_sum_table",
    "CompoundExpressionClassifier", "DirichletFusionClassifier",
    "FusionParameters", "dirichlet_fuse", "first_weighting", "hierarchical_fuse",
    "sample_model_weights", "sample_weight_matrix",
    "EvaluationReport", "confusion", "evaluate", "macro_f1", "uar",
    "RuleConfig", "decide", "predict_ce", "rule1_mask", "rule1_scores", "rule2_scores",
    "SearchConfig", "SearchResult", "evaluate_params", "search",
]
