"""Emotion taxonomy and the small value types shared by the other modules.

Class orders defined here are frozen. Files always refer to classes by
name (see :func:`parse_basic` / :func:`parse_compound`), so reordering a
CSV header never silently permutes columns.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exceptions import DataError, ShapeError

N_CLASSES = 7


class BasicEmotion(enum.IntEnum):
    NEUTRAL = 0
    ANGER = 1
    DISGUST = 2
    FEAR = 3
    HAPPINESS = 4
    SADNESS = 5
    SURPRISE = 6

    @property
    def label(self) -> str:
        return self.name.lower()


class CompoundExpression(enum.IntEnum):
    FEARFULLY_SURPRISED = 0
    HAPPILY_SURPRISED = 1
    SADLY_SURPRISED = 2
    DISGUSTEDLY_SURPRISED = 3
    ANGRILY_SURPRISED = 4
    SADLY_FEARFUL = 5
    SADLY_ANGRY = 6

    @property
    def label(self) -> str:
        return self.name.lower()


BASIC_NAMES: tuple[str, ...] = tuple(e.label for e in BasicEmotion)
COMPOUND_NAMES: tuple[str, ...] = tuple(c.label for c in CompoundExpression)

_ABBREVIATIONS = {
    "ne": BasicEmotion.NEUTRAL, "an": BasicEmotion.ANGER, "di": BasicEmotion.DISGUST,
    "fe": BasicEmotion.FEAR, "ha": BasicEmotion.HAPPINESS, "sa": BasicEmotion.SADNESS,
    "su": BasicEmotion.SURPRISE,
}
_CE_ABBREVIATIONS = {
    "fesu": CompoundExpression.FEARFULLY_SURPRISED,
    "hasu": CompoundExpression.HAPPILY_SURPRISED,
    "sasu": CompoundExpression.SADLY_SURPRISED,
    "disu": CompoundExpression.DISGUSTEDLY_SURPRISED,
    "ansu": CompoundExpression.ANGRILY_SURPRISED,
    "safe": CompoundExpression.SADLY_FEARFUL,
    "saan": CompoundExpression.SADLY_ANGRY,
}


def _key(name: str) -> str:
    return re.sub(r"[^a-z]", "", str(name).lower())


def parse_basic(name: str) -> BasicEmotion:
    """Resolve a basic-emotion name ("sadness", "Sadness", "sa") to the enum."""
    key = _key(name)
    for e in BasicEmotion:
        if _key(e.name) == key:
            return e
    if key in _ABBREVIATIONS:
        return _ABBREVIATIONS[key]
    raise DataError(f"unknown basic emotion name {name!r}")


def parse_compound(name: str) -> CompoundExpression:
    """Resolve a compound-expression name ("sadly_angry", "SadlyAngry", "SaAn")."""
    key = _key(name)
    for c in CompoundExpression:
        if _key(c.name) == key:
            return c
    if key in _CE_ABBREVIATIONS:
        return _CE_ABBREVIATIONS[key]
    raise DataError(f"unknown compound expression name {name!r}")


@dataclass(frozen=True)
class ProbabilityVector:
    """Seven non-negative scores in :class:`BasicEmotion` order.

    ``normalized`` marks raw model outputs; weighted and fused
    intermediates carry ``normalized=False`` and may sum to anything.
    """

    values: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (N_CLASSES,):
            raise ShapeError(f"expected {N_CLASSES} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DataError("probability entries must be finite and >= 0")
        if self.normalized and abs(v.sum() - 1.0) > 1e-6:
            raise DataError(f"normalized vector sums to {v.sum():.9f}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def argmax(self) -> BasicEmotion:
        return BasicEmotion(int(np.argmax(self.values)))


@dataclass(frozen=True)
class CompoundScoreVector:
    """Seven non-negative scores in :class:`CompoundExpression` order."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (N_CLASSES,):
            raise ShapeError(f"expected {N_CLASSES} values, got shape {v.shape}")
        if np.any(v < 0):
            raise DataError("compound scores must be >= 0")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class CompoundRow:
    expression: CompoundExpression
    first: BasicEmotion
    first_weight: Fraction
    second: BasicEmotion
    second_weight: Fraction


@dataclass(frozen=True)
class CompoundWeightTable:
    """Per-expression emotion pair with exact rational coefficients."""

    rows: tuple[CompoundRow, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if [r.expression for r in self.rows] != list(CompoundExpression):
            raise DataError("table rows must cover every compound expression in canonical order")

    @property
    def first_index(self) -> np.ndarray:
        return np.array([int(r.first) for r in self.rows])

    @property
    def second_index(self) -> np.ndarray:
        return np.array([int(r.second) for r in self.rows])

    @property
    def first_weights(self) -> np.ndarray:
        return np.array([float(r.first_weight) for r in self.rows])

    @property
    def second_weights(self) -> np.ndarray:
        return np.array([float(r.second_weight) for r in self.rows])

    def pair_matrix(self) -> np.ndarray:
        """Return the 7x7 (basic x compound) matrix ``M`` with ``scores = p @ M``."""
        m = np.zeros((N_CLASSES, N_CLASSES))
        for r in self.rows:
            m[int(r.first), int(r.expression)] += float(r.first_weight)
            m[int(r.second), int(r.expression)] += float(r.second_weight)
        return m


def _row(ce, e1, n1, d1, e2, n2, d2) -> CompoundRow:
    return CompoundRow(ce, e1, Fraction(n1, d1), e2, Fraction(n2, d2))


_E = BasicEmotion
_C = CompoundExpression

# Table of frequency weights; each row's coefficients sum to exactly 1.
DEFAULT_TABLE = CompoundWeightTable((
    _row(_C.FEARFULLY_SURPRISED, _E.FEAR, 5, 7, _E.SURPRISE, 2, 7),
    _row(_C.HAPPILY_SURPRISED, _E.HAPPINESS, 6, 8, _E.SURPRISE, 2, 8),
    _row(_C.SADLY_SURPRISED, _E.SADNESS, 4, 6, _E.SURPRISE, 2, 6),
    _row(_C.DISGUSTEDLY_SURPRISED, _E.DISGUST, 6, 8, _E.SURPRISE, 2, 8),
    _row(_C.ANGRILY_SURPRISED, _E.ANGER, 5, 7, _E.SURPRISE, 2, 7),
    _row(_C.SADLY_FEARFUL, _E.SADNESS, 4, 9, _E.FEAR, 5, 9),
    _row(_C.SADLY_ANGRY, _E.SADNESS, 4, 9, _E.ANGER, 5, 9),
))


def pair_sum_table() -> CompoundWeightTable:
    """Same emotion pairs as :data:`DEFAULT_TABLE` with both coefficients 1."""
    one = Fraction(1)
    return CompoundWeightTable(tuple(
        CompoundRow(r.expression, r.first, one, r.second, one) for r in DEFAULT_TABLE.rows
    ))


def compound_for_pair(a: BasicEmotion, b: BasicEmotion) -> CompoundExpression | None:
    """Look up the compound expression built from ``{a, b}`` (order-free)."""
    for r in DEFAULT_TABLE.rows:
        if {r.first, r.second} == {a, b}:
            return r.expression
    return None
