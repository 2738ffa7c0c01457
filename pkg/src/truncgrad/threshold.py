"""Gradient truncation rules and the soft-threshold (shrinkage) operator.

Every truncation rule produces a masked copy of its input: each output
entry is either 0 or the corresponding input entry, never a shrunk value.
This keeps the truncated vector aligned with the original gradient
(``<d, h> == ||h||^2``), so its negative remains a descent direction for
the least-squares objective.
"""

from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "NoTruncation",
    "FixedLambda",
    "AlphaPercent",
    "TopK",
    "MinCombo",
    "MaxCombo",
    "TruncationRule",
    "truncate_fixed",
    "lambda_from_alpha",
    "truncate_topk",
    "truncate_min_combo",
    "truncate_max_combo",
    "apply_rule",
    "soft_threshold",
]


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 100.0:
        raise ValueError(f"alpha must lie in [0, 100], got {alpha}")


def _check_k(k: int) -> None:
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")


@dataclass(frozen=True)
class NoTruncation:
    """Keep the gradient as is (plain steepest descent)."""


@dataclass(frozen=True)
class FixedLambda:
    """Zero every entry whose magnitude does not exceed a fixed threshold."""

    lam: float

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be non-negative, got {self.lam}")


@dataclass(frozen=True)
class AlphaPercent:
    """Per-call threshold: ``alpha`` percent of the max-magnitude entry."""

    alpha: float

    def __post_init__(self):
        _check_alpha(self.alpha)


@dataclass(frozen=True)
class TopK:
    """Keep only the ``k`` entries of largest magnitude."""

    k: int

    def __post_init__(self):
        _check_k(self.k)


@dataclass(frozen=True)
class MinCombo:
    """Of the top-k and alpha-percent candidates, keep the sparser one."""

    k: int
    alpha: float

    def __post_init__(self):
        _check_k(self.k)
        _check_alpha(self.alpha)


@dataclass(frozen=True)
class MaxCombo:
    """Of the top-k and alpha-percent candidates, keep the denser one."""

    k: int
    alpha: float

    def __post_init__(self):
        _check_k(self.k)
        _check_alpha(self.alpha)


TruncationRule = Union[NoTruncation, FixedLambda, AlphaPercent, TopK, MinCombo, MaxCombo]


def truncate_fixed(d: np.ndarray, lam: float) -> np.ndarray:
    """Zero all entries with ``|d_i| <= lam``; keep the rest unchanged.

    The comparison is strict: an entry whose magnitude equals ``lam``
    exactly is zeroed.  ``lam = 0`` therefore only zeroes entries that are
    already zero.
    """
    if lam < 0:
        raise ValueError(f"lam must be non-negative, got {lam}")
    d = np.asarray(d, dtype=float)
    return np.where(np.abs(d) > lam, d, 0.0)


def lambda_from_alpha(d: np.ndarray, alpha: float) -> float:
    """Threshold at ``alpha`` percent of the largest magnitude of ``d``.

    Returns 0 for an empty or all-zero vector.
    """
    _check_alpha(alpha)
    d = np.asarray(d, dtype=float)
    if d.size == 0:
        return 0.0
    return (alpha / 100.0) * float(np.max(np.abs(d)))


def truncate_topk(d: np.ndarray, k: int) -> np.ndarray:
    """Keep the ``k`` entries of largest magnitude, zero the rest.

    Ties are broken by lowest index.  Zero entries are never counted as
    support, so the output has at most ``min(k, nnz(d))`` nonzeros.
    ``k >= len(d)`` leaves the vector unchanged.
    """
    _check_k(k)
    d = np.asarray(d, dtype=float)
    if k >= d.size:
        return d.copy()
    out = np.zeros_like(d)
    if k == 0:
        return out
    # stable sort: descending magnitude, ties resolved by original index
    order = np.argsort(-np.abs(d), kind="stable")
    keep = order[:k]
    out[keep] = d[keep]
    return out


def truncate_min_combo(d: np.ndarray, k: int, alpha: float) -> np.ndarray:
    """Return the sparser of the alpha-percent and top-k truncations.

    Ties favor the alpha-percent candidate.
    """
    d_lam = truncate_fixed(d, lambda_from_alpha(d, alpha))
    d_k = truncate_topk(d, k)
    if np.count_nonzero(d_lam) <= np.count_nonzero(d_k):
        return d_lam
    return d_k


def truncate_max_combo(d: np.ndarray, k: int, alpha: float) -> np.ndarray:
    """Return the denser of the alpha-percent and top-k truncations.

    Ties favor the top-k candidate (mirror image of the min rule).
    """
    d_lam = truncate_fixed(d, lambda_from_alpha(d, alpha))
    d_k = truncate_topk(d, k)
    if np.count_nonzero(d_lam) <= np.count_nonzero(d_k):
        return d_k
    return d_lam


def apply_rule(d: np.ndarray, rule: TruncationRule) -> np.ndarray:
    """Dispatch ``d`` through the given truncation rule."""
    if isinstance(rule, NoTruncation):
        return np.asarray(d, dtype=float)
    if isinstance(rule, FixedLambda):
        return truncate_fixed(d, rule.lam)
    if isinstance(rule, AlphaPercent):
        return truncate_fixed(d, lambda_from_alpha(d, rule.alpha))
    if isinstance(rule, TopK):
        return truncate_topk(d, rule.k)
    if isinstance(rule, MinCombo):
        return truncate_min_combo(d, rule.k, rule.alpha)
    if isinstance(rule, MaxCombo):
        return truncate_max_combo(d, rule.k, rule.alpha)
    raise TypeError(f"unknown truncation rule: {rule!r}")


def soft_threshold(x: np.ndarray, theta: float) -> np.ndarray:
    """Shrinkage operator: ``sgn(x_i) * max(|x_i| - theta, 0)``."""
    if theta < 0:
        raise ValueError(f"theta must be non-negative, got {theta}")
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - theta, 0.0)
