"""Stopping rules: Morozov's discrepancy principle and a relative-residual
threshold ladder that captures candidate recoveries online.

The ladder variant replaces the exact noise norm with an estimate,
converts it to integer-percent territory (``gamma_1 = ceil(100 *
delta_est / ||b||)``), and walks down in fixed decrements, recording the
first iterate that crosses each level.  The largest-level capture is the
"base" recovery; sparser captures nearby can then be preferred.
"""

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .problems import relative_error, sparsity_count

__all__ = [
    "MaxIter",
    "Discrepancy",
    "Never",
    "StoppingRule",
    "MdpConfig",
    "Snapshot",
    "GammaLadder",
    "dp_should_stop",
    "mdp_thresholds",
    "mdp_capture",
    "mdp_select",
]


@dataclass(frozen=True)
class MaxIter:
    """Run exactly ``cap`` updates (unless the direction dies first)."""

    cap: int

    def __post_init__(self):
        if self.cap < 1:
            raise ConfigurationError(f"iteration cap must be positive, got {self.cap}")


@dataclass(frozen=True)
class Discrepancy:
    """Stop at the first iterate with ``||A x - b|| <= eta * delta``."""

    delta: float
    eta: float
    cap: int

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigurationError(f"delta must be positive, got {self.delta}")
        if self.eta <= 1:
            raise ConfigurationError(f"discrepancy eta must exceed 1, got {self.eta}")
        if self.cap < 1:
            raise ConfigurationError(f"iteration cap must be positive, got {self.cap}")


@dataclass(frozen=True)
class Never:
    """No residual-based stopping; run to the cap (used for ladder runs)."""

    cap: int

    def __post_init__(self):
        if self.cap < 1:
            raise ConfigurationError(f"iteration cap must be positive, got {self.cap}")


StoppingRule = MaxIter | Discrepancy | Never


@dataclass(frozen=True)
class MdpConfig:
    """Threshold-ladder parameters.

    ``delta_est`` is the (possibly noisy) estimate of the data-error norm,
    ``count`` the number of ladder levels, ``spacing`` the decrement in
    percentage points, and ``eta`` the crossing slack (level ``g`` captures
    at relative residual ``<= eta * g``).
    """

    delta_est: float
    count: int
    spacing: float = 0.5
    eta: float = 1.0

    def __post_init__(self):
        if self.delta_est <= 0:
            raise ConfigurationError(f"delta_est must be positive, got {self.delta_est}")
        if self.count < 1:
            raise ConfigurationError(f"level count must be positive, got {self.count}")
        if self.spacing <= 0:
            raise ConfigurationError(f"level spacing must be positive, got {self.spacing}")
        if self.eta < 1:
            raise ConfigurationError(f"ladder eta must be >= 1, got {self.eta}")


@dataclass(frozen=True)
class Snapshot:
    """Recovery captured at the first crossing of one ladder level."""

    gamma: float
    m: int
    rel_residual_pct: float
    rel_error_pct: Optional[float]
    sparsity: int
    x: np.ndarray


def dp_should_stop(residual_norm: float, delta: float, eta: float) -> bool:
    """Discrepancy test: true iff ``residual_norm <= eta * delta`` (inclusive)."""
    if eta <= 1:
        raise ConfigurationError(f"discrepancy eta must exceed 1, got {eta}")
    return residual_norm <= eta * delta


def mdp_thresholds(delta_est: float, b_noisy_norm: float, count: int,
                   spacing: float = 0.5) -> List[float]:
    """Build the descending percent ladder from a noise-norm estimate.

    The top level is ``ceil(100 * delta_est / b_noisy_norm)`` percent and
    each subsequent level drops by ``spacing``; non-positive levels are
    dropped.  Raises if no positive level remains.
    """
    if delta_est <= 0:
        raise ConfigurationError(f"delta_est must be positive, got {delta_est}")
    if b_noisy_norm <= 0:
        raise ConfigurationError(f"data norm must be positive, got {b_noisy_norm}")
    if count < 1:
        raise ConfigurationError(f"level count must be positive, got {count}")
    if spacing <= 0:
        raise ConfigurationError(f"level spacing must be positive, got {spacing}")
    top = float(math.ceil(100.0 * delta_est / b_noisy_norm))
    levels = [top - i * spacing for i in range(count)]
    levels = [g for g in levels if g > 0]
    if not levels:
        raise ConfigurationError(
            f"all ladder levels are non-positive (top={top}, spacing={spacing})"
        )
    return levels


class GammaLadder:
    """Online first-crossing capture over a strictly decreasing level list.

    Call ``observe`` once per recorded iteration; a single iterate may
    cross (and capture) several levels at once.  Capture never alters the
    iterate stream.
    """

    def __init__(self, levels: Sequence[float], eta: float = 1.0):
        levels = [float(g) for g in levels]
        if any(b >= a for a, b in zip(levels, levels[1:])):
            raise ValueError(f"ladder levels must be strictly decreasing, got {levels}")
        if eta < 1:
            raise ConfigurationError(f"ladder eta must be >= 1, got {eta}")
        self.eta = float(eta)
        self._pending = list(levels)
        self.snapshots: List[Snapshot] = []

    def observe(self, m: int, x: np.ndarray, rel_residual_pct: float,
                rel_error_pct: Optional[float] = None,
                sparsity: Optional[int] = None) -> int:
        """Record any levels first crossed at this iterate; returns how many."""
        captured = 0
        while self._pending and rel_residual_pct <= self.eta * self._pending[0]:
            gamma = self._pending.pop(0)
            self.snapshots.append(Snapshot(
                gamma=gamma,
                m=m,
                rel_residual_pct=float(rel_residual_pct),
                rel_error_pct=rel_error_pct,
                sparsity=int(np.count_nonzero(np.asarray(x) == 0.0)) if sparsity is None
                else int(sparsity),
                x=np.array(x, dtype=float, copy=True),
            ))
            captured += 1
        return captured

    def done(self) -> bool:
        return not self._pending


def mdp_capture(states: Iterable, levels: Sequence[float], eta: float = 1.0,
                truth: Optional[np.ndarray] = None) -> List[Snapshot]:
    """Capture first crossings over a finished or streaming iteration sequence.

    ``states`` yields ``(m, x, rel_residual_pct)`` triples.  Sparsity is
    the exact-zero count of the captured iterate; relative error is
    computed against ``truth`` when supplied.
    """
    ladder = GammaLadder(levels, eta)
    for m, x, pct in states:
        x = np.asarray(x, dtype=float)
        rel_pct = 100.0 * relative_error(x, truth) if truth is not None else None
        ladder.observe(int(m), x, float(pct), rel_pct, sparsity_count(x))
        if ladder.done():
            break
    return ladder.snapshots


def mdp_select(snapshots: Sequence[Snapshot], policy: str = "base",
               within_pct: Optional[float] = None) -> Snapshot:
    """Pick a recovery from the captured ladder.

    ``policy="base"`` returns the top-level capture.  ``policy=
    "sparsest_within"`` returns the sparsest capture whose relative
    residual lies within ``within_pct`` percentage points of the base's
    (ties break toward the earlier iterate).
    """
    if not snapshots:
        raise ValueError("cannot select from an empty snapshot list")
    base = snapshots[0]
    if policy == "base":
        return base
    if policy == "sparsest_within":
        if within_pct is None or within_pct < 0:
            raise ConfigurationError(
                f"sparsest_within needs a non-negative within_pct, got {within_pct}"
            )
        pool = [s for s in snapshots
                if abs(s.rel_residual_pct - base.rel_residual_pct) <= within_pct]
        return max(pool, key=lambda s: (s.sparsity, -s.m))
    raise ConfigurationError(f"unknown selection policy {policy!r}")
