"""Iterative solvers for ``min ||A x - b||^2`` with sparsity-inducing
truncated-gradient descent, ISTA/FISTA baselines, and the classical
nu-method (polynomially accelerated Landweber) three-term recursion.

All solvers start from the zero vector by default, record one history
row per visited iterate, and share a driver that applies the stopping
rule exactly once per iteration.  The gradient convention is
``d = A*(A x - b)`` without the factor 2; the factor is absorbed into
the step length (ISTA keeps its conventional explicit ``2 tau``).

A single run is inherently sequential; there is no global mutable
state, so independent runs may execute concurrently.
"""

import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Union

import numpy as np

from .errors import ConfigurationError, NumericError
from .linops import LinearOperator, operator_norm_estimate
from .problems import relative_error, sparsity_count
from .stopping import (
    Discrepancy,
    GammaLadder,
    MaxIter,
    MdpConfig,
    Never,
    Snapshot,
    StoppingRule,
    dp_should_stop,
    mdp_thresholds,
)
from .threshold import NoTruncation, TruncationRule, apply_rule, soft_threshold

__all__ = [
    "FixedStep",
    "ExactLineSearch",
    "NuAccelerated",
    "StepRule",
    "BoundConstraint",
    "IterationState",
    "IterationRecord",
    "RunReport",
    "STOP_DISCREPANCY",
    "STOP_MAX_ITERS",
    "STOP_STALLED",
    "STOP_SNAPSHOTS",
    "gradient",
    "step_length",
    "project_lower_bound",
    "nu_coefficients",
    "fista_t_next",
    "tg_iterations",
    "ista_iterations",
    "fista_iterations",
    "tg_descent",
    "ista",
    "fista",
    "nu_descent",
]

STOP_DISCREPANCY = "discrepancy_met"
STOP_MAX_ITERS = "max_iters"
STOP_STALLED = "stalled"
STOP_SNAPSHOTS = "threshold_snapshot_complete"


@dataclass(frozen=True)
class FixedStep:
    """Constant step length; must satisfy ``0 < tau < 2 / ||A||^2``."""

    tau: float

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigurationError(f"fixed step must be positive, got {self.tau}")


@dataclass(frozen=True)
class ExactLineSearch:
    """Minimizing step along the current direction (default)."""


@dataclass(frozen=True)
class NuAccelerated:
    """Three-term accelerated recursion with classical nu-method coefficients.

    The classical scheme is only stable when the spectrum of ``A* A``
    lies comfortably inside [0, 1); its residual polynomials amplify
    eigencomponents near 1.  Rescale the problem if the operator norm is
    close to (or above) 1.
    """

    nu: float

    def __post_init__(self):
        if self.nu <= 0:
            raise ConfigurationError(f"nu must be positive, got {self.nu}")


StepRule = Union[FixedStep, ExactLineSearch, NuAccelerated]


@dataclass(frozen=True)
class BoundConstraint:
    """Elementwise lower bound on iterates; ``-inf`` disables it."""

    xmin: float = float("-inf")

    def __post_init__(self):
        if math.isnan(self.xmin) or self.xmin == float("inf"):
            raise ValueError(f"xmin must be a real number or -inf, got {self.xmin}")


@dataclass(frozen=True)
class IterationState:
    """Full solver state at iterate ``m``.

    ``grad`` is ``A*(A x - b)`` (for FISTA, the gradient at the
    extrapolated point actually used by the update), ``direction`` the
    masked gradient driving the next update, and ``step`` the step length
    that will be applied to leave this state.
    """

    m: int
    x: np.ndarray
    residual: np.ndarray
    grad: np.ndarray
    direction: np.ndarray
    objective: float
    step: float


@dataclass(frozen=True)
class IterationRecord:
    """One history row: scalar summaries of a visited iterate."""

    m: int
    objective: float
    residual_norm: float
    rel_residual_pct: float
    sparsity: int
    rel_error: Optional[float]


@dataclass(frozen=True)
class RunReport:
    """Outcome of a solver run: history, final iterate, and stop reason."""

    history: List[IterationRecord]
    final_x: np.ndarray
    stop_reason: str
    snapshots: List[Snapshot]


def _vector(v, n: int, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size != n:
        raise ValueError(f"{what} must be a length-{n} vector, got shape {v.shape}")
    return v


def _objective(residual: np.ndarray) -> float:
    # overflow to inf is how divergence gets detected downstream
    with np.errstate(over="ignore"):
        return float(residual @ residual)


def gradient(op: LinearOperator, x, b) -> np.ndarray:
    """Half-gradient of the least-squares objective: ``A*(A x - b)``."""
    x = _vector(x, op.dim_in, "x")
    b = _vector(b, op.dim_out, "b")
    return op.apply_adjoint(op.apply(x) - b)


def step_length(op: LinearOperator, h, residual) -> float:
    """Exact line-search step for the objective along ``-h``.

    Minimizes ``||A(x - t h) - b||^2`` over ``t``:
    ``t = <A h, r> / ||A h||^2`` with ``r = A x - b``.  Returns 0 when
    ``A h`` vanishes.
    """
    h = _vector(h, op.dim_in, "direction")
    residual = _vector(residual, op.dim_out, "residual")
    ah = op.apply(h)
    denom = float(ah @ ah)
    if denom == 0.0:
        return 0.0
    return float(ah @ residual) / denom


def project_lower_bound(x, constraint: BoundConstraint) -> np.ndarray:
    """Clip each entry up to ``xmin``; the ``-inf`` bound is the identity."""
    x = np.asarray(x, dtype=float)
    if constraint.xmin == float("-inf"):
        return x
    return np.maximum(x, constraint.xmin)


def nu_coefficients(nu: float, m: int):
    """Closed-form nu-method coefficients ``(mu_m, tau_m)`` for ``m >= 1``."""
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    if m < 1:
        raise ValueError(f"iteration index must be >= 1, got {m}")
    if m == 1:
        return 0.0, (4.0 * nu + 2.0) / (4.0 * nu + 1.0)
    mu = ((m - 1) * (2 * m - 3) * (2 * m + 2 * nu - 1)) / (
        (m + 2 * nu - 1) * (2 * m + 4 * nu - 1) * (2 * m + 2 * nu - 3)
    )
    tau = 4.0 * (2 * m + 2 * nu - 1) * (m + nu - 1) / (
        (m + 2 * nu - 1) * (2 * m + 2 * nu - 1)
    )
    return mu, tau


def fista_t_next(t: float) -> float:
    """FISTA momentum parameter update ``t -> (1 + sqrt(1 + 4 t^2)) / 2``."""
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))


def tg_iterations(op: LinearOperator, b, rule: TruncationRule,
                  step: StepRule = ExactLineSearch(),
                  constraint: BoundConstraint = BoundConstraint(),
                  x0=None) -> Iterator[IterationState]:
    """Yield truncated-gradient descent states ``m = 0, 1, 2, ...`` forever.

    The caller decides when to stop; once the truncated direction is zero
    the iterates repeat bitwise.  Step-rule stability is not validated
    here (see ``tg_descent``).
    """
    b = _vector(b, op.dim_out, "b")
    x = np.zeros(op.dim_in) if x0 is None else _vector(x0, op.dim_in, "x0").copy()
    x_prev = x
    m = 0
    while True:
        residual = op.apply(x) - b
        objective = _objective(residual)
        d = op.apply_adjoint(residual)
        h = apply_rule(d, rule)
        if isinstance(step, FixedStep):
            tau = step.tau
            mu = None
        elif isinstance(step, ExactLineSearch):
            tau = step_length(op, h, residual) if np.any(h) else 0.0
            mu = None
        elif isinstance(step, NuAccelerated):
            mu, tau = nu_coefficients(step.nu, m + 1)
        else:
            raise TypeError(f"unknown step rule: {step!r}")
        yield IterationState(m, x, residual, d, h, objective, tau)
        if mu is None:
            x_new = x - tau * h
        else:
            x_new = x + mu * (x - x_prev) - tau * h
        x_new = project_lower_bound(x_new, constraint)
        x_prev = x
        x = x_new
        m += 1


def ista_iterations(op: LinearOperator, b, lam: float, tau: float,
                    constraint: BoundConstraint = BoundConstraint(),
                    x0=None) -> Iterator[IterationState]:
    """Yield ISTA states: ``x <- S_{lam*tau}(x - 2 tau A*(A x - b))``,
    then the bound constraint.  Step validity is checked in ``ista``."""
    b = _vector(b, op.dim_out, "b")
    x = np.zeros(op.dim_in) if x0 is None else _vector(x0, op.dim_in, "x0").copy()
    m = 0
    while True:
        residual = op.apply(x) - b
        objective = _objective(residual)
        d = op.apply_adjoint(residual)
        yield IterationState(m, x, residual, d, d, objective, 2.0 * tau)
        x = project_lower_bound(soft_threshold(x - (2.0 * tau) * d, lam * tau), constraint)
        m += 1


def fista_iterations(op: LinearOperator, b, lam: float, tau: float,
                     constraint: BoundConstraint = BoundConstraint(),
                     x0=None) -> Iterator[IterationState]:
    """Yield FISTA states: the ISTA step taken at the extrapolated point.

    Momentum follows ``t_1 = 1`` with ``t`` updated by ``fista_t_next``;
    the extrapolated image ``A y`` is formed by linearity, so each
    iteration costs one forward and one adjoint application.
    """
    b = _vector(b, op.dim_out, "b")
    x = np.zeros(op.dim_in) if x0 is None else _vector(x0, op.dim_in, "x0").copy()
    ax = op.apply(x)
    x_prev, ax_prev = x, ax
    t_prev = 1.0
    m = 0
    while True:
        residual = ax - b
        objective = _objective(residual)
        if m == 0:
            y, ay = x, ax
        else:
            t_cur = fista_t_next(t_prev)
            coeff = (t_prev - 1.0) / t_cur
            y = x + coeff * (x - x_prev)
            ay = ax + coeff * (ax - ax_prev)
            t_prev = t_cur
        grad_y = op.apply_adjoint(ay - b)
        yield IterationState(m, x, residual, grad_y, grad_y, objective, 2.0 * tau)
        x_new = project_lower_bound(
            soft_threshold(y - (2.0 * tau) * grad_y, lam * tau), constraint
        )
        x_prev, ax_prev = x, ax
        x = x_new
        ax = op.apply(x)
        m += 1


def _check_landweber_step(op: LinearOperator, tau: float, factor: float = 1.0) -> None:
    """Reject steps violating ``0 < factor*tau < 2 / ||A||^2`` (power-method norm)."""
    est = operator_norm_estimate(op)
    if est > 0 and factor * tau >= 2.0 / (est * est):
        raise ConfigurationError(
            f"step {tau} violates the stability bound: need {factor}*tau < 2/||A||^2 "
            f"= {2.0 / (est * est):.6g} (||A|| ~= {est:.6g})"
        )


def _validate_truth(truth, n: int):
    if truth is None:
        return None
    truth = _vector(truth, n, "truth")
    if float(np.linalg.norm(truth)) == 0.0:
        raise ValueError("truth vector must be nonzero to track relative error")
    return truth


def _drive(states: Iterator[IterationState], b: np.ndarray, stopping: StoppingRule,
           mdp: Optional[MdpConfig], truth: Optional[np.ndarray],
           stall_on_zero_direction: bool) -> RunReport:
    """Consume solver states, record history, and apply the stopping rule.

    The rule sees each iterate's residual norm exactly once.  With a
    ``Never`` rule and a threshold ladder, the run ends as soon as every
    ladder level has been captured.
    """
    if not isinstance(stopping, (MaxIter, Discrepancy, Never)):
        raise TypeError(f"unknown stopping rule: {stopping!r}")
    bnorm = float(np.linalg.norm(b))
    ladder = None
    if mdp is not None:
        levels = mdp_thresholds(mdp.delta_est, bnorm, mdp.count, mdp.spacing)
        ladder = GammaLadder(levels, mdp.eta)

    records: List[IterationRecord] = []
    state = None
    stop_reason = STOP_MAX_ITERS
    for state in states:
        if not math.isfinite(state.objective):
            raise NumericError(f"objective became non-finite at iteration {state.m}")
        rnorm = math.sqrt(state.objective)
        if bnorm > 0:
            rel_pct = 100.0 * rnorm / bnorm
        else:
            rel_pct = 0.0 if rnorm == 0.0 else float("inf")
        rel_err = relative_error(state.x, truth) if truth is not None else None
        spars = sparsity_count(state.x)
        records.append(IterationRecord(state.m, state.objective, rnorm, rel_pct,
                                       spars, rel_err))
        if ladder is not None:
            ladder.observe(state.m, state.x, rel_pct,
                           None if rel_err is None else 100.0 * rel_err, spars)
        if isinstance(stopping, Discrepancy) and dp_should_stop(
                rnorm, stopping.delta, stopping.eta):
            stop_reason = STOP_DISCREPANCY
            break
        if ladder is not None and isinstance(stopping, Never) and ladder.done():
            stop_reason = STOP_SNAPSHOTS
            break
        if stall_on_zero_direction and not np.any(state.direction):
            stop_reason = STOP_STALLED
            break
        if state.m >= stopping.cap:
            stop_reason = STOP_MAX_ITERS
            break
    return RunReport(records, state.x.copy(), stop_reason,
                     [] if ladder is None else ladder.snapshots)


def tg_descent(op: LinearOperator, b, rule: TruncationRule = NoTruncation(),
               step: StepRule = ExactLineSearch(),
               constraint: BoundConstraint = BoundConstraint(),
               stopping: StoppingRule = MaxIter(100),
               mdp: Optional[MdpConfig] = None, truth=None, x0=None) -> RunReport:
    """Projected descent along the truncated gradient.

    Each update is ``x <- project(x - tau * rule(A*(A x - b)))``; with the
    accelerated step rule the three-term recursion is used instead.  The
    run ends on the stopping rule, at the iteration cap, or as soon as the
    truncated direction is the zero vector (the iterates would repeat
    forever).  A fixed step is validated against the power-method norm
    estimate at entry.
    """
    b = _vector(b, op.dim_out, "b")
    truth = _validate_truth(truth, op.dim_in)
    if isinstance(step, FixedStep):
        _check_landweber_step(op, step.tau)
    states = tg_iterations(op, b, rule, step, constraint, x0)
    return _drive(states, b, stopping, mdp, truth, stall_on_zero_direction=True)


def ista(op: LinearOperator, b, lam: float, tau: float,
         constraint: BoundConstraint = BoundConstraint(),
         stopping: StoppingRule = MaxIter(100),
         truth=None, x0=None, mdp: Optional[MdpConfig] = None) -> RunReport:
    """Iterative soft-thresholding for the l1-penalized least squares.

    Update: ``x <- S_{lam*tau}(x + 2 tau A*(b - A x))`` followed by the
    bound constraint.  Requires ``0 < 2 tau < 2 / ||A||^2``.  The recorded
    objective is the data-fit term only.
    """
    if lam < 0:
        raise ConfigurationError(f"lam must be non-negative, got {lam}")
    if tau <= 0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    b = _vector(b, op.dim_out, "b")
    truth = _validate_truth(truth, op.dim_in)
    _check_landweber_step(op, tau, factor=2.0)
    states = ista_iterations(op, b, lam, tau, constraint, x0)
    return _drive(states, b, stopping, mdp, truth, stall_on_zero_direction=False)


def fista(op: LinearOperator, b, lam: float, tau: float,
          constraint: BoundConstraint = BoundConstraint(),
          stopping: StoppingRule = MaxIter(100),
          truth=None, x0=None, mdp: Optional[MdpConfig] = None) -> RunReport:
    """FISTA: the ISTA step applied at the momentum-extrapolated point."""
    if lam < 0:
        raise ConfigurationError(f"lam must be non-negative, got {lam}")
    if tau <= 0:
        raise ConfigurationError(f"tau must be positive, got {tau}")
    b = _vector(b, op.dim_out, "b")
    truth = _validate_truth(truth, op.dim_in)
    _check_landweber_step(op, tau, factor=2.0)
    states = fista_iterations(op, b, lam, tau, constraint, x0)
    return _drive(states, b, stopping, mdp, truth, stall_on_zero_direction=False)


def nu_descent(op: LinearOperator, b, nu: float,
               rule: TruncationRule = NoTruncation(),
               constraint: BoundConstraint = BoundConstraint(),
               stopping: StoppingRule = MaxIter(100),
               truth=None, x0=None, mdp: Optional[MdpConfig] = None) -> RunReport:
    """Accelerated descent: ``x_{m+1} = x_m + mu_m (x_m - x_{m-1}) - tau_m h_m``
    with nu-method coefficients and ``h_m`` the truncated gradient;
    the bound projection is applied after each update."""
    return tg_descent(op, b, rule=rule, step=NuAccelerated(nu), constraint=constraint,
                      stopping=stopping, mdp=mdp, truth=truth, x0=x0)
