"""Built-in diagnostic checks for the installed package.

Each suite cross-checks a core computation against an independent
reimplementation (pure-Python truncation, finite differences, dense
transpose).  The CLI ``selftest`` subcommand runs them all and maps the
outcome to an exit code.
"""

import numpy as np

from .linops import (
    DenseOperator,
    LinearOperator,
    adjoint_check,
    make_gaussian_blur,
    operator_norm_estimate,
)
from .solvers import FixedStep, gradient, ista_iterations, tg_iterations
from .threshold import (
    NoTruncation,
    lambda_from_alpha,
    truncate_fixed,
    truncate_max_combo,
    truncate_min_combo,
    truncate_topk,
)

__all__ = ["run_all"]


class _CorruptedAdjoint(LinearOperator):
    """Test double: forward map intact, adjoint deliberately wrong."""

    def __init__(self, inner: LinearOperator):
        super().__init__(inner.dim_in, inner.dim_out)
        self._inner = inner

    def _forward(self, v):
        return self._inner.apply(v)

    def _adjoint(self, w):
        out = self._inner.apply_adjoint(w)
        out = out.copy()
        out[0] += 0.01 * (1.0 + abs(out[0]))
        return out


# -- independent pure-Python truncation (the oracle side of the check) --

def _naive_fixed(d, lam):
    return [v if abs(v) > lam else 0.0 for v in d]


def _naive_level(d, alpha):
    return (alpha / 100.0) * max((abs(v) for v in d), default=0.0)


def _naive_topk(d, k):
    order = sorted(range(len(d)), key=lambda i: (-abs(d[i]), i))
    keep = set(order[:k])
    return [d[i] if i in keep else 0.0 for i in range(len(d))]


def _nnz(v):
    return sum(1 for x in v if x != 0.0)


def _check_adjoints(fault):
    ops = [
        ("blur16", make_gaussian_blur(16, 2.0, 8)),
        ("blur32", make_gaussian_blur(32, 4.0, 8)),
        ("dense12x9", DenseOperator(np.random.default_rng(3).standard_normal((12, 9)))),
    ]
    if fault == "adjoint":
        ops = [(name, _CorruptedAdjoint(op)) for name, op in ops]
    worst = max(adjoint_check(op, trials=50, seed=11) for _, op in ops)
    return worst <= 1e-10, f"worst normalized defect {worst:.3e}"


def _check_truncation_oracle():
    rng = np.random.default_rng(7)
    for trial in range(200):
        n = int(rng.integers(1, 33))
        d = rng.standard_normal(n)
        d[rng.random(n) < 0.2] = 0.0
        lam = float(rng.uniform(0, 1.5))
        alpha = float(rng.uniform(0, 100))
        k = int(rng.integers(0, n + 2))
        lst = d.tolist()
        pairs = [
            (truncate_fixed(d, lam), _naive_fixed(lst, lam)),
            (truncate_fixed(d, lambda_from_alpha(d, alpha)),
             _naive_fixed(lst, _naive_level(lst, alpha))),
            (truncate_topk(d, k), _naive_topk(lst, k)),
        ]
        na = _naive_fixed(lst, _naive_level(lst, alpha))
        nk = _naive_topk(lst, k)
        pairs.append((truncate_min_combo(d, k, alpha),
                      na if _nnz(na) <= _nnz(nk) else nk))
        pairs.append((truncate_max_combo(d, k, alpha),
                      nk if _nnz(na) <= _nnz(nk) else na))
        for got, want in pairs:
            if not np.array_equal(got, np.array(want)):
                return False, f"mismatch at trial {trial}"
    return True, "200 seeded vectors, 5 rules, exact match"


def _check_gradient_fd():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(5):
        op = DenseOperator(rng.standard_normal((7, 6)))
        x = rng.standard_normal(6)
        b = rng.standard_normal(7)
        g = 2.0 * gradient(op, x, b)
        eps = 1e-6
        for i in range(6):
            e = np.zeros(6)
            e[i] = eps
            fp = float(np.linalg.norm(op.apply(x + e) - b) ** 2)
            fm = float(np.linalg.norm(op.apply(x - e) - b) ** 2)
            fd = (fp - fm) / (2 * eps)
            worst = max(worst, abs(fd - g[i]) / (abs(g[i]) + 1e-12))
    return worst <= 1e-4, f"worst relative FD defect {worst:.3e}"


def _check_ista_equivalence():
    rng = np.random.default_rng(9)
    op = DenseOperator(rng.standard_normal((8, 8)))
    b = rng.standard_normal(8)
    tau = 0.3 / operator_norm_estimate(op) ** 2
    it_a = ista_iterations(op, b, lam=0.0, tau=tau)
    it_b = tg_iterations(op, b, NoTruncation(), FixedStep(2.0 * tau))
    worst = 0.0
    for _ in range(20):
        sa = next(it_a)
        sb = next(it_b)
        worst = max(worst, float(np.max(np.abs(sa.x - sb.x))))
    return worst <= 1e-12, f"max per-iteration deviation {worst:.3e}"


def run_all(fault=None):
    """Run every diagnostic suite; returns ``[(name, passed, detail), ...]``."""
    return [
        ("adjoint", *_check_adjoints(fault)),
        ("truncation_oracle", *_check_truncation_oracle()),
        ("gradient_fd", *_check_gradient_fd()),
        ("ista_equivalence", *_check_ista_equivalence()),
    ]
