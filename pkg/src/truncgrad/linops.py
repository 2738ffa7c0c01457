"""Matrix-free linear operators with explicit adjoints.

The deblurring forward map is a separable Gaussian blur: one banded
symmetric Toeplitz stencil applied along image rows and then columns,
equivalent to the Kronecker product of the 1-D stencil matrix with
itself but applied in O(n * band) instead of O(n^2).
"""

import math

import numpy as np

__all__ = [
    "LinearOperator",
    "DenseOperator",
    "GaussianBlurOperator",
    "make_gaussian_blur",
    "apply",
    "apply_adjoint",
    "operator_norm_estimate",
    "adjoint_check",
]


class LinearOperator:
    """Base class: a linear map ``v -> A v`` with adjoint ``w -> A* w``.

    Operators are immutable after construction and may be shared across
    threads.  Subclasses implement ``_forward`` and ``_adjoint`` on
    validated 1-D float arrays.
    """

    dim_in: int
    dim_out: int

    def __init__(self, dim_in: int, dim_out: int):
        self.dim_in = int(dim_in)
        self.dim_out = int(dim_out)
        self._norm_cache: dict = {}

    def apply(self, v) -> np.ndarray:
        v = self._as_vector(v, self.dim_in, "input")
        return self._forward(v)

    def apply_adjoint(self, w) -> np.ndarray:
        w = self._as_vector(w, self.dim_out, "output")
        return self._adjoint(w)

    def _forward(self, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _adjoint(self, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @staticmethod
    def _as_vector(v, expected: int, side: str) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        if v.ndim != 1 or v.size != expected:
            raise ValueError(
                f"expected a length-{expected} vector on the operator's {side} side, "
                f"got shape {v.shape}"
            )
        return v


class DenseOperator(LinearOperator):
    """Explicit matrix operator; the adjoint multiplies by the transpose.

    Used as a small-instance oracle and for synthetic test systems.
    """

    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {matrix.shape}")
        super().__init__(dim_in=matrix.shape[1], dim_out=matrix.shape[0])
        self.matrix = matrix

    def _forward(self, v):
        return self.matrix @ v

    def _adjoint(self, w):
        return self.matrix.T @ w


class GaussianBlurOperator(LinearOperator):
    """Separable Gaussian blur on an N x N image (row-major pixel vector).

    The 1-D stencil is ``z_j = exp(-j^2 / (2 sigma^2)) / (sigma sqrt(2 pi))``
    for ``0 <= j < band`` and zero beyond; pixels outside the grid count
    as zero.  The operator is symmetric, so the adjoint reuses the
    forward code path.  Stencil weights are raw kernel samples, not
    normalized to unit mass.
    """

    def __init__(self, side: int, sigma: float, band: int):
        if side < 1:
            raise ValueError(f"side must be positive, got {side}")
        if sigma <= 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        if not 1 <= band <= side:
            raise ValueError(f"band must satisfy 1 <= band <= side, got band={band}, side={side}")
        super().__init__(dim_in=side * side, dim_out=side * side)
        self.side = int(side)
        self.sigma = float(sigma)
        self.band = int(band)
        j = np.arange(band, dtype=float)
        self.stencil = np.exp(-(j * j) / (2.0 * sigma * sigma)) / (sigma * math.sqrt(2.0 * math.pi))

    def _convolve_rows(self, X: np.ndarray) -> np.ndarray:
        # fixed summation order (j ascending, +j before -j) keeps results
        # independent of any internal parallelism
        out = self.stencil[0] * X
        n = X.shape[1]
        for j in range(1, self.band):
            zj = self.stencil[j]
            out[:, : n - j] += zj * X[:, j:]
            out[:, j:] += zj * X[:, : n - j]
        return out

    def _forward(self, v):
        X = v.reshape(self.side, self.side)
        rows = self._convolve_rows(X)
        cols = self._convolve_rows(rows.T).T
        return cols.reshape(-1)

    def _adjoint(self, w):
        # symmetric operator: same code path as forward
        return self._forward(w)


def make_gaussian_blur(side: int, sigma: float, band: int) -> GaussianBlurOperator:
    """Construct the separable Gaussian blur operator for an N x N image."""
    return GaussianBlurOperator(side, sigma, band)


def apply(op: LinearOperator, v) -> np.ndarray:
    """Apply the forward map: returns ``A v``."""
    return op.apply(v)


def apply_adjoint(op: LinearOperator, w) -> np.ndarray:
    """Apply the adjoint map: returns ``A* w``."""
    return op.apply_adjoint(w)


def operator_norm_estimate(op: LinearOperator, max_iters: int = 1000,
                           tol: float = 1e-12, seed: int = 0) -> float:
    """Power-method estimate of the spectral norm ``||A||_2``.

    Iterates ``v <- A* A v`` from a seeded random start and returns the
    square root of the dominant eigenvalue estimate.  Converged when two
    successive estimates differ relatively by less than ``tol``; returns
    the best estimate after ``max_iters`` otherwise.  Results are cached
    per ``(max_iters, tol, seed)`` since operators are immutable.
    """
    if max_iters < 1:
        raise ValueError(f"max_iters must be positive, got {max_iters}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    key = (max_iters, tol, seed)
    cached = op._norm_cache.get(key)
    if cached is not None:
        return cached

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(op.dim_in)
    nv = np.linalg.norm(v)
    if nv == 0.0:  # pragma: no cover - measure-zero draw
        v = np.zeros(op.dim_in)
        v[0] = 1.0
        nv = 1.0
    v /= nv

    estimate = 0.0
    prev = None
    for _ in range(max_iters):
        z = op.apply_adjoint(op.apply(v))
        estimate = float(np.linalg.norm(z))
        if estimate == 0.0:
            break
        v = z / estimate
        if prev is not None and abs(estimate - prev) < tol * estimate:
            break
        prev = estimate

    result = math.sqrt(estimate)
    op._norm_cache[key] = result
    return result


def adjoint_check(op: LinearOperator, trials: int = 100, seed: int = 0) -> float:
    """Largest normalized adjoint-identity defect over seeded random pairs.

    For each pair ``(v, w)`` the defect is
    ``|<Av, w> - <v, A*w>| / (||Av|| ||w|| + ||v|| ||A*w|| + 1)``.
    A correct adjoint keeps this at rounding level (<= 1e-10).
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        v = rng.standard_normal(op.dim_in)
        w = rng.standard_normal(op.dim_out)
        av = op.apply(v)
        atw = op.apply_adjoint(w)
        num = abs(float(av @ w) - float(v @ atw))
        den = (
            np.linalg.norm(av) * np.linalg.norm(w)
            + np.linalg.norm(v) * np.linalg.norm(atw)
            + 1.0
        )
        worst = max(worst, num / den)
    return worst
