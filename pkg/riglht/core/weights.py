"""Implicit random-integration weight matrix W = B + a a^T.

The weight function is a product of one-dimensional densities with means
``a`` and variances ``beta_sq``. Only those two moments ever enter the test,
so W is carried as its diagonal-plus-rank-one decomposition and never
materialized as a p x p array.
"""

from dataclasses import dataclass

import numpy as np

from riglht.core.errors import InvalidDimensionError, InvalidInputError


@dataclass(frozen=True, eq=False)
class WeightSpec:
    a: np.ndarray
    beta_sq: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64).reshape(-1)
        beta_sq = np.array(self.beta_sq, dtype=np.float64).reshape(-1)

        if a.size < 1 or a.size != beta_sq.size:
            raise InvalidDimensionError(
                f"weight means and variances must share a length p >= 1 "
                f"(got {a.size} and {beta_sq.size})"
            )
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(beta_sq)):
            raise InvalidInputError("weight parameters must be finite")
        if np.any(beta_sq <= 0):
            raise InvalidInputError("every weight variance beta_i^2 must be strictly positive")

        a.setflags(write=False)
        beta_sq.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "beta_sq", beta_sq)

    @property
    def p(self) -> int:
        return self.a.size

    def dense(self) -> np.ndarray:
        """Materialize W. Only meant for small-p oracles in tests."""
        return np.diag(self.beta_sq) + np.outer(self.a, self.a)

    def trace(self) -> float:
        return float(self.beta_sq.sum() + self.a @ self.a)

    def trace_sq(self) -> float:
        """tr(W^2) = sum beta^4 + 2 sum beta^2 a^2 + (sum a^2)^2."""
        aa = float(self.a @ self.a)
        return float(
            np.sum(self.beta_sq**2) + 2.0 * np.dot(self.beta_sq, self.a**2) + aa * aa
        )

    def to_dict(self) -> dict:
        return {"a": self.a.tolist(), "beta_sq": self.beta_sq.tolist()}


def default_weights(p: int) -> WeightSpec:
    """Tuning used throughout the simulation study.

    a_i = 2 p^(-3/8) and beta_i = sqrt(2) (p + i) / p, stored squared.
    """
    if p < 1:
        raise InvalidDimensionError(f"dimension p must be >= 1, got {p}")

    i = np.arange(1, p + 1, dtype=np.float64)
    a = np.full(p, 2.0 * p ** (-3.0 / 8.0))
    beta_sq = 2.0 * ((p + i) / p) ** 2
    return WeightSpec(a=a, beta_sq=beta_sq)


def _check_vector(x: np.ndarray, w: WeightSpec, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != w.p:
        raise InvalidDimensionError(
            f"{name} must be a vector of length {w.p}, got shape {x.shape}"
        )
    return x


def w_quadratic(x: np.ndarray, y: np.ndarray, w: WeightSpec) -> float:
    """x^T W y = sum_i beta_i^2 x_i y_i + (a^T x)(a^T y), in O(p)."""
    x = _check_vector(x, w, "x")
    y = _check_vector(y, w, "y")
    # x * y is symmetric elementwise, so the result is exactly symmetric in (x, y)
    return float(np.dot(w.beta_sq, x * y) + np.dot(w.a, x) * np.dot(w.a, y))


def w_quadratic_self(x: np.ndarray, w: WeightSpec) -> float:
    """x^T W x."""
    x = _check_vector(x, w, "x")
    ax = np.dot(w.a, x)
    return float(np.dot(w.beta_sq, x * x) + ax * ax)


def w_gram(x: np.ndarray, y: np.ndarray, w: WeightSpec) -> np.ndarray:
    """Matrix of pairwise x_i^T W y_j for the rows of ``x`` (n x p) and ``y`` (m x p).

    Costs O(n m p); no p x p object is formed.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    if x.shape[1] != w.p or y.shape[1] != w.p:
        raise InvalidDimensionError(
            f"rows must have length {w.p}, got {x.shape[1]} and {y.shape[1]}"
        )
    return (x * w.beta_sq) @ y.T + np.outer(x @ w.a, y @ w.a)


def w_row_norms_sq(x: np.ndarray, w: WeightSpec) -> np.ndarray:
    """Row-wise x_i^T W x_i, the diagonal of ``w_gram(x, x, w)`` in O(n p)."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != w.p:
        raise InvalidDimensionError(f"rows must have length {w.p}, got {x.shape[1]}")
    ax = x @ w.a
    return (x * x) @ w.beta_sq + ax * ax
