"""Orthonormal polynomials via the three-term recurrence, and tensor bases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .index_sets import IndexSet
from .measures import (
    MAX_UNBOUNDED_DEGREE,
    MeasureFamily1D,
    TensorMeasure,
    _check_in_support,
    as_points,
    recurrence_arrays,
    tensor_rule,
)


def univariate_table(fam: MeasureFamily1D, max_degree: int, x, check: bool = True) -> np.ndarray:
    """Values psi_0(x), ..., psi_max_degree(x) as an array of shape (len(x), max_degree + 1)."""
    if max_degree < 0:
        raise ValueError("degree must be >= 0")
    if not fam.bounded and max_degree > MAX_UNBOUNDED_DEGREE:
        raise ValueError(f"{fam.name} polynomials are capped at degree {MAX_UNBOUNDED_DEGREE}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if check:
        _check_in_support(fam, x, open_at_singular=False)
    a, sb = recurrence_arrays(fam, max_degree)
    out = np.empty((x.shape[0], max_degree + 1))
    out[:, 0] = 1.0
    if max_degree >= 1:
        out[:, 1] = (x - a[0]) / sb[1]
    for k in range(1, max_degree):
        out[:, k + 1] = ((x - a[k]) * out[:, k] - sb[k] * out[:, k - 1]) / sb[k + 1]
    return out


def univariate_single(fam: MeasureFamily1D, degree: int, x: np.ndarray) -> np.ndarray:
    """psi_degree(x) only, with O(len(x)) memory; no support check."""
    a, sb = recurrence_arrays(fam, max(degree, 1))
    x = np.asarray(x, dtype=float)
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    for k in range(degree):
        p_next = (x - a[k]) * p
        p_next -= sb[k] * p_prev
        p_next /= sb[k + 1]
        p_prev, p = p, p_next
    return p


def eval_univariate(fam: MeasureFamily1D, degree: int, x):
    """Orthonormal psi_degree at ``x``; returns a float for scalar input."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    vals = univariate_table(fam, degree, x)[:, degree]
    return float(vals[0]) if np.ndim(x) == 0 else vals


@dataclass(frozen=True)
class OrthoBasis:
    """Tensor-product orthonormal basis {Psi_nu : nu in S} of L^2 over ``measure``.

    Column ``i`` of every evaluation matrix corresponds to ``index_set.indices[i]``.
    """

    measure: TensorMeasure
    index_set: IndexSet

    def __post_init__(self):
        if self.measure.d != self.index_set.d:
            raise ValueError(
                f"measure has dimension {self.measure.d} but index set has dimension {self.index_set.d}"
            )

    @classmethod
    def build(cls, family: MeasureFamily1D | str, index_set: IndexSet) -> "OrthoBasis":
        return cls(TensorMeasure.isotropic(family, index_set.d), index_set)

    @property
    def n(self) -> int:
        return len(self.index_set)

    @property
    def d(self) -> int:
        return self.measure.d

    def tables(self, x: np.ndarray) -> list[np.ndarray]:
        degs = self.index_set.max_degrees
        return [univariate_table(fam, degs[k], x[:, k]) for k, fam in enumerate(self.measure.factors)]

    def evaluate(self, x) -> np.ndarray:
        """Matrix (Psi_nu(x_i)) of shape (m, n)."""
        x = as_points(x, self.d)
        idx = self.index_set.array
        tabs = self.tables(x)
        V = tabs[0][:, idx[:, 0]]
        for k in range(1, self.d):
            V = V * tabs[k][:, idx[:, k]]
        return V

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(x)


def eval_basis_row(B: OrthoBasis, x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != B.d:
        raise ValueError(f"point has dimension {x.shape[0]}, basis has dimension {B.d}")
    return B.evaluate(x.reshape(1, -1))[0]


def gram_matrix(B: OrthoBasis, q_per_dim: int) -> np.ndarray:
    """Quadrature approximation of the L^2 Gram matrix; exact once q_per_dim > max degree."""
    if q_per_dim < max(B.index_set.max_degrees) + 1:
        raise ValueError("q_per_dim must be at least max degree + 1 for an exact Gram matrix")
    nodes, weights = tensor_rule(B.measure, q_per_dim)
    V = B.evaluate(nodes)
    return (V * weights[:, None]).T @ V


def l2_norm_quadrature(B: OrthoBasis, coefficients, q_per_dim: int | None = None) -> float:
    """L^2 norm of sum_i c_i phi_i computed by tensor Gauss quadrature."""
    q = q_per_dim or max(B.index_set.max_degrees) + 1
    nodes, weights = tensor_rule(B.measure, q)
    vals = B.evaluate(nodes) @ np.asarray(coefficients, dtype=float)
    return float(np.sqrt(np.dot(weights, vals * vals)))
