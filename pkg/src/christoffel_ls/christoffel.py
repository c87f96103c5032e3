"""Christoffel function, sampling weights and the constants kappa_w / kappa."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .measures import as_points
from .orthopoly import OrthoBasis, univariate_table

MONTE_CARLO = "mc"
OPTIMAL = "opt"
REGULARIZED = "reg"


@dataclass(frozen=True)
class WeightSpec:
    """Weight function choice: w = 1 (Monte Carlo), n / K, or (theta + (1 - theta) K / n)^-1."""

    kind: str = REGULARIZED
    theta: float = 0.5

    def __post_init__(self):
        if self.kind not in (MONTE_CARLO, OPTIMAL, REGULARIZED):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == REGULARIZED:
            if not 0.0 < self.theta < 1.0:
                raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
            object.__setattr__(self, "theta", float(self.theta))
        else:
            object.__setattr__(self, "theta", 1.0 if self.kind == MONTE_CARLO else 0.0)

    @classmethod
    def monte_carlo(cls) -> "WeightSpec":
        return cls(MONTE_CARLO)

    @classmethod
    def optimal(cls) -> "WeightSpec":
        return cls(OPTIMAL)

    @classmethod
    def regularized(cls, theta: float = 0.5) -> "WeightSpec":
        return cls(REGULARIZED, theta)

    @classmethod
    def parse(cls, text: str) -> "WeightSpec":
        """``mc``, ``opt`` or ``reg:theta`` (``reg`` alone means theta = 1/2)."""
        t = text.strip().lower()
        if t in ("mc", "montecarlo", "monte_carlo"):
            return cls.monte_carlo()
        if t in ("opt", "optimal"):
            return cls.optimal()
        if t == "reg":
            return cls.regularized()
        if t.startswith("reg:"):
            return cls.regularized(float(t[4:]))
        raise ValueError(f"unknown weight spec {text!r}")

    def __str__(self) -> str:
        return f"reg:{self.theta:g}" if self.kind == REGULARIZED else self.kind

    def density_factor(self, K, n: int):
        """nu = 1 / w: the density of the sampling measure relative to rho."""
        K = np.asarray(K, dtype=float)
        if self.kind == MONTE_CARLO:
            return np.ones_like(K)
        if self.kind == OPTIMAL:
            return K / n
        return self.theta + (1.0 - self.theta) * K / n

    def from_christoffel(self, K, n: int):
        """Weight values given Christoffel values ``K``."""
        K = np.asarray(K, dtype=float)
        if self.kind == OPTIMAL and np.any(K <= 0):
            raise ZeroDivisionError("optimal weight n / K(x) is singular where K(x) = 0")
        return 1.0 / self.density_factor(K, n)


def christoffel_K(B: OrthoBasis, x) -> np.ndarray:
    """K(x) = sum_nu |Psi_nu(x)|^2 at each row of ``x``."""
    V = B.evaluate(x)
    return np.einsum("ij,ij->i", V, V)


def weight(B: OrthoBasis, spec: WeightSpec, x) -> np.ndarray:
    x = as_points(x, B.d)
    if spec.kind == MONTE_CARLO:
        return np.ones(x.shape[0])
    return spec.from_christoffel(christoffel_K(B, x), B.n)


@dataclass(frozen=True)
class KappaResult:
    value: float
    argmax: np.ndarray | None
    censored: bool = False

    def __float__(self) -> float:
        return self.value


def _chebyshev_extrema(N: int) -> np.ndarray:
    return np.cos(np.pi * np.arange(N - 1, -1, -1) / (N - 1))


def christoffel_on_tensor_grid(B: OrthoBasis, axes: list[np.ndarray]) -> np.ndarray:
    """K on the tensor grid ``axes[0] x ... x axes[d-1]``, shape (N_1, ..., N_d).

    Uses K = sum_nu prod_k psi_{nu_k}(x_k)^2, contracting one axis at a time
    against the indicator tensor of the index set.
    """
    degs = B.index_set.max_degrees
    M = np.zeros(tuple(g + 1 for g in degs))
    M[tuple(B.index_set.array.T)] = 1.0
    R = M
    for k, fam in enumerate(B.measure.factors):
        T2 = univariate_table(fam, degs[k], axes[k]) ** 2
        R = np.tensordot(R, T2, axes=([0], [1]))
    return R


def _unbounded_direction(B: OrthoBasis) -> bool:
    idx = B.index_set.array
    return any(not fam.bounded and idx[:, k].max() > 0 for k, fam in enumerate(B.measure.factors))


def kappa_w(
    B: OrthoBasis,
    spec: WeightSpec,
    oversampling: int = 10,
    search_grid=None,
    max_grid_points: int = 4_000_000,
    polish: bool = True,
) -> KappaResult:
    """Supremum of w(x) K(x) over the domain.

    Bounded (Jacobi) domains: maximum over a tensor grid of Chebyshev extrema
    with ``oversampling`` points per degree in each direction, polished by a
    bounded local ascent from the best grid point. Unbounded directions have
    closed-form answers: +inf for Monte Carlo, n / (1 - theta) for the
    regularised weight (the limit as K -> inf), and n for the optimal weight.
    """
    n = B.n
    if spec.kind == OPTIMAL:
        return KappaResult(float(n), None)
    if search_grid is None and _unbounded_direction(B):
        if spec.kind == MONTE_CARLO:
            return KappaResult(math.inf, None, censored=True)
        return KappaResult(n / (1.0 - spec.theta), None)

    def wK(K):
        return K * (1.0 / spec.density_factor(K, n))

    if search_grid is not None:
        pts = as_points(search_grid, B.d)
        vals = wK(christoffel_K(B, pts))
        j = int(np.argmax(vals))
        return KappaResult(float(vals[j]), pts[j].copy())

    degs = B.index_set.max_degrees
    Ns = [max(oversampling * (g + 1), 33) for g in degs]
    while np.prod([float(N) for N in Ns]) > max_grid_points:
        Ns = [max(17, int(N * 0.8)) for N in Ns]
    axes = []
    for k, fam in enumerate(B.measure.factors):
        if fam.bounded:
            axes.append(_chebyshev_extrema(Ns[k]))
        else:  # constant direction (degree 0 only)
            axes.append(np.array([0.0 if fam.kind == "gaussian" else 1.0]))
    vals = wK(christoffel_on_tensor_grid(B, axes))
    flat = int(np.argmax(vals))
    sub = np.unravel_index(flat, vals.shape)
    best = float(vals.flat[flat])
    x0 = np.array([axes[k][sub[k]] for k in range(B.d)])
    if not polish:
        return KappaResult(best, x0)

    def neg(x):
        return -float(wK(christoffel_K(B, np.clip(x, -1.0, 1.0).reshape(1, -1)))[0])

    if B.d == 1:
        ax = axes[0]
        i = sub[0]
        lo, hi = ax[max(i - 1, 0)], ax[min(i + 1, len(ax) - 1)]
        if hi > lo:
            res = minimize_scalar(lambda t: neg(np.array([t])), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-13})
            if -res.fun > best:
                best, x0 = float(-res.fun), np.array([res.x])
    else:
        bounds = []
        for k in range(B.d):
            ax = axes[k]
            i = sub[k]
            bounds.append((ax[max(i - 1, 0)], ax[min(i + 1, len(ax) - 1)]))
        res = minimize(neg, x0, method="L-BFGS-B", bounds=bounds, options={"ftol": 1e-15, "gtol": 1e-12})
        if -res.fun > best:
            best, x0 = float(-res.fun), np.asarray(res.x)
    return KappaResult(best, x0)


def kappa_lower_bound_check(B: OrthoBasis, spec: WeightSpec, rtol: float = 1e-6) -> bool:
    """kappa_w >= n for every weight function (up to ``rtol * n``)."""
    return kappa_w(B, spec).value >= B.n * (1.0 - rtol)


def kappa_reference_bound(B: OrthoBasis) -> float | None:
    """Known upper bound on kappa(P_S) for lower sets, or None when none applies.

    Chebyshev (first kind): n^{log 3 / log 2}; Jacobi with integer parameters:
    n^{2 max(alpha, beta) + 2} (n^2 for Legendre); ultraspherical with
    2 alpha + 1 a positive integer: n^{2 alpha + 2}.
    """
    fams = set(B.measure.factors)
    if len(fams) != 1:
        return None
    fam = next(iter(fams))
    if not fam.bounded:
        return None
    n = B.n
    a, b = fam.alpha, fam.beta
    if (a, b) == (-0.5, -0.5):
        return n ** (math.log(3) / math.log(2))
    if float(a).is_integer() and float(b).is_integer() and a >= 0 and b >= 0:
        return float(n) ** (2 * max(a, b) + 2)
    if a == b and float(2 * a + 1).is_integer() and 2 * a + 1 >= 1:
        return float(n) ** (2 * a + 2)
    return None


def legendre_kappa_closed_form(B: OrthoBasis) -> float:
    """K(1, ..., 1) = sum_nu prod_k (2 nu_k + 1) for tensor Legendre under dx/2.

    Orthonormal Legendre polynomials for the uniform probability measure
    satisfy psi_i(1)^2 = 2 i + 1, and |psi_i| peaks at the endpoints, so this
    is also kappa(P_S).
    """
    idx = B.index_set.array
    return float(np.sum(np.prod(2 * idx + 1, axis=1)))
