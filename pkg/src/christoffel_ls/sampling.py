"""Sampling strategies: Monte Carlo, Christoffel mixture, per-basis induced, discrete grid.

Induced distributions |psi_j(x)|^2 drho(x) are sampled by inverse transform on
a tabulated CDF. For Jacobi measures the CDF is computed exactly at each
table node by Gauss-Jacobi quadrature on [-1, x] (x <= 0) or [x, 1] (x > 0),
so the endpoint singularity of the weight is absorbed by the rule. For the
Gaussian and exponential measures the CDF is accumulated by composite
Gauss-Legendre on a truncated interval whose tail mass is negligible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.linalg import qr

from .christoffel import MONTE_CARLO, OPTIMAL, REGULARIZED, WeightSpec, christoffel_K
from .measures import (
    GAUSSIAN,
    MeasureFamily1D,
    TensorMeasure,
    density,
    gauss_rule,
    make_rng,
    sample_rho,
)
from .orthopoly import OrthoBasis, univariate_single

MC, MIXTURE, PER_BASIS, DISCRETE = "mc", "mixture", "per-basis", "discrete"
STRATEGIES = (MC, MIXTURE, PER_BASIS, DISCRETE)

TABLE_SIZE = 4096
MAX_INDUCED_DEGREE_UNBOUNDED = 60


class RankDeficiencyError(ValueError):
    pass


@dataclass(frozen=True)
class SamplePlan:
    points: np.ndarray
    weights: np.ndarray
    strategy: str
    seed: int
    weight_spec: WeightSpec
    grid_indices: np.ndarray | None = None

    def __post_init__(self):
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ValueError("a plan needs at least one point")
        if self.weights.shape != (self.points.shape[0],):
            raise ValueError("one weight per point is required")
        if np.any(self.weights <= 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be positive and finite")

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


# ---------------------------------------------------------------------------
# induced distributions


def _jacobi_induced_cdf(fam: MeasureFamily1D, j: int, x: np.ndarray) -> np.ndarray:
    """Exact CDF of psi_j^2 drho for a Jacobi measure, evaluated at each x."""
    a, b = fam.alpha, fam.beta
    q = j + 30
    logc = fam.log_normalizer
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)

    left = x <= 0
    if np.any(left):
        xl = x[left]
        h = (xl + 1.0) / 2.0
        r = gauss_rule(MeasureFamily1D.jacobi(0.0, b), q)
        t = -1.0 + h[:, None] * (r.nodes[None, :] + 1.0)
        g = univariate_single(fam, j, t) ** 2
        s = (g * (1.0 - t) ** a) @ r.weights
        with np.errstate(divide="ignore"):
            scale = np.exp(logc + (b + 1) * np.log(h) + (b + 1) * math.log(2.0) - math.log(b + 1))
        out[left] = scale * s
    right = ~left
    if np.any(right):
        xr = x[right]
        h = (1.0 - xr) / 2.0
        r = gauss_rule(MeasureFamily1D.jacobi(0.0, a), q)
        t = 1.0 - h[:, None] * (r.nodes[None, :] + 1.0)
        g = univariate_single(fam, j, t) ** 2
        s = (g * (1.0 + t) ** b) @ r.weights
        with np.errstate(divide="ignore"):
            scale = np.exp(logc + (a + 1) * np.log(h) + (a + 1) * math.log(2.0) - math.log(a + 1))
        out[right] = 1.0 - scale * s
    return np.clip(out, 0.0, 1.0)


def _unbounded_interval(fam: MeasureFamily1D, j: int) -> tuple[float, float]:
    # beyond these limits the tail mass of psi_j^2 drho is below ~1e-25
    if fam.kind == GAUSSIAN:
        L = math.sqrt(4 * j + 2) + 11.0
        return -L, L
    return 0.0, 4.0 * j + 2.0 + 20.0 * math.sqrt(j + 1) + 40.0


def _unbounded_induced_table(fam: MeasureFamily1D, j: int, grid: np.ndarray) -> np.ndarray:
    gl_x, gl_w = np.polynomial.legendre.leggauss(10)
    lo, hi = grid[:-1], grid[1:]
    half = 0.5 * (hi - lo)
    t = (0.5 * (hi + lo))[:, None] + half[:, None] * gl_x[None, :]
    vals = univariate_single(fam, j, t.ravel()) ** 2 * density(fam, t.ravel())
    cell = (vals.reshape(t.shape) @ gl_w) * half
    F = np.concatenate([[0.0], np.cumsum(cell)])
    total = F[-1]
    if not abs(total - 1.0) < 1e-8:
        raise FloatingPointError(f"induced CDF tabulation for {fam.name}, degree {j} has mass {total}")
    return F / total


@dataclass(frozen=True)
class InducedDistribution:
    """The probability measure |psi_degree(x)|^2 drho(x) with a tabulated inverse CDF."""

    family: MeasureFamily1D
    degree: int
    grid: np.ndarray = field(repr=False)
    cdf_values: np.ndarray = field(repr=False)
    _ppf: PchipInterpolator = field(repr=False)
    _cdf: PchipInterpolator = field(repr=False)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.clip(self._cdf(np.clip(x, self.grid[0], self.grid[-1])), 0.0, 1.0)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        x = self._ppf(np.clip(u, 0.0, 1.0))
        return np.clip(x, self.grid[0], self.grid[-1])

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return univariate_single(self.family, self.degree, x) ** 2 * density(self.family, x)

    def sample(self, rng: np.random.Generator, size: int | None = None):
        u = rng.random(1 if size is None else size)
        out = self.ppf(u)
        return float(out[0]) if size is None else out


@lru_cache(maxsize=1024)
def induced_distribution(fam: MeasureFamily1D, degree: int) -> InducedDistribution:
    """Tabulate (and cache) the induced distribution of ``fam`` at ``degree``."""
    if degree < 0:
        raise ValueError("degree must be >= 0")
    cheb = -np.cos(np.pi * np.arange(TABLE_SIZE) / (TABLE_SIZE - 1))
    if fam.bounded:
        grid = cheb
        F = _jacobi_induced_cdf(fam, degree, grid)
        F[0], F[-1] = 0.0, 1.0
    else:
        if degree > MAX_INDUCED_DEGREE_UNBOUNDED:
            raise ValueError(f"induced sampling for {fam.name} is capped at degree {MAX_INDUCED_DEGREE_UNBOUNDED}")
        lo, hi = _unbounded_interval(fam, degree)
        grid = lo + (hi - lo) * (cheb + 1.0) / 2.0
        F = _unbounded_induced_table(fam, degree, grid)
    F = np.maximum.accumulate(F)
    if np.any(np.diff(F) < 0) or not np.all(np.isfinite(F)):
        raise FloatingPointError(f"non-monotone induced CDF for {fam.name}, degree {degree}")
    keep = np.concatenate([[True], np.diff(F) > 0])
    Fk, xk = F[keep], grid[keep]
    grid.flags.writeable = False
    F.flags.writeable = False
    return InducedDistribution(
        family=fam,
        degree=degree,
        grid=grid,
        cdf_values=F,
        _ppf=PchipInterpolator(Fk, xk),
        _cdf=PchipInterpolator(grid, F),
    )


def sample_induced_univariate(fam: MeasureFamily1D, degree: int, rng: np.random.Generator, size: int | None = None):
    """Draw from |psi_degree|^2 drho by inverse transform."""
    return induced_distribution(fam, int(degree)).sample(rng, size)


def _draw_with_degrees(measure: TensorMeasure, degrees: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One point per row of ``degrees``; coordinate k drawn from the induced law of degree degrees[i, k]."""
    m, d = degrees.shape
    U = rng.random((m, d))
    X = np.empty((m, d))
    for k, fam in enumerate(measure.factors):
        col = degrees[:, k]
        for g in np.unique(col):
            rows = col == g
            X[rows, k] = induced_distribution(fam, int(g)).ppf(U[rows, k])
    return X


# ---------------------------------------------------------------------------
# continuous sampling strategies


def sample_monte_carlo(M: TensorMeasure, m: int, seed: int) -> SamplePlan:
    """m i.i.d. draws from rho with unit weights."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = make_rng(seed)
    X = M.sample(rng, m)
    return SamplePlan(X, np.ones(m), MC, int(seed), WeightSpec.monte_carlo())


def _require_christoffel_spec(spec: WeightSpec) -> None:
    if spec.kind == MONTE_CARLO:
        raise ValueError("Christoffel sampling needs an optimal or regularised weight, not Monte Carlo weights")


def sample_christoffel_mixture(B: OrthoBasis, spec: WeightSpec, m: int, seed: int) -> SamplePlan:
    """i.i.d. draws from (theta + (1 - theta) K / n) drho (theta = 0 for the optimal weight).

    Each point picks a basis index uniformly (or, with probability theta, the
    zero index, which is rho itself) and then draws each coordinate from the
    corresponding univariate induced distribution.
    """
    _require_christoffel_spec(spec)
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = make_rng(seed)
    idx = B.index_set.array
    J = rng.integers(0, B.n, size=m)
    degrees = idx[J].copy()
    if spec.kind == REGULARIZED:
        from_rho = rng.random(m) < spec.theta
        degrees[from_rho] = 0
    X = _draw_with_degrees(B.measure, degrees, rng)
    w = spec.from_christoffel(christoffel_K(B, X), B.n)
    return SamplePlan(X, w, MIXTURE, int(seed), spec)


def per_basis_size(n: int, k: int, spec: WeightSpec) -> tuple[int, int]:
    """(points per basis function block, extra rho draws) for a per-basis plan."""
    if spec.kind == OPTIMAL:
        return k, 0
    extra = spec.theta / (1.0 - spec.theta) * k * n
    r = int(round(extra))
    if abs(extra - r) > 1e-9:
        raise ValueError(
            f"theta={spec.theta} with k={k}, n={n} needs a non-integer number ({extra}) of rho draws"
        )
    return k, r


def sample_per_basis(B: OrthoBasis, spec: WeightSpec, k: int, seed: int) -> SamplePlan:
    """k draws from each induced measure |phi_j|^2 drho in basis order.

    With the optimal weight m = k n. With the regularised weight a final block
    of theta / (1 - theta) k n draws from rho is appended so that the average
    of the sampling measures is (theta + (1 - theta) K / n) drho.
    """
    _require_christoffel_spec(spec)
    if k < 1:
        raise ValueError("k must be >= 1")
    k, r = per_basis_size(B.n, k, spec)
    rng = make_rng(seed)
    idx = B.index_set.array
    degrees = np.repeat(idx, k, axis=0)
    if r:
        degrees = np.vstack([degrees, np.zeros((r, B.d), dtype=int)])
    X = _draw_with_degrees(B.measure, degrees, rng)
    w = spec.from_christoffel(christoffel_K(B, X), B.n)
    return SamplePlan(X, w, PER_BASIS, int(seed), spec)


# ---------------------------------------------------------------------------
# discrete grid (leverage scores)


@dataclass(frozen=True)
class DiscreteGrid:
    """K nodes with an orthonormalised basis under the uniform measure on the nodes.

    ``Q`` has Euclidean-orthonormal columns spanning the range of the basis
    matrix; ``leverage_scores`` are its squared row norms (summing to n), and
    ``christoffel`` = K * leverage_scores is the discrete Christoffel function.
    ``R`` and ``permutation`` map coefficients in the orthonormal basis back
    to the input basis: V[:, permutation] = Q R.
    """

    nodes: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    permutation: np.ndarray
    leverage_scores: np.ndarray
    seed: int

    @property
    def K(self) -> int:
        return self.nodes.shape[0]

    @property
    def n(self) -> int:
        return self.Q.shape[1]

    @property
    def christoffel(self) -> np.ndarray:
        return self.K * self.leverage_scores

    @property
    def orthonormal_basis(self) -> np.ndarray:
        """Basis values orthonormal under the uniform discrete measure (sqrt(K) Q)."""
        return math.sqrt(self.K) * self.Q


def build_discrete_grid(
    source: TensorMeasure | np.ndarray,
    basis_eval: Callable[[np.ndarray], np.ndarray],
    K: int,
    n: int,
    seed: int,
    rank_tol: float = 1e-10,
) -> DiscreteGrid:
    """Grid of K points drawn from ``source`` (or the first K rows of a point array)."""
    if isinstance(source, TensorMeasure):
        nodes = source.sample(make_rng(seed), K)
    else:
        nodes = np.asarray(source, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        if nodes.shape[0] < K:
            raise ValueError(f"only {nodes.shape[0]} points supplied, K={K} requested")
        nodes = nodes[:K]
    if K < n:
        raise ValueError("the grid needs K >= n points")
    V = np.asarray(basis_eval(nodes), dtype=float)
    if V.shape != (K, n):
        raise ValueError(f"basis_eval returned shape {V.shape}, expected {(K, n)}")
    # equilibrate columns first: the rank test is relative, and scaling changes neither range nor leverage
    scale = np.linalg.norm(V, axis=0)
    if np.any(scale == 0) or not np.all(np.isfinite(scale)):
        raise RankDeficiencyError("grid basis matrix has a zero or non-finite column")
    Q, R, perm = qr(V / scale, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > rank_tol * diag[0]))
    if rank < n:
        raise RankDeficiencyError(f"grid basis matrix has numerical rank {rank} < n = {n}; increase K")
    lev = np.einsum("ij,ij->i", Q, Q)
    return DiscreteGrid(nodes, Q, R * scale[perm], perm, lev, int(seed))


def sample_discrete_leverage(G: DiscreteGrid, spec: WeightSpec, m: int, seed: int) -> SamplePlan:
    """i.i.d. node draws with mass proportional to (theta + (1 - theta) Kbar / n)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    nu = spec.density_factor(G.christoffel, G.n)
    p = nu / nu.sum()
    rng = make_rng(seed)
    idx = rng.choice(G.K, size=m, p=p)
    w = 1.0 / nu[idx]
    return SamplePlan(G.nodes[idx], w, DISCRETE, int(seed), spec, grid_indices=idx)


def default_grid(B: OrthoBasis, seed: int) -> DiscreteGrid:
    """Grid of max(100 n, 10^4) draws from rho; large enough that its Gram error is small next to the sampling error."""
    return build_discrete_grid(B.measure, B.evaluate, max(100 * B.n, 10_000), B.n, seed)


def draw_plan(
    strategy: str,
    B: OrthoBasis,
    spec: WeightSpec,
    m: int,
    seed: int,
    grid: DiscreteGrid | None = None,
) -> SamplePlan:
    """Uniform entry point used by the harness and CLI.

    For ``per-basis`` the block size is the smallest k whose plan has at
    least ``m`` points; the returned plan may therefore be slightly larger.
    """
    if strategy == MC:
        return sample_monte_carlo(B.measure, m, seed)
    if strategy == MIXTURE:
        return sample_christoffel_mixture(B, spec, m, seed)
    if strategy == PER_BASIS:
        share = 1.0 if spec.kind == OPTIMAL else 1.0 - spec.theta
        k = max(1, math.ceil(m * share / B.n - 1e-12))
        return sample_per_basis(B, spec, k, seed)
    if strategy == DISCRETE:
        if grid is None:
            grid = default_grid(B, seed ^ 0x5EED)
        return sample_discrete_leverage(grid, spec, m, seed)
    raise ValueError(f"unknown strategy {strategy!r}")
