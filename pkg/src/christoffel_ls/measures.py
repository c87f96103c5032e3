"""Univariate probability measures, tensor products of them, and Gauss rules.

Every measure is a probability measure. Jacobi-type measures live on (-1, 1);
the uniform and both Chebyshev measures are stored as Jacobi parameters so
that two measures with equal parameters are the same object as far as
hashing, caching and densities are concerned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import betaln

JACOBI = "jacobi"
GAUSSIAN = "gaussian"
EXPONENTIAL = "exponential"

# Orthonormal Hermite/Laguerre values overflow doubles beyond this on the
# tails of their quadrature grids.
MAX_UNBOUNDED_DEGREE = 200


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Return an independent generator for ``seed`` and a tuple of integer keys.

    Streams with different keys are statistically independent, so trial
    ``t`` of a sweep can use ``make_rng(seed, t)`` regardless of the order
    in which trials execute.
    """
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class MeasureFamily1D:
    kind: str
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in (JACOBI, GAUSSIAN, EXPONENTIAL):
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.kind == JACOBI:
            if not (self.alpha > -1 and self.beta > -1):
                raise ValueError(f"Jacobi parameters must exceed -1, got ({self.alpha}, {self.beta})")
            # normalise ints/np floats so equal parameters hash equally
            object.__setattr__(self, "alpha", float(self.alpha))
            object.__setattr__(self, "beta", float(self.beta))
        else:
            object.__setattr__(self, "alpha", 0.0)
            object.__setattr__(self, "beta", 0.0)

    # constructors -----------------------------------------------------
    @classmethod
    def jacobi(cls, alpha: float, beta: float) -> "MeasureFamily1D":
        return cls(JACOBI, alpha, beta)

    @classmethod
    def uniform(cls) -> "MeasureFamily1D":
        return cls(JACOBI, 0.0, 0.0)

    @classmethod
    def chebyshev1(cls) -> "MeasureFamily1D":
        return cls(JACOBI, -0.5, -0.5)

    @classmethod
    def chebyshev2(cls) -> "MeasureFamily1D":
        return cls(JACOBI, 0.5, 0.5)

    @classmethod
    def gaussian(cls) -> "MeasureFamily1D":
        return cls(GAUSSIAN)

    @classmethod
    def exponential(cls) -> "MeasureFamily1D":
        return cls(EXPONENTIAL)

    @classmethod
    def from_name(cls, name: str) -> "MeasureFamily1D":
        """Parse ``uniform``, ``chebyshev1``, ``chebyshev2``, ``jacobi:a:b``,
        ``gaussian`` or ``exponential`` (aliases: legendre, hermite, laguerre)."""
        key = name.strip().lower()
        simple = {
            "uniform": cls.uniform,
            "legendre": cls.uniform,
            "chebyshev1": cls.chebyshev1,
            "chebyshev": cls.chebyshev1,
            "chebyshev2": cls.chebyshev2,
            "gaussian": cls.gaussian,
            "hermite": cls.gaussian,
            "exponential": cls.exponential,
            "laguerre": cls.exponential,
        }
        if key in simple:
            return simple[key]()
        if key.startswith("jacobi:"):
            parts = key.split(":")
            if len(parts) != 3:
                raise ValueError(f"expected 'jacobi:alpha:beta', got {name!r}")
            return cls.jacobi(float(parts[1]), float(parts[2]))
        raise ValueError(f"unknown measure family {name!r}")

    # properties -------------------------------------------------------
    @property
    def name(self) -> str:
        if self.kind != JACOBI:
            return self.kind
        named = {(0.0, 0.0): "uniform", (-0.5, -0.5): "chebyshev1", (0.5, 0.5): "chebyshev2"}
        return named.get((self.alpha, self.beta), f"jacobi:{self.alpha:g}:{self.beta:g}")

    @property
    def support(self) -> tuple[float, float]:
        if self.kind == JACOBI:
            return (-1.0, 1.0)
        if self.kind == GAUSSIAN:
            return (-math.inf, math.inf)
        return (0.0, math.inf)

    @property
    def bounded(self) -> bool:
        return self.kind == JACOBI

    @property
    def log_normalizer(self) -> float:
        """log of c_{alpha,beta} for Jacobi measures; 0 otherwise."""
        if self.kind != JACOBI:
            return 0.0
        a, b = self.alpha, self.beta
        return -((a + b + 1) * math.log(2.0) + betaln(a + 1, b + 1))

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TensorMeasure:
    factors: tuple[MeasureFamily1D, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 1:
            raise ValueError("a tensor measure needs at least one factor")

    @classmethod
    def isotropic(cls, family: MeasureFamily1D | str, d: int) -> "TensorMeasure":
        if isinstance(family, str):
            family = MeasureFamily1D.from_name(family)
        if d < 1:
            raise ValueError("dimension must be >= 1")
        return cls((family,) * d)

    @property
    def d(self) -> int:
        return len(self.factors)

    def density(self, x) -> np.ndarray:
        x = as_points(x, self.d)
        out = np.ones(x.shape[0])
        for k, fam in enumerate(self.factors):
            out *= density(fam, x[:, k])
        return out

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.column_stack([sample_rho(fam, rng, size) for fam in self.factors])

    def in_support(self, x) -> np.ndarray:
        x = as_points(x, self.d)
        ok = np.ones(x.shape[0], dtype=bool)
        for k, fam in enumerate(self.factors):
            lo, hi = fam.support
            ok &= (x[:, k] >= lo) & (x[:, k] <= hi)
        return ok


def as_points(x, d: int) -> np.ndarray:
    """Coerce ``x`` to a float array of shape (m, d)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(-1, 1) if d == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != d:
        raise ValueError(f"expected points of dimension {d}, got array of shape {np.shape(x)}")
    return x


def _check_in_support(fam: MeasureFamily1D, x: np.ndarray, open_at_singular: bool) -> None:
    lo, hi = fam.support
    bad = ~((x >= lo) & (x <= hi))
    if fam.kind == JACOBI and open_at_singular:
        if fam.alpha < 0:
            bad |= x >= 1.0
        if fam.beta < 0:
            bad |= x <= -1.0
    if np.any(bad):
        raise ValueError(f"point(s) {x[bad][:3]} outside the support of {fam.name}")


def density(fam: MeasureFamily1D, x):
    """Probability density of ``fam`` at ``x`` (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    _check_in_support(fam, xa, open_at_singular=True)
    if fam.kind == JACOBI:
        with np.errstate(divide="ignore"):
            logd = fam.log_normalizer + fam.alpha * np.log1p(-xa) + fam.beta * np.log1p(xa)
        out = np.exp(logd)
        # 0**0 = 1 convention at the endpoints for zero exponents
        out = np.where(np.isnan(out), 0.0, out)
    elif fam.kind == GAUSSIAN:
        out = np.exp(-0.5 * xa * xa) / math.sqrt(2 * math.pi)
    else:
        out = np.exp(-xa)
    return float(out) if np.ndim(out) == 0 else out


def recurrence_coeffs(fam: MeasureFamily1D, k: int) -> tuple[float, float]:
    """(a_k, b_k) of the orthonormal three-term recurrence

        sqrt(b_{k+1}) psi_{k+1}(x) = (x - a_k) psi_k(x) - sqrt(b_k) psi_{k-1}(x),

    with psi_{-1} = 0, psi_0 = 1 and b_0 = 1 (total mass of a probability measure).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    if fam.kind == GAUSSIAN:
        return 0.0, (1.0 if k == 0 else float(k))
    if fam.kind == EXPONENTIAL:
        return 2.0 * k + 1.0, (1.0 if k == 0 else float(k * k))
    a, b = fam.alpha, fam.beta
    s = 2 * k + a + b
    if k == 0:
        return (b - a) / (a + b + 2), 1.0
    ak = (b * b - a * a) / (s * (s + 2))
    if k == 1:
        # the general formula has a removable 0/0 when a + b = -1
        bk = 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
    else:
        bk = 4 * k * (k + a) * (k + b) * (k + a + b) / (s * s * (s + 1) * (s - 1))
    return float(ak), float(bk)


@lru_cache(maxsize=256)
def _recurrence_table(fam: MeasureFamily1D, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    ab = np.array([recurrence_coeffs(fam, k) for k in range(kmax + 1)])
    a = ab[:, 0].copy()
    sb = np.sqrt(ab[:, 1])
    a.flags.writeable = False
    sb.flags.writeable = False
    return a, sb


def recurrence_arrays(fam: MeasureFamily1D, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays ``a[0..kmax]`` and ``sqrt(b)[0..kmax]``."""
    return _recurrence_table(fam, int(kmax))


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    exactness_degree: int

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))


def _orthonormal_values_and_derivs(fam, q, x):
    """psi_0..psi_{q-1} summed squares, psi_q and psi_q' at x."""
    a, sb = recurrence_arrays(fam, q)
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    d_prev = np.zeros_like(x)
    dp = np.zeros_like(x)
    ssq = np.zeros_like(x)
    for k in range(q):
        ssq += p * p
        p_next = ((x - a[k]) * p - sb[k] * p_prev) / sb[k + 1]
        d_next = (p + (x - a[k]) * dp - sb[k] * d_prev) / sb[k + 1]
        p_prev, p = p, p_next
        d_prev, dp = dp, d_next
    return ssq, p, dp


@lru_cache(maxsize=512)
def gauss_rule(fam: MeasureFamily1D, q: int) -> QuadratureRule:
    """q-point Gauss rule for ``fam`` (probability-normalised weights).

    Nodes come from the eigenvalues of the Jacobi matrix, polished by Newton
    steps on psi_q. Weights are the Christoffel numbers 1 / sum_{k<q} psi_k^2,
    which keeps tiny tail weights (Hermite, Laguerre) relatively accurate.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if not fam.bounded and q > MAX_UNBOUNDED_DEGREE + 1:
        raise ValueError(f"Gauss rules for {fam.name} are capped at {MAX_UNBOUNDED_DEGREE + 1} nodes")
    a, sb = recurrence_arrays(fam, q)
    if q == 1:
        x = np.array([a[0]])
    else:
        try:
            x = eigh_tridiagonal(a[:q], sb[1:q], eigvals_only=True)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - lapack failure
            raise np.linalg.LinAlgError(f"Jacobi matrix eigensolve failed for {fam.name}, q={q}: {exc}") from exc
        x = np.sort(x)
        for _ in range(3):
            _, p, dp = _orthonormal_values_and_derivs(fam, q, x)
            step = p / dp
            x = x - np.where(np.isfinite(step), step, 0.0)
    ssq, _, _ = _orthonormal_values_and_derivs(fam, q, x)
    w = 1.0 / ssq
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise FloatingPointError(f"non-positive or non-finite Gauss weights for {fam.name}, q={q}")
    x.flags.writeable = False
    w.flags.writeable = False
    return QuadratureRule(nodes=x, weights=w, exactness_degree=2 * q - 1)


def tensor_rule(measure: TensorMeasure, q_per_dim: int | list[int], max_nodes: int = 2_000_000):
    """Tensor product of univariate Gauss rules: returns (nodes (N, d), weights (N,))."""
    qs = [q_per_dim] * measure.d if np.isscalar(q_per_dim) else list(q_per_dim)
    total = int(np.prod([float(q) for q in qs]))
    if total > max_nodes:
        raise OverflowError(f"tensor quadrature with {total} nodes exceeds the cap of {max_nodes}")
    rules = [gauss_rule(fam, int(q)) for fam, q in zip(measure.factors, qs)]
    grids = np.meshgrid(*[r.nodes for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r.weights for r in rules], indexing="ij")
    nodes = np.column_stack([g.ravel() for g in grids])
    weights = np.prod(np.column_stack([g.ravel() for g in wgrids]), axis=1)
    return nodes, weights


def sample_rho(fam: MeasureFamily1D, rng: np.random.Generator, size: int | None = None):
    """Draw from ``fam`` with an exact direct sampler."""
    n = 1 if size is None else int(size)
    if fam.kind == GAUSSIAN:
        out = rng.standard_normal(n)
    elif fam.kind == EXPONENTIAL:
        out = -np.log1p(-rng.random(n))
    elif (fam.alpha, fam.beta) == (0.0, 0.0):
        out = 2.0 * rng.random(n) - 1.0
    elif (fam.alpha, fam.beta) == (-0.5, -0.5):
        out = np.cos(np.pi * rng.random(n))
    else:
        # (1 + x) / 2 ~ Beta(beta + 1, alpha + 1)
        out = 2.0 * rng.beta(fam.beta + 1.0, fam.alpha + 1.0, size=n) - 1.0
    return float(out[0]) if size is None else out
