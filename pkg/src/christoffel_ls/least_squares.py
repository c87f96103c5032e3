"""Weighted least-squares assembly, solution, diagnostics and estimator variants."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .measures import make_rng, tensor_rule
from .orthopoly import OrthoBasis
from .sampling import SamplePlan

PLAIN, CONDITIONED, TRUNCATED, REDRAW = "plain", "cond", "trunc", "redraw"


class RankDeficiencyWarning(UserWarning):
    pass


@dataclass(frozen=True)
class NoisySamples:
    """Observed values y_i = f(x_i) + e_i at the points of ``plan``."""

    values: np.ndarray
    plan: SamplePlan
    noise: np.ndarray | None = None

    def __post_init__(self):
        if np.shape(self.values) != (self.plan.m,):
            raise ValueError(f"{np.shape(self.values)} values for a plan with {self.plan.m} points")


def observe(f: Callable, plan: SamplePlan, noise: np.ndarray | None = None) -> NoisySamples:
    y = np.asarray(f(plan.points), dtype=float).reshape(-1)
    e = None if noise is None else np.asarray(noise, dtype=float)
    return NoisySamples(y if e is None else y + e, plan, e)


def gaussian_noise(m: int, level: float, seed: int) -> np.ndarray:
    """i.i.d. N(0, level^2) noise; a convenience, not part of the error model."""
    return level * make_rng(seed, 0xE).standard_normal(m)


def disc_norm(values, weights) -> float:
    """sqrt(1/m sum_i w_i |v_i|^2)."""
    v = np.asarray(values, dtype=float)
    return float(np.sqrt(np.mean(np.asarray(weights) * v * v)))


def assemble(B: OrthoBasis, plan: SamplePlan, samples: NoisySamples | np.ndarray):
    """A_ij = sqrt(w_i / m) phi_j(x_i), b_i = sqrt(w_i / m) y_i."""
    y = samples.values if isinstance(samples, NoisySamples) else np.asarray(samples, dtype=float)
    if y.shape != (plan.m,):
        raise ValueError(f"{y.shape[0]} values for a plan with {plan.m} points")
    V = B.evaluate(plan.points)
    bad = ~np.all(np.isfinite(V), axis=1)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise FloatingPointError(f"non-finite basis evaluation at point {i}: {plan.points[i]}")
    s = np.sqrt(plan.weights / plan.m)
    return V * s[:, None], y * s


def solve(A, b, rank_tol: float = 1e-12):
    """Minimum-norm least-squares solution via a column-pivoted complete orthogonal factorization.

    Returns (coefficients, numerical rank).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c, _, rank, _ = scipy.linalg.lstsq(A, b, cond=rank_tol, lapack_driver="gelsy")
    return c, int(rank)


@dataclass(frozen=True)
class StabilityConstants:
    alpha_w: float
    beta_w: float
    cond: float
    gram_deviation: float


def stability_constants(A) -> StabilityConstants:
    """Extreme singular values of A and the derived cond(A) and ||G - I||_2."""
    A = np.asarray(A, dtype=float)
    s = np.linalg.svd(A, compute_uv=False)
    if A.shape[0] < A.shape[1]:
        s = np.concatenate([s, np.zeros(A.shape[1] - A.shape[0])])
    alpha, beta = float(s.min()), float(s.max())
    cond = beta / alpha if alpha > 0 else math.inf
    dev = max(abs(1.0 - alpha * alpha), abs(1.0 - beta * beta))
    return StabilityConstants(alpha, beta, cond, dev)


def chernoff_constant(delta: float) -> float:
    """c_delta = ((1 + delta) log(1 + delta) - delta)^-1."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    return 1.0 / ((1.0 + delta) * math.log1p(delta) - delta)


def chernoff_sample_count(kappa_w: float, n: int, delta: float, epsilon: float, log_multiplier: float = 2.0) -> int:
    """ceil(c_delta * kappa_w * log(log_multiplier * n / epsilon)).

    ``log_multiplier=2`` is the stability estimate; the uniform error bounds
    use 4.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return int(math.ceil(chernoff_constant(delta) * kappa_w * math.log(log_multiplier * n / epsilon)))


@dataclass(frozen=True)
class Estimator:
    kind: str = PLAIN
    delta: float | None = None
    sigma: float | None = None
    max_tries: int = 100

    def __post_init__(self):
        if self.kind not in (PLAIN, CONDITIONED, TRUNCATED, REDRAW):
            raise ValueError(f"unknown estimator {self.kind!r}")
        if self.kind in (CONDITIONED, REDRAW) and not (self.delta is not None and 0 < self.delta < 1):
            raise ValueError(f"{self.kind} estimator needs 0 < delta < 1")
        if self.kind == TRUNCATED and not (self.sigma is not None and self.sigma >= 0):
            raise ValueError("truncated estimator needs sigma >= 0")
        if self.max_tries < 1:
            raise ValueError("max_tries must be >= 1")

    @classmethod
    def parse(cls, text: str) -> "Estimator":
        """``plain``, ``cond:delta``, ``trunc:sigma`` or ``redraw:delta[:max_tries]``."""
        parts = text.strip().lower().split(":")
        kind = parts[0]
        if kind == PLAIN and len(parts) == 1:
            return cls()
        if kind == CONDITIONED and len(parts) == 2:
            return cls(CONDITIONED, delta=float(parts[1]))
        if kind == TRUNCATED and len(parts) == 2:
            return cls(TRUNCATED, sigma=float(parts[1]))
        if kind == REDRAW and len(parts) in (2, 3):
            return cls(REDRAW, delta=float(parts[1]), max_tries=int(parts[2]) if len(parts) == 3 else 100)
        raise ValueError(f"cannot parse estimator {text!r}")

    def __str__(self) -> str:
        if self.kind == PLAIN:
            return PLAIN
        if self.kind == TRUNCATED:
            return f"trunc:{self.sigma:g}"
        return f"{self.kind}:{self.delta:g}"


@dataclass(frozen=True)
class FitResult:
    coefficients: np.ndarray
    alpha_w: float
    beta_w: float
    cond: float
    gram_deviation: float
    residual_disc: float
    estimator: Estimator
    redraw_count: int = 0
    rank: int | None = None
    rank_deficient: bool = False
    plan: SamplePlan | None = field(default=None, repr=False)

    def as_record(self) -> dict:
        return {
            "estimator": str(self.estimator),
            "n": len(self.coefficients),
            "m": None if self.plan is None else self.plan.m,
            "alpha_w": self.alpha_w,
            "beta_w": self.beta_w,
            "cond": self.cond,
            "gram_deviation": self.gram_deviation,
            "residual_disc": self.residual_disc,
            "redraw_count": self.redraw_count,
            "rank": self.rank,
            "rank_deficient": self.rank_deficient,
        }


class RedrawExhausted(RuntimeError):
    def __init__(self, message: str, last: FitResult):
        super().__init__(message)
        self.last = last


def _plain_fit(B: OrthoBasis, plan: SamplePlan, y: np.ndarray, estimator: Estimator, redraws: int = 0) -> FitResult:
    A, b = assemble(B, plan, y)
    c, rank = solve(A, b)
    st = stability_constants(A)
    deficient = rank < B.n
    if deficient:
        warnings.warn(f"least-squares matrix has numerical rank {rank} < n = {B.n}", RankDeficiencyWarning,
                      stacklevel=3)
    return FitResult(
        coefficients=c,
        alpha_w=st.alpha_w,
        beta_w=st.beta_w,
        cond=st.cond,
        gram_deviation=st.gram_deviation,
        residual_disc=float(np.linalg.norm(A @ c - b)),
        estimator=estimator,
        redraw_count=redraws,
        rank=rank,
        rank_deficient=deficient,
        plan=plan,
    )


def fit(
    B: OrthoBasis,
    plan: SamplePlan,
    samples: NoisySamples | np.ndarray,
    estimator: Estimator | None = None,
    redraw: Callable[[int], tuple[SamplePlan, NoisySamples | np.ndarray]] | None = None,
) -> FitResult:
    """Weighted least-squares fit with an optional estimator modification.

    plain        the least-squares solution
    cond:delta   zero function whenever ||G - I||_2 > delta
    trunc:sigma  rescale so that ||f_hat|| = ||c||_2 <= sigma
    redraw:delta call ``redraw(attempt)`` for fresh (plan, samples) until
                 ||G - I||_2 <= delta; ``plan``/``samples`` are attempt 0
    """
    est = estimator or Estimator()
    y = samples.values if isinstance(samples, NoisySamples) else np.asarray(samples, dtype=float)
    if est.kind == PLAIN:
        return _plain_fit(B, plan, y, est)
    if est.kind == CONDITIONED:
        res = _plain_fit(B, plan, y, est)
        if res.gram_deviation > est.delta:
            res = _replace(res, coefficients=np.zeros(B.n))
        return res
    if est.kind == TRUNCATED:
        res = _plain_fit(B, plan, y, est)
        norm = float(np.linalg.norm(res.coefficients))
        if norm > est.sigma:
            res = _replace(res, coefficients=res.coefficients * (est.sigma / norm))
        return res
    if redraw is None:
        raise ValueError("the redraw estimator needs a redraw(attempt) callable")
    res = _plain_fit(B, plan, y, est, 0)
    attempt = 0
    while res.gram_deviation > est.delta:
        attempt += 1
        if attempt >= est.max_tries:
            raise RedrawExhausted(
                f"||G - I||_2 = {res.gram_deviation:.3g} > {est.delta} after {attempt} draws", res
            )
        plan, s = redraw(attempt)
        y = s.values if isinstance(s, NoisySamples) else np.asarray(s, dtype=float)
        res = _plain_fit(B, plan, y, est, attempt)
    return res


def _replace(res: FitResult, **changes) -> FitResult:
    from dataclasses import replace

    return replace(res, **changes)


@dataclass(frozen=True)
class ErrorReport:
    l2_error: float
    linf_error: float
    best_approx_l2: float
    best_coefficients: np.ndarray = field(repr=False)
    l2_standard_error: float = 0.0
    method: str = "quadrature"


def _dense_grid(B: OrthoBasis, quad_nodes: np.ndarray, max_points: int = 200_000) -> np.ndarray:
    per_dim = max(8, int(max_points ** (1.0 / B.d)))
    per_dim = min(per_dim, 4001)
    axes = []
    for k, fam in enumerate(B.measure.factors):
        if fam.bounded:
            axes.append(np.cos(np.pi * np.arange(per_dim) / (per_dim - 1)))
        else:
            lo, hi = quad_nodes[:, k].min(), quad_nodes[:, k].max()
            axes.append(np.linspace(lo, hi, per_dim))
    grids = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in grids])


def error_report(
    B: OrthoBasis,
    result: FitResult | np.ndarray,
    f_true: Callable,
    q_per_dim: int,
    max_quadrature_nodes: int = 1_000_000,
    mc_points: int = 100_000,
    seed: int = 0,
) -> ErrorReport:
    """L2 and sup-norm error of the fit, plus the best L2 approximation error from P.

    The best approximation is the quadrature projection onto the basis.
    When the tensor rule would exceed ``max_quadrature_nodes`` the L2
    quantities are estimated by Monte Carlo with ``mc_points`` draws and a
    reported standard error.
    """
    c = result.coefficients if isinstance(result, FitResult) else np.asarray(result, dtype=float)
    try:
        nodes, weights = tensor_rule(B.measure, q_per_dim, max_nodes=max_quadrature_nodes)
        method = "quadrature"
    except OverflowError:
        nodes = B.measure.sample(make_rng(seed, 0xC0DE), mc_points)
        weights = np.full(mc_points, 1.0 / mc_points)
        method = "montecarlo"
    V = B.evaluate(nodes)
    fv = np.asarray(f_true(nodes), dtype=float).reshape(-1)
    c_best = V.T @ (weights * fv)
    r_fit = fv - V @ c
    r_best = fv - V @ c_best
    l2 = float(np.sqrt(max(np.dot(weights, r_fit * r_fit), 0.0)))
    best = float(np.sqrt(max(np.dot(weights, r_best * r_best), 0.0)))
    se = 0.0
    if method == "montecarlo":
        sq = r_fit * r_fit
        se = float(np.std(sq) / math.sqrt(len(sq)) / (2 * l2)) if l2 > 0 else 0.0
    grid = _dense_grid(B, nodes)
    linf = float(np.max(np.abs(np.asarray(f_true(grid), dtype=float).reshape(-1) - B.evaluate(grid) @ c)))
    return ErrorReport(l2, linf, best, c_best, se, method)
