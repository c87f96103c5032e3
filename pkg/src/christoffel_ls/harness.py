"""Experiment sweeps over (strategy, n, trial), CSV output and per-cell summaries."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator

import numpy as np

from .christoffel import WeightSpec, kappa_reference_bound, kappa_w
from .index_sets import IndexSet, build_index_set
from .least_squares import Estimator, chernoff_sample_count, error_report, fit, gaussian_noise
from .measures import MeasureFamily1D, TensorMeasure, make_rng
from .orthopoly import OrthoBasis
from .sampling import DISCRETE, MC, DiscreteGrid, default_grid, draw_plan

TARGETS = ("runge", "exp_sum", "abs_power", "in_span")

CSV_COLUMNS = (
    "run_id",
    "trial",
    "n",
    "m",
    "strategy",
    "alpha_w",
    "beta_w",
    "cond",
    "gram_deviation",
    "l2_error",
    "linf_error",
    "best_approx_l2",
    "noise_level",
    "redraw_count",
    "seed",
    "wall_time_ms",
)


def builtin_target(name: str, basis: OrthoBasis | None = None, seed: int = 0) -> Callable[[np.ndarray], np.ndarray]:
    """Test functions on (m, d) point arrays.

    runge      prod_k 1 / (1 + 25 x_k^2)
    exp_sum    exp(sum_k x_k / d)
    abs_power  |x_1|^(7/2)
    in_span    a random unit-norm element of span(basis)
    """
    if name == "runge":
        return lambda x: np.prod(1.0 / (1.0 + 25.0 * np.atleast_2d(x) ** 2), axis=1)
    if name == "exp_sum":
        return lambda x: np.exp(np.atleast_2d(x).mean(axis=1))
    if name == "abs_power":
        return lambda x: np.abs(np.atleast_2d(x)[:, 0]) ** 3.5
    if name == "in_span":
        if basis is None:
            raise ValueError("in_span needs a basis")
        c = make_rng(seed, 0x5A).standard_normal(basis.n)
        c /= np.linalg.norm(c)
        f = lambda x: basis.evaluate(x) @ c  # noqa: E731
        f.coefficients = c
        return f
    raise ValueError(f"unknown target {name!r}; choose from {TARGETS}")


def index_set_for_n(kind: str, d: int, n: int, a=None) -> IndexSet:
    """Smallest integer order p whose index set has at least n members."""
    p = 0
    while True:
        S = build_index_set(kind, d, p, a)
        if len(S) >= n:
            return S
        p += 1


@dataclass
class ExperimentConfig:
    family: str = "uniform"
    d: int = 1
    index_set: str = "td"
    strategies: list = field(default_factory=lambda: [MC, "mixture"])
    n_values: list = field(default_factory=lambda: [10, 20, 40])
    m_rule: str = "linear:3"
    trials: int = 100
    noise_level: float = 0.0
    seed: int = 0
    weight: str = "reg:0.5"
    estimator: str = "plain"
    target: str = "in_span"
    stability_delta: float = 0.5
    compute_errors: bool = True
    q_per_dim: int | None = None
    time_budget_s: float | None = None
    workers: int = 1
    record_wall_time: bool = True
    assertions: list = field(default_factory=list)
    output: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.noise_level < 0:
            raise ValueError("noise_level must be >= 0")
        parse_m_rule(self.m_rule)
        WeightSpec.parse(self.weight)
        Estimator.parse(self.estimator)
        if self.target not in TARGETS:
            raise ValueError(f"unknown target {self.target!r}")

    @classmethod
    def from_json(cls, path_or_text: str | Path) -> "ExperimentConfig":
        p = Path(path_or_text)
        text = p.read_text() if p.exists() else str(path_or_text)
        data = json.loads(text)
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def run_id(self) -> str:
        payload = {k: v for k, v in self.to_dict().items() if k not in ("output", "workers")}
        return hashlib.sha1(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def parse_m_rule(rule: str):
    """``fixed:m``, ``linear:c``, ``loglinear:c`` or ``chernoff:delta:eps[:log_multiplier]``."""
    parts = rule.strip().lower().split(":")
    kind = parts[0]
    try:
        if kind == "fixed" and len(parts) == 2:
            return kind, (int(parts[1]),)
        if kind in ("linear", "loglinear") and len(parts) == 2:
            return kind, (float(parts[1]),)
        if kind == "chernoff" and len(parts) in (3, 4):
            mult = float(parts[3]) if len(parts) == 4 else 2.0
            return kind, (float(parts[1]), float(parts[2]), mult)
    except ValueError:
        pass
    raise ValueError(f"cannot parse m rule {rule!r}")


def sample_count(rule: str, B: OrthoBasis, spec: WeightSpec) -> int:
    """m for the rule; at least n. Chernoff uses kappa_w of ``spec`` (inf -> error)."""
    kind, args = parse_m_rule(rule)
    n = B.n
    if kind == "fixed":
        m = args[0]
    elif kind == "linear":
        m = math.ceil(args[0] * n)
    elif kind == "loglinear":
        m = math.ceil(args[0] * n * math.log(max(n, 2)))
    else:
        delta, eps, mult = args
        k = kappa_w(B, spec).value
        if not math.isfinite(k):
            raise OverflowError(f"kappa is infinite for {spec} on this basis; Chernoff m is undefined")
        m = chernoff_sample_count(k, n, delta, eps, mult)
    return max(int(m), n)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    n: int
    m: int
    strategy: str
    alpha_w: float
    beta_w: float
    cond: float
    gram_deviation: float
    l2_error: float
    linf_error: float
    best_approx_l2: float
    noise_level: float
    redraw_count: int
    seed: int
    wall_time_ms: float

    @property
    def censored(self) -> bool:
        return math.isinf(self.cond) or math.isnan(self.cond)


def trial_seed(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence(int(seed), spawn_key=tuple(keys)).generate_state(1, np.uint64)[0])


def _censored(trial, n, m, strategy, noise, seed) -> TrialRecord:
    nan = float("nan")
    return TrialRecord(trial, n, m, strategy, nan, nan, math.inf, nan, nan, nan, nan, noise, 0, seed, nan)


@dataclass
class _Cell:
    n_index: int
    strategy_index: int
    strategy: str
    B: OrthoBasis
    spec: WeightSpec
    m: int | None
    target: Callable
    q: int
    grid: DiscreteGrid | None = None
    started: float | None = None


def _run_trial(cfg: ExperimentConfig, cell: _Cell, trial: int) -> TrialRecord:
    seed = trial_seed(cfg.seed, cell.n_index, cell.strategy_index, trial)
    B = cell.B
    if cell.m is None:
        return _censored(trial, B.n, 0, cell.strategy, cfg.noise_level, seed)
    if cfg.time_budget_s is not None:
        if cell.started is None:
            cell.started = time.perf_counter()
        elif time.perf_counter() - cell.started > cfg.time_budget_s:
            return _censored(trial, B.n, cell.m, cell.strategy, cfg.noise_level, seed)
    t0 = time.perf_counter()
    try:
        est = Estimator.parse(cfg.estimator)

        def draw(attempt: int):
            s = seed if attempt == 0 else trial_seed(seed, attempt)
            plan = draw_plan(cell.strategy, B, cell.spec, cell.m, s, cell.grid)
            y = np.asarray(cell.target(plan.points), dtype=float)
            if cfg.noise_level > 0:
                y = y + gaussian_noise(plan.m, cfg.noise_level, s)
            return plan, y

        plan, y = draw(0)
        res = fit(B, plan, y, est, redraw=draw)
        if cfg.compute_errors:
            rep = error_report(B, res, cell.target, cell.q)
            l2, linf, best = rep.l2_error, rep.linf_error, rep.best_approx_l2
        else:
            l2 = linf = best = float("nan")
        wall = (time.perf_counter() - t0) * 1e3 if cfg.record_wall_time else 0.0
        return TrialRecord(
            trial, B.n, res.plan.m, cell.strategy, res.alpha_w, res.beta_w, res.cond, res.gram_deviation,
            l2, linf, best, cfg.noise_level, res.redraw_count, seed, wall,
        )
    except Exception:  # noqa: BLE001 - failures become censored rows by design
        return _censored(trial, B.n, cell.m, cell.strategy, cfg.noise_level, seed)


def _cells(cfg: ExperimentConfig) -> list[_Cell]:
    fam = MeasureFamily1D.from_name(cfg.family)
    measure = TensorMeasure.isotropic(fam, cfg.d)
    spec = WeightSpec.parse(cfg.weight)
    parts = cfg.index_set.lower().split(":")
    kind = parts[0]
    a = None
    for extra in parts[1:]:
        if extra.startswith("a="):
            a = [float(v) for v in extra[2:].split(",")]
    cells = []
    for ni, n in enumerate(cfg.n_values):
        S = index_set_for_n(kind, cfg.d, int(n), a)
        B = OrthoBasis(measure, S)
        target = builtin_target(cfg.target, B, trial_seed(cfg.seed, ni, 0xF))
        q = cfg.q_per_dim or max(2 * max(S.max_degrees) + 20, 40)
        for si, strat in enumerate(cfg.strategies):
            sspec = WeightSpec.monte_carlo() if strat == MC else spec
            try:
                m = sample_count(cfg.m_rule, B, sspec)
            except OverflowError:
                m = None
            grid = default_grid(B, trial_seed(cfg.seed, ni, 0x5EED)) if strat == DISCRETE else None
            cells.append(_Cell(ni, si, strat, B, sspec, m, target, q, grid))
    return cells


def run_experiment(cfg: ExperimentConfig) -> Iterator[TrialRecord]:
    """Yield one TrialRecord per (n, strategy, trial), in that nesting order.

    Trials are seeded by (seed, n index, strategy index, trial), so rows do
    not depend on ``workers``.
    """
    for cell in _cells(cfg):
        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                yield from pool.map(lambda t, c=cell: _run_trial(cfg, c, t), range(cfg.trials))
        else:
            for t in range(cfg.trials):
                yield _run_trial(cfg, cell, t)


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_rows(path: str | Path, run_id: str, rows, append: bool = False) -> list[TrialRecord]:
    """Stream rows to CSV (header written when the file is new or not appending)."""
    path = Path(path)
    new = not (append and path.exists() and path.stat().st_size > 0)
    kept = []
    with path.open("a" if append else "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(CSV_COLUMNS)
        for r in rows:
            rec = dataclasses.asdict(r)
            w.writerow([run_id] + [_fmt(rec[c]) for c in CSV_COLUMNS[1:]])
            fh.flush()
            kept.append(r)
    return kept


def read_rows(path: str | Path) -> list[dict]:
    with Path(path).open() as fh:
        return list(csv.DictReader(fh))


def _quantiles(arr: np.ndarray) -> list[float]:
    """0.1/0.5/0.9 quantiles; +inf entries (censored cond) count as the largest values."""
    if np.any(np.isnan(arr)):
        return [math.nan] * 3
    finite = np.where(np.isinf(arr), np.finfo(float).max, arr)
    q = np.quantile(finite, [0.1, 0.5, 0.9])
    return [math.inf if v >= np.finfo(float).max / 2 else float(v) for v in q]


def summarize(rows: list[TrialRecord], delta: float = 0.5) -> list[dict]:
    """Median and 0.1/0.9 quantiles per (n, strategy) cell, plus the stability failure rate.

    A trial fails the stability event when alpha_w <= sqrt(1 - delta) or
    beta_w >= sqrt(1 + delta); censored trials count as failures.
    """
    cells: dict[tuple, list[TrialRecord]] = {}
    for r in rows:
        cells.setdefault((r.n, r.strategy), []).append(r)
    out = []
    lo, hi = math.sqrt(1 - delta), math.sqrt(1 + delta)
    for (n, strat), rs in cells.items():
        cond = np.array([r.cond for r in rs])
        l2 = np.array([r.l2_error for r in rs])
        fails = sum(1 for r in rs if r.censored or r.alpha_w <= lo or r.beta_w >= hi)
        row = {
            "n": n,
            "strategy": strat,
            "m": int(np.median([r.m for r in rs])),
            "trials": len(rs),
            "censored": sum(r.censored for r in rs),
            "failure_rate": fails / len(rs),
        }
        for name, arr in (("cond", cond), ("l2_error", l2)):
            q = _quantiles(arr)
            row[f"{name}_q10"], row[f"{name}_median"], row[f"{name}_q90"] = (float(v) for v in q)
        out.append(row)
    return out


def check_assertions(summary: list[dict], assertions: list[dict]) -> list[tuple[str, bool, str]]:
    """Evaluate config assertions against a summary; returns (name, passed, detail) triples.

    Supported types:
      max_failure_rate      {"value": v[, "strategy": s]}: failure_rate <= v per cell
      median_cond_less      {"better": s1, "worse": s2}: median cond(s1) < median cond(s2) per n
      median_cond_max       {"strategy": s, "value": v}: median cond <= v per n
      median_cond_increasing {"strategy": s}: strictly increasing in n
    """
    results = []
    by = {(r["n"], r["strategy"]): r for r in summary}
    ns = sorted({r["n"] for r in summary})
    for a in assertions:
        kind = a.get("type")
        if kind == "max_failure_rate":
            cells = [r for r in summary if a.get("strategy") in (None, r["strategy"])]
            worst = max(r["failure_rate"] for r in cells)
            results.append((kind, worst <= a["value"], f"worst failure rate {worst:.3f} vs {a['value']}"))
        elif kind == "median_cond_less":
            pairs = [(by[(n, a["better"])]["cond_median"], by[(n, a["worse"])]["cond_median"]) for n in ns]
            ok = all(b < w for b, w in pairs)
            results.append((kind, ok, f"{a['better']} vs {a['worse']} medians {pairs}"))
        elif kind == "median_cond_max":
            meds = [by[(n, a["strategy"])]["cond_median"] for n in ns]
            results.append((kind, max(meds) <= a["value"], f"{a['strategy']} medians {meds}"))
        elif kind == "median_cond_increasing":
            meds = [by[(n, a["strategy"])]["cond_median"] for n in ns]
            ok = all(x < y for x, y in zip(meds, meds[1:]))
            results.append((kind, ok, f"{a['strategy']} medians {meds}"))
        else:
            raise ValueError(f"unknown assertion type {kind!r}")
    return results


def execute(cfg: ExperimentConfig, out: str | Path | None = None, append: bool = False):
    """Run, stream rows to CSV (if a path is given), and return (rows, summary, assertion results)."""
    path = out or cfg.output
    rows_iter = run_experiment(cfg)
    rows = write_rows(path, cfg.run_id, rows_iter, append=append) if path else list(rows_iter)
    summary = summarize(rows, cfg.stability_delta)
    if path:
        spath = Path(str(path) + ".summary.csv")
        with spath.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(summary[0].keys()), lineterminator="\n")
            w.writeheader()
            for r in summary:
                w.writerow({k: _fmt(v) for k, v in r.items()})
    return rows, summary, check_assertions(summary, cfg.assertions)


def compare_kappa(families, d: int, kind: str, n_values, spec: WeightSpec | None = None) -> list[dict]:
    """Measured kappa (Monte Carlo weight by default) against the known lower-set bound.

    Unbounded families give a censored row with kappa = inf.
    """
    spec = spec or WeightSpec.monte_carlo()
    rows = []
    for name in families:
        fam = MeasureFamily1D.from_name(name) if isinstance(name, str) else name
        for n in n_values:
            S = index_set_for_n(kind, d, int(n))
            B = OrthoBasis(TensorMeasure.isotropic(fam, d), S)
            k = kappa_w(B, spec)
            bound = kappa_reference_bound(B)
            ratio = k.value / bound if bound and math.isfinite(k.value) else float("nan")
            rows.append({
                "family": fam.name,
                "d": d,
                "index_set": kind,
                "n": B.n,
                "kappa": k.value,
                "bound": float("nan") if bound is None else bound,
                "ratio": ratio,
                "censored": k.censored,
            })
    return rows
