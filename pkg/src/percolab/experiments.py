"""Monte Carlo campaigns.

Every replicate draws its configuration from a seed that is a pure function of
(master seed, experiment id, replicate index). Replicates are processed in
fixed-size chunks whose results are concatenated in index order, so the worker
count never changes an output.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from . import __version__, rng
from ._accel import backend, pick
from ._batch import (circuit_chain_numba, circuit_chain_numpy, crossing_numba, crossing_numpy,
                     goodbox_scan_numba, goodbox_scan_numpy, one_arm_numba, one_arm_numpy,
                     summarize_numba, summarize_numpy)
from .circuit import (Circuit, CircuitGeometry, box_indices, check_scale, decompose_cluster_size,
                      good_boxes, good_boxes_of_cluster, outermost_open_circuit,
                      resample_counts_numba, resample_counts_numpy)
from .cluster import label_clusters
from .lattice import AnnulusSpec, BondConfig, BoxSpec, bond_endpoints, sample_config
from .stats import (EstimateResult, binomial_estimate, empirical_concentration,
                    empirical_quantile_c, loglog_slope, mean_estimate)

CHUNK = 256
DEFAULT_EPS = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5)
DEFAULT_ALPHAS = (0.05, 0.1, 0.25, 0.5, 1.0)
DEFAULT_XS = (0.1, 0.2, 0.4, 0.8)
DEFAULT_XI = (0.0, 0.05, 0.1, 0.2, 0.5)
DEFAULT_SWEEPS = 100
SPAN_BINS = (0.0, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 20.0, math.inf)
TIGHT_EPS = 0.05

_EMPTY = np.empty(0, np.float64)


class PlanError(ValueError):
    """A plan or parameter set that cannot be run."""


# ---------------------------------------------------------------- plumbing

@dataclass
class Table:
    """One result family; rows are tuples matching ``columns``."""

    name: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    version: int = 1

    def add(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"{self.name}: expected {len(self.columns)} values, got {len(values)}")
        self.rows.append(tuple(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    def where(self, **match) -> list[dict]:
        out = []
        for r in self.rows:
            d = dict(zip(self.columns, r))
            if all(d[k] == v for k, v in match.items()):
                out.append(d)
        return out

    @property
    def schema(self) -> str:
        return f"percolab/{self.name}/v{self.version}"

    def to_csv(self) -> str:
        lines = [f"# schema: {self.schema}", ",".join(self.columns)]
        lines += [",".join(_fmt(v) for v in r) for r in self.rows]
        return "\n".join(lines) + "\n"


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


@dataclass
class ExperimentReport:
    name: str
    tables: dict[str, Table]
    manifest: dict

    def table(self, name: str | None = None) -> Table:
        if name is None:
            return next(iter(self.tables.values()))
        return self.tables[name]


def _manifest(name: str, params: dict, started: float) -> dict:
    return {
        "experiment": name,
        "tool_version": __version__,
        "generator": rng.GENERATOR_ID,
        "seed_derivation": rng.SEED_MIX_ID,
        "backend": backend(),
        "master_seed": params.get("seed"),
        "params": params,
        "started": started,
        "finished": time.time(),
        "wall_clock_s": time.time() - started,
    }


def _chunked(fn: Callable, seeds: np.ndarray, threads: int = 1, chunk: int = CHUNK):
    """Apply ``fn`` to consecutive seed chunks and concatenate outputs in order."""
    pieces = [seeds[i:i + chunk] for i in range(0, seeds.size, chunk)] or [seeds]
    if threads > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fn, pieces))
    else:
        results = [fn(p) for p in pieces]
    if isinstance(results[0], tuple):
        return tuple(np.concatenate(parts) for parts in zip(*results))
    return np.concatenate(results)


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise PlanError(f"p must lie in [0, 1], got {p}")


def _check_reps(replicates: int) -> None:
    if replicates < 1:
        raise PlanError("replicates must be >= 1")


# ---------------------------------------------------------------- plan

@dataclass(frozen=True)
class ExperimentPlan:
    n_values: tuple[int, ...] = (32, 64, 128)
    k: int = 4
    eps_grid: tuple[float, ...] = DEFAULT_EPS
    alpha: float = 0.5
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHAS
    x_grid: tuple[float, ...] = DEFAULT_XS
    eta: float = 0.1
    replicates: int = 20000
    pi_replicates: int = 20000
    seed: int = 0
    p: float = 0.5
    # fixed s(n) values, as (n, s) pairs, replacing the estimation pre-pass
    s_override: tuple[tuple[int, float], ...] = ()
    check_fraction: float = 0.01

    def __post_init__(self):
        for name in ("n_values", "eps_grid", "alpha_grid", "x_grid", "s_override"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        self.validate()

    def validate(self) -> None:
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise PlanError("n values must be a nonempty list of integers >= 1")
        if self.k < 1:
            raise PlanError("k must be >= 1")
        if any(e < 0 for e in self.eps_grid):
            raise PlanError("epsilon values must be >= 0")
        for a in (self.alpha, *self.alpha_grid):
            if not 0 < a <= 1:
                raise PlanError(f"alpha must lie in (0, 1], got {a}")
        if not 0 < self.eta <= 0.5:
            raise PlanError(f"eta must lie in (0, 1/2], got {self.eta}")
        _check_reps(self.replicates)
        _check_reps(self.pi_replicates)
        _check_p(self.p)
        if not 0 <= self.seed < 2 ** 64:
            raise PlanError("master seed must be a 64-bit unsigned integer")
        if not 0 <= self.check_fraction <= 1:
            raise PlanError("check_fraction must lie in [0, 1]")

    def t_for(self, n: int) -> int:
        """t = 3 floor(eta n / 3), computed in exact arithmetic."""
        return 3 * math.floor(Fraction(str(self.eta)) * n / 3)

    def echo(self) -> dict:
        d = asdict(self)
        d["s_override"] = [list(x) for x in self.s_override]
        return d


# ---------------------------------------------------------------- one arm and s(n)

@dataclass(frozen=True)
class PiEstimate:
    n: int
    result: EstimateResult

    @property
    def estimate(self) -> float:
        return self.result.estimate

    @property
    def stderr(self) -> float:
        return self.result.stderr

    @property
    def s_hat(self) -> float:
        """s(n) = n^2 pi(n) at the estimated pi."""
        return self.n * self.n * self.result.estimate


def estimate_pi(n: int, replicates: int, seed: int, p: float = 0.5, threads: int = 1,
                experiment_id: str = "pi") -> PiEstimate:
    """Fraction of configurations on Lambda_n joining the origin to the boundary."""
    if n < 1:
        raise PlanError("estimate_pi needs n >= 1")
    _check_reps(replicates)
    _check_p(p)
    seeds = rng.replicate_seeds(seed, f"{experiment_id}:n={n}", replicates)
    thr = rng.open_threshold(p)
    kernel = pick(one_arm_numba, one_arm_numpy)
    hits = _chunked(lambda s: kernel(n, s, thr), seeds, threads)
    return PiEstimate(n, binomial_estimate(int(hits.sum()), replicates, seed))


def pi_experiment(n_values: Sequence[int], replicates: int, seed: int, p: float = 0.5,
                  threads: int = 1) -> ExperimentReport:
    started = time.time()
    tab = Table("pi", ("n", "pi_hat", "stderr", "s_hat", "replicates", "seed"))
    for n in n_values:
        est = estimate_pi(n, replicates, seed, p, threads)
        tab.add(n, est.estimate, est.stderr, est.s_hat, replicates, seed)
    params = {"n_values": list(n_values), "replicates": replicates, "seed": seed, "p": p}
    return ExperimentReport("pi", {"pi": tab}, _manifest("pi", params, started))


@dataclass(frozen=True)
class RatioEstimate:
    m: int
    n: int
    ratio: float
    ratio_stderr: float
    exponent: float
    exponent_stderr: float
    pi_m: PiEstimate
    pi_n: PiEstimate


def pi_ratio_experiment(m: int, n: int, replicates: int, seed: int, p: float = 0.5,
                        threads: int = 1) -> RatioEstimate:
    """pi(m)/pi(n) and the exponent log(pi(m)/pi(n)) / log(n/m)."""
    if not 1 <= m <= n:
        raise PlanError(f"need 1 <= m <= n, got m={m}, n={n}")
    pm = estimate_pi(m, replicates, seed, p, threads)
    pn = pm if m == n else estimate_pi(n, replicates, seed, p, threads)
    if pn.estimate == 0:
        return RatioEstimate(m, n, math.nan, math.nan, math.nan, math.nan, pm, pn)
    ratio = pm.estimate / pn.estimate
    if m == n:
        return RatioEstimate(m, n, 1.0, 0.0, 0.0, 0.0, pm, pn)
    # delta method on log ratio, the two estimates being independent
    rel = math.hypot(pm.stderr / pm.estimate if pm.estimate else math.inf,
                     pn.stderr / pn.estimate)
    logr = math.log(n / m)
    exponent = math.log(ratio) / logr if ratio > 0 else -math.inf
    return RatioEstimate(m, n, ratio, ratio * rel, exponent, rel / logr, pm, pn)


def ratio_report(pairs: Sequence[tuple[int, int]], replicates: int, seed: int, p: float = 0.5,
                 threads: int = 1) -> ExperimentReport:
    started = time.time()
    tab = Table("ratio", ("m", "n", "pi_m", "pi_n", "ratio", "ratio_stderr", "exponent",
                          "exponent_stderr", "replicates", "seed"))
    for m, n in pairs:
        r = pi_ratio_experiment(m, n, replicates, seed, p, threads)
        tab.add(m, n, r.pi_m.estimate, r.pi_n.estimate, r.ratio, r.ratio_stderr, r.exponent,
                r.exponent_stderr, replicates, seed)
    params = {"pairs": [list(x) for x in pairs], "replicates": replicates, "seed": seed, "p": p}
    return ExperimentReport("ratio", {"ratio": tab}, _manifest("ratio", params, started))


def _s_hat(plan: ExperimentPlan, n: int, threads: int, table: Table) -> float:
    fixed = dict(plan.s_override)
    if n in fixed:
        s = float(fixed[n])
        table.add(n, s / (n * n), math.nan, s, 0, plan.seed, "override")
        return s
    est = estimate_pi(n, plan.pi_replicates, plan.seed, plan.p, threads, experiment_id="s_hat")
    table.add(n, est.estimate, est.stderr, est.s_hat, plan.pi_replicates, plan.seed, "estimated")
    return est.s_hat


def _s_table() -> Table:
    return Table("s_hat", ("n", "pi_hat", "stderr", "s_hat", "replicates", "seed", "source"))


# ---------------------------------------------------------------- cluster-size campaigns

@dataclass
class _Summary:
    top_sizes: np.ndarray
    top_diam: np.ndarray
    span: np.ndarray
    ncross: np.ndarray
    origin: np.ndarray
    iv_hit: np.ndarray
    vd_hit: np.ndarray


def summarize_box(n: int, replicates: int, seed: int, experiment_id: str, p: float = 0.5,
                  k: int = 4, intervals=(), voldiam=(), threads: int = 1) -> _Summary:
    """Run the per-configuration summary kernel over replicates on Lambda_n.

    ``intervals`` are (lo, hi) pairs for the event lo < |C| < hi;
    ``voldiam`` are (vmin, dmax) pairs for |C| >= vmin with diam(C) <= dmax.
    """
    W = 2 * n + 1
    seeds = rng.replicate_seeds(seed, f"{experiment_id}:n={n}", replicates)
    thr = rng.open_threshold(p)
    iv = np.asarray(intervals, np.float64).reshape(-1, 2)
    vd = np.asarray(voldiam, np.float64).reshape(-1, 2)
    kernel = pick(summarize_numba, summarize_numpy)
    ivl, ivh = np.ascontiguousarray(iv[:, 0]), np.ascontiguousarray(iv[:, 1])
    vdv, vdd = np.ascontiguousarray(vd[:, 0]), np.ascontiguousarray(vd[:, 1])
    out = _chunked(lambda s: kernel(W, W, s, thr, k, n, n, ivl, ivh, vdv, vdd), seeds, threads)
    return _Summary(*out)


def gap_experiment(plan: ExperimentPlan, threads: int = 1) -> ExperimentReport:
    """P(some gap among the k largest clusters is <= eps * s_hat(n))."""
    if plan.k < 2:
        raise PlanError("the gap experiment needs k >= 2")
    if not plan.eps_grid:
        raise PlanError("epsilon grid is empty")
    started = time.time()
    s_tab = _s_table()
    tab = Table("gaps", ("n", "k", "eps", "s_hat", "threshold", "prob", "stderr", "ci_low",
                         "ci_high", "replicates", "seed"))
    for n in plan.n_values:
        s = _s_hat(plan, n, threads, s_tab)
        summ = summarize_box(n, plan.replicates, plan.seed, "gaps", plan.p, plan.k, threads=threads)
        min_gap = np.diff(-summ.top_sizes, axis=1).min(axis=1)
        for eps in plan.eps_grid:
            thr = eps * s
            r = binomial_estimate(int((min_gap <= thr).sum()), plan.replicates, plan.seed)
            tab.add(n, plan.k, eps, s, thr, r.estimate, r.stderr, r.ci_low, r.ci_high,
                    plan.replicates, plan.seed)
    return ExperimentReport("gaps", {"gaps": tab, "s_hat": s_tab},
                            _manifest("gaps", {"plan": plan.echo()}, started))


def interval_experiment(plan: ExperimentPlan, x: float, threads: int = 1) -> ExperimentReport:
    """P(some cluster has x s_hat(n) < |C| < (x + eps) s_hat(n)), strict on both ends."""
    if x <= 0:
        raise PlanError("x must be > 0")
    started = time.time()
    s_tab = _s_table()
    tab = Table("interval", ("n", "x", "eps", "s_hat", "lo", "hi", "prob", "stderr", "ci_low",
                             "ci_high", "replicates", "seed"))
    for n in plan.n_values:
        s = _s_hat(plan, n, threads, s_tab)
        iv = [(x * s, (x + eps) * s) for eps in plan.eps_grid]
        summ = summarize_box(n, plan.replicates, plan.seed, "interval", plan.p, 1, intervals=iv,
                             threads=threads)
        for q, eps in enumerate(plan.eps_grid):
            r = binomial_estimate(int(summ.iv_hit[:, q].sum()), plan.replicates, plan.seed)
            tab.add(n, x, eps, s, iv[q][0], iv[q][1], r.estimate, r.stderr, r.ci_low, r.ci_high,
                    plan.replicates, plan.seed)
    params = {"plan": plan.echo(), "x": x}
    return ExperimentReport("interval", {"interval": tab, "s_hat": s_tab},
                            _manifest("interval", params, started))


def voldiam_experiment(plan: ExperimentPlan, x_grid: Sequence[float] | None = None,
                       threads: int = 1) -> ExperimentReport:
    """P(some cluster has |C| >= x s_hat(n) and diam(C) <= alpha n) over x and alpha."""
    xs = tuple(plan.x_grid if x_grid is None else x_grid)
    for n in plan.n_values:
        for a in plan.alpha_grid:
            if n < 4 / a:
                raise PlanError(f"voldiam needs n >= 4/alpha; n={n}, alpha={a}")
    started = time.time()
    s_tab = _s_table()
    tab = Table("voldiam", ("n", "x", "alpha", "s_hat", "vmin", "dmax", "prob", "stderr",
                            "ci_low", "ci_high", "replicates", "seed"))
    for n in plan.n_values:
        s = _s_hat(plan, n, threads, s_tab)
        queries = [(x * s, a * n) for x in xs for a in plan.alpha_grid]
        summ = summarize_box(n, plan.replicates, plan.seed, "voldiam", plan.p, 1,
                             voldiam=queries, threads=threads)
        for q, (vmin, dmax) in enumerate(queries):
            x, a = xs[q // len(plan.alpha_grid)], plan.alpha_grid[q % len(plan.alpha_grid)]
            r = binomial_estimate(int(summ.vd_hit[:, q].sum()), plan.replicates, plan.seed)
            tab.add(n, x, a, s, vmin, dmax, r.estimate, r.stderr, r.ci_low, r.ci_high,
                    plan.replicates, plan.seed)
    params = {"plan": plan.echo(), "x_grid": list(xs)}
    return ExperimentReport("voldiam", {"voldiam": tab, "s_hat": s_tab},
                            _manifest("voldiam", params, started))


def diam_quantile_experiment(plan: ExperimentPlan, threads: int = 1) -> ExperimentReport:
    """P(some cluster among the k largest has diameter < alpha n) over the alpha grid."""
    started = time.time()
    tab = Table("diamq", ("n", "k", "alpha", "prob", "stderr", "ci_low", "ci_high",
                          "replicates", "seed"))
    for n in plan.n_values:
        summ = summarize_box(n, plan.replicates, plan.seed, "diamq", plan.p, plan.k,
                             threads=threads)
        present = summ.top_sizes > 0
        for a in plan.alpha_grid:
            hit = (present & (summ.top_diam < a * n)).any(axis=1)
            r = binomial_estimate(int(hit.sum()), plan.replicates, plan.seed)
            tab.add(n, plan.k, a, r.estimate, r.stderr, r.ci_low, r.ci_high, plan.replicates,
                    plan.seed)
    return ExperimentReport("diamq", {"diamq": tab},
                            _manifest("diamq", {"plan": plan.echo()}, started))


def largest_cluster_scaling(plan: ExperimentPlan, threads: int = 1) -> ExperimentReport:
    """E|C^(i)| / s_hat(n) for i = 1..k."""
    started = time.time()
    s_tab = _s_table()
    tab = Table("scaling", ("n", "i", "s_hat", "mean_size", "ratio", "stderr", "replicates",
                            "seed"))
    for n in plan.n_values:
        s = _s_hat(plan, n, threads, s_tab)
        summ = summarize_box(n, plan.replicates, plan.seed, "scaling", plan.p, plan.k,
                             threads=threads)
        for i in range(plan.k):
            sizes = summ.top_sizes[:, i]
            r = mean_estimate(sizes, plan.seed, s) if s > 0 else None
            tab.add(n, i + 1, s, float(sizes.mean()), r.estimate if r else math.nan,
                    r.stderr if r else math.nan, plan.replicates, plan.seed)
    return ExperimentReport("scaling", {"scaling": tab, "s_hat": s_tab},
                            _manifest("scaling", {"plan": plan.echo()}, started))


def spanning_scaling(plan: ExperimentPlan, threads: int = 1) -> ExperimentReport:
    """E|SC_n| / s_hat(n) and the law of |SC_n| / E|SC_n| given SC_n is nonempty."""
    started = time.time()
    s_tab = _s_table()
    tab = Table("spanning", ("n", "s_hat", "p_nonempty", "mean_span", "ratio", "stderr",
                             "mean_crossing_clusters", "conditional_defined", "tight_mass",
                             "replicates", "seed"))
    hist = Table("spanning_hist", ("n", "bin_lo", "bin_hi", "mass"))
    for n in plan.n_values:
        s = _s_hat(plan, n, threads, s_tab)
        summ = summarize_box(n, plan.replicates, plan.seed, "spanning", plan.p, 1,
                             threads=threads)
        span = summ.span.astype(float)
        nonempty = span > 0
        mean_span = float(span.mean())
        r = mean_estimate(span, plan.seed, s) if s > 0 else None
        defined = bool(nonempty.any())
        if defined:
            scaled = span[nonempty] / mean_span
            tight = float(((scaled > TIGHT_EPS) & (scaled < 1 / TIGHT_EPS)).mean())
            counts = np.histogram(scaled, bins=np.array(SPAN_BINS))[0]
            for lo, hi, c in zip(SPAN_BINS[:-1], SPAN_BINS[1:], counts):
                hist.add(n, lo, hi, c / scaled.size)
        else:
            tight = math.nan
        tab.add(n, s, float(nonempty.mean()), mean_span, r.estimate if r else math.nan,
                r.stderr if r else math.nan, float(summ.ncross.mean()), defined, tight,
                plan.replicates, plan.seed)
    return ExperimentReport("spanning", {"spanning": tab, "spanning_hist": hist, "s_hat": s_tab},
                            _manifest("spanning", {"plan": plan.echo()}, started))


# ---------------------------------------------------------------- good boxes

def goodbox_experiment(plan: ExperimentPlan, beta: int, threads: int = 1) -> ExperimentReport:
    """P(some cluster with diameter >= alpha n has fewer than beta good boxes).

    Also tabulates min |G_t| over those clusters (-1: no such cluster) and
    re-derives a fraction of replicates through the single-configuration
    circuit code, checking the size decomposition and the kernel's counts.
    """
    if beta < 0:
        raise PlanError("beta must be >= 0")
    for n in plan.n_values:
        try:
            check_scale(BoxSpec(n), plan.t_for(n))
        except ValueError as exc:
            raise PlanError(f"n={n}: {exc}") from None
    started = time.time()
    tab = Table("goodboxes", ("n", "t", "alpha", "beta", "prob", "stderr", "ci_low", "ci_high",
                              "mean_good_boxes", "p_large_cluster", "replicates", "seed"))
    hist = Table("goodboxes_hist", ("n", "t", "min_good", "count"))
    checks = Table("decomposition", ("n", "t", "configs_checked", "clusters_checked",
                                     "identity_violations", "kernel_mismatches"))
    for n in plan.n_values:
        t = plan.t_for(n)
        box = BoxSpec(n)
        idx = box_indices(box, t)
        centers = np.array([[n + 2 * t * b.i, n + 2 * t * b.j] for b in idx], np.int64)
        dmin = math.ceil(Fraction(str(plan.alpha)) * n)
        seeds = rng.replicate_seeds(plan.seed, f"goodboxes:n={n}", plan.replicates)
        thr = rng.open_threshold(plan.p)
        kernel = pick(goodbox_scan_numba, goodbox_scan_numpy)
        min_g, n_good, n_large = _chunked(
            lambda s: kernel(2 * n + 1, s, thr, t, centers, dmin), seeds, threads)
        event = (min_g >= 0) & (min_g < beta)
        r = binomial_estimate(int(event.sum()), plan.replicates, plan.seed)
        tab.add(n, t, plan.alpha, beta, r.estimate, r.stderr, r.ci_low, r.ci_high,
                float(n_good.mean()), float((n_large > 0).mean()), plan.replicates, plan.seed)
        values, counts = np.unique(min_g, return_counts=True)
        for v, c in zip(values, counts):
            hist.add(n, t, int(v), int(c))
        step = max(1, round(1 / plan.check_fraction)) if plan.check_fraction > 0 else 0
        checked = np.arange(0, plan.replicates, step) if step else np.empty(0, np.int64)
        nclusters = violations = mismatches = 0
        for ri in checked:
            cfg = sample_config(box, plan.p, int(seeds[ri]))
            lab = label_clusters(cfg)
            boxes = good_boxes(cfg, t)
            best = -1
            for c in np.flatnonzero(lab.diameters > 2 * t):
                d = decompose_cluster_size(cfg, lab, int(c), t, boxes)
                nclusters += 1
                violations += d.total != lab.sizes[c]
            for c in np.flatnonzero(lab.diameters >= dmin):
                g = len(good_boxes_of_cluster(cfg, lab, int(c), t, boxes))
                best = g if best < 0 else min(best, g)
            mismatches += best != min_g[ri] or len(boxes) != n_good[ri]
        checks.add(n, t, int(checked.size), nclusters, int(violations), int(mismatches))
    params = {"plan": plan.echo(), "beta": beta}
    return ExperimentReport("goodboxes", {"goodboxes": tab, "goodboxes_hist": hist,
                                          "decomposition": checks},
                            _manifest("goodboxes", params, started))


# ---------------------------------------------------------------- circuits

def _annulus_bonds(t: int, m: int) -> np.ndarray:
    box = BoxSpec(t)
    a, b = bond_endpoints(box.grid)
    W = 2 * t + 1

    def norm(i):
        return np.maximum(np.abs(i % W - t), np.abs(i // W - t))

    return np.flatnonzero((norm(a) > m) & (norm(b) > m)).astype(np.int64)


@dataclass(frozen=True)
class GoodBoxSample:
    config: BondConfig
    circuit: Circuit
    rejected_moves: int


def sample_good_box(t: int, seed: int, p: float = 0.5, sweeps: int = DEFAULT_SWEEPS
                    ) -> GoodBoxSample:
    """A configuration on Lambda_t conditioned on an open circuit in A_{2t/3, t}.

    Bonds off the annulus are drawn independently. The annulus bonds start all
    open and then run ``sweeps`` sweeps of heat-bath dynamics restricted to the
    event that a circuit survives; the event is increasing, so the chain is
    irreducible on it and its stationary law is the conditional one.
    """
    if t < 3 or t % 3:
        raise PlanError(f"t must be a positive multiple of 3, got {t}")
    if not 0 < p <= 1:
        raise PlanError("a circuit needs p > 0")
    box = BoxSpec(t)
    m = 2 * t // 3
    abonds = _annulus_bonds(t, m)
    states = sample_config(box, p, seed).states.copy()
    states[abonds] = True
    key = np.uint64(rng.derive_seed(seed, "circuit-chain", 0))
    chain = pick(circuit_chain_numba, circuit_chain_numpy)
    rejected = chain(t, m, abonds, rng.open_threshold(p), key, sweeps * abonds.size, states)
    cfg = BondConfig(box, p, states, seed)
    circ = outermost_open_circuit(cfg, AnnulusSpec(box.center, m, t))
    if circ is None:
        raise RuntimeError("restricted chain lost its circuit")
    return GoodBoxSample(cfg, circ, int(rejected))


def interior_resample(circuit: Circuit, replicates: int, seed: int, p: float = 0.5
                      ) -> tuple[np.ndarray, np.ndarray]:
    """X_gamma and Z under independent resampling of the interior bonds of ``circuit``."""
    geo: CircuitGeometry = circuit.geometry
    t = geo.t
    seeds = rng.replicate_seeds(seed, "interior", replicates)
    kernel = pick(resample_counts_numba, resample_counts_numpy)
    xs, zs = kernel(geo.side ** 2, geo.circuit_idx, geo.interior_mask.ravel(),
                    geo.zone_mask(t // 3).ravel(), geo.bond_a, geo.bond_b, seeds,
                    rng.open_threshold(p))
    return np.asarray(xs), np.asarray(zs)


def _circuit_pool(t, circuits, replicates, seed, p, sweeps, threads):
    def one(j):
        gb = sample_good_box(t, rng.derive_seed(seed, f"goodbox:t={t}", j), p, sweeps)
        xs, zs = interior_resample(gb.circuit, replicates,
                                   rng.derive_seed(seed, f"resample:t={t}", j), p)
        return gb, xs, zs

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(one, range(circuits)))
    return [one(j) for j in range(circuits)]


def circuit_fluctuation_experiment(t_values: Sequence[int], replicates: int, seed: int,
                                   a: float = 0.25, xi_grid: Sequence[float] = DEFAULT_XI,
                                   circuits: int = 4, p: float = 0.5,
                                   sweeps: int = DEFAULT_SWEEPS, pi_replicates: int = 20000,
                                   s_override: dict | None = None,
                                   threads: int = 1) -> ExperimentReport:
    """For sampled outermost circuits, P(X <= c) and P(X >= c + xi s_hat(t)),
    c the empirical a-quantile of Z under interior resampling."""
    if not 0 < a < 0.5:
        raise PlanError("a must lie in (0, 1/2)")
    _check_reps(replicates)
    if circuits < 1:
        raise PlanError("need at least one circuit")
    for t in t_values:
        if t < 3 or t % 3:
            raise PlanError(f"t must be a positive multiple of 3, got {t}")
    started = time.time()
    s_override = dict(s_override or {})
    rows = Table("circuits", ("t", "circuit", "length", "interior", "c", "xi", "s_hat",
                              "p_low", "p_high", "atom", "mean_x", "mean_z", "replicates",
                              "seed"))
    summary = Table("circuits_summary", ("t", "xi", "min_p_low", "min_p_high"))
    for t in t_values:
        s = s_override.get(t)
        if s is None:
            s = estimate_pi(t, pi_replicates, seed, p, threads, experiment_id="s_hat").s_hat
        pool = _circuit_pool(t, circuits, replicates, seed, p, sweeps, threads)
        lows = {xi: [] for xi in xi_grid}
        highs = {xi: [] for xi in xi_grid}
        for j, (gb, xs, zs) in enumerate(pool):
            c = empirical_quantile_c(zs, a)
            low = float((xs <= c).mean())
            atom = float((xs == c).mean())
            for xi in xi_grid:
                high = float((xs >= c + xi * s).mean())
                lows[xi].append(low)
                highs[xi].append(high)
                rows.add(t, j, len(gb.circuit), gb.circuit.geometry.interior_size(), c, xi, s,
                         low, high, atom, float(xs.mean()), float(zs.mean()), replicates, seed)
        for xi in xi_grid:
            summary.add(t, xi, min(lows[xi]), min(highs[xi]))
    params = {"t_values": list(t_values), "replicates": replicates, "seed": seed, "a": a,
              "xi_grid": list(xi_grid), "circuits": circuits, "p": p, "sweeps": sweeps,
              "pi_replicates": pi_replicates, "s_override": sorted(s_override.items())}
    return ExperimentReport("circuits", {"circuits": rows, "circuits_summary": summary},
                            _manifest("circuits", params, started))


def concentration_scaling_experiment(t: int, m_grid: Sequence[int], replicates: int, seed: int,
                                     xi: float = 0.1, circuits: int = 8, sums: int = 20000,
                                     p: float = 0.5, sweeps: int = DEFAULT_SWEEPS,
                                     pi_replicates: int = 20000, s_override: float | None = None,
                                     threads: int = 1) -> ExperimentReport:
    """Q(S_m, xi s_hat(t)) for sums of m independent interior contributions.

    ``circuits`` good boxes are sampled and each interior is resampled
    ``replicates`` times; box j of a sum uses circuit j mod ``circuits`` and an
    independent draw from that circuit's resamples.
    """
    if t < 3 or t % 3:
        raise PlanError(f"t must be a positive multiple of 3, got {t}")
    if not m_grid or any(m < 1 for m in m_grid):
        raise PlanError("m grid must hold integers >= 1")
    _check_reps(replicates)
    _check_reps(sums)
    if xi < 0:
        raise PlanError("xi must be >= 0")
    started = time.time()
    if s_override is None:
        s = estimate_pi(t, pi_replicates, seed, p, threads, experiment_id="s_hat").s_hat
    else:
        s = float(s_override)
    lam = xi * s
    pool = [xs for _, xs, _ in _circuit_pool(t, circuits, replicates, seed, p, sweeps, threads)]
    tab = Table("concentration", ("t", "m", "lambda", "q_hat", "bound_shape", "sums",
                                  "replicates", "circuits", "seed"))
    qs = []
    for m in m_grid:
        gen = np.random.Generator(np.random.Philox(key=rng.derive_seed(seed, f"sums:m={m}", 0)))
        total = np.zeros(sums, np.int64)
        for j in range(m):
            xs = pool[j % circuits]
            total += xs[gen.integers(0, xs.size, size=sums)]
        q = empirical_concentration(total, lam)
        qs.append(q)
        tab.add(t, m, lam, q, 1 / math.sqrt(m), sums, replicates, circuits, seed)
    fit = Table("concentration_fit", ("t", "lambda", "slope", "m_min", "m_max"))
    slope = loglog_slope(m_grid, qs) if len(m_grid) >= 2 and min(qs) > 0 else math.nan
    fit.add(t, lam, slope, min(m_grid), max(m_grid))
    params = {"t": t, "m_grid": list(m_grid), "replicates": replicates, "seed": seed, "xi": xi,
              "circuits": circuits, "sums": sums, "p": p, "sweeps": sweeps,
              "pi_replicates": pi_replicates, "s_override": s_override}
    return ExperimentReport("concentration", {"concentration": tab, "concentration_fit": fit},
                            _manifest("concentration", params, started))


# ---------------------------------------------------------------- crossing

def crossing_experiment(n: int, replicates: int, seed: int, p: float = 0.5,
                        threads: int = 1) -> EstimateResult:
    """P(left-right open crossing of the rectangle of n+1 columns by n rows)."""
    if n < 1:
        raise PlanError("crossing needs n >= 1")
    _check_reps(replicates)
    _check_p(p)
    seeds = rng.replicate_seeds(seed, f"crossing:n={n}", replicates)
    thr = rng.open_threshold(p)
    kernel = pick(crossing_numba, crossing_numpy)
    hits = _chunked(lambda s: kernel(n + 1, n, s, thr), seeds, threads)
    return binomial_estimate(int(hits.sum()), replicates, seed)


def crossing_report(n_values: Sequence[int], replicates: int, seed: int, p: float = 0.5,
                    threads: int = 1) -> ExperimentReport:
    started = time.time()
    tab = Table("crossing", ("n", "prob", "stderr", "ci_low", "ci_high", "replicates", "seed"))
    for n in n_values:
        r = crossing_experiment(n, replicates, seed, p, threads)
        tab.add(n, r.estimate, r.stderr, r.ci_low, r.ci_high, replicates, seed)
    params = {"n_values": list(n_values), "replicates": replicates, "seed": seed, "p": p}
    return ExperimentReport("crossing", {"crossing": tab}, _manifest("crossing", params, started))
