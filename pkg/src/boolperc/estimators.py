"""Monte Carlo estimators of connection probabilities and critical intensities.

Every replicate draws its configuration from its own counter-based stream,
so an estimate is a pure function of ``(model, query, seed, n_reps)``; the
thread count only changes the wall time.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy import stats

from . import rng as rngmod
from .analytic import coverage_prob
from .connectivity import build_clusters, connectivity_radius, thresholds, vacant_connected
from .sampler import ModelSpec, sample_config

WILSON_LEVEL = 0.95
MAX_BISECTION_STEPS = 30


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo mean with its standard error.

    ``successes`` is set for Bernoulli estimates, whose ``stderr`` is
    ``sqrt(mean (1 - mean) / n)``.
    """

    mean: float
    stderr: float
    n: int
    seed: int
    meta: dict = field(default_factory=dict, compare=False)
    successes: int | None = None

    @classmethod
    def bernoulli(cls, successes: int, n: int, seed: int, meta: dict | None = None) -> "Estimate":
        if n <= 0:
            raise ValueError("need at least one replicate")
        k = int(successes)
        p = k / n
        return cls(p, math.sqrt(p * (1.0 - p) / n), int(n), int(seed), dict(meta or {}), k)

    @classmethod
    def from_samples(cls, values, seed: int, meta: dict | None = None) -> "Estimate":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            raise ValueError("need at least one replicate")
        se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
        return cls(float(v.mean()), se, int(v.size), int(seed), dict(meta or {}))

    def merge(self, other: "Estimate") -> "Estimate":
        """Pool two Bernoulli batches (associative and commutative)."""
        if self.successes is None or other.successes is None:
            raise ValueError("only Bernoulli estimates can be merged")
        return Estimate.bernoulli(self.successes + other.successes, self.n + other.n,
                                  min(self.seed, other.seed), self.meta)

    def wilson(self, level: float = WILSON_LEVEL) -> tuple[float, float]:
        if self.successes is None:
            raise ValueError("Wilson interval needs a Bernoulli estimate")
        ci = stats.binomtest(self.successes, self.n).proportion_ci(level, method="wilson")
        return float(ci.low), float(ci.high)

    def to_dict(self) -> dict[str, Any]:
        out = {"mean": self.mean, "stderr": self.stderr, "n": self.n, "seed": self.seed}
        if self.successes is not None:
            out["successes"] = self.successes
        out["meta"] = self.meta
        return out


@dataclass
class ThetaCurve:
    s_grid: np.ndarray
    values: list[Estimate]
    shared: bool
    theta0: float
    meta: dict = field(default_factory=dict)

    @property
    def means(self) -> np.ndarray:
        return np.array([e.mean for e in self.values])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([e.stderr for e in self.values])


@dataclass
class CriticalEstimate:
    lambda_hat: float
    bracket: tuple[float, float]
    method: str
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"lambda_hat": self.lambda_hat, "bracket": list(self.bracket), "method": self.method,
                "diagnostics": self.diagnostics}


# --- replicate runner ------------------------------------------------------------

def map_replicates(fn: Callable[[int], Any], n_reps: int, seed: int, threads: int = 1) -> list:
    """``[fn(seed_0), ..., fn(seed_{n-1})]`` with per-replicate derived seeds.

    Replicates are split into contiguous blocks; results come back in
    replicate order whatever the number of threads.
    """
    if n_reps < 1:
        raise ValueError("n_reps must be positive")
    seeds = rngmod.replicate_seeds(seed, n_reps)
    threads = max(1, int(threads))
    if threads == 1:
        return [fn(s) for s in seeds]
    nblk = min(n_reps, 4 * threads)
    cuts = np.linspace(0, n_reps, nblk + 1).astype(int)
    blocks = [seeds[a:b] for a, b in zip(cuts[:-1], cuts[1:])]
    with ThreadPoolExecutor(threads) as pool:
        parts = pool.map(lambda blk: [fn(s) for s in blk], blocks)
    return [x for part in parts for x in part]


def _meta(model: ModelSpec, **query) -> dict:
    return {"model": model.to_dict(), **query}


# --- theta curves and Bernoulli queries ---------------------------------------------

def connectivity_radii(model: ModelSpec, window: float, n_reps: int, seed: int, threads: int = 1) -> np.ndarray:
    """Per-replicate :func:`connectivity_radius` on ``B_window``."""
    def one(s):
        return connectivity_radius(build_clusters(sample_config(model, window, s)))

    return np.array(map_replicates(one, n_reps, seed, threads), dtype=float)


def estimate_theta_curve(model: ModelSpec, s_grid: Sequence[float], n_reps: int, seed: int,
                         threads: int = 1) -> ThetaCurve:
    """``theta_s`` on ``s_grid`` from one connectivity radius per replicate.

    The window is ``max(s_grid)``: reaching ``dB_s`` only involves balls
    meeting ``B_s``.  The value at ``s = 0`` is the exact coverage
    probability, stored as ``theta0``.
    """
    s = np.asarray(s_grid, dtype=float)
    if s.ndim != 1 or s.size == 0 or np.any(s <= 0) or np.any(np.diff(s) <= 0):
        raise ValueError("s_grid must be positive and strictly increasing")
    rad = connectivity_radii(model, float(s[-1]), n_reps, seed, threads) if model.lam > 0 else np.full(n_reps, -np.inf)
    vals = [Estimate.bernoulli(int(np.count_nonzero(rad >= x)), n_reps, seed, _meta(model, query="theta", s=float(x)))
            for x in s]
    theta0 = coverage_prob(model.law, model.lam, model.d)
    return ThetaCurve(s, vals, True, theta0, _meta(model, query="theta_curve", n_reps=n_reps, seed=seed))


def ball_sphere_counts(model: ModelSpec, queries, window: float, n_reps: int, seed: int,
                       threads: int = 1) -> np.ndarray:
    """Number of replicates in which ``B_inner <-> dB_outer``, per ``(inner, outer)`` query."""
    q = np.asarray(queries, dtype=float).reshape(-1, 2)
    if np.any(q[:, 0] < 0) or np.any(q[:, 0] >= q[:, 1]) or np.any(q[:, 1] > window):
        raise ValueError("queries need 0 <= inner < outer <= window")
    if model.lam == 0:
        return np.zeros(len(q), np.int64)
    inner, outer = q[:, :1], q[:, 1:]

    def one(s):
        idx = build_clusters(sample_config(model, window, s))
        return np.any((idx.mindist[None, :] <= inner) & (idx.reach[None, :] >= outer), axis=1)

    hits = np.array(map_replicates(one, n_reps, seed, threads)).reshape(n_reps, len(q))
    return hits.sum(axis=0)


def estimate_theta_alpha(model: ModelSpec, r: float, alpha: float, n_reps: int, seed: int,
                         threads: int = 1) -> Estimate:
    """``P[B_{alpha r} <-> dB_r]``; ``alpha = 0`` means the origin must be covered."""
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    if not r > 0:
        raise ValueError("r must be positive")
    k = ball_sphere_counts(model, [(alpha * r, r)], r, n_reps, seed, threads)[0]
    return Estimate.bernoulli(k, n_reps, seed, _meta(model, query="theta_alpha", r=r, alpha=alpha))


def estimate_crossing(model: ModelSpec, r: float, n_reps: int, seed: int, threads: int = 1) -> Estimate:
    """``P[B_r <-> dB_2r]``."""
    if not r > 0:
        raise ValueError("r must be positive")
    k = ball_sphere_counts(model, [(r, 2 * r)], 2 * r, n_reps, seed, threads)[0]
    return Estimate.bernoulli(k, n_reps, seed, _meta(model, query="crossing", r=r))


def estimate_vacant(model: ModelSpec, r: float, h: float, n_reps: int, seed: int, threads: int = 1) -> Estimate:
    """Rasterised ``P[0 *<-> dB_r]`` through the vacant set (d = 2, approximate in ``h``)."""
    if not r > 0:
        raise ValueError("r must be positive")

    def one(s):
        return vacant_connected(sample_config(model, r, s), r, h)

    k = sum(map_replicates(one, n_reps, seed, threads))
    return Estimate.bernoulli(k, n_reps, seed, _meta(model, query="vacant", r=r, h=h))


def sigma_r(curve: ThetaCurve, r: float) -> float:
    """Trapezoid rule for ``int_0^r theta_s ds``, anchored at ``theta0``."""
    s = np.concatenate([[0.0], curve.s_grid])
    v = np.concatenate([[curve.theta0], curve.means])
    if r < 0 or r > s[-1]:
        raise ValueError("r outside the curve's range")
    keep = s < r
    xs = np.concatenate([s[keep], [r]])
    ys = np.concatenate([v[keep], [np.interp(r, s, v)]])
    return float(np.trapezoid(ys, xs)) if hasattr(np, "trapezoid") else float(np.trapz(ys, xs))


# --- coupled threshold curves -----------------------------------------------------

def coupled_thresholds(model: ModelSpec, queries, window: float, n_reps: int, seed: int,
                       threads: int = 1) -> np.ndarray:
    """Per replicate and query, the least intensity ``<= model.lam`` at which the query holds.

    Configurations at smaller intensities are thinnings of one birth-marked
    sample, so each replicate's indicator is monotone in the intensity and
    the empirical probability at ``lam`` is ``mean(thresholds <= lam)``.
    """
    q = np.asarray(queries, dtype=float).reshape(-1, 2)
    if model.lam == 0:
        return np.full((n_reps, len(q)), np.inf)

    def one(s):
        return thresholds(sample_config(model, window, s, births=True), q)

    return np.array(map_replicates(one, n_reps, seed, threads)).reshape(n_reps, len(q))


def coupled_curve(lam_star: np.ndarray, lams, seed: int, meta: dict | None = None) -> list[Estimate]:
    n = len(lam_star)
    return [Estimate.bernoulli(int(np.count_nonzero(lam_star <= x)), n, seed, dict(meta or {}, lam=float(x)))
            for x in lams]


def _bisect(lam_star: np.ndarray, lo: float, hi: float, target: float, seed: int):
    """Bisection on the coupled empirical curve ``p(lam) = mean(lam_star <= lam)``.

    Stops when ``p(hi) - p(lo)`` is below twice the larger Wilson half-width
    (the bracket is no longer resolvable at this ``n_reps``) or after
    ``MAX_BISECTION_STEPS`` halvings.
    """
    n = len(lam_star)

    def probe(x):
        e = Estimate.bernoulli(int(np.count_nonzero(lam_star <= x)), n, seed)
        a, b = e.wilson()
        return e.mean, 0.5 * (b - a)

    p_lo, h_lo = probe(lo)
    p_hi, h_hi = probe(hi)
    steps = [(lo, hi, p_lo, p_hi)]
    while len(steps) <= MAX_BISECTION_STEPS and p_hi - p_lo >= 2 * max(h_lo, h_hi):
        mid = 0.5 * (lo + hi)
        p_mid, h_mid = probe(mid)
        if p_mid < target:
            lo, p_lo, h_lo = mid, p_mid, h_mid
        else:
            hi, p_hi, h_hi = mid, p_mid, h_mid
        steps.append((lo, hi, p_lo, p_hi))
    return 0.5 * (lo + hi), (lo, hi), steps


def _check_bracket(bracket):
    lo, hi = (float(x) for x in bracket)
    if not 0 <= lo < hi:
        raise ValueError(f"bracket must satisfy 0 <= lo < hi, got {bracket}")
    return lo, hi


def find_lambda_tilde(model: ModelSpec, r_list: Sequence[float], bracket, n_reps: int, seed: int,
                      threads: int = 1, n_grid: int = 21) -> CriticalEstimate:
    """Intensity where ``P[B_r <-> dB_2r] = 1/2`` at the largest ``r`` of ``r_list``.

    ``model.lam`` is ignored; the family is ``model.with_lam``.  The
    diagnostics hold the coupled crossing curves of every ``r`` on a grid of
    the bracket.
    """
    lo, hi = _check_bracket(bracket)
    rs = sorted(float(r) for r in r_list)
    if not rs or rs[0] <= 0:
        raise ValueError("r_list must hold positive radii")
    top = model.with_lam(hi)
    lam_star = coupled_thresholds(top, [(r, 2 * r) for r in rs], 2 * rs[-1], n_reps, seed, threads)
    last = lam_star[:, -1]
    p_lo = float(np.mean(last <= lo))
    p_hi = float(np.mean(last <= hi))
    if not (p_lo < 0.1 and p_hi > 0.9):
        raise ValueError(f"bracket does not straddle the transition at r={rs[-1]}: "
                         f"crossing({lo})={p_lo}, crossing({hi})={p_hi}")
    lam_hat, br, steps = _bisect(last, lo, hi, 0.5, seed)
    grid = np.linspace(lo, hi, n_grid)
    curves = {str(r): [float(np.mean(lam_star[:, j] <= x)) for x in grid] for j, r in enumerate(rs)}
    halves = {str(r): float(np.median(lam_star[:, j])) for j, r in enumerate(rs)}
    diag = {"r_list": rs, "n_reps": n_reps, "seed": seed, "lambda_grid": grid.tolist(), "curves": curves,
            "median_threshold": halves, "steps": [list(map(float, s)) for s in steps]}
    return CriticalEstimate(lam_hat, br, "crossing-bisection", diag)


def find_lambda_c(model: ModelSpec, r: float, bracket, n_reps: int, seed: int, threshold: float = 0.05,
                  threads: int = 1, n_grid: int = 21) -> CriticalEstimate:
    """Intensity where ``theta_r`` reaches ``threshold``, a finite-``r`` proxy for ``theta > 0``."""
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    lo, hi = _check_bracket(bracket)
    if not r > 0:
        raise ValueError("r must be positive")
    top = model.with_lam(hi)
    lam_star = coupled_thresholds(top, [(0.0, float(r))], float(r), n_reps, seed, threads)[:, 0]
    p_lo = float(np.mean(lam_star <= lo))
    p_hi = float(np.mean(lam_star <= hi))
    if not p_lo < threshold < p_hi:
        raise ValueError(f"bracket does not straddle theta_{r} = {threshold}: "
                         f"theta({lo})={p_lo}, theta({hi})={p_hi}")
    lam_hat, br, steps = _bisect(lam_star, lo, hi, threshold, seed)
    grid = np.linspace(lo, hi, n_grid)
    diag = {"r": float(r), "threshold": threshold, "n_reps": n_reps, "seed": seed, "lambda_grid": grid.tolist(),
            "curves": {str(float(r)): [float(np.mean(lam_star <= x)) for x in grid]},
            "steps": [list(map(float, s)) for s in steps]}
    return CriticalEstimate(lam_hat, br, "theta-threshold", diag)
