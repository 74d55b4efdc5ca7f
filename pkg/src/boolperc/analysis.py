"""Harnesses that turn the inequalities of the theory into desk-scale checks.

Unknown universal constants cannot be asserted, so the harnesses invert an
inequality into the constant it would require and report that, or compare
Monte Carlo estimates with quadrature at a fixed number of standard errors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import rng as rngmod
from .analytic import phi, pi_delta
from .estimators import (Estimate, ThetaCurve, ball_sphere_counts, coupled_curve, coupled_thresholds,
                         estimate_theta_curve, sigma_r)
from .osss_lab import theta_derivative
from .sampler import ModelSpec

K_SIGMA = 4.0
# two-sided confidence level matching K_SIGMA standard normal deviations
K_LEVEL = math.erf(K_SIGMA / math.sqrt(2.0))


def _interval(e: Estimate) -> tuple[float, float]:
    """Wilson interval at the ``K_SIGMA`` level (well defined at 0 and n successes)."""
    ci = stats.binomtest(e.successes, e.n).proportion_ci(K_LEVEL, method="wilson")
    return float(ci.low), float(ci.high)


# --- renormalization inequality ---------------------------------------------------

@dataclass
class RenormReport:
    r: float
    alpha: float
    delta: float
    theta_alpha_r: Estimate
    pi_delta_r: float
    u_grid: np.ndarray
    theta_u: list[Estimate]
    theta_v: list[Estimate]
    max_product: float
    implied_constant: float
    meta: dict = field(default_factory=dict)

    @property
    def v_grid(self) -> np.ndarray:
        return (1.0 - self.alpha) - self.u_grid

    @property
    def implied_c1(self) -> float:
        """The constant in front of ``(delta^2 alpha)^-d`` that the inequality needs."""
        d = self.meta.get("d", 1)
        return self.implied_constant * (self.delta ** 2 * self.alpha) ** d

    def to_dict(self) -> dict:
        return {"r": self.r, "alpha": self.alpha, "delta": self.delta,
                "theta_alpha_r": self.theta_alpha_r.to_dict(), "pi_delta_r": self.pi_delta_r,
                "max_product": self.max_product, "implied_constant": self.implied_constant,
                "implied_c1": self.implied_c1, "u_grid": self.u_grid.tolist(),
                "theta_u": [e.mean for e in self.theta_u], "theta_v": [e.mean for e in self.theta_v],
                "meta": self.meta}


def renorm_report(model: ModelSpec, r: float, alpha: float, delta: float, u_grid_size: int = 33,
                  n_reps: int = 1000, seed: int = 0, threads: int = 1) -> RenormReport:
    """Implied constant of ``theta^a_r <= pi^d_r + C max_{u+v=1-a} theta^a_ur theta^a_vr``.

    All ``theta`` terms come from the same replicates (window ``r``).  The
    maximum over the continuum ``u in [delta, 1 - alpha - delta]`` is taken
    on ``u_grid_size`` equally spaced points.  The constant is 0 when the
    left side does not exceed ``pi``, and ``inf`` when the products vanish
    but the left side does not.
    """
    if not 0 < alpha <= delta <= 0.25:
        raise ValueError("need 0 < alpha <= delta <= 1/4")
    if not r > 0:
        raise ValueError("r must be positive")
    if u_grid_size < 2:
        raise ValueError("u_grid_size must be at least 2")
    u = np.linspace(delta, 1.0 - alpha - delta, u_grid_size)
    v = (1.0 - alpha) - u
    if np.any(u < delta - 1e-12) or np.any(v < delta - 1e-12) or np.any(np.abs(u + v - (1 - alpha)) > 1e-12):
        raise AssertionError("u/v grid violates its constraints")
    queries = [(alpha * r, r)] + [(alpha * x * r, x * r) for x in u] + [(alpha * x * r, x * r) for x in v]
    counts = ball_sphere_counts(model, queries, r, n_reps, seed, threads)
    est = [Estimate.bernoulli(k, n_reps, seed) for k in counts]
    th_r = est[0]
    th_u, th_v = est[1:1 + len(u)], est[1 + len(u):]
    prods = np.array([a.mean * b.mean for a, b in zip(th_u, th_v)])
    mp = float(prods.max())
    pi = pi_delta(model.law, model.lam, model.d, r, delta)
    excess = th_r.mean - pi
    if excess <= 0:
        c = 0.0
    elif mp == 0:
        c = math.inf
    else:
        c = excess / mp
    meta = {"d": model.d, "model": model.to_dict(), "n_reps": n_reps, "seed": seed,
            "argmax_u": float(u[int(prods.argmax())])}
    return RenormReport(float(r), alpha, delta, th_r, pi, u, th_u, th_v, mp, c, meta)


def renorm_stability(reports: list[RenormReport]) -> float:
    """Ratio of the largest to the smallest implied constant across reports."""
    cs = [rep.implied_constant for rep in reports]
    if any(not math.isfinite(c) for c in cs):
        return math.inf
    pos = [c for c in cs if c > 0]
    if not pos:
        return 1.0
    if len(pos) < len(cs):
        return math.inf
    return max(pos) / min(pos)


# --- heavy-tail lemma -------------------------------------------------------------

def verify_heavy_tail_lemma(model: ModelSpec, alpha: float, eta_exp: float, eps: float, r0: float, r: float,
                            n_reps: int, seed: int, n_grid: int = 9, threads: int = 1) -> dict:
    """Check the two hypotheses and the conclusion ``theta^a_r <= (1 + eps) pi^a_r``.

    With ``g(s) = (pi^a_r)^((s / r)^eta)``:

    * (f1) ``theta^a_s <= eps g(s)`` on ``[r0, r0 / alpha]`` (Monte Carlo),
    * (f2) ``pi^a_s <= eps g(s)`` on ``[r0, (1 - alpha) r]`` (quadrature).

    Monte Carlo comparisons count as violated only when the ``K_SIGMA``
    Wilson interval lies entirely above the bound.
    """
    if not 0 < alpha < 0.25:
        raise ValueError("alpha must lie in (0, 1/4)")
    if not 0 < eta_exp < 1:
        raise ValueError("eta_exp must lie in (0, 1)")
    if alpha ** eta_exp + (1 - alpha) ** eta_exp < 1:
        raise ValueError("alpha^eta + (1 - alpha)^eta >= 1 fails")
    if not 0 < r0 <= alpha * r:
        raise ValueError("need 0 < r0 <= alpha * r")
    if not eps > 0:
        raise ValueError("eps must be positive")
    law, lam, d = model.law, model.lam, model.d
    pi_r = pi_delta(law, lam, d, r, alpha)

    def g(s):
        return pi_r ** ((s / r) ** eta_exp)

    s1 = np.linspace(r0, r0 / alpha, n_grid)
    w = r0 / alpha
    c1 = ball_sphere_counts(model, [(alpha * s, s) for s in s1], w, n_reps, rngmod.derive_seed(seed, 1), threads)
    f1 = []
    for s, k in zip(s1, c1):
        e = Estimate.bernoulli(k, n_reps, seed)
        lo, hi = _interval(e)
        b = eps * g(s)
        f1.append({"s": float(s), "theta": e.mean, "stderr": e.stderr, "ci": [lo, hi], "bound": b,
                   "holds": lo <= b, "confirmed": hi <= b})
    s2 = np.linspace(r0, (1 - alpha) * r, n_grid)
    f2 = []
    for s in s2:
        p = pi_delta(law, lam, d, s, alpha)
        b = eps * g(s)
        f2.append({"s": float(s), "pi": p, "bound": b, "holds": p <= b})
    kc = ball_sphere_counts(model, [(alpha * r, r)], r, n_reps, rngmod.derive_seed(seed, 2), threads)[0]
    ec = Estimate.bernoulli(kc, n_reps, seed)
    lo, hi = _interval(ec)
    bound = (1 + eps) * pi_r
    concl = {"theta_alpha_r": ec.mean, "stderr": ec.stderr, "ci": [lo, hi], "bound": bound,
             "holds": lo <= bound, "confirmed": hi <= bound}
    return {"alpha": alpha, "eta_exp": eta_exp, "eps": eps, "r0": r0, "r": r, "pi_alpha_r": pi_r,
            "f1": f1, "f2": f2, "f1_holds": all(x["holds"] for x in f1),
            "f1_confirmed": all(x["confirmed"] for x in f1), "f2_holds": all(x["holds"] for x in f2),
            "f1_margin": min(x["bound"] - x["theta"] for x in f1),
            "f2_margin": min(x["bound"] - x["pi"] for x in f2),
            "conclusion": concl, "conclusion_holds": concl["holds"],
            "model": model.to_dict(), "n_reps": n_reps, "seed": seed}


# --- decay fits and ratio curves ------------------------------------------------------

def fit_exponential_decay(curve: ThetaCurve, s_min: float, s_max: float | None = None) -> tuple[float, float]:
    """Least-squares fit of ``log theta_s = a - c s`` on ``[s_min, s_max]``; returns ``(c, R^2)``."""
    s = curve.s_grid
    hi = s[-1] if s_max is None else s_max
    keep = (s >= s_min) & (s <= hi)
    if np.count_nonzero(keep) < 2:
        raise ValueError("fit range holds fewer than two grid points")
    y = curve.means[keep]
    if np.any(y <= 0):
        raise ValueError("nonpositive theta values on the fit range; trim the range")
    fit = stats.linregress(s[keep], np.log(y))
    return float(-fit.slope), float(fit.rvalue ** 2)


def positive_range(curve: ThetaCurve, min_count: int = 1) -> float:
    """Largest ``s`` such that every grid point up to it has at least ``min_count`` successes."""
    ok = np.array([e.successes >= min_count for e in curve.values])
    if not ok[0]:
        raise ValueError("theta vanishes at the first grid point")
    bad = np.flatnonzero(~ok)
    return float(curve.s_grid[-1] if bad.size == 0 else curve.s_grid[bad[0] - 1])


def ratio_curve(model: ModelSpec, lam: float, r_grid, n_reps: int, seed: int, threads: int = 1,
                lambda_tilde: float | None = None) -> list[dict]:
    """``theta_r / phi_r`` along ``r_grid`` with ``K_SIGMA`` Wilson bounds.

    The theta values share replicates (window ``max(r_grid)``).
    """
    m = model.with_lam(lam)
    rs = np.asarray(r_grid, dtype=float)
    if lambda_tilde is not None and lam >= lambda_tilde:
        raise ValueError("ratio curves are meant for intensities below the crossing estimate")
    phis = [phi(m.law, lam, m.d, float(r)) for r in rs]
    if any(p == 0 for p in phis):
        raise ValueError("phi_r vanishes on the grid (bounded radii or lambda = 0); "
                         "use fit_exponential_decay instead")
    curve = estimate_theta_curve(m, rs, n_reps, seed, threads)
    out = []
    for r, p, e in zip(rs, phis, curve.values):
        lo, hi = _interval(e)
        out.append({"r": float(r), "theta": e.mean, "theta_stderr": e.stderr, "phi": p, "ratio": e.mean / p,
                    "ratio_stderr": e.stderr / p, "ratio_ci": [lo / p, hi / p], "successes": e.successes,
                    "n": e.n})
    return out


# --- differential inequality -------------------------------------------------------------

def mlem_value(theta_prime: float, sigma: float, r: float, theta: float) -> float:
    """``theta' Sigma / (r theta (1 - theta))``; degenerate when ``theta`` is 0 or 1."""
    if theta <= 0 or theta >= 1:
        raise ValueError("theta_r is 0 or 1: the ratio is degenerate")
    return theta_prime * sigma / (r * theta * (1 - theta))


def mlem_ratio(model: ModelSpec, lam: float, r: float, dlam: float, n_reps: int, seed: int,
               n_s: int = 16, threads: int = 1) -> dict:
    """Monte Carlo value of ``theta'_r Sigma_r / (r theta_r (1 - theta_r))`` at ``lam``.

    ``theta'_r`` is a common-random-number central difference; ``Sigma_r``
    integrates a theta curve on ``n_s`` points of ``(0, r]``.
    """
    if not dlam > 0:
        raise ValueError("dlam must be positive")
    m = model.with_lam(lam)
    curve = estimate_theta_curve(m, np.linspace(r / n_s, r, n_s), n_reps, rngmod.derive_seed(seed, 1), threads)
    th = curve.values[-1]
    if th.mean - K_SIGMA * th.stderr <= 0 or th.mean + K_SIGMA * th.stderr >= 1:
        raise ValueError(f"theta_r = {th.mean} is 0 or 1 within noise: the ratio is degenerate")
    der = theta_derivative(m, r, lam, dlam, n_reps, rngmod.derive_seed(seed, 2), threads)
    sig = sigma_r(curve, r)
    val = mlem_value(der.mean, sig, r, th.mean)
    # first-order error from the derivative, the dominant noise source
    se = abs(val) * der.stderr / der.mean if der.mean else math.inf
    return {"lambda": lam, "r": r, "dlam": dlam, "theta_r": th.mean, "theta_stderr": th.stderr,
            "theta_prime": der.mean, "theta_prime_stderr": der.stderr, "sigma_r": sig, "ratio": val,
            "ratio_stderr": se, "positive": val > 0, "n_reps": n_reps, "seed": seed}


# --- sharpness ------------------------------------------------------------------------

def sharpness_scan(model: ModelSpec, lam_grid, r_proxy: float, n_reps: int, seed: int,
                   lambda_c: float | None = None, threads: int = 1) -> dict:
    """``theta_{r_proxy}`` along ``lam_grid`` (coupled), and a line fitted to the supercritical side.

    Points count as supercritical when ``lam > lambda_c`` if an estimate is
    given, else when theta is ``K_SIGMA`` standard errors above 0.  The
    report also gives ``mean_field_c``, the largest ``c`` with
    ``theta >= c (lam - lambda_c)`` at every supercritical point.
    """
    lams = np.asarray(sorted(float(x) for x in lam_grid))
    if lams.size < 3:
        raise ValueError("the fit needs at least 3 supercritical points; the grid is too short")
    top = model.with_lam(lams[-1])
    lam_star = coupled_thresholds(top, [(0.0, float(r_proxy))], float(r_proxy), n_reps, seed, threads)[:, 0]
    est = coupled_curve(lam_star, lams, seed)
    table = [{"lambda": float(x), "theta": e.mean, "stderr": e.stderr} for x, e in zip(lams, est)]
    th = np.array([e.mean for e in est])
    se = np.array([e.stderr for e in est])
    if lambda_c is not None:
        sup = lams > lambda_c
    else:
        sup = th - K_SIGMA * se > 0
    out = {"table": table, "r_proxy": r_proxy, "lambda_c": lambda_c, "n_reps": n_reps, "seed": seed,
           "model": model.to_dict(), "fit": None}
    if np.count_nonzero(sup) < 3:
        return out
    fit = stats.linregress(lams[sup], th[sup])
    lc = lambda_c if lambda_c is not None else -fit.intercept / fit.slope
    line = fit.slope * lams[sup] + fit.intercept
    mf = float(np.min(th[sup] / (lams[sup] - lc))) if np.all(lams[sup] > lc) else math.nan
    out["fit"] = {"slope": float(fit.slope), "intercept": float(fit.intercept),
                  "lambda_intercept": float(-fit.intercept / fit.slope) if fit.slope else math.nan,
                  "r2": float(fit.rvalue ** 2), "positive_slope": bool(fit.slope > 0),
                  "line_below": bool(np.all(line <= th[sup] + K_SIGMA * se[sup])),
                  "mean_field_c": mf, "n_points": int(np.count_nonzero(sup))}
    return out
