"""Exploration algorithm ``T_{s,L}``, revealments, influences and pivotal integrals.

The product space has coordinates ``(x, n)`` (balls centred in the unit box
``S^x = x + [-1/2, 1/2)^d`` with radius in ``[n - 1, n)``, ``|x| <= L``,
``1 <= n <= L``) and the remainder ``g``.  The indicator studied is
``f = 1{0 <-> dB_r}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import sparse

from . import rng as rngmod
from .connectivity import adjacency, ball_extents, build_clusters, connected_origin_to_sphere, thresholds
from .estimators import Estimate, map_replicates
from .sampler import (GHOST, BallConfig, ModelSpec, _draw_cell, index_coordinates, lattice_points,
                      resample_cell, sample_cells, sample_config, truncation_radius)


@dataclass
class AlgorithmTrace:
    revealed: list
    f_value: int
    halted_determined: bool


# --- geometry of unit boxes ------------------------------------------------------

def box_sphere_distance(x: np.ndarray, s: float) -> np.ndarray:
    """Distance from each closed box ``S^x`` to the sphere ``dB_s``."""
    ax = np.abs(np.asarray(x, dtype=float))
    near = np.sqrt(np.sum(np.maximum(ax - 0.5, 0.0) ** 2, axis=-1))
    far = np.sqrt(np.sum((ax + 0.5) ** 2, axis=-1))
    return np.where(near > s, near - s, np.where(far < s, s - far, 0.0))


def box_ball_distance(x: np.ndarray, z: np.ndarray, R: np.ndarray) -> np.ndarray:
    """Distances ``dist(S^x, B_R^z)``, shape ``(len(x), len(z))``."""
    diff = np.abs(np.asarray(x, dtype=float)[:, None, :] - np.asarray(z, dtype=float)[None, :, :])
    gap = np.sqrt(np.sum(np.maximum(diff - 0.5, 0.0) ** 2, axis=-1))
    return np.maximum(gap - np.asarray(R)[None, :], 0.0)


@lru_cache(maxsize=32)
def _coordinate_arrays(model: ModelSpec, L: float):
    coords = index_coordinates(model, L, nonempty=False)
    X = np.array([c[0] for c in coords], dtype=np.int64).reshape(-1, model.d)
    N = np.array([c[1] for c in coords], dtype=np.int64)
    lookup = {(*c[0], c[1]): i for i, c in enumerate(coords)}
    mass = np.array([float(model.law.band_mass(n - 1.0, float(n))) for n in range(1, int(math.floor(L)) + 1)])
    return coords, X, N, lookup, mass[N - 1] if len(N) else mass[:0]


@lru_cache(maxsize=32)
def _point_index(model: ModelSpec, L: float):
    """Lattice points of ``I_L`` and, per coordinate, the row of its point."""
    _, X, _, _, _ = _coordinate_arrays(model, L)
    pts = lattice_points(model.d, L)
    row = {tuple(int(v) for v in p): k for k, p in enumerate(pts)}
    return pts, np.array([row[tuple(int(v) for v in x)] for x in X], dtype=np.int64)


@lru_cache(maxsize=32)
def _shell_grid(d: int, L: float) -> np.ndarray:
    M = int(math.ceil(2 * L)) + 1
    axes = np.arange(-M, M + 1)
    return np.stack(np.meshgrid(*([axes] * d), indexing="ij"), axis=-1).reshape(-1, d)


def coordinate_list(model: ModelSpec, L: float) -> list:
    """All coordinates of ``I_L`` in the algorithm's order (band, then lexicographic ``x``)."""
    return list(_coordinate_arrays(model, float(L))[0])


def _ball_coordinates(cells: BallConfig, lookup) -> np.ndarray:
    out = np.full(len(cells), -1, np.int64)
    for i in range(len(cells)):
        if cells.bands[i] > 0:
            out[i] = lookup[(*(int(v) for v in cells.cells[i]), int(cells.bands[i]))]
    return out


def _f(config: BallConfig, r: float) -> int:
    if len(config) == 0:
        return 0
    return int(connected_origin_to_sphere(build_clusters(config), r))


# --- the algorithm -----------------------------------------------------------------

def run_algorithm(cells: BallConfig, s: float, L: float, r: float) -> AlgorithmTrace:
    """Run ``T_{s,L}`` on a product-space sample.

    ``g`` is revealed first.  Then, while some unrevealed ``(x, n)`` has its
    box at distance ``< n`` from the component of ``dB_s`` (the sphere plus
    the revealed balls chained to it), the least such coordinate is revealed.
    """
    if cells.L is None or cells.bands is None or cells.model is None:
        raise ValueError("configuration was not produced by sample_cells")
    if cells.L != float(L) or cells.r != float(r):
        raise ValueError(f"cells were drawn for L={cells.L}, r={cells.r}, not L={L}, r={r}")
    if not 0 <= s <= r:
        raise ValueError("need 0 <= s <= r")
    coords, X, N, lookup, _ = _coordinate_arrays(cells.model, float(L))
    pts, prow = _point_index(cells.model, float(L))
    m = len(coords)
    owner = _ball_coordinates(cells, lookup)
    nb = len(cells)
    _, mind, _ = ball_extents(cells.centers, cells.radii)
    reach = np.sqrt(np.einsum("ij,ij->i", cells.centers, cells.centers)) + cells.radii
    touches = (mind <= s) & (reach >= s)
    ei, ej = adjacency(cells)
    adj = sparse.coo_matrix((np.ones(len(ei), bool), (ei, ej)), shape=(nb, nb)).tocsr()
    adj = (adj + adj.T).tocsr()
    by_coord = {}
    for i in range(nb):
        by_coord.setdefault(int(owner[i]), []).append(i)

    # box distances depend on x only; coordinates read them through prow
    pdist = box_sphere_distance(pts, s)
    in_comp = np.zeros(nb, bool)
    rev_ball = np.zeros(nb, bool)
    revealed = np.zeros(m, bool)

    def absorb(new_balls):
        # chain newly revealed balls to the component and update box distances
        rev_ball[new_balls] = True
        stack = [b for b in new_balls
                 if touches[b] or in_comp[adj.indices[adj.indptr[b]:adj.indptr[b + 1]]].any()]
        added = []
        for b in stack:
            in_comp[b] = True
        while stack:
            b = stack.pop()
            added.append(b)
            for j in adj.indices[adj.indptr[b]:adj.indptr[b + 1]]:
                if rev_ball[j] and not in_comp[j]:
                    in_comp[j] = True
                    stack.append(j)
        if added and m:
            a = np.array(added)
            np.minimum(pdist, box_ball_distance(pts, cells.centers[a], cells.radii[a]).min(axis=1), out=pdist)
        return bool(added)

    order = [GHOST]
    absorb(by_coord.get(-1, []))
    while True:
        cand = np.flatnonzero(~revealed & (pdist[prow] < N))
        if cand.size == 0:
            break
        # revealing a coordinate that does not grow the component leaves the
        # candidate set unchanged, so candidates are taken in order until one does
        for i in cand:
            revealed[i] = True
            order.append(coords[i])
            balls = by_coord.get(int(i))
            if balls and absorb(balls):
                break
    f_full = _f(cells, r)
    f_rev = _f(cells.subset(rev_ball), r)
    return AlgorithmTrace(order, f_full, f_full == f_rev)


def trace_mask(trace: AlgorithmTrace, model: ModelSpec, L: float) -> np.ndarray:
    """Boolean mask over :func:`coordinate_list` of the revealed coordinates."""
    _, _, _, lookup, _ = _coordinate_arrays(model, float(L))
    mask = np.zeros(len(lookup), bool)
    mask[[lookup[(*c[0], c[1])] for c in trace.revealed[1:]]] = True
    return mask


def check_determination(cells: BallConfig, trace: AlgorithmTrace, seed: int, joint: bool = True) -> bool:
    """Whether resampling unrevealed coordinates never changes ``f``.

    Each unrevealed coordinate of positive band mass is redrawn alone; with
    ``joint`` all of them are also redrawn together once.
    """
    model, L, r = cells.model, cells.L, cells.r
    coords, _, _, _, mass = _coordinate_arrays(model, L)
    mask = trace_mask(trace, model, L)
    todo = [i for i in range(len(coords)) if not mask[i] and mass[i] > 0]
    for i in todo:
        alt = resample_cell(cells, coords[i], rngmod.derive_seed(seed, rngmod.TAG_RESAMPLE, i))
        if _f(alt, r) != trace.f_value:
            return False
    if joint and todo:
        alt = cells
        for i in todo:
            alt = resample_cell(alt, coords[i], rngmod.derive_seed(seed, rngmod.TAG_RESAMPLE, i, 1))
        if _f(alt, r) != trace.f_value:
            return False
    return True


# --- revealments -----------------------------------------------------------------

def _sphere_component_boxes(cells: BallConfig, s: float, L: float) -> np.ndarray:
    """Lattice boxes met by the component of ``dB_s`` in the full configuration."""
    Y = _shell_grid(cells.d, float(L))
    met = box_sphere_distance(Y, s) == 0
    if len(cells):
        idx = build_clusters(cells)
        _, mind, _ = ball_extents(cells.centers, cells.radii)
        reach = np.sqrt(np.einsum("ij,ij->i", cells.centers, cells.centers)) + cells.radii
        hit = np.unique(idx.labels[(mind <= s) & (reach >= s)])
        balls = np.flatnonzero(np.isin(idx.labels, hit))
        for a in range(0, len(balls), 256):
            b = balls[a:a + 256]
            met |= (box_ball_distance(Y, cells.centers[b], cells.radii[b]) == 0).any(axis=1)
    return Y[met]


def revealment_bound_indicator(cells: BallConfig, s: float, L: float) -> np.ndarray:
    """Per coordinate, whether the boxes within distance ``n`` of ``S^x`` meet the component of ``dB_s``."""
    _, _, N, _, _ = _coordinate_arrays(cells.model, float(L))
    pts, prow = _point_index(cells.model, float(L))
    Y = _sphere_component_boxes(cells, s, L)
    gap = np.maximum(np.abs(pts[:, None, :] - Y[None, :, :]) - 1, 0)
    D = np.sqrt(np.min(np.sum(gap * gap, axis=-1), axis=1))
    return D[prow] <= N


@dataclass
class RevealmentMap:
    coords: list
    counts: np.ndarray
    bound_counts: np.ndarray
    n: int
    seed: int
    params: dict
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def delta(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def bound(self) -> np.ndarray:
        return self.bound_counts / self.n

    def bound_violations(self, k: float = 4.0) -> list:
        """Coordinates whose revealment exceeds the bound by more than ``k`` combined sigma."""
        d, b, n = self.delta, self.bound, self.n
        sig = np.sqrt((d * (1 - d) + b * (1 - b)) / n)
        return [self.coords[i] for i in np.flatnonzero(d - b > k * sig)]


def estimate_revealments(model: ModelSpec, s: float, L: float, r: float, n_reps: int, seed: int,
                         threads: int = 1, keep_samples: bool = False) -> RevealmentMap:
    """Reveal frequencies of ``T_{s,L}`` and the box-shell bound, on shared replicates.

    ``delta_g = 1`` and is not stored.
    """
    if L < 2 * r or not r > 0:
        raise ValueError("need L >= 2r > 0")
    coords = coordinate_list(model, L)

    def one(sd):
        cells = sample_cells(model, L, r, sd)
        tr = run_algorithm(cells, s, L, r)
        return trace_mask(tr, model, L), revealment_bound_indicator(cells, s, L)

    res = map_replicates(one, n_reps, seed, threads)
    D = np.array([a for a, _ in res]).reshape(n_reps, len(coords))
    B = np.array([b for _, b in res]).reshape(n_reps, len(coords))
    return RevealmentMap(coords, D.sum(axis=0), B.sum(axis=0), n_reps, seed,
                         {"s": s, "L": L, "r": r, "model": model.to_dict()}, D if keep_samples else None)


# --- influences --------------------------------------------------------------------

@dataclass
class InfluenceMap:
    coords: list
    counts: np.ndarray
    g_count: int
    f_count: int
    n: int
    seed: int
    params: dict
    samples: np.ndarray | None = field(default=None, repr=False)
    f_samples: np.ndarray | None = field(default=None, repr=False)
    g_samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def inf(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def inf_g(self) -> float:
        return self.g_count / self.n


def relevant_coordinates(model: ModelSpec, L: float, r: float) -> np.ndarray:
    """Coordinates whose balls can meet ``B_r`` and whose band has positive mass."""
    _, X, N, _, mass = _coordinate_arrays(model, float(L))
    ax = np.abs(X.astype(float))
    near = np.sqrt(np.sum(np.maximum(ax - 0.5, 0.0) ** 2, axis=1))
    return np.flatnonzero((mass > 0) & (near - r < N))


def estimate_influences(model: ModelSpec, L: float, r: float, n_reps: int, seed: int,
                        threads: int = 1, keep_samples: bool = False) -> InfluenceMap:
    """``Inf_i = P[f(omega) != f(omega with coordinate i redrawn)]``, one redraw per replicate.

    Coordinates of empty band mass, or whose balls cannot reach ``B_r``,
    have influence exactly 0 and are not simulated.
    """
    if L < 2 * r or not r > 0:
        raise ValueError("need L >= 2r > 0")
    coords, X, N, lookup, _ = _coordinate_arrays(model, float(L))
    todo = relevant_coordinates(model, L, r)

    def one(sd):
        cells = sample_cells(model, L, r, sd)
        f0 = _f(cells, r)
        flips = np.zeros(len(coords), bool)
        if model.lam == 0:
            return f0, False, flips
        owner = _ball_coordinates(cells, lookup)
        alt = resample_cell(cells, GHOST, rngmod.derive_seed(sd, rngmod.TAG_RESAMPLE, -1))
        g_flip = _f(alt, r) != f0
        # coordinate i is redrawn as resample_cell(cells, coords[i], rs) would
        rs = rngmod.derive_seed(sd, rngmod.TAG_RESAMPLE)
        fam = rngmod.StreamFamily(rs, rngmod.TAG_CELL)
        for i in todo:
            x, n = coords[i]
            old = owner == i
            c, rr = _draw_cell(model, x, n, rs, fam)
            if not old.any() and len(rr) == 0:
                continue
            keep = ~old
            cfg = BallConfig(np.concatenate([cells.centers[keep], c.reshape(-1, model.d)]),
                             np.concatenate([cells.radii[keep], rr]), cells.window_radius, cells.n_max, sd)
            flips[i] = _f(cfg, r) != f0
        return f0, g_flip, flips

    res = map_replicates(one, n_reps, seed, threads)
    F = np.array([fl for _, _, fl in res]).reshape(n_reps, len(coords))
    fv = np.array([f0 for f0, _, _ in res])
    gv = np.array([g for _, g, _ in res], dtype=bool)
    return InfluenceMap(coords, F.sum(axis=0), int(gv.sum()), int(fv.sum()), n_reps, seed,
                        {"L": L, "r": r, "model": model.to_dict()}, F if keep_samples else None,
                        fv if keep_samples else None, gv if keep_samples else None)


# --- the inequality ---------------------------------------------------------------

def _sample_variance_se(p: float, n: int) -> float:
    # standard error of the unbiased sample variance of Bernoulli(p) data
    if n < 2:
        return math.inf
    s2 = p * (1 - p)
    mu4 = s2 * (1 - 3 * p + 3 * p * p)
    return math.sqrt(max(mu4 - s2 * s2 * (n - 3) / (n - 1), 0.0) / n)


@dataclass
class OsssReport:
    var_f: float
    var_se: float
    sum_delta_inf: float
    sum_se: float
    coords: list
    delta: np.ndarray
    inf: np.ndarray
    inf_g: float
    params: dict

    @property
    def sigma(self) -> float:
        return math.hypot(self.var_se, self.sum_se)

    @property
    def violated(self) -> bool:
        return self.var_f - self.sum_delta_inf > 4 * self.sigma

    def to_dict(self) -> dict:
        return {"var_f": self.var_f, "var_se": self.var_se, "sum_delta_inf": self.sum_delta_inf,
                "sum_se": self.sum_se, "combined_sigma": self.sigma, "violated": self.violated,
                "delta_g": 1.0, "inf_g": self.inf_g, "params": self.params}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def rows(self):
        """Sparse per-coordinate rows ``(x, n, delta, inf)``; all-zero rows are omitted."""
        yield ("g", 0, 1.0, self.inf_g)
        for c, dl, nf in zip(self.coords, self.delta, self.inf):
            if dl > 0 or nf > 0:
                yield (c[0], c[1], float(dl), float(nf))


def osss_check(model: ModelSpec, s: float, L: float, r: float, n_reps: int, seed: int, threads: int = 1,
               influences: InfluenceMap | None = None) -> OsssReport:
    """Compare ``Var(f)`` with ``sum_i delta_i Inf_i``.

    Revealments and influences come from independent replicate sets; the
    sum is a two-sample U-statistic whose standard error is computed from
    its two projections.  ``influences`` may be shared across ``s``.
    """
    rev = estimate_revealments(model, s, L, r, n_reps, rngmod.derive_seed(seed, 1), threads, keep_samples=True)
    if influences is None or influences.samples is None:
        influences = estimate_influences(model, L, r, n_reps, rngmod.derive_seed(seed, 2), threads,
                                         keep_samples=True)
    D = rev.samples.astype(float)
    F = influences.samples.astype(float)
    n1, n2 = D.shape[0], F.shape[0]
    dl, nf = D.mean(axis=0), F.mean(axis=0)
    ig = influences.inf_g
    total = float(dl @ nf) + ig
    g1 = D @ nf
    g2 = F @ dl + influences.g_samples
    se = math.sqrt(((g1.var(ddof=1) / n1) if n1 > 1 else 0.0) + ((g2.var(ddof=1) / n2) if n2 > 1 else 0.0))
    p = influences.f_count / n2
    var = p * (1 - p) * n2 / (n2 - 1) if n2 > 1 else 0.0
    return OsssReport(var, _sample_variance_se(p, n2), total, se, rev.coords, dl, nf, ig,
                      {"s": s, "L": L, "r": r, "n_reps": n_reps, "seed": seed, "model": model.to_dict()})


# --- pivotal integrals and Russo's formula ------------------------------------------

def pivotal_points(model: ModelSpec, r: float) -> np.ndarray:
    """Lattice points whose box can host a ball meeting ``B_r``."""
    reach = model.law.sup if math.isfinite(model.law.sup) else float(truncation_radius(model, r))
    M = int(math.ceil(r + reach + 1))
    pts = lattice_points(model.d, float(M * math.sqrt(model.d)))
    ax = np.abs(pts.astype(float))
    near = np.sqrt(np.sum(np.maximum(ax - 0.5, 0.0) ** 2, axis=1))
    return pts[near <= r + reach]


def _pivotal_replicate(model: ModelSpec, pts: np.ndarray, r: float, K: int, sd: int) -> np.ndarray:
    """Per point, the K-sample estimate of ``Piv_x`` on one replicate."""
    out = np.zeros(len(pts))
    cfg = sample_config(model, r, sd) if model.lam > 0 else None
    if cfg is not None and len(cfg):
        idx = build_clusters(cfg)
        if connected_origin_to_sphere(idx, r):
            return out
        ball_cov = idx.covers_origin[idx.labels]
        ball_reach = idx.reach[idx.labels]
        zc, rc = cfg.centers, cfg.radii
    else:
        ball_cov = np.zeros(0, bool)
        ball_reach = np.zeros(0)
        zc, rc = np.zeros((0, model.d)), np.zeros(0)
    gen = rngmod.stream(sd, rngmod.TAG_INSERT)
    k = len(pts) * K
    z = np.repeat(pts.astype(float), K, axis=0) + gen.random((k, model.d)) - 0.5
    rho = np.atleast_1d(model.law.sample(gen, k))
    zn2 = np.einsum("ij,ij->i", z, z)
    cov = zn2 <= rho * rho
    rch = np.sqrt(zn2) + rho
    for a in range(0, k, 512):
        sl = slice(a, a + 512)
        diff = z[sl, None, :] - zc[None, :, :]
        T = np.einsum("ijk,ijk->ij", diff, diff) <= (rho[sl, None] + rc[None, :]) ** 2
        cov[sl] |= (T & ball_cov[None, :]).any(axis=1)
        if len(rc):
            rch[sl] = np.maximum(rch[sl], np.where(T, ball_reach[None, :], -np.inf).max(axis=1))
    hit = cov & (rch >= r)
    return hit.reshape(len(pts), K).mean(axis=1)


def estimate_pivotal(model: ModelSpec, x, r: float, n_reps: int, K: int, seed: int, threads: int = 1) -> Estimate:
    """``E[Piv_{x,A}]`` for ``A = {0 <-> dB_r}`` with ``K`` insertions per replicate."""
    if K < 1:
        raise ValueError("K must be at least 1")
    pts = np.asarray(x, dtype=np.int64).reshape(1, model.d)
    vals = map_replicates(lambda sd: _pivotal_replicate(model, pts, r, K, sd)[0], n_reps, seed, threads)
    return Estimate.from_samples(vals, seed, {"model": model.to_dict(), "query": "pivotal",
                                              "x": [int(v) for v in pts[0]], "r": r, "K": K})


def pivotal_sum(model: ModelSpec, r: float, n_reps: int, K: int, seed: int, threads: int = 1) -> Estimate:
    """``sum_x E[Piv_{x,A}]`` over every box that can host a ball meeting ``B_r``, on shared replicates."""
    if K < 1:
        raise ValueError("K must be at least 1")
    pts = pivotal_points(model, r)
    vals = map_replicates(lambda sd: float(_pivotal_replicate(model, pts, r, K, sd).sum()), n_reps, seed, threads)
    return Estimate.from_samples(vals, seed, {"model": model.to_dict(), "query": "pivotal_sum", "r": r, "K": K,
                                              "n_points": int(len(pts))})


def theta_derivative(model: ModelSpec, r: float, lam0: float, dlam: float, n_reps: int, seed: int,
                     threads: int = 1) -> Estimate:
    """Central difference of ``theta_r`` at ``lam0`` with common random numbers."""
    if not dlam > 0:
        raise ValueError("dlam must be positive")
    if lam0 - dlam < 0:
        raise ValueError("lam0 - dlam must be non-negative")
    top = model.with_lam(lam0 + dlam)

    def one(sd):
        return thresholds(sample_config(top, r, sd, births=True), [(0.0, r)])[0]

    lam_star = np.array(map_replicates(one, n_reps, seed, threads))
    k = int(np.count_nonzero((lam_star > lam0 - dlam) & (lam_star <= lam0 + dlam)))
    p = k / n_reps
    return Estimate(p / (2 * dlam), math.sqrt(p * (1 - p) / n_reps) / (2 * dlam), n_reps, seed,
                    {"model": model.to_dict(), "query": "theta_derivative", "r": r, "lam0": lam0, "dlam": dlam})


@dataclass
class RussoReport:
    derivative: Estimate
    pivotal: Estimate
    params: dict

    @property
    def sigma(self) -> float:
        return math.hypot(self.derivative.stderr, self.pivotal.stderr)

    @property
    def agree(self) -> bool:
        return abs(self.derivative.mean - self.pivotal.mean) <= 4 * self.sigma

    def to_dict(self) -> dict:
        return {"derivative": self.derivative.to_dict(), "pivotal_sum": self.pivotal.to_dict(),
                "combined_sigma": self.sigma, "agree": self.agree, "params": self.params}


def russo_check(model: ModelSpec, r: float, lam0: float, dlam: float | None = None, n_reps: int = 2000,
                seed: int = 0, K: int = 4, n_reps_fd: int | None = None, threads: int = 1) -> RussoReport:
    """Finite-difference ``d theta_r / d lambda`` against the summed pivotal integrals at ``lam0``."""
    if dlam is None:
        dlam = 0.02 * lam0
    if not dlam > 0:
        raise ValueError("dlam must be positive")
    n_fd = n_reps_fd or 50 * n_reps
    der = theta_derivative(model, r, lam0, dlam, n_fd, rngmod.derive_seed(seed, 1), threads)
    piv = pivotal_sum(model.with_lam(lam0), r, n_reps, K, rngmod.derive_seed(seed, 2), threads)
    return RussoReport(der, piv, {"r": r, "lam0": lam0, "dlam": dlam, "n_reps": n_reps, "n_reps_fd": n_fd,
                                  "K": K, "seed": seed, "model": model.to_dict()})
