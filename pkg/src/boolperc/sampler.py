"""Poisson-Boolean configurations restricted to a window.

Two samplers are provided:

* :func:`sample_config` draws every ball that meets ``B_w`` and has radius
  below the truncation radius ``N_max``, stratified by integer radius bands.
* :func:`sample_cells` draws the product-space form: one independent Poisson
  sub-process per (unit cell, radius band) coordinate of ``I_L``, plus the
  remainder ``g`` that meets ``B_r``.  Each coordinate owns its own random
  stream so it can be redrawn alone with :func:`resample_cell`.

Ball sets are stored column-wise in :class:`BallConfig`.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable

import numpy as np

from . import rng as rngmod
from .analytic import geometry, n_max as _n_max
from .radius_laws import RadiusLaw, law_from_dict

GHOST = "g"


class HallSaturationError(ValueError):
    """The radius law has an infinite d-th moment: space is a.s. covered."""


@dataclass(frozen=True)
class ModelSpec:
    d: int
    lam: float
    law: RadiusLaw
    eps_trunc: float = 1e-6

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValueError("d must be a positive integer")
        if not self.lam >= 0:
            raise ValueError("intensity must be non-negative")
        if not 0 < self.eps_trunc < 1:
            raise ValueError("eps_trunc must lie in (0, 1)")

    def with_lam(self, lam: float) -> "ModelSpec":
        return replace(self, lam=float(lam))

    def to_dict(self) -> dict:
        return {"d": self.d, "lambda": self.lam, "law": self.law.to_dict(),
                "eps_trunc": self.eps_trunc}

    @classmethod
    def from_dict(cls, spec: dict) -> "ModelSpec":
        d = int(spec["d"])
        return cls(d=d, lam=float(spec["lambda"]), law=law_from_dict(spec["law"], d),
                   eps_trunc=float(spec.get("eps_trunc", 1e-6)))


@dataclass
class BallConfig:
    """A finite set of balls.

    ``bands[i] == 0`` tags a ball of the remainder coordinate ``g``; positive
    bands come with the lattice cell in ``cells[i]``.  ``births`` holds the
    coupling marks: the ball is present at every intensity ``>= births[i]``.
    """

    centers: np.ndarray
    radii: np.ndarray
    window_radius: float
    n_max: int
    seed: int
    cells: np.ndarray | None = None
    bands: np.ndarray | None = None
    births: np.ndarray | None = None
    L: float | None = None
    r: float | None = None
    model: ModelSpec | None = None
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def __len__(self) -> int:
        return len(self.radii)

    def subset(self, mask) -> "BallConfig":
        def pick(a):
            return None if a is None else a[mask]

        return replace(self, centers=self.centers[mask], radii=self.radii[mask],
                       cells=pick(self.cells), bands=pick(self.bands), births=pick(self.births))

    def same_balls(self, other: "BallConfig") -> bool:
        return (np.array_equal(self.centers, other.centers)
                and np.array_equal(self.radii, other.radii)
                and _eq_opt(self.cells, other.cells) and _eq_opt(self.bands, other.bands))


def _eq_opt(a, b):
    if a is None or b is None:
        return a is None and b is None
    return np.array_equal(a, b)


def empty_config(d: int, window_radius: float, n_max: int, seed: int, **kw) -> BallConfig:
    return BallConfig(np.zeros((0, d)), np.zeros(0), window_radius, n_max, seed, **kw)


# --- band tables --------------------------------------------------------------

def truncation_radius(model: ModelSpec, window_radius: float) -> int:
    law, d = model.law, model.d
    if not law.moment_is_finite(d) and not math.isfinite(law.sup):
        raise HallSaturationError("Hall saturation: space a.s. covered")
    return _n_max(law, float(model.lam), d, float(window_radius), float(model.eps_trunc))


@lru_cache(maxsize=64)
def _band_table(law: RadiusLaw, d: int, w: float, N: int) -> np.ndarray:
    # cumulative v_d (w + n)^d mu[n - 1, n) over bands n = 1..N
    n = np.arange(1, N + 1, dtype=float)
    mass = np.maximum(law.band_mass(n - 1.0, n), 0.0)
    means = geometry(d).v_d * (w + n) ** d * mass
    return np.cumsum(means)


DENSE_BANDS = 1024


def _blocks(first: int, N: int):
    """Dyadic groups ``[n1, n2)`` of bands covering ``first..N``."""
    n1 = first
    while n1 <= N:
        n2 = min(2 * n1, N + 1)
        yield n1, n2
        n1 = n2


def _place(w, bands, radii, gen, d):
    k = len(radii)
    dirs = gen.standard_normal((k, d))
    norms = np.sqrt(np.einsum("ij,ij->i", dirs, dirs))
    norms[norms == 0] = 1.0
    rad = (w + bands) * gen.random(k) ** (1.0 / d)
    centers = dirs * (rad / norms)[:, None]
    keep = np.einsum("ij,ij->i", centers, centers) <= (w + radii) ** 2
    return centers[keep], radii[keep]


def _draw_window(model: ModelSpec, w: float, N: int, gen: np.random.Generator):
    """All balls of radius < N meeting B_w, drawn band by band.

    Band ``n`` holds radii in ``[n - 1, n)``; its balls have centers uniform
    in ``B_{w + n}`` and are kept when they reach ``B_w``.  The first
    ``DENSE_BANDS`` bands are tabulated; beyond, bands are grouped dyadically
    and each group is drawn at the intensity of its largest band, then
    thinned band-wise, which is exact.
    """
    d, law, lam = model.d, model.law, model.lam
    nd = min(int(N), DENSE_BANDS)
    cum = _band_table(law, d, float(w), nd)
    k = gen.poisson(lam * cum[-1])
    parts_c, parts_r = [], []
    if k:
        # Poisson splitting: the band of each point is drawn from the band means
        bands = np.searchsorted(cum, gen.random(k) * cum[-1], side="right") + 1
        bands = np.minimum(bands, nd)
        radii = np.atleast_1d(np.asarray(
            law.sample_in_band(bands - 1.0, bands.astype(float), gen.random(k)), dtype=float))
        c, r = _place(w, bands, radii, gen, d)
        parts_c.append(c), parts_r.append(r)
    v = geometry(d).v_d
    for n1, n2 in _blocks(nd + 1, int(N)):
        mass = float(law.band_mass(n1 - 1.0, n2 - 1.0))
        if mass <= 0:
            continue
        top = n2 - 1
        k = gen.poisson(lam * v * (w + top) ** d * mass)
        if k == 0:
            continue
        radii = np.atleast_1d(np.asarray(law.sample_in_band(n1 - 1.0, float(top), gen.random(k)), dtype=float))
        bands = np.clip(np.floor(radii) + 1, n1, top)
        acc = gen.random(k) < ((w + bands) / (w + top)) ** d
        c, r = _place(w, bands[acc], radii[acc], gen, d)
        parts_c.append(c), parts_r.append(r)
    if not parts_r:
        return np.zeros((0, d)), np.zeros(0)
    return np.concatenate(parts_c), np.concatenate(parts_r)


def sample_config(model: ModelSpec, window_radius: float, seed: int, births: bool = False) -> BallConfig:
    """Every ball of a Poisson realisation that meets ``B_window_radius``.

    With ``births=True`` each ball also gets a coupling mark uniform on
    ``[0, lam]``; :func:`at_intensity` then yields the exact configuration at
    any smaller intensity, nested monotonically.
    """
    if not window_radius > 0:
        raise ValueError("window_radius must be positive")
    d = model.d
    if model.lam == 0:
        cfg = empty_config(d, window_radius, 1, seed, model=model)
        if births:
            cfg.births = np.zeros(0)
        return cfg
    N = truncation_radius(model, window_radius)
    gen = rngmod.stream(seed, rngmod.TAG_CONFIG)
    centers, radii = _draw_window(model, float(window_radius), N, gen)
    cfg = BallConfig(centers, radii, float(window_radius), N, seed, model=model)
    if births:
        cfg.births = model.lam * rngmod.stream(seed, rngmod.TAG_MARKS).random(len(radii))
    return cfg


def at_intensity(config: BallConfig, lam: float) -> BallConfig:
    """Balls of a birth-marked configuration present at intensity ``lam``."""
    if config.births is None:
        raise ValueError("configuration carries no coupling marks")
    return config.subset(config.births <= lam)


def coupled_configs(model: ModelSpec, lams: Iterable[float], window_radius: float, seed: int) -> list[BallConfig]:
    """Monotonically nested configurations at each of ``lams`` (all ``<= model.lam``)."""
    lams = [float(x) for x in lams]
    if any(x > model.lam for x in lams):
        raise ValueError("coupled intensities must not exceed model.lam")
    top = sample_config(model, window_radius, seed, births=True)
    return [at_intensity(top, x) for x in lams]


# --- product-space form -------------------------------------------------------

@lru_cache(maxsize=64)
def lattice_points(d: int, L: float) -> np.ndarray:
    """Points of ``Z^d`` with norm ``<= L``, in lexicographic order."""
    m = int(math.floor(L))
    axes = np.arange(-m, m + 1)
    grid = np.stack(np.meshgrid(*([axes] * d), indexing="ij"), axis=-1).reshape(-1, d)
    keep = np.einsum("ij,ij->i", grid, grid) <= L * L
    return grid[keep].astype(np.int64)


def index_coordinates(model: ModelSpec, L: float, nonempty: bool = True) -> list[tuple[tuple[int, ...], int]]:
    """The coordinates ``(x, n)`` of ``I_L`` ordered by band then ``x``.

    With ``nonempty`` the bands of zero radius mass are skipped.
    """
    pts = [tuple(int(v) for v in p) for p in lattice_points(model.d, float(L))]
    out = []
    for n in range(1, int(math.floor(L)) + 1):
        if nonempty and _cell_mass(model.law, n) <= 0:
            continue
        out.extend((x, n) for x in pts)
    return out


def in_index_set(cells: np.ndarray, bands: np.ndarray, L: float) -> np.ndarray:
    norm2 = np.einsum("ij,ij->i", cells.astype(float), cells.astype(float))
    return (norm2 <= L * L) & (bands >= 1) & (bands <= math.floor(L))


@lru_cache(maxsize=4096)
def _cell_mass(law: RadiusLaw, n: int) -> float:
    return float(law.band_mass(n - 1.0, float(n)))


def _draw_cell(model: ModelSpec, x: tuple[int, ...], n: int, seed: int, family=None):
    mass = _cell_mass(model.law, n)
    d = model.d
    if mass <= 0 or model.lam == 0:
        return np.zeros((0, d)), np.zeros(0)
    gen = family.at(n, *x) if family is not None else rngmod.stream(seed, rngmod.TAG_CELL, n, *x)
    k = gen.poisson(model.lam * mass)
    if k == 0:
        return np.zeros((0, d)), np.zeros(0)
    centers = np.asarray(x, dtype=float) + gen.random((k, d)) - 0.5
    radii = np.atleast_1d(np.asarray(model.law.sample_in_band(n - 1.0, float(n), gen.random(k)), dtype=float))
    return centers, radii


def _draw_ghost(model: ModelSpec, L: float, r: float, N: int, seed: int):
    d = model.d
    if model.lam == 0:
        return np.zeros((0, d)), np.zeros(0), np.zeros((0, d), np.int64)
    gen = rngmod.stream(seed, rngmod.TAG_GHOST)
    centers, radii = _draw_window(model, float(r), N, gen)
    cells = np.floor(centers + 0.5).astype(np.int64)
    bands = np.floor(radii).astype(np.int64) + 1
    out = ~in_index_set(cells, bands, L)
    return centers[out], radii[out], cells[out]


def _canonical(centers, radii, cells, bands):
    keys = [cells[:, j] for j in range(cells.shape[1] - 1, -1, -1)] + [bands]
    order = np.lexsort(keys)
    return centers[order], radii[order], cells[order], bands[order]


def sample_cells(model: ModelSpec, L: float, r: float, seed: int) -> BallConfig:
    """Product-space sample: every coordinate of ``I_L`` plus the remainder ``g``."""
    if not r > 0 or L < 2 * r:
        raise ValueError("need L >= 2r > 0")
    d = model.d
    N = truncation_radius(model, r) if model.lam > 0 else 1
    parts_c, parts_r, parts_x, parts_n = [], [], [], []
    gc, gr, gx = _draw_ghost(model, L, r, N, seed)
    parts_c.append(gc), parts_r.append(gr), parts_x.append(gx), parts_n.append(np.zeros(len(gr), np.int64))
    fam = rngmod.StreamFamily(seed, rngmod.TAG_CELL)
    for x, n in index_coordinates(model, L):
        c, rr = _draw_cell(model, x, n, seed, fam)
        if len(rr):
            parts_c.append(c), parts_r.append(rr)
            parts_x.append(np.tile(np.asarray(x, np.int64), (len(rr), 1)))
            parts_n.append(np.full(len(rr), n, np.int64))
    centers, radii, cells, bands = _canonical(np.concatenate(parts_c), np.concatenate(parts_r),
                                              np.concatenate(parts_x).reshape(-1, d),
                                              np.concatenate(parts_n))
    return BallConfig(centers, radii, float(L) + math.sqrt(d) / 2, N, seed, cells=cells, bands=bands,
                      L=float(L), r=float(r), model=model)


def _normalize_coord(coord, d):
    if isinstance(coord, str):
        if coord != GHOST:
            raise ValueError(f"unknown coordinate {coord!r}")
        return GHOST
    x, n = coord
    x = tuple(int(v) for v in x)
    if len(x) != d or int(n) != n:
        raise ValueError(f"malformed coordinate {coord!r}")
    return x, int(n)


def resample_cell(config: BallConfig, coord, seed: int) -> BallConfig:
    """Redraw the balls of one coordinate from the stream keyed by ``seed``.

    Passing the configuration's own seed restores the original draw.
    """
    if config.L is None or config.bands is None or config.model is None:
        raise ValueError("configuration was not produced by sample_cells")
    model = config.model
    d = config.d
    coord = _normalize_coord(coord, d)
    L, r = config.L, config.r
    if coord == GHOST:
        drop = config.bands == 0
        c, rr, xx = _draw_ghost(model, L, r, config.n_max, seed)
        nn = np.zeros(len(rr), np.int64)
    else:
        x, n = coord
        if sum(v * v for v in x) > L * L or not 1 <= n <= math.floor(L):
            raise ValueError(f"coordinate {coord!r} is not in I_L")
        drop = (config.bands == n) & np.all(config.cells == np.asarray(x), axis=1)
        c, rr = _draw_cell(model, x, n, seed)
        xx = np.tile(np.asarray(x, np.int64), (len(rr), 1)).reshape(-1, d)
        nn = np.full(len(rr), n, np.int64)
    keep = ~drop
    centers, radii, cells, bands = _canonical(
        np.concatenate([config.centers[keep], c.reshape(-1, d)]),
        np.concatenate([config.radii[keep], rr]),
        np.concatenate([config.cells[keep], xx]),
        np.concatenate([config.bands[keep], nn]))
    return replace(config, centers=centers, radii=radii, cells=cells, bands=bands)


def restrict_to(config: BallConfig, center, rho: float) -> BallConfig:
    """Keep the balls contained in ``B_rho(center)``."""
    c = np.asarray(center, dtype=float).reshape(1, -1)
    diff = config.centers - c
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return config.subset(dist + config.radii <= rho)


# --- JSON lines ----------------------------------------------------------------

def _coord_tag(config: BallConfig, i: int):
    if config.bands is None:
        return None
    if config.bands[i] == 0:
        return GHOST
    return [int(v) for v in config.cells[i]] + [int(config.bands[i])]


def write_jsonl(config: BallConfig, fh) -> None:
    """One JSON record per ball: center, radius, coordinate tag."""
    for i in range(len(config)):
        rec = {"center": [float(v) for v in config.centers[i]], "radius": float(config.radii[i]),
               "coord": _coord_tag(config, i)}
        fh.write(json.dumps(rec) + "\n")


def to_jsonl(config: BallConfig) -> str:
    buf = io.StringIO()
    write_jsonl(config, buf)
    return buf.getvalue()


def from_jsonl(text: str, d: int, window_radius: float, n_max: int = 0, seed: int = 0) -> BallConfig:
    recs = [json.loads(line) for line in text.splitlines() if line.strip()]
    if not recs:
        return empty_config(d, window_radius, n_max, seed)
    centers = np.array([r["center"] for r in recs], dtype=float).reshape(-1, d)
    radii = np.array([r["radius"] for r in recs], dtype=float)
    cfg = BallConfig(centers, radii, window_radius, n_max, seed)
    tags = [r.get("coord") for r in recs]
    if all(t is not None for t in tags):
        cfg.bands = np.array([0 if t == GHOST else t[-1] for t in tags], np.int64)
        cfg.cells = np.array([np.floor(c + 0.5) if t == GHOST else t[:-1]
                              for t, c in zip(tags, centers)], np.int64).reshape(-1, d)
    return cfg
