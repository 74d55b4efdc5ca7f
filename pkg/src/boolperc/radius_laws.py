"""Radius distributions for the Boolean model.

Each law is an immutable object exposing its tail ``mu[r, inf)``, an
inverse-tail sampler and its moments.  Laws whose tail is only prescribed on
``r >= 1`` (exponential and stretched-exponential) put the remaining mass
``1 - tail(1)`` uniformly on ``[0, 1)``.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Any

import numpy as np
from scipy import integrate

QUAD_RTOL = 1e-10


class RadiusLaw(ABC):
    """Base class of the radius laws."""

    kind: str = ""

    @abstractmethod
    def tail(self, r):
        """``mu[r, inf)``, vectorised over ``r``."""

    def tail_strict(self, r):
        """``mu(r, inf)``; differs from :meth:`tail` only at atoms."""
        return self.tail(r)

    @abstractmethod
    def inverse_tail(self, u):
        """Radius ``R`` with ``tail(R) == u`` for ``u`` in ``(0, 1]``."""

    @property
    def sup(self) -> float:
        """Right end of the support."""
        return math.inf

    def breakpoints(self) -> tuple[float, ...]:
        """Radii where the tail has a kink or a jump."""
        return ()

    @abstractmethod
    def moment_is_finite(self, k: float) -> bool:
        ...

    @abstractmethod
    def to_dict(self) -> dict[str, Any]:
        ...

    def band_mass(self, lo, hi):
        """``mu[lo, hi)``."""
        return np.asarray(self.tail(lo), dtype=float) - np.asarray(self.tail(hi), dtype=float)

    def sample_in_band(self, lo, hi, u):
        """Inverse-tail draw conditioned on ``[lo, hi)`` from uniforms ``u`` in ``[0, 1)``."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        t_lo = np.asarray(self.tail(lo), dtype=float)
        t_hi = np.asarray(self.tail(hi), dtype=float)
        target = t_hi + (1.0 - np.asarray(u)) * (t_lo - t_hi)
        r = np.asarray(self.inverse_tail(target), dtype=float)
        return np.clip(r, lo, np.nextafter(hi, -np.inf))

    def sample(self, rng: np.random.Generator, size=None):
        u = 1.0 - rng.random(size)
        r = self.inverse_tail(u)
        return float(r) if size is None else np.asarray(r, dtype=float)

    def moment(self, k: float) -> float:
        """``E[R^k]``; ``math.inf`` when the integral diverges."""
        return _moment(self, float(k))


def sample_radius(law: RadiusLaw, rng: np.random.Generator) -> float:
    return law.sample(rng)


def tail(law: RadiusLaw, r: float) -> float:
    if r < 0:
        raise ValueError("r must be non-negative")
    return float(law.tail(r))


def satisfies_sharpness_moment(law: RadiusLaw, d: int) -> bool:
    """Whether the ``5d - 3`` moment is finite."""
    return law.moment_is_finite(5 * d - 3)


@dataclass(frozen=True)
class Dirac(RadiusLaw):
    r0: float
    kind = "dirac"

    def __post_init__(self):
        if not self.r0 >= 0:
            raise ValueError("r0 must be non-negative")

    def tail(self, r):
        return np.where(np.asarray(r) <= self.r0, 1.0, 0.0)[()]

    def tail_strict(self, r):
        return np.where(np.asarray(r) < self.r0, 1.0, 0.0)[()]

    def inverse_tail(self, u):
        return np.full(np.shape(u), float(self.r0))[()]

    @property
    def sup(self):
        return float(self.r0)

    def breakpoints(self):
        return (float(self.r0),)

    def moment_is_finite(self, k):
        return True

    def moment(self, k):
        return float(self.r0) ** k if k > 0 else 1.0

    def to_dict(self):
        return {"kind": self.kind, "r0": self.r0}


@dataclass(frozen=True)
class ExpTail(RadiusLaw):
    """``tail(r) = exp(-c r)`` for ``r >= 1``."""

    c: float
    kind = "exp_tail"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        t1 = math.exp(-self.c)
        with np.errstate(over="ignore"):
            out = np.where(r >= 1.0, np.exp(-self.c * np.maximum(r, 1.0)),
                           1.0 - (1.0 - t1) * np.clip(r, 0.0, 1.0))
        return out[()]

    def inverse_tail(self, u):
        u = np.asarray(u, dtype=float)
        t1 = math.exp(-self.c)
        with np.errstate(divide="ignore"):
            out = np.where(u >= t1, (1.0 - u) / (1.0 - t1), -np.log(np.minimum(u, t1)) / self.c)
        return out[()]

    def breakpoints(self):
        return (1.0,)

    def moment_is_finite(self, k):
        return True

    def to_dict(self):
        return {"kind": self.kind, "c": self.c}


@dataclass(frozen=True)
class PowerLawC1(RadiusLaw):
    """``tail(r) = r^-(d + c)`` for ``r >= 1``, no mass below 1."""

    c: float
    d: int
    kind = "power_law_c1"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")

    @property
    def exponent(self) -> float:
        return self.d + self.c

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= 1.0, 1.0, np.maximum(r, 1.0) ** -self.exponent)[()]

    def inverse_tail(self, u):
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            return (u ** (-1.0 / self.exponent))[()]

    def breakpoints(self):
        return (1.0,)

    def moment_is_finite(self, k):
        return k < self.exponent

    def to_dict(self):
        return {"kind": self.kind, "c": self.c, "d": self.d}


@dataclass(frozen=True)
class StretchedExpC2(RadiusLaw):
    """``tail(r) = exp(-c r^a)`` for ``r >= 1`` with ``0 < a < 1``."""

    c: float
    a: float
    kind = "stretched_exp_c2"

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not 0 < self.a < 1:
            raise ValueError("a must lie in (0, 1)")

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        t1 = math.exp(-self.c)
        out = np.where(r >= 1.0, np.exp(-self.c * np.maximum(r, 1.0) ** self.a),
                       1.0 - (1.0 - t1) * np.clip(r, 0.0, 1.0))
        return out[()]

    def inverse_tail(self, u):
        u = np.asarray(u, dtype=float)
        t1 = math.exp(-self.c)
        with np.errstate(divide="ignore"):
            big = (-np.log(np.minimum(u, t1)) / self.c) ** (1.0 / self.a)
        return np.where(u >= t1, (1.0 - u) / (1.0 - t1), big)[()]

    def breakpoints(self):
        return (1.0,)

    def moment_is_finite(self, k):
        return True

    def to_dict(self):
        return {"kind": self.kind, "c": self.c, "a": self.a}


@dataclass(frozen=True)
class TruncatedAt(RadiusLaw):
    """``inner`` conditioned on ``R <= rmax``."""

    inner: RadiusLaw
    rmax: float
    kind = "truncated"

    def __post_init__(self):
        if self._kept_mass() <= 0:
            raise ValueError("truncation leaves no mass")

    def _cut(self) -> float:
        return float(self.inner.tail_strict(self.rmax))

    def _kept_mass(self) -> float:
        return 1.0 - self._cut()

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        s = self._cut()
        t = (np.asarray(self.inner.tail(r), dtype=float) - s) / (1.0 - s)
        return np.where(r <= self.rmax, t, 0.0)[()]

    def tail_strict(self, r):
        r = np.asarray(r, dtype=float)
        s = self._cut()
        t = (np.asarray(self.inner.tail_strict(r), dtype=float) - s) / (1.0 - s)
        return np.where(r < self.rmax, t, 0.0)[()]

    def inverse_tail(self, u):
        s = self._cut()
        return self.inner.inverse_tail(s + np.asarray(u, dtype=float) * (1.0 - s))

    @property
    def sup(self):
        return min(float(self.rmax), self.inner.sup)

    def breakpoints(self):
        return tuple(sorted(set(self.inner.breakpoints()) | {float(self.rmax)}))

    def moment_is_finite(self, k):
        return True

    def moment(self, k):
        if isinstance(self.inner, Dirac):
            return self.inner.moment(k)
        return _moment(self, float(k))

    def to_dict(self):
        return {"kind": self.kind, "inner": self.inner.to_dict(), "rmax": self.rmax}


_KINDS = {
    "dirac": (Dirac, ("r0",)),
    "exp_tail": (ExpTail, ("c",)),
    "power_law_c1": (PowerLawC1, ("c", "d")),
    "stretched_exp_c2": (StretchedExpC2, ("c", "a")),
}


def law_from_dict(spec: dict[str, Any], d: int | None = None) -> RadiusLaw:
    """Build a law from its JSON form, e.g. ``{"kind": "power_law_c1", "c": 0.5}``.

    ``d`` fills in the dimension of a power law when the dict omits it.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValueError("law must be an object with a 'kind' field")
    kind = spec["kind"]
    if kind == "truncated":
        extra = set(spec) - {"kind", "inner", "rmax"}
        if extra or "inner" not in spec or "rmax" not in spec:
            raise ValueError("truncated law needs exactly 'inner' and 'rmax'")
        return TruncatedAt(law_from_dict(spec["inner"], d), float(spec["rmax"]))
    if kind not in _KINDS:
        raise ValueError(f"unknown law kind {kind!r}")
    cls, fields = _KINDS[kind]
    params = {k: v for k, v in spec.items() if k != "kind"}
    if kind == "power_law_c1" and "d" not in params and d is not None:
        params["d"] = d
    unknown = set(params) - set(fields)
    missing = set(fields) - set(params)
    if unknown or missing:
        raise ValueError(f"law {kind!r}: unknown fields {sorted(unknown)}, missing {sorted(missing)}")
    if kind == "power_law_c1":
        params["d"] = int(params["d"])
    else:
        params = {k: float(v) for k, v in params.items()}
    if "c" in params:
        params["c"] = float(params["c"])
    return cls(**params)


@lru_cache(maxsize=256)
def _moment(law: RadiusLaw, k: float) -> float:
    # E[R^k] = k * int_0^inf r^(k-1) tail(r) dr
    if k == 0:
        return 1.0
    if not law.moment_is_finite(k):
        return math.inf

    def f(r):
        t = float(law.tail(r))
        return k * r ** (k - 1) * t if t > 0.0 else 0.0

    pts = sorted({0.0, *(p for p in law.breakpoints() if p > 0)})
    cut = max(pts[-1], 1.0) * 4.0
    if math.isfinite(law.sup):
        cut = law.sup
    pts = [p for p in pts if p < cut] + [cut]
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=0.0, epsrel=QUAD_RTOL, limit=200)
        total += val
    if math.isfinite(law.sup):
        return total

    # beyond the cut: r = 1/u
    def g(u):
        if u == 0.0:
            return 0.0
        return f(1.0 / u) / (u * u)

    val, _ = integrate.quad(g, 0.0, 1.0 / cut, epsabs=0.0, epsrel=QUAD_RTOL, limit=400)
    return total + val
