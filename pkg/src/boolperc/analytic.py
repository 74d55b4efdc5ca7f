"""Closed-form probabilities of single-ball events.

All quantities reduce to Poisson void probabilities: the number of balls
with a given geometric property is Poisson, with mean ``lam`` times a radial
integral of the radius tail.  Integrals are evaluated with QUADPACK,
split at every kink of the integrand and mapped through ``a = 1/u`` beyond
the last kink.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

from scipy import integrate

from .radius_laws import RadiusLaw

RTOL = 1e-8
ATOL = 1e-14


class HallSaturationWarning(RuntimeWarning):
    """The d-th radius moment is infinite, so space is a.s. covered."""


@dataclass(frozen=True)
class GeometryConstants:
    d: int
    c_d: float
    v_d: float


@lru_cache(maxsize=None)
def geometry(d: int) -> GeometryConstants:
    """Unit-sphere area ``c_d`` and unit-ball volume ``v_d`` in dimension ``d``."""
    if d < 1:
        raise ValueError("dimension must be positive")
    v = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    return GeometryConstants(d, d * v, v)


def _saturated(law: RadiusLaw, d: int) -> bool:
    if law.moment_is_finite(d):
        return False
    warnings.warn("Hall saturation: space a.s. covered (infinite d-th moment)",
                  HallSaturationWarning, stacklevel=3)
    return True


def _integrate(f, pts, tail_from=None, rtol=RTOL):
    """Sum of ``quad`` over consecutive ``pts``, plus ``[tail_from, inf)`` via ``a = 1/u``."""
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            val, _ = integrate.quad(f, a, b, epsabs=ATOL, epsrel=rtol, limit=200)
            total += val
    if tail_from is not None:
        def g(u):
            if u == 0.0:
                return 0.0
            return f(1.0 / u) / (u * u)

        val, _ = integrate.quad(g, 0.0, 1.0 / tail_from, epsabs=ATOL, epsrel=rtol, limit=400)
        total += val
    return total


@lru_cache(maxsize=4096)
def pi_delta_exponent(law: RadiusLaw, d: int, r: float, delta: float) -> float:
    """``c_d * int_0^inf a^(d-1) mu[|a - 2 delta r| v |r - 2 delta r - a|, inf) da``."""
    g = geometry(d)
    p = 2.0 * delta * r
    q = r - 2.0 * delta * r

    def f(a):
        t = float(law.tail(max(abs(a - p), abs(q - a))))
        return a ** (d - 1) * t if t > 0.0 else 0.0

    kinks = {0.0, p, q, 0.5 * (p + q)}
    for t in law.breakpoints():
        kinks.update((p - t, p + t, q - t, q + t))
    pts = sorted(k for k in kinks if k >= 0.0)
    if math.isfinite(law.sup):
        # integrand vanishes once both distances exceed the support
        end = max(p, q) + law.sup
        pts = [k for k in pts if k < end] + [end]
        return g.c_d * _integrate(f, pts)
    last = max(pts[-1], 1.0) * 2.0
    pts.append(last)
    return g.c_d * _integrate(f, pts, tail_from=last)


def pi_delta(law: RadiusLaw, lam: float, d: int, r: float, delta: float) -> float:
    """Probability that some ball meets both ``B_{2 delta r}`` and ``dB_{(1 - 2 delta) r}``."""
    if lam < 0:
        raise ValueError("intensity must be non-negative")
    if r < 0:
        raise ValueError("r must be non-negative")
    if not 0 <= delta < 0.25:
        raise ValueError("delta must lie in [0, 1/4)")
    if lam == 0:
        return 0.0
    if _saturated(law, d):
        return 1.0
    return -math.expm1(-lam * pi_delta_exponent(law, d, float(r), float(delta)))


def phi(law: RadiusLaw, lam: float, d: int, r: float) -> float:
    """Probability that a single ball covers the origin and meets ``dB_r``."""
    return pi_delta(law, lam, d, r, 0.0)


def coverage_prob(law: RadiusLaw, lam: float, d: int) -> float:
    """Probability that the origin is covered."""
    if lam < 0:
        raise ValueError("intensity must be non-negative")
    if lam == 0:
        return 0.0
    if _saturated(law, d):
        return 1.0
    return -math.expm1(-lam * geometry(d).v_d * law.moment(d))


@lru_cache(maxsize=4096)
def _truncation_integral(law: RadiusLaw, d: int, r: float, N: float) -> float:
    # int_[N, inf) (r + rho)^d dmu = (r + N)^d mu[N, inf) + int_N^inf d (r + rho)^(d-1) mu[rho, inf) drho
    head = (r + N) ** d * float(law.tail(N))

    def f(rho):
        t = float(law.tail(rho))
        return d * (r + rho) ** (d - 1) * t if t > 0.0 else 0.0

    pts = sorted({N, *(b for b in law.breakpoints() if b > N)})
    if math.isfinite(law.sup):
        end = law.sup
        if end <= N:
            return head
        pts = [k for k in pts if k < end] + [end]
        return head + _integrate(f, pts, rtol=1e-10)
    last = max(pts[-1], 1.0) * 2.0
    pts.append(last)
    return head + _integrate(f, pts, tail_from=last, rtol=1e-10)


def truncation_intensity(law: RadiusLaw, lam: float, d: int, r: float, N: float) -> float:
    """Expected number of balls with radius ``>= N`` that intersect ``B_r``."""
    if N < 0:
        raise ValueError("N must be non-negative")
    if lam == 0:
        return 0.0
    if _saturated(law, d):
        return math.inf
    return lam * geometry(d).v_d * _truncation_integral(law, d, float(r), float(N))


@lru_cache(maxsize=1024)
def n_max(law: RadiusLaw, lam: float, d: int, r: float, eps: float) -> int:
    """Least integer ``N >= 1`` whose truncation intensity is at most ``eps``."""
    if truncation_intensity(law, lam, d, r, 1.0) <= eps:
        return 1
    lo, hi = 1, 2
    while truncation_intensity(law, lam, d, r, float(hi)) > eps:
        lo, hi = hi, hi * 2
        if hi > 1 << 50:
            raise OverflowError("truncation radius does not converge")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if truncation_intensity(law, lam, d, r, float(mid)) > eps:
            lo = mid
        else:
            hi = mid
    return hi
