"""Shared oracles for the test suite.

Everything here is deliberately naive (pure numpy, O(n^2)) so it can serve
as an independent check of the compiled code paths.
"""
from __future__ import annotations

import numpy as np
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def brute_labels(centers: np.ndarray, radii: np.ndarray) -> np.ndarray:
    """Component labels from the all-pairs intersection test (first-appearance order)."""
    n = len(radii)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            dz = centers[i] - centers[j]
            if float(dz @ dz) <= (radii[i] + radii[j]) ** 2:
                a, b = find(i), find(j)
                if a != b:
                    parent[b] = a
    out = np.empty(n, np.int64)
    seen = {}
    for i in range(n):
        out[i] = seen.setdefault(find(i), len(seen))
    return out


def same_partition(a: np.ndarray, b: np.ndarray) -> bool:
    """Label arrays describing the same partition (up to renaming)."""
    if len(a) != len(b):
        return False
    fwd, bwd = {}, {}
    for x, y in zip(a.tolist(), b.tolist()):
        if fwd.setdefault(x, y) != y or bwd.setdefault(y, x) != x:
            return False
    return True


def pi_event(centers: np.ndarray, radii: np.ndarray, r: float, delta: float) -> bool:
    """Some ball meets both ``B_{2 delta r}`` and ``dB_{(1 - 2 delta) r}``."""
    if len(radii) == 0:
        return False
    p, q = 2 * delta * r, (1 - 2 * delta) * r
    a = np.sqrt(np.einsum("ij,ij->i", centers, centers))
    meets_inner = a <= p + radii
    meets_sphere = (a - radii <= q) & (a + radii >= q)
    return bool(np.any(meets_inner & meets_sphere))


def raster_connected(centers, radii, inner: float, outer: float, h: float) -> bool:
    """``B_inner <-> dB_outer`` on a pixel rendering of the occupied set (d = 2)."""
    from scipy import ndimage

    m = int(np.ceil((outer + 1) / h))
    ax = np.arange(-m, m + 1) * h
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    occ = np.zeros(X.shape, bool)
    for (cx, cy), R in zip(centers, radii):
        occ |= (X - cx) ** 2 + (Y - cy) ** 2 <= R * R
    lab, _ = ndimage.label(occ, structure=np.ones((3, 3)))
    rr = np.hypot(X, Y)
    a = set(np.unique(lab[occ & (rr <= inner)]).tolist())
    b = set(np.unique(lab[occ & (rr >= outer)]).tolist())
    return bool((a & b) - {0})


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
