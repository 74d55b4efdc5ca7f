"""Compiled kernels: hierarchical grid, union-find, incremental thresholds."""
from __future__ import annotations

import math

import numpy as np
from numba import njit

SPAN = 2  # neighbour cells searched on each side at a level


@njit(cache=True, nogil=True)
def _find(parent, i):
    while parent[i] != i:
        parent[i] = parent[parent[i]]
        i = parent[i]
    return i


@njit(cache=True, nogil=True)
def _lower_bound(keys, a, b, key):
    while a < b:
        mid = (a + b) >> 1
        if keys[mid] < key:
            a = mid + 1
        else:
            b = mid
    return a


@njit(cache=True, nogil=True)
def _levels(radii):
    n = radii.shape[0]
    lev = np.zeros(n, np.int64)
    for i in range(n):
        r = radii[i]
        if r > 1.0:
            lev[i] = int(math.ceil(math.log2(r)))
            # guard against rounding in log2
            while 2.0 ** lev[i] < r:
                lev[i] += 1
    return lev


@njit(cache=True, nogil=True)
def intersecting_pairs(centers, radii):
    """All pairs ``i, j`` with ``|z_i - z_j| <= R_i + R_j``.

    Each ball sits at level ``ceil(log2 max(R, 1))`` in a grid of cell side
    ``2^level``; a ball is compared with the balls of its own level (``j > i``)
    and of every coarser level in the ``5^d`` cells around it.
    """
    n, d = centers.shape
    cap = max(16, 8 * n)
    ei = np.empty(cap, np.int64)
    ej = np.empty(cap, np.int64)
    m = 0
    if n < 2:
        return ei[:0], ej[:0]
    lev = _levels(radii)
    top = lev.max()
    nlev = top + 1
    # per-level sorted keys
    order = np.argsort(lev, kind="mergesort")
    start = np.zeros(nlev + 1, np.int64)
    for i in range(n):
        start[lev[i] + 1] += 1
    for l in range(nlev):
        start[l + 1] += start[l]
    lo = np.zeros((nlev, d), np.int64)
    ext = np.ones((nlev, d), np.int64)
    keys = np.empty(n, np.int64)
    idx = np.empty(n, np.int64)
    dense = np.zeros(nlev, np.bool_)
    toff = np.zeros(nlev, np.int64)
    ntab = 0
    for l in range(nlev):
        a, b = start[l], start[l + 1]
        if a == b:
            continue
        size = 2.0 ** l
        for k in range(d):
            mn = 1 << 62
            mx = -(1 << 62)
            for t in range(a, b):
                c = int(math.floor(centers[order[t], k] / size))
                if c < mn:
                    mn = c
                if c > mx:
                    mx = c
            lo[l, k] = mn - SPAN
            ext[l, k] = mx - mn + 1 + 2 * SPAN
        tmpk = np.empty(b - a, np.int64)
        for t in range(a, b):
            key = 0
            for k in range(d):
                c = int(math.floor(centers[order[t], k] / size)) - lo[l, k]
                key = key * ext[l, k] + c
            tmpk[t - a] = key
        srt = np.argsort(tmpk, kind="mergesort")
        for t in range(b - a):
            keys[a + t] = tmpk[srt[t]]
            idx[a + t] = order[a + srt[t]]
        ncell = 1
        for k in range(d):
            ncell *= ext[l, k]
        if ncell <= 16 * (b - a) + 4096:
            dense[l] = True
            toff[l] = ntab
            ntab += ncell + 1
    # dense levels: table[toff + key] = first sorted position with that key
    table = np.empty(ntab, np.int64)
    for l in range(nlev):
        if not dense[l]:
            continue
        a, b = start[l], start[l + 1]
        ncell = 1
        for k in range(d):
            ncell *= ext[l, k]
        p = a
        for key in range(ncell + 1):
            while p < b and keys[p] < key:
                p += 1
            table[toff[l] + key] = p
    noff = (2 * SPAN + 1) ** d
    offs = np.empty((noff, d), np.int64)
    for o in range(noff):
        rem = o
        for k in range(d):
            offs[o, k] = rem % (2 * SPAN + 1) - SPAN
            rem //= 2 * SPAN + 1
    # key(cell + off) = key(cell) + delta[l, o] since keys are linear in cells
    delta = np.zeros((nlev, noff), np.int64)
    for l in range(nlev):
        for o in range(noff):
            acc = 0
            for k in range(d):
                acc = acc * ext[l, k] + offs[o, k]
            delta[l, o] = acc
    cell = np.empty(d, np.int64)
    for i in range(n):
        li = lev[i]
        for l in range(li, nlev):
            a, b = start[l], start[l + 1]
            if a == b:
                continue
            size = 2.0 ** l
            base = 0
            inner = True
            for k in range(d):
                cell[k] = int(math.floor(centers[i, k] / size)) - lo[l, k]
                base = base * ext[l, k] + cell[k]
                if cell[k] < SPAN or cell[k] >= ext[l, k] - SPAN:
                    inner = False
            for o in range(noff):
                if not inner:
                    ok = True
                    for k in range(d):
                        c = cell[k] + offs[o, k]
                        if c < 0 or c >= ext[l, k]:
                            ok = False
                            break
                    if not ok:
                        continue
                key = base + delta[l, o]
                if dense[l]:
                    p = table[toff[l] + key]
                    q = table[toff[l] + key + 1]
                else:
                    p = _lower_bound(keys, a, b, key)
                    q = p
                    while q < b and keys[q] == key:
                        q += 1
                for p in range(p, q):
                    j = idx[p]
                    if l == li and j <= i:
                        continue
                    s = 0.0
                    for k in range(d):
                        dz = centers[i, k] - centers[j, k]
                        s += dz * dz
                    rr = radii[i] + radii[j]
                    if s <= rr * rr:
                        if m == cap:
                            cap *= 2
                            ei2 = np.empty(cap, np.int64)
                            ej2 = np.empty(cap, np.int64)
                            ei2[:m] = ei[:m]
                            ej2[:m] = ej[:m]
                            ei, ej = ei2, ej2
                        ei[m] = i
                        ej[m] = j
                        m += 1
    return ei[:m], ej[:m]


@njit(cache=True, nogil=True)
def component_labels(n, ei, ej):
    """Compact component labels (in order of first appearance) from an edge list."""
    parent = np.arange(n)
    size = np.ones(n, np.int64)
    for e in range(ei.shape[0]):
        a = _find(parent, ei[e])
        b = _find(parent, ej[e])
        if a == b:
            continue
        if size[a] < size[b]:
            a, b = b, a
        parent[b] = a
        size[a] += size[b]
    labels = np.empty(n, np.int64)
    remap = -np.ones(n, np.int64)
    k = 0
    for i in range(n):
        r = _find(parent, i)
        if remap[r] < 0:
            remap[r] = k
            k += 1
        labels[i] = remap[r]
    return labels, k


@njit(cache=True, nogil=True)
def component_aggregates(labels, k, reach, mind, covers):
    mx = np.full(k, -np.inf)
    mn = np.full(k, np.inf)
    cov = np.zeros(k, np.bool_)
    for i in range(labels.shape[0]):
        c = labels[i]
        if reach[i] > mx[c]:
            mx[c] = reach[i]
        if mind[i] < mn[c]:
            mn[c] = mind[i]
        if covers[i]:
            cov[c] = True
    return mx, mn, cov


@njit(cache=True, nogil=True)
def birth_thresholds(births, ei, ej, reach, mind, inner, outer):
    """Smallest birth at which ``B_inner[q] <-> dB_outer[q]`` holds, per query ``q``.

    Balls are switched on in order of birth and merged with their active
    neighbours; only the component of the newest ball can newly satisfy a
    query.  ``inf`` marks queries never satisfied.
    """
    n = births.shape[0]
    nq = inner.shape[0]
    out = np.full(nq, np.inf)
    if n == 0:
        return out
    deg = np.zeros(n + 1, np.int64)
    for e in range(ei.shape[0]):
        deg[ei[e] + 1] += 1
        deg[ej[e] + 1] += 1
    for i in range(n):
        deg[i + 1] += deg[i]
    fill = deg[:-1].copy()
    nbr = np.empty(deg[n], np.int64)
    for e in range(ei.shape[0]):
        nbr[fill[ei[e]]] = ej[e]
        fill[ei[e]] += 1
        nbr[fill[ej[e]]] = ei[e]
        fill[ej[e]] += 1
    order = np.argsort(births, kind="mergesort")
    rank = np.empty(n, np.int64)
    for t in range(n):
        rank[order[t]] = t
    parent = np.arange(n)
    size = np.ones(n, np.int64)
    mx = reach.copy()
    mn = mind.copy()
    pending = nq
    for t in range(n):
        i = order[t]
        for p in range(deg[i], deg[i + 1]):
            j = nbr[p]
            if rank[j] > t:
                continue
            a = _find(parent, i)
            b = _find(parent, j)
            if a == b:
                continue
            if size[a] < size[b]:
                a, b = b, a
            parent[b] = a
            size[a] += size[b]
            if mx[b] > mx[a]:
                mx[a] = mx[b]
            if mn[b] < mn[a]:
                mn[a] = mn[b]
        root = _find(parent, i)
        for q in range(nq):
            if out[q] == np.inf and mn[root] <= inner[q] and mx[root] >= outer[q]:
                out[q] = births[i]
                pending -= 1
        if pending == 0:
            break
    return out
