"""Cluster structure of a ball configuration and the connection events on it.

Two balls are adjacent when ``|z_i - z_j| <= R_i + R_j`` (closed).  Each
component keeps two aggregates measured from the origin: its reach
``max(|z| + R)`` and its inner distance ``min(|z| - R)``.  A component meets
``B_a`` iff its inner distance is ``<= a``; being connected it then meets
``dB_b`` for any ``b`` between that and its reach.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _kernels
from .sampler import BallConfig, restrict_to

NEVER = -math.inf
"""Connectivity radius of a configuration whose origin is uncovered."""


@dataclass
class ClusterIndex:
    config: BallConfig
    labels: np.ndarray
    n_components: int
    reach: np.ndarray
    mindist: np.ndarray
    covers_origin: np.ndarray

    @property
    def window_radius(self) -> float:
        return self.config.window_radius

    def components(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        cuts = np.flatnonzero(np.diff(self.labels[order])) + 1
        return np.split(order, cuts) if len(order) else []

    def dump(self) -> str:
        """JSON description of the components, for debugging failed checks."""
        comps = [{"balls": [int(i) for i in c], "reach": float(self.reach[k]),
                  "mindist": float(self.mindist[k]), "covers_origin": bool(self.covers_origin[k])}
                 for k, c in enumerate(self.components())]
        return json.dumps({"n_components": self.n_components, "components": comps})


def ball_extents(centers: np.ndarray, radii: np.ndarray):
    """Per-ball reach, inner distance and origin-cover flag."""
    norm2 = np.einsum("ij,ij->i", centers, centers)
    norm = np.sqrt(norm2)
    covers = norm2 <= radii * radii
    reach = norm + radii
    mind = norm - radii
    # keep the sign of the inner distance consistent with the squared-norm test
    mind = np.where(covers, np.minimum(mind, 0.0), np.maximum(mind, np.nextafter(0.0, 1.0)))
    return reach, mind, covers


def adjacency(config: BallConfig):
    """Intersecting pairs ``(i, j)`` with ``i != j``, each pair once."""
    c = np.ascontiguousarray(config.centers, dtype=np.float64)
    r = np.ascontiguousarray(config.radii, dtype=np.float64)
    return _kernels.intersecting_pairs(c, r)


def build_clusters(config: BallConfig) -> ClusterIndex:
    n = len(config)
    ei, ej = adjacency(config)
    labels, k = _kernels.component_labels(n, ei, ej)
    reach, mind, covers = ball_extents(config.centers, config.radii)
    mx, mn, cov = _kernels.component_aggregates(labels, k, reach, mind, covers)
    return ClusterIndex(config, labels, int(k), mx, mn, cov)


def _check_window(index: ClusterIndex, r: float):
    if r > index.window_radius:
        raise ValueError(f"radius {r} exceeds the sampling window {index.window_radius}")


def connected_origin_to_sphere(index: ClusterIndex, r: float) -> bool:
    """``0 <-> dB_r``."""
    _check_window(index, r)
    return bool(np.any(index.covers_origin & (index.reach >= r)))


def connected_ball_to_sphere(index: ClusterIndex, inner: float, outer: float) -> bool:
    """``B_inner <-> dB_outer``; ``inner == 0`` means the origin itself."""
    if not 0 <= inner < outer:
        raise ValueError("need 0 <= inner < outer")
    _check_window(index, outer)
    return bool(np.any((index.mindist <= inner) & (index.reach >= outer)))


def connectivity_radius(index: ClusterIndex) -> float:
    """Reach of the origin's component, or :data:`NEVER` when it is uncovered.

    ``0 <-> dB_s`` holds iff ``s`` is at most this value (for ``s`` inside the
    window).
    """
    if not np.any(index.covers_origin):
        return NEVER
    return float(index.reach[index.covers_origin].max())


def connected_restricted(config: BallConfig, z_center, z_radius: float, inner: float, outer: float) -> bool:
    """``B_inner <-> dB_outer`` using only the balls contained in ``B_{z_radius}(z_center)``."""
    sub = restrict_to(config, z_center, z_radius)
    if len(sub) == 0:
        return False
    return connected_ball_to_sphere(build_clusters(sub), inner, outer)


def thresholds(config: BallConfig, queries) -> np.ndarray:
    """Smallest intensity at which each ``(inner, outer)`` query holds.

    Needs a birth-marked configuration (``sample_config(..., births=True)``).
    Entries are ``inf`` where the query fails even at the top intensity.
    """
    if config.births is None:
        raise ValueError("configuration carries no coupling marks")
    q = np.asarray(queries, dtype=float).reshape(-1, 2)
    if np.any(q[:, 1] > config.window_radius):
        raise ValueError("query radius exceeds the sampling window")
    ei, ej = adjacency(config)
    reach, mind, _ = ball_extents(config.centers, config.radii)
    return _kernels.birth_thresholds(np.ascontiguousarray(config.births, dtype=np.float64), ei, ej,
                                     reach, mind, np.ascontiguousarray(q[:, 0]), np.ascontiguousarray(q[:, 1]))


def vacant_connected(config: BallConfig, r: float, h: float) -> bool:
    """Rasterised test of ``0 *<-> dB_r`` through the uncovered set (d = 2).

    Pixels of side ``h`` are centred on ``h Z^2`` so the origin is a pixel
    centre; a pixel is vacant when its centre lies outside every ball.
    Vacant pixels meeting ``B_r`` are joined 4-connectedly.  This is an
    approximation without an error bound.
    """
    if config.d != 2:
        raise NotImplementedError("vacant-set connectivity is implemented for d = 2 only")
    if not h > 0:
        raise ValueError("pixel size must be positive")
    m = int(math.ceil(r / h)) + 1
    ax = np.arange(-m, m + 1) * h
    X, Y = np.meshgrid(ax, ax, indexing="ij")
    # nearest/farthest point of each pixel to the origin
    nx = np.maximum(np.abs(X) - h / 2, 0.0)
    ny = np.maximum(np.abs(Y) - h / 2, 0.0)
    near = np.hypot(nx, ny)
    far = np.hypot(np.abs(X) + h / 2, np.abs(Y) + h / 2)
    inside = near <= r
    boundary = inside & (far >= r)
    vacant = inside.copy()
    for (cx, cy), R in zip(config.centers, config.radii):
        i0 = max(int(math.floor((cx - R) / h)) + m, 0)
        i1 = min(int(math.ceil((cx + R) / h)) + m, 2 * m)
        j0 = max(int(math.floor((cy - R) / h)) + m, 0)
        j1 = min(int(math.ceil((cy + R) / h)) + m, 2 * m)
        if i0 > i1 or j0 > j1:
            continue
        sx = X[i0:i1 + 1, j0:j1 + 1] - cx
        sy = Y[i0:i1 + 1, j0:j1 + 1] - cy
        vacant[i0:i1 + 1, j0:j1 + 1] &= sx * sx + sy * sy > R * R
    if not vacant[m, m]:
        return False
    lab, _ = ndimage.label(vacant)
    return bool(np.any(boundary & (lab == lab[m, m])))
