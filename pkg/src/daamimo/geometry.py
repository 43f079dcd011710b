"""Cell layout: hexagonal cells, tiered sub-array placement and user drops.

Hexagons are pointy-top with circumradius ``cell_radius``; neighbouring cells
share an edge, so their centres are ``sqrt(3) * cell_radius`` apart.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig

# edge normals of a pointy-top hexagon
_NORMAL_ANGLES = np.deg2rad(np.arange(0, 360, 60))
_NORMALS = np.stack([np.cos(_NORMAL_ANGLES), np.sin(_NORMAL_ANGLES)], axis=1)

MAX_DRAWS_PER_USER = 10_000


class SamplingExhausted(RuntimeError):
    """Rejection sampling of user positions gave up; the geometry is likely infeasible."""


@dataclass(frozen=True)
class Layout:
    cell_centers: np.ndarray  # (L, 2)
    subarray_positions: np.ndarray  # (L, N, 2)
    user_positions: np.ndarray  # (L, K, 2)

    def to_json(self) -> str:
        return json.dumps({
            "cell_centers": self.cell_centers.tolist(),
            "subarray_positions": self.subarray_positions.tolist(),
            "user_positions": self.user_positions.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "Layout":
        d = json.loads(text)
        return cls(np.asarray(d["cell_centers"], dtype=float),
                   np.asarray(d["subarray_positions"], dtype=float),
                   np.asarray(d["user_positions"], dtype=float))

    def distances(self) -> np.ndarray:
        """User-to-sub-array distances indexed [j, k, l, n]."""
        u = self.user_positions[:, :, None, None, :]
        s = self.subarray_positions[None, None, :, :, :]
        return np.linalg.norm(u - s, axis=-1)

    def bearings(self) -> np.ndarray:
        """Angle of each user seen from each sub-array, indexed [j, k, l, n]."""
        u = self.user_positions[:, :, None, None, :]
        s = self.subarray_positions[None, None, :, :, :]
        diff = u - s
        return np.arctan2(diff[..., 1], diff[..., 0])


def cell_centers(L: int, cell_radius: float) -> np.ndarray:
    """Centres of the first L cells of a hexagonal grid, spiralling out from the origin."""
    spacing = math.sqrt(3.0) * cell_radius
    # axial hex coordinates, ring by ring
    dirs = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)]
    coords = [(0, 0)]
    ring = 1
    while len(coords) < L:
        q, r = ring * dirs[4][0], ring * dirs[4][1]
        for d in range(6):
            for _ in range(ring):
                coords.append((q, r))
                q, r = q + dirs[d][0], r + dirs[d][1]
        ring += 1
    coords = coords[:L]
    # axial (q, r) -> cartesian for pointy-top hexagons
    out = np.array([[spacing * (q + r / 2.0), spacing * (math.sqrt(3.0) / 2.0) * r] for q, r in coords])
    return out


def in_hexagon(points, center, cell_radius: float) -> np.ndarray:
    p = np.asarray(points, dtype=float) - np.asarray(center, dtype=float)
    apothem = cell_radius * math.sqrt(3.0) / 2.0
    proj = p @ _NORMALS.T
    return np.all(proj <= apothem * (1 + 1e-12), axis=-1)


def place_subarrays(config: NetworkConfig, cell_center=(0.0, 0.0)) -> np.ndarray:
    """Positions of the N sub-arrays of one cell.

    Ring t has radius ``subarray_offset * t`` and holds up to 6t points,
    equally spaced; ring t > 1 is rotated by pi / (6t) to stagger the tiers.
    A single sub-array sits at the cell centre.
    """
    c = np.asarray(cell_center, dtype=float)
    N = config.N
    if N == 1:
        return c[None, :].copy()
    pts = []
    t = 1
    while len(pts) < N:
        count = min(6 * t, N - len(pts))
        rot = 0.0 if t == 1 else math.pi / (6 * t)
        ang = rot + 2 * math.pi * np.arange(count) / count
        radius = config.subarray_offset * t
        pts.extend(c + radius * np.stack([np.cos(ang), np.sin(ang)], axis=1))
        t += 1
    return np.array(pts)


def drop_users(config: NetworkConfig, rng: np.random.Generator,
               subarrays: np.ndarray | None = None,
               centers: np.ndarray | None = None) -> np.ndarray:
    """Uniform user positions, shape (L, K, 2).

    Each user is uniform over its hexagon with the disks of radius
    ``min_user_distance`` around every sub-array removed (rejection sampling).
    """
    if centers is None:
        centers = cell_centers(config.L, config.cell_radius)
    if subarrays is None:
        subarrays = np.stack([place_subarrays(config, c) for c in centers])
    all_arrays = subarrays.reshape(-1, 2)
    R = config.cell_radius
    half_h = R  # pointy-top: vertical extent +-R, horizontal +-apothem
    half_w = R * math.sqrt(3.0) / 2.0
    out = np.empty((config.L, config.K, 2))
    for l in range(config.L):
        for k in range(config.K):
            for _ in range(MAX_DRAWS_PER_USER):
                p = centers[l] + rng.uniform([-half_w, -half_h], [half_w, half_h])
                if not in_hexagon(p, centers[l], R):
                    continue
                if np.min(np.linalg.norm(all_arrays - p, axis=1)) < config.min_user_distance:
                    continue
                out[l, k] = p
                break
            else:
                raise SamplingExhausted(
                    f"no admissible position for user ({l},{k}) after {MAX_DRAWS_PER_USER} draws")
    return out


def large_scale_gain(d, kappa: float = 3.76):
    """Power-law gain (d / 1 m)^-kappa."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    out = d ** (-kappa)
    return out if out.ndim else float(out)


def make_layout(config: NetworkConfig, rng: np.random.Generator) -> Layout:
    centers = cell_centers(config.L, config.cell_radius)
    subarrays = np.stack([place_subarrays(config, c) for c in centers])
    users = drop_users(config, rng, subarrays, centers)
    return Layout(centers, subarrays, users)
