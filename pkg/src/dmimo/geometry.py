"""AP grid placement, UE drops, and wrap-around link geometry.

The square area is treated as a torus: horizontal distances are minimized over
the nine copies of the UE shifted by {-l, 0, +l} in x and y, which removes the
border effects a finite area would otherwise impose on the outer APs.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Shift order fixes tie-breaking: the unshifted copy wins, then lexicographic.
_SHIFTS = [(0.0, 0.0)] + sorted(
    (dx, dy) for dx in (-1.0, 0.0, 1.0) for dy in (-1.0, 0.0, 1.0)
    if not (dx == 0.0 and dy == 0.0)
)


@dataclass(frozen=True)
class LinkGeometry:
    d2d: float          # horizontal distance after wrap-around [m]
    d3d: float          # sqrt(d2d^2 + height gap^2) [m]
    azimuth: float      # angle AP -> UE against the common +x broadside [rad]


def place_aps(q: int, side: float, h_ap: float = 12.5) -> np.ndarray:
    """Positions of q APs on a uniform sqrt(q) x sqrt(q) grid of cell centers.

    Row-major: x varies fastest. Returns an array of shape (q, 3).
    """
    root = math.isqrt(q)
    if root * root != q or q < 1:
        raise ValueError(f"AP count must be a positive perfect square, got {q}")
    if side <= 0.0:
        raise ValueError(f"area side must be positive, got {side}")
    pitch = side / root
    centers = (np.arange(root) + 0.5) * pitch
    xs, ys = np.meshgrid(centers, centers)  # ys constant along rows
    out = np.column_stack([xs.ravel(), ys.ravel(), np.full(q, h_ap)])
    return out


def drop_ues(k: int, side: float, rng: np.random.Generator,
             h_ue: float = 1.5) -> np.ndarray:
    """k UE positions drawn iid uniform over [0, side) x [0, side), shape (k, 3)."""
    if k < 1:
        raise ValueError(f"UE count must be >= 1, got {k}")
    xy = rng.uniform(0.0, side, size=(k, 2))
    return np.column_stack([xy, np.full(k, h_ue)])


def _wrap_deltas(dx, dy, side):
    """Minimizing (dx, dy) over the 9 torus shifts; first minimum wins.

    Accepts arrays of any matching shape, returns (dx, dy, d2) arrays.
    """
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    cand_dx = np.stack([dx + sx * side for sx, _ in _SHIFTS], axis=-1)
    cand_dy = np.stack([dy + sy * side for _, sy in _SHIFTS], axis=-1)
    d2 = cand_dx**2 + cand_dy**2
    pick = np.argmin(d2, axis=-1)  # argmin takes the first minimum: (0,0) shift wins ties
    idx = np.expand_dims(pick, -1)
    best_dx = np.take_along_axis(cand_dx, idx, axis=-1)[..., 0]
    best_dy = np.take_along_axis(cand_dy, idx, axis=-1)[..., 0]
    best_d2 = np.take_along_axis(d2, idx, axis=-1)[..., 0]
    return best_dx, best_dy, best_d2


def link_geometry(ue: np.ndarray, ap: np.ndarray, side: float) -> LinkGeometry:
    """Wrap-around geometry of a single UE-AP link.

    `ue` and `ap` are (x, y, z) triples with 0 <= x, y < side. The azimuth is
    measured at the AP toward the minimizing shifted UE copy; a UE directly
    below the AP gets azimuth 0 by convention.
    """
    ue = np.asarray(ue, dtype=float)
    ap = np.asarray(ap, dtype=float)
    dx, dy, d2 = _wrap_deltas(ue[0] - ap[0], ue[1] - ap[1], side)
    d2d = math.sqrt(float(d2))
    dz = ap[2] - ue[2]
    azimuth = 0.0 if d2d == 0.0 else math.atan2(float(dy), float(dx))
    return LinkGeometry(d2d=d2d, d3d=math.hypot(d2d, dz), azimuth=azimuth)


def link_geometry_grid(ue_xyz: np.ndarray, ap_xyz: np.ndarray, side: float):
    """Vectorized link geometry for all (UE, AP) pairs.

    Returns (d2d, d3d, azimuth) arrays of shape (K, Q). Matches link_geometry
    exactly, including tie-breaking.
    """
    dx = ue_xyz[:, None, 0] - ap_xyz[None, :, 0]
    dy = ue_xyz[:, None, 1] - ap_xyz[None, :, 1]
    bdx, bdy, bd2 = _wrap_deltas(dx, dy, side)
    d2d = np.sqrt(bd2)
    dz = ap_xyz[None, :, 2] - ue_xyz[:, None, 2]
    d3d = np.hypot(d2d, dz)
    azimuth = np.where(d2d == 0.0, 0.0, np.arctan2(bdy, bdx))
    return d2d, d3d, azimuth


def dump_topology_csv(path, ue_xyz: np.ndarray, ap_xyz: np.ndarray) -> None:
    """Write positions of one network realization for plotting/debugging."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "index", "x_m", "y_m", "z_m"])
        for i, (x, y, z) in enumerate(np.asarray(ap_xyz)):
            writer.writerow(["ap", i, f"{x:.9g}", f"{y:.9g}", f"{z:.9g}"])
        for i, (x, y, z) in enumerate(np.asarray(ue_xyz)):
            writer.writerow(["ue", i, f"{x:.9g}", f"{y:.9g}", f"{z:.9g}"])
