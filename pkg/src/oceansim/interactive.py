"""Translating finite-difference wave zones driven by hull masks.

Each zone is a square grid of ``n`` nodes with spacing ``delta`` centred on
``center`` (world x, z). Node ``(i, j)`` sits at
``center + ((i - n/2) delta, (j - n/2) delta)``. The zone follows its body in
whole-cell steps so the stored field stays fixed in world space.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from oceansim.errors import GeometryError

CFL_TARGET = 0.49


@dataclass(frozen=True)
class FdmParams:
    """Zone configuration.

    ``delta_min`` and ``delta_max`` bound the cell size. ``rate_limit`` is the
    largest relative change of ``delta`` per frame.
    """

    grid_size: int = 512
    margin: int = 16
    d0: float = 0.98
    d_max: float = 0.999
    v_max: float = 5.0
    delta_min: float = 0.01
    delta_max: float = 1.0
    rate_limit: float = 0.05

    def __post_init__(self):
        if self.grid_size < 8:
            raise ValueError("grid_size must be >= 8")
        if not self.margin > 1:
            raise ValueError("margin must be > 1")
        if not 0 < self.delta_min <= self.delta_max:
            raise ValueError("need 0 < delta_min <= delta_max")


@dataclass(frozen=True)
class MaskParams:
    """Hull wave model: back height ``h_b``, front factor ``i_f`` and scale ``b_w``."""

    h_b: float = 0.1
    i_f: float = 0.5
    b_w: float = 1.0


def stable_spacing(speed: float, dt: float, delta_min: float, delta_max: float,
                   previous: float | None = None, rate_limit: float = 0.05):
    """Cell size and wave speed for a body moving at ``speed``.

    ``delta = 0.999 dt max(1, speed)`` clamped to the bounds (and to a
    ``rate_limit`` relative change from ``previous``), then
    ``c = sqrt(0.49) delta / dt`` so that ``c^2 dt^2 / delta^2 = 0.49``.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    delta = 0.999 * dt * max(1.0, float(speed))
    if previous is not None:
        delta = min(max(delta, previous * (1.0 - rate_limit)), previous * (1.0 + rate_limit))
    delta = min(max(delta, delta_min), delta_max)
    return delta, np.sqrt(CFL_TARGET) * delta / dt


def damping_factor(speed: float, params: FdmParams = FdmParams()) -> float:
    """``lerp(d0, d_max, clamp(speed / v_max, 0, 1))``."""
    u = min(max(float(speed) / params.v_max, 0.0), 1.0)
    return params.d0 + (params.d_max - params.d0) * u


def shifted(a: np.ndarray, s) -> np.ndarray:
    """``b[i, j] = a[i + s0, j + s1]`` with zeros where the read leaves the grid."""
    s0, s1 = int(s[0]), int(s[1])
    n0, n1 = a.shape
    out = np.zeros_like(a)
    if abs(s0) >= n0 or abs(s1) >= n1:
        return out
    dst0 = slice(max(0, -s0), n0 - max(0, s0))
    src0 = slice(max(0, s0), n0 - max(0, -s0))
    dst1 = slice(max(0, -s1), n1 - max(0, s1))
    src1 = slice(max(0, s1), n1 - max(0, -s1))
    out[dst0, dst1] = a[src0, src1]
    return out


@dataclass
class FdmZone:
    params: FdmParams
    center: np.ndarray
    delta: float
    c: float = 0.0
    h: np.ndarray = None
    h_prev: np.ndarray = None
    prev_shift: np.ndarray = field(default_factory=lambda: np.zeros(2, dtype=np.int64))
    damping: float = 0.98
    dropped_shifts: int = 0
    steps: int = 0
    last_a: float = CFL_TARGET
    last_damping: float = 1.0

    def __post_init__(self):
        n = self.params.grid_size
        self.center = np.asarray(self.center, dtype=float).copy()
        if self.h is None:
            self.h = np.zeros((n, n))
        if self.h_prev is None:
            self.h_prev = np.zeros((n, n))
        self.prev_shift = np.asarray(self.prev_shift, dtype=np.int64)

    @classmethod
    def around(cls, position_xz, params: FdmParams, dt: float, delta: float | None = None) -> "FdmZone":
        if delta is None:
            delta, _ = stable_spacing(0.0, dt, params.delta_min, params.delta_max)
        c = np.sqrt(CFL_TARGET) * delta / dt
        return cls(params, np.asarray(position_xz, dtype=float), delta, c, damping=params.d0)

    @property
    def n(self) -> int:
        return self.params.grid_size

    def node_positions(self):
        """World ``(x, z)`` of every node, each ``(n, n)``."""
        off = (np.arange(self.n) - self.n // 2) * self.delta
        return np.meshgrid(self.center[0] + off, self.center[1] + off, indexing="ij")

    def update_stability(self, speed: float, dt: float):
        p = self.params
        self.delta, self.c = stable_spacing(speed, dt, p.delta_min, p.delta_max, self.delta, p.rate_limit)
        return self.delta, self.c

    def energy(self) -> float:
        """Sum of squared heights."""
        return float(np.sum(self.h * self.h))

    def wave_energy(self) -> float:
        """Discrete energy of the damped leapfrog scheme.

        ``|h|^2 + d |h_prev|^2 - d <h, (2 + a L) h_prev>`` with L the
        5-point Laplacian and d the last damping factor. It is non-negative
        under the CFL bound and shrinks by exactly ``d`` per unforced step.
        """
        a, d = self.last_a, self.last_damping
        hp = shifted(self.h_prev, self.prev_shift)
        bh = 2.0 * hp
        bh[1:-1, 1:-1] += a * (hp[2:, 1:-1] + hp[:-2, 1:-1] + hp[1:-1, 2:] + hp[1:-1, :-2] - 4.0 * hp[1:-1, 1:-1])
        return float(np.sum(self.h * self.h) + d * np.sum(hp * hp) - d * np.sum(self.h * bh))

    def step(self, dt: float, p_next, speed: float | None = None) -> None:
        """Advance one step with the zone recentred on ``p_next`` (world x, z).

        When ``speed`` is given the damping follows it; otherwise the current
        damping factor is kept.
        """
        if speed is not None:
            self.damping = damping_factor(speed, self.params)
        a = (self.c * dt / self.delta) ** 2
        if a > 0.5 + 1e-12:
            raise ValueError(f"CFL violated: {a:.4f} > 0.5")
        s = np.floor((np.asarray(p_next, dtype=float) - self.center) / self.delta).astype(np.int64)
        m = self.params.margin
        if np.any(np.abs(s) > m):
            warnings.warn(f"zone shift {s.tolist()} exceeds margin {m}; wake dropped", RuntimeWarning, stacklevel=2)
            self.dropped_shifts += 1
            s = np.clip(s, -m, m)
        H = shifted(self.h, s)
        Hp = shifted(self.h_prev, s + self.prev_shift)
        out = np.zeros_like(H)
        lap = H[2:, 1:-1] + H[:-2, 1:-1] + H[1:-1, 2:] + H[1:-1, :-2] - 4.0 * H[1:-1, 1:-1]
        out[1:-1, 1:-1] = self.damping * (a * lap + 2.0 * H[1:-1, 1:-1] - Hp[1:-1, 1:-1])
        self.center = self.center + s * self.delta
        self.h_prev = self.h
        self.h = out
        self.prev_shift = s
        self.last_a = a
        self.last_damping = self.damping
        self.steps += 1

    def sample(self, x, z) -> np.ndarray:
        """Bilinear sample of the current field at world (x, z); 0 outside."""
        n = self.n
        u = (np.asarray(x, dtype=float) - self.center[0]) / self.delta + n // 2
        v = (np.asarray(z, dtype=float) - self.center[1]) / self.delta + n // 2
        inside = (u >= 0) & (u <= n - 1) & (v >= 0) & (v <= n - 1)
        u = np.clip(u, 0, n - 1)
        v = np.clip(v, 0, n - 1)
        i0 = np.minimum(np.floor(u).astype(np.int64), n - 2)
        j0 = np.minimum(np.floor(v).astype(np.int64), n - 2)
        fu, fv = u - i0, v - j0
        h = self.h
        val = (h[i0, j0] * (1 - fu) * (1 - fv) + h[i0 + 1, j0] * fu * (1 - fv)
               + h[i0, j0 + 1] * (1 - fu) * fv + h[i0 + 1, j0 + 1] * fu * fv)
        return np.where(inside, val, 0.0)


def align_points(points_xz, origin_xz, yaw: float) -> np.ndarray:
    """World ``(x, z)`` to the body-aligned frame (bow along +z)."""
    d = np.asarray(points_xz, dtype=float) - np.asarray(origin_xz, dtype=float)
    c, s = np.cos(yaw), np.sin(yaw)
    return np.stack([d[..., 0] * c - d[..., 1] * s, d[..., 0] * s + d[..., 1] * c], axis=-1)


def points_in_loops(px, pz, loops) -> np.ndarray:
    """Even-odd test by casting a ray along +z from each point.

    ``loops`` is a list of ``(M, 2)`` arrays of ``(x, z)`` vertices; closure is
    implied. Returns a boolean array shaped like ``px``.
    """
    px = np.asarray(px, dtype=float)
    pz = np.asarray(pz, dtype=float)
    inside = np.zeros(px.shape, dtype=bool)
    if not loops:
        return inside
    a = np.concatenate([np.asarray(l, dtype=float) for l in loops])
    b = np.concatenate([np.roll(np.asarray(l, dtype=float), -1, axis=0) for l in loops])
    keep = a[:, 0] != b[:, 0]
    a, b = a[keep], b[keep]
    fx, fz = px.ravel(), pz.ravel()
    flat = inside.ravel()
    for s in range(0, fx.size, 4096):
        x = fx[s : s + 4096, None]
        z = fz[s : s + 4096, None]
        straddle = (a[None, :, 0] > x) != (b[None, :, 0] > x)
        t = (x - a[None, :, 0]) / (b[None, :, 0] - a[None, :, 0])
        zc = a[None, :, 1] + t * (b[None, :, 1] - a[None, :, 1])
        flat[s : s + 4096] = (np.count_nonzero(straddle & (zc > z), axis=1) & 1).astype(bool)
    return flat.reshape(px.shape)


def _strip_closure(loop: np.ndarray) -> np.ndarray:
    if len(loop) > 1 and np.array_equal(loop[0], loop[-1]):
        return loop[:-1]
    return loop


def compute_mask(zone: FdmZone, loops_xz, origin_xz, yaw: float):
    """Nodes of ``zone`` inside the waterline loops.

    Loops and nodes are expressed in the body-aligned frame around
    ``origin_xz``; only nodes inside the loops' bounding box are tested.
    Returns ``(mask, ax, az)`` with the aligned node coordinates.
    """
    X, Z = zone.node_positions()
    aligned = align_points(np.stack([X, Z], axis=-1), origin_xz, yaw)
    ax, az = aligned[..., 0], aligned[..., 1]
    mask = np.zeros(X.shape, dtype=bool)
    loops = [align_points(_strip_closure(np.asarray(l, dtype=float)), origin_xz, yaw)
             for l in loops_xz if len(l) >= 3]
    if not loops:
        return mask, ax, az
    allp = np.concatenate(loops)
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    box = (ax >= lo[0]) & (ax <= hi[0]) & (az >= lo[1]) & (az <= hi[1])
    if box.any():
        mask[box] = points_in_loops(ax[box], az[box], loops)
    return mask, ax, az


@dataclass(frozen=True)
class HullShape:
    """Body-frame extents used by the mask height model."""

    c_x: float
    b_x: float
    z_min: float
    z_max: float
    height: float
    volume: float

    @property
    def b_z(self) -> float:
        return self.z_max - self.z_min

    @classmethod
    def from_mesh(cls, mesh) -> "HullShape":
        lo, hi = mesh.bbox
        return cls(0.5 * (lo[0] + hi[0]), hi[0] - lo[0], lo[2], hi[2], hi[1] - lo[1], mesh.volume)


def mask_height(x, z, hull: HullShape, speed: float, v_w: float, params: MaskParams) -> np.ndarray:
    """V-shaped forcing height ``b_w (|x - c_x| / b_x + a z + b)``.

    ``a`` and ``b`` make the z term run from ``h_b`` at the stern to
    ``h_f = speed h_M i_f v_w / v_M`` at the bow.
    """
    if not (hull.b_x > 0 and hull.b_z > 0):
        raise GeometryError("hull extents must be positive")
    h_f = float(speed) * hull.height * params.i_f * v_w / hull.volume
    a = (h_f - params.h_b) / hull.b_z
    b = (params.h_b * hull.z_max - h_f * hull.z_min) / hull.b_z
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    return params.b_w * (np.abs(x - hull.c_x) / hull.b_x + a * z + b)


def apply_mask(zone: FdmZone, mask: np.ndarray, heights) -> None:
    """Overwrite the current field at masked nodes."""
    if mask.any():
        zone.h[mask] = np.broadcast_to(heights, mask.shape)[mask]
