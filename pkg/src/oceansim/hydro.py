"""Fluid-to-solid forces on closed triangle meshes.

Vertex depth is ``d = y - h(x, z)``, negative under water. Triangles are
classified by the sign of their vertex depths and partially submerged ones
are split along the zero-depth line. Submerged volume uses the prism sum
``sum A d n_y`` which is exact for a closed mesh under a flat surface.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from oceansim.meshes import TriMesh
from oceansim.rigid_body import BodyPose

RHO_WATER = 1025.0
RHO_AIR = 1.204
G = 9.80665


@dataclass
class FluidQuery:
    """Samplers and constants describing the surrounding fluids.

    ``height(x, z)`` returns the free-surface height. ``water_velocity(points)``
    takes an ``(M, 3)`` array and returns ``(M, 3)`` velocities; ``None`` means
    still water. ``density_table`` is an optional ``(depths, densities)`` pair
    interpolated linearly in depth below the surface.
    """

    height: Callable
    water_velocity: Optional[Callable] = None
    wind: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rho_water: float = RHO_WATER
    rho_air: float = RHO_AIR
    gravity: float = G
    density_table: Optional[tuple] = None

    def __post_init__(self):
        if not (self.rho_water > 0 and self.rho_air > 0):
            raise ValueError("densities must be positive")
        self.wind = np.asarray(self.wind, dtype=float)

    def water_density(self, depth) -> np.ndarray:
        """Density at ``depth`` metres below the surface (positive down)."""
        depth = np.asarray(depth, dtype=float)
        if self.density_table is None:
            return np.full(depth.shape, self.rho_water)
        z, rho = (np.asarray(a, dtype=float) for a in self.density_table)
        return np.interp(depth, z, rho)


def flat_sea(level: float = 0.0) -> Callable:
    return lambda x, z: np.full(np.broadcast(x, z).shape, float(level))


@dataclass
class TriangleStates:
    """Submerged and dry pieces after clipping, in world coordinates.

    ``*_corners`` are ``(M, 3, 3)``, ``*_depths`` ``(M, 3)`` vertex depths,
    ``*_normals`` ``(M, 3)`` unit normals and ``*_parent`` the source triangle.
    """

    wet_corners: np.ndarray
    wet_depths: np.ndarray
    wet_normals: np.ndarray
    wet_parent: np.ndarray
    dry_corners: np.ndarray
    dry_depths: np.ndarray
    dry_normals: np.ndarray
    dry_parent: np.ndarray
    status: np.ndarray  # per source triangle: 0 dry, 1 partial, 2 submerged, -1 degenerate
    loops: list
    open_chains: int = 0
    nonfinite: int = 0

    @cached_property
    def wet_areas(self) -> np.ndarray:
        return _areas(self.wet_corners)

    @cached_property
    def dry_areas(self) -> np.ndarray:
        return _areas(self.dry_corners)


def _areas(c: np.ndarray) -> np.ndarray:
    if len(c) == 0:
        return np.zeros(0)
    a = c[:, 1] - c[:, 0]
    b = c[:, 2] - c[:, 0]
    cx = a[:, 1] * b[:, 2] - a[:, 2] * b[:, 1]
    cy = a[:, 2] * b[:, 0] - a[:, 0] * b[:, 2]
    cz = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    return 0.5 * np.sqrt(cx * cx + cy * cy + cz * cz)


DRY, PARTIAL, SUBMERGED, DEGENERATE = 0, 1, 2, -1


def vertex_depths(mesh: TriMesh, pose: BodyPose, fluid: FluidQuery):
    world = pose.to_world(mesh.vertices)
    return world, world[:, 1] - np.asarray(fluid.height(world[:, 0], world[:, 2]), dtype=float)


def classify_clip(mesh: TriMesh, pose: BodyPose, fluid: FluidQuery, world=None, depth=None) -> TriangleStates:
    """Classify triangles against the surface and split the partial ones."""
    if world is None or depth is None:
        world, depth = vertex_depths(mesh, pose, fluid)
    tri = mesh.triangles
    normals = mesh.normals @ pose.rotation.T
    dT = depth[tri]
    below = dT < 0
    nsub = below.sum(axis=1)
    status = np.where(nsub == 3, SUBMERGED, np.where(nsub == 0, DRY, PARTIAL))
    status[mesh.areas <= 1e-14] = DEGENERATE

    wet_c, wet_d, wet_n, wet_p = [], [], [], []
    dry_c, dry_d, dry_n, dry_p = [], [], [], []
    for code, cs, ds, ns, ps in ((SUBMERGED, wet_c, wet_d, wet_n, wet_p), (DRY, dry_c, dry_d, dry_n, dry_p)):
        idx = np.flatnonzero(status == code)
        cs.append(world[tri[idx]])
        ds.append(dT[idx])
        ns.append(normals[idx])
        ps.append(idx)

    part = np.flatnonzero(status == PARTIAL)
    segments = []
    if part.size:
        b = below[part]
        lone = np.where(nsub[part] == 1, np.argmax(b, axis=1), np.argmin(b, axis=1))
        order = (lone[:, None] + np.arange(3)[None, :]) % 3
        ids = np.take_along_axis(tri[part], order, axis=1)
        i0, i1, i2 = ids[:, 0], ids[:, 1], ids[:, 2]
        p01 = _crossing(world, depth, i0, i1)
        p02 = _crossing(world, depth, i0, i2)
        v0, v1, v2 = world[i0], world[i1], world[i2]
        d0, d1, d2 = depth[i0], depth[i1], depth[i2]
        z = np.zeros_like(d0)
        lone_tri = np.stack([v0, p01, p02], axis=1)
        lone_dep = np.stack([d0, z, z], axis=1)
        # split the quad (p01, v1, v2, p02) along its shorter diagonal so the
        # pieces do not depend on the winding order
        short = (np.einsum("ij,ij->i", v2 - p01, v2 - p01) <= np.einsum("ij,ij->i", p02 - v1, p02 - v1))[:, None, None]
        quad_a = np.where(short, np.stack([p01, v1, v2], axis=1), np.stack([p01, v1, p02], axis=1))
        quad_a_dep = np.where(short[:, :, 0], np.stack([z, d1, d2], axis=1), np.stack([z, d1, z], axis=1))
        quad_b = np.where(short, np.stack([p01, v2, p02], axis=1), np.stack([v1, v2, p02], axis=1))
        quad_b_dep = np.where(short[:, :, 0], np.stack([z, d2, z], axis=1), np.stack([d1, d2, z], axis=1))
        n = normals[part]
        lone_wet = nsub[part] == 1
        for mask, cs, ds, ns, ps in ((lone_wet, wet_c, wet_d, wet_n, wet_p), (~lone_wet, dry_c, dry_d, dry_n, dry_p)):
            cs.append(lone_tri[mask])
            ds.append(lone_dep[mask])
            ns.append(n[mask])
            ps.append(part[mask])
        for mask, cs, ds, ns, ps in ((~lone_wet, wet_c, wet_d, wet_n, wet_p), (lone_wet, dry_c, dry_d, dry_n, dry_p)):
            cs += [quad_a[mask], quad_b[mask]]
            ds += [quad_a_dep[mask], quad_b_dep[mask]]
            ns += [n[mask], n[mask]]
            ps += [part[mask], part[mask]]
        V = len(world)
        k01 = np.minimum(i0, i1) * V + np.maximum(i0, i1)
        k02 = np.minimum(i0, i2) * V + np.maximum(i0, i2)
        segments = (k01, k02, p01, p02)

    loops, n_open = _chain_loops(*segments) if part.size else ([], 0)
    cat = lambda parts, shape: np.concatenate(parts) if parts else np.zeros(shape)  # noqa: E731
    return TriangleStates(
        cat(wet_c, (0, 3, 3)), cat(wet_d, (0, 3)), cat(wet_n, (0, 3)), cat(wet_p, (0,)).astype(np.int64),
        cat(dry_c, (0, 3, 3)), cat(dry_d, (0, 3)), cat(dry_n, (0, 3)), cat(dry_p, (0,)).astype(np.int64),
        status, loops, n_open, int(np.count_nonzero(~np.isfinite(depth))),
    )


def _crossing(world, depth, ia, ib):
    """Zero-depth point on edge (ia, ib), computed in a canonical vertex order."""
    a = np.minimum(ia, ib)
    b = np.maximum(ia, ib)
    da, db = depth[a], depth[b]
    alpha = (da / (da - db))[:, None]
    return world[a] + alpha * (world[b] - world[a])


def _chain_loops(k1, k2, p1, p2):
    """Join waterline segments sharing crossing edges into closed loops."""
    points = {}
    adj = {}
    for s, (a, b) in enumerate(zip(k1.tolist(), k2.tolist())):
        points[a] = p1[s]
        points[b] = p2[s]
        adj.setdefault(a, []).append(s)
        adj.setdefault(b, []).append(s)
    used = np.zeros(len(k1), dtype=bool)
    ends = (k1.tolist(), k2.tolist())
    loops, n_open = [], 0
    for start in range(len(k1)):
        if used[start]:
            continue
        used[start] = True
        first, cur = ends[0][start], ends[1][start]
        keys = [first, cur]
        closed = False
        while True:
            if cur == first:
                closed = True
                break
            nxt = [s for s in adj[cur] if not used[s]]
            if not nxt:
                break
            s = nxt[0]
            used[s] = True
            cur = ends[1][s] if ends[0][s] == cur else ends[0][s]
            keys.append(cur)
        if not closed:
            n_open += 1
        loops.append(np.array([points[k] for k in keys]))
    return loops, n_open


def submerged_volume(states: TriangleStates) -> float:
    """Prism sum ``sum A d n_y`` over submerged pieces (d is the mean vertex depth)."""
    c = states.wet_corners
    if len(c) == 0:
        return 0.0
    return float(np.sum(states.wet_areas * states.wet_depths.mean(axis=1) * states.wet_normals[:, 1]))


def _pair_integral(A, f, g):
    """Integral over triangles of the product of two linear fields given at corners."""
    return A / 12.0 * (np.sum(f * g, axis=1) + f.sum(axis=1) * g.sum(axis=1))


def center_of_immersion(states: TriangleStates, weighting: str = "volume"):
    """Centroid of the submerged region, or ``None`` when nothing is immersed.

    ``"volume"`` integrates each prism exactly; ``"area"`` is the area-weighted
    centroid of the submerged pieces.
    """
    c = states.wet_corners
    if len(c) == 0:
        return None
    A = states.wet_areas
    if weighting == "area":
        tot = A.sum()
        return None if tot <= 0 else (A[:, None] * c.mean(axis=1)).sum(axis=0) / tot
    if weighting != "volume":
        raise ValueError(f"unknown weighting {weighting!r}")
    d = states.wet_depths
    ny = states.wet_normals[:, 1]
    vol = np.sum(ny * A * d.mean(axis=1))
    if not vol > 0:
        return None
    mx = np.sum(ny * _pair_integral(A, c[:, :, 0], d))
    mz = np.sum(ny * _pair_integral(A, c[:, :, 2], d))
    my = np.sum(ny * (_pair_integral(A, c[:, :, 1], d) - 0.5 * _pair_integral(A, d, d)))
    return np.array([mx, my, mz]) / vol


def buoyancy(v_w: float, rho_w: float = RHO_WATER, g_vec=(0.0, -G, 0.0)) -> np.ndarray:
    """Archimedes force ``-v_w rho_w g``."""
    if v_w < 0:
        raise ValueError("submerged volume must be non-negative")
    return -v_w * rho_w * np.asarray(g_vec, dtype=float)


def drag(areas, normals, v_rel, rho, c_d) -> np.ndarray:
    """Quadratic drag per piece: ``-1/2 C_d rho A_perp |v| v``.

    ``A_perp = A max(0, n . v_hat)`` so only faces leading into the flow
    contribute. Arrays are ``(M,)``, ``(M, 3)``, ``(M, 3)``; returns ``(M, 3)``.
    """
    areas = np.atleast_1d(np.asarray(areas, dtype=float))
    normals = np.atleast_2d(np.asarray(normals, dtype=float))
    v_rel = np.atleast_2d(np.asarray(v_rel, dtype=float))
    speed = np.linalg.norm(v_rel, axis=1)
    cosang = np.einsum("ij,ij->i", normals, v_rel)
    a_perp = areas * np.maximum(0.0, np.divide(cosang, speed, out=np.zeros_like(speed), where=speed > 0))
    return (-0.5 * c_d * np.asarray(rho, dtype=float) * a_perp * speed)[:, None] * v_rel


@dataclass
class HydroReport:
    volume: float
    volume_raw: float
    clamped: bool
    center: Optional[np.ndarray]
    loops: list
    buoyancy: np.ndarray
    water_drag: np.ndarray
    air_drag: np.ndarray
    water_point: Optional[np.ndarray]
    air_point: Optional[np.ndarray]
    submerged_area: float
    dry_area: float
    n_degenerate: int = 0
    open_loops: int = 0
    nonfinite: int = 0

    @property
    def finite(self) -> bool:
        vals = [self.volume_raw, *self.buoyancy, *self.water_drag, *self.air_drag]
        return self.nonfinite == 0 and bool(np.all(np.isfinite(vals)))

    def apply_to(self, body) -> None:
        """Accumulate the report's forces on a :class:`RigidBody`."""
        if self.water_point is not None:
            body.apply_force_at(self.buoyancy + self.water_drag, self.water_point)
        if self.air_point is not None:
            body.apply_force_at(self.air_drag, self.air_point)


def aggregate(mesh: TriMesh, pose: BodyPose, fluid: FluidQuery, cd_water: float = 1.0,
              cd_air: float = 1.0, weighting: str = "volume") -> HydroReport:
    """Clip, integrate volume and centre, and sum buoyancy and drag."""
    states = classify_clip(mesh, pose, fluid)
    v_raw = submerged_volume(states)
    v_max = mesh.volume
    v_w = min(max(v_raw, 0.0), v_max)
    clamped = v_w != v_raw
    g_vec = np.array([0.0, -fluid.gravity, 0.0])

    wet_a = states.wet_areas
    dry_a = states.dry_areas
    center = center_of_immersion(states, weighting) if v_w > 0 else None

    f_w = np.zeros(3)
    if len(wet_a):
        cen = states.wet_corners.mean(axis=1)
        v_rel = pose.point_velocity(cen)
        if fluid.water_velocity is not None:
            v_rel = v_rel - np.asarray(fluid.water_velocity(cen), dtype=float)
        rho = fluid.water_density(-states.wet_depths.mean(axis=1))
        f_w = drag(wet_a, states.wet_normals, v_rel, rho, cd_water).sum(axis=0)

    f_a = np.zeros(3)
    air_point = None
    if len(dry_a) and dry_a.sum() > 0:
        cen = states.dry_corners.mean(axis=1)
        v_rel = pose.point_velocity(cen) - fluid.wind
        f_a = drag(dry_a, states.dry_normals, v_rel, fluid.rho_air, cd_air).sum(axis=0)
        air_point = (dry_a[:, None] * cen).sum(axis=0) / dry_a.sum()

    if center is not None:
        surface_h = float(np.asarray(fluid.height(center[0], center[2])))
        rho_b = float(fluid.water_density(max(surface_h - center[1], 0.0)))
        f_b = buoyancy(v_w, rho_b, g_vec)
    else:
        f_b = np.zeros(3)

    water_point = center
    if water_point is None and len(wet_a) and wet_a.sum() > 0:
        water_point = (wet_a[:, None] * states.wet_corners.mean(axis=1)).sum(axis=0) / wet_a.sum()

    return HydroReport(
        volume=v_w, volume_raw=v_raw, clamped=bool(clamped), center=center, loops=states.loops,
        buoyancy=f_b, water_drag=f_w, air_drag=f_a, water_point=water_point, air_point=air_point,
        submerged_area=float(wet_a.sum()), dry_area=float(dry_a.sum()),
        n_degenerate=int(np.count_nonzero(states.status == DEGENERATE)), open_loops=states.open_chains,
        nonfinite=states.nonfinite,
    )
