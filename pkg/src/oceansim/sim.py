"""Fixed-step coupling loop between the spectral sea, bodies and wave zones.

Each step advances the surface maps and velocity slices, then for every body
computes hydrodynamic forces and its hull mask against the surface made of
the spectral sea plus every other body's zone, all read from the previous
frame. Zones are stepped after all bodies are processed and bodies are
integrated last, so the body order never changes results.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from oceansim.config import BodyConfig, Scenario, density_table
from oceansim.errors import ConfigError, NumericBlowUp
from oceansim.hydro import FluidQuery, HydroReport, aggregate
from oceansim.interactive import (FdmParams, FdmZone, HullShape, apply_mask, compute_mask,
                                  damping_factor, mask_height)
from oceansim.meshes import TriMesh, box, load_obj
from oceansim.parallel import ordered_map
from oceansim.rigid_body import BodyPose, RigidBody, box_inertia, quat_from_axis_angle
from oceansim.surface import CascadeSet, build_cascades, generate_maps, height_at
from oceansim.velocity import build_slices, velocity_at


# positions (m) or speeds (m/s) beyond this are treated as a numerical blow-up;
# far past it the hull loses all float precision and the state stays finite
RUNAWAY = 1e9


def load_body_mesh(cfg: BodyConfig, scenario: Scenario) -> TriMesh:
    """Mesh of a body, recentred on its centre of mass."""
    if cfg.mesh == "box":
        mesh = box(cfg.size, name=cfg.name)
    else:
        mesh = load_obj(scenario.resolve(cfg.mesh))
    return mesh.validate().centered()


def zone_params(scenario: Scenario, mesh: TriMesh) -> FdmParams:
    """Zone settings; unspecified cell bounds make the zone twice the body span."""
    table = dict(scenario.fdm)
    n = int(table.get("grid_size", 512))
    m = int(table.get("margin", 16))
    span = float(max(mesh.extent[0], mesh.extent[2]))
    table.setdefault("delta_min", 2.0 * span / max(n - 2 * m, 1))
    table.setdefault("delta_max", 4.0 * table["delta_min"])
    return FdmParams(**table)


def _overlaps(zone: FdmZone, box) -> bool:
    """Whether a query box touches the zone footprint (zone samples are 0 outside)."""
    half = 0.5 * zone.n * zone.delta
    cx, cz = zone.center
    x0, x1, z0, z1 = box
    return x0 <= cx + half and x1 >= cx - half and z0 <= cz + half and z1 >= cz - half


@dataclass
class BodyState:
    config: BodyConfig
    mesh: TriMesh
    body: RigidBody
    hull: HullShape
    zone: FdmZone | None
    report: HydroReport | None = None
    mask_cells: int = 0
    clamp_events: int = 0
    initial_speed: float = 0.0


def make_body(cfg: BodyConfig, scenario: Scenario) -> BodyState:
    mesh = load_body_mesh(cfg, scenario)
    if cfg.mass is not None:
        mass = float(cfg.mass)
        density = mass / mesh.volume
    else:
        density = float(cfg.density)
        mass = density * mesh.volume
    if cfg.inertia == "box":
        inertia = box_inertia(mass, mesh.extent)
    else:
        _, _, inertia = mesh.mass_properties(density)
    q = quat_from_axis_angle([0.0, 1.0, 0.0], np.radians(cfg.yaw_deg))
    pose = BodyPose(cfg.position, q, cfg.velocity, cfg.angular_velocity)
    body = RigidBody(mass, inertia, pose, cfg.angular_damping)
    zone = None
    if cfg.interactive:
        zone = FdmZone.around(pose.position[[0, 2]], zone_params(scenario, mesh), scenario.dt)
    return BodyState(cfg, mesh, body, HullShape.from_mesh(mesh), zone,
                     initial_speed=float(np.linalg.norm(pose.velocity)))


@dataclass
class Timings:
    maps: float = 0.0
    slices: float = 0.0
    hydro: float = 0.0
    zones: float = 0.0
    integrate: float = 0.0
    steps: int = 0

    def as_rows(self):
        total = self.maps + self.slices + self.hydro + self.zones + self.integrate
        n = max(self.steps, 1)
        return [(k, v, 1e3 * v / n) for k, v in (
            ("maps", self.maps), ("slices", self.slices), ("hydro", self.hydro),
            ("zones", self.zones), ("integrate", self.integrate), ("total", total))]


@dataclass
class StepRecord:
    t: float
    poses: list
    reports: list
    zone_rows: list


class Simulation:
    """Scenario state advanced with :meth:`step`."""

    def __init__(self, scenario: Scenario, precision: str = "f64"):
        if precision not in ("f32", "f64"):
            raise ConfigError(f"unknown precision {precision!r}")
        self.scenario = scenario
        o = scenario.ocean
        self.cascades: CascadeSet = build_cascades(
            scenario.spectrum, N=o.N, lengths=o.lengths, cutoffs=o.cutoffs, choppiness=o.choppiness,
            dtype=np.complex64 if precision == "f32" else np.complex128)
        self.bodies = [make_body(b, scenario) for b in scenario.bodies]
        # zones are summed in name order so the body list order never changes bits
        self._zone_order = sorted(range(len(self.bodies)), key=lambda i: self.bodies[i].config.name)
        f = scenario.fluid
        self._density_table = density_table(f)
        self.t = 0.0
        self.step_index = 0
        self.timings = Timings()
        self.maps = generate_maps(self.cascades, 0.0)
        self.slices = self._build_slices(0.0) if self.bodies else None

    def _build_slices(self, t):
        v = self.scenario.velocity
        return build_slices(self.cascades, t, v.y_min, v.y_max, v.d, v.scheme)

    # surface composition -------------------------------------------------
    def ocean_height(self, x, z):
        return height_at(self.maps, x, z, n_iter=self.scenario.ocean.n_iter)

    def compose_height(self, x, z, exclude: int | None = None):
        """Spectral height plus the zones of every body except ``exclude``."""
        h = self.ocean_height(x, z)
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        box = (x.min(), x.max(), z.min(), z.max())
        for i in self._zone_order:
            b = self.bodies[i]
            if i != exclude and b.zone is not None and _overlaps(b.zone, box):
                h = h + b.zone.sample(x, z)
        return h

    def water_velocity(self, points):
        v = self.scenario.velocity
        p = np.asarray(points, dtype=float)
        y = np.clip(p[:, 1], v.y_min, v.y_max)
        return velocity_at(self.slices, p[:, 0], y, p[:, 2], v.interp).T

    def fluid_for(self, index: int) -> FluidQuery:
        f = self.scenario.fluid
        return FluidQuery(
            height=lambda x, z: self.compose_height(x, z, exclude=index),
            water_velocity=self.water_velocity if self.slices is not None else None,
            wind=np.asarray(f.wind, dtype=float), rho_water=f.rho_water, rho_air=f.rho_air,
            gravity=self.scenario.spectrum.gravity, density_table=self._density_table)

    # per-body work -------------------------------------------------------
    def _body_phase(self, index: int):
        st = self.bodies[index]
        pose = st.body.pose
        report = aggregate(st.mesh, pose, self.fluid_for(index), st.config.cd_water, st.config.cd_air)
        mask = heights = None
        if st.zone is not None:
            loops = [l[:, [0, 2]] for l in report.loops]
            origin = pose.position[[0, 2]]
            mask, ax, az = compute_mask(st.zone, loops, origin, pose.yaw())
            if mask.any():
                speed = float(np.linalg.norm(pose.velocity))
                heights = mask_height(ax, az, st.hull, speed, report.volume, st.config.mask)
        return report, mask, heights

    def step(self) -> StepRecord:
        sc = self.scenario
        dt = sc.dt
        t_next = self.t + dt
        tm = self.timings

        t0 = time.perf_counter()
        self.maps = generate_maps(self.cascades, t_next)
        t1 = time.perf_counter()
        tm.maps += t1 - t0
        if self.bodies and self.step_index % sc.velocity.stride == 0:
            self.slices = self._build_slices(t_next)
        t2 = time.perf_counter()
        tm.slices += t2 - t1

        phases = ordered_map(self._body_phase, range(len(self.bodies)))
        t3 = time.perf_counter()
        tm.hydro += t3 - t2

        zone_rows = []
        for st, (report, mask, heights) in zip(self.bodies, phases):
            st.report = report
            st.clamp_events += int(report.clamped)
            report.apply_to(st.body)
            if st.config.thrust:
                st.body.apply_force(st.body.pose.rotation[:, 2] * st.config.thrust)
        for st, (report, mask, heights) in zip(self.bodies, phases):
            if st.zone is None:
                zone_rows.append(None)
                continue
            pose = st.body.pose
            speed = float(np.linalg.norm(pose.velocity))
            z = st.zone
            if heights is not None:
                apply_mask(z, mask, heights)
            st.mask_cells = int(mask.sum()) if mask is not None else 0
            z.update_stability(speed, dt)
            z.damping = damping_factor(speed, z.params)
            z.step(dt, (pose.position + dt * pose.velocity)[[0, 2]])
            zone_rows.append((z.delta, z.c, z.damping, st.mask_cells))
        t4 = time.perf_counter()
        tm.zones += t4 - t3

        g = np.array([0.0, -sc.spectrum.gravity, 0.0])
        for st in self.bodies:
            st.body.integrate(dt, g)
        tm.integrate += time.perf_counter() - t4
        tm.steps += 1

        self.t = t_next
        self.step_index += 1
        self._check_finite()
        return StepRecord(self.t, [st.body.pose.copy() for st in self.bodies],
                          [st.report for st in self.bodies], zone_rows)

    def _check_finite(self):
        for f in self.maps.fields:
            if not np.all(np.isfinite(f)):
                raise NumericBlowUp(self.step_index, "surface maps not finite")
        for st in self.bodies:
            p = st.body.pose
            vals = np.concatenate([p.position, p.orientation, p.velocity, p.angular_velocity])
            if not np.all(np.isfinite(vals)):
                raise NumericBlowUp(self.step_index, f"body {st.config.name} not finite")
            if np.max(np.abs(np.concatenate([p.position, p.velocity]))) > RUNAWAY:
                raise NumericBlowUp(self.step_index, f"body {st.config.name} ran away")
            if st.report is not None and not st.report.finite:
                raise NumericBlowUp(self.step_index, f"forces on {st.config.name} not finite")
            if st.zone is not None and not (np.all(np.isfinite(st.zone.h)) and np.all(np.isfinite(st.zone.center))):
                raise NumericBlowUp(self.step_index, f"zone of {st.config.name} not finite")

    def run(self, n_steps: int | None = None, callback=None):
        n = self.scenario.n_steps if n_steps is None else n_steps
        for _ in range(n):
            rec = self.step()
            if callback is not None:
                callback(self, rec)
        return self
