"""Scenario runs with CSV logs and heightfield snapshots on disk."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from oceansim.config import Scenario
from oceansim.sim import Simulation, StepRecord
from oceansim.surface import composed_grid, write_heightfield

TRAJECTORY_HEADER = ("t", "px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz")
FORCES_HEADER = ("t", "fb_x", "fb_y", "fb_z", "fw_x", "fw_y", "fw_z", "fa_x", "fa_y", "fa_z",
                 "v_w", "c_x", "c_y", "c_z")
ZONE_HEADER = ("t", "delta", "c", "damping", "mask_cells")
TIMING_HEADER = ("stage", "total_s", "per_step_ms")


def _fmt(values) -> str:
    return ",".join("%.17g" % v for v in values)


def slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", name)


@dataclass
class RunResult:
    out_dir: Path
    steps: int
    files: list = field(default_factory=list)
    timing: list = field(default_factory=list)


class _Writers:
    def __init__(self, sim: Simulation, out: Path):
        o = sim.scenario.output
        self.handles = []
        self.files = []
        self.traj, self.forces, self.zones = [], [], []
        for st in sim.bodies:
            name = slug(st.config.name)
            self.traj.append(self._open(out / f"trajectory_{name}.csv", TRAJECTORY_HEADER) if o.trajectory else None)
            self.forces.append(self._open(out / f"forces_{name}.csv", FORCES_HEADER) if o.forces else None)
            want_zone = o.zones and st.zone is not None
            self.zones.append(self._open(out / f"zone_{name}.csv", ZONE_HEADER) if want_zone else None)

    def _open(self, path: Path, header):
        fh = open(path, "w", newline="\n")
        fh.write(",".join(header) + "\n")
        self.handles.append(fh)
        self.files.append(path)
        return fh

    def write(self, rec: StepRecord):
        for i, pose in enumerate(rec.poses):
            if self.traj[i] is not None:
                self.traj[i].write(_fmt([rec.t, *pose.position, *pose.orientation, *pose.velocity,
                                         *pose.angular_velocity]) + "\n")
            r = rec.reports[i]
            if self.forces[i] is not None:
                c = r.center if r.center is not None else (np.nan, np.nan, np.nan)
                self.forces[i].write(_fmt([rec.t, *r.buoyancy, *r.water_drag, *r.air_drag, r.volume, *c]) + "\n")
            if self.zones[i] is not None:
                self.zones[i].write(_fmt([rec.t, *rec.zone_rows[i]]) + "\n")

    def close(self):
        for fh in self.handles:
            fh.close()


def write_snapshot(sim: Simulation, out: Path) -> list:
    """Composed ocean height plus each zone field, in the binary heightfield format."""
    snap = out / "snapshots"
    snap.mkdir(exist_ok=True)
    k = sim.step_index
    paths = [snap / f"ocean_{k:06d}.abhf"]
    write_heightfield(paths[0], composed_grid(sim.maps, sim.scenario.ocean.n_iter)["h"], t=sim.t)
    for i, st in enumerate(sim.bodies):
        if st.zone is not None:
            p = snap / f"zone_{slug(st.config.name)}_{k:06d}.abhf"
            write_heightfield(p, st.zone.h, cascade=i, t=sim.t)
            paths.append(p)
    return paths


def write_timing(path: Path, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(TIMING_HEADER) + "\n")
        for stage, total, per in rows:
            fh.write(f"{stage},{total:.6f},{per:.6f}\n")


def run_scenario(scenario: Scenario, out_dir, precision: str = "f64", report_timing: bool = False,
                 n_steps: int | None = None) -> RunResult:
    """Run ``scenario`` and write its logs into ``out_dir``.

    Snapshots are written at step 0 and every ``snapshot_stride`` steps.
    Pure-ocean runs write snapshots only.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sim = Simulation(scenario, precision=precision)
    stride = scenario.output.snapshot_stride
    if not sim.bodies and stride <= 0:
        stride = max(scenario.n_steps, 1)
    writers = _Writers(sim, out)
    files = list(writers.files)
    try:
        if stride > 0:
            files += write_snapshot(sim, out)

        def callback(s, rec):
            writers.write(rec)
            if stride > 0 and s.step_index % stride == 0:
                files.extend(write_snapshot(s, out))

        sim.run(n_steps, callback)
    finally:
        writers.close()
    result = RunResult(out, sim.step_index, files, sim.timings.as_rows())
    if report_timing:
        p = out / "timing.csv"
        write_timing(p, result.timing)
        result.files.append(p)
    return result
