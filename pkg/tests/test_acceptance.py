"""Acceptance suite: one PASS/FAIL line per criterion in the terminal summary.

Criteria that the implementation cannot meet are strict xfails: the check
runs in full and must keep failing.
"""

import filecmp
import time

import numpy as np
import pytest

from oceansim import bench
from oceansim.cli import main
from oceansim.fft_core import ifft2_centered, ifft2_hermitian_pair, random_hermitian
from oceansim.hydro import FluidQuery, aggregate, classify_clip, flat_sea, submerged_volume
from oceansim.interactive import CFL_TARGET, FdmParams, FdmZone, apply_mask, points_in_loops, stable_spacing
from oceansim.meshes import box, icosphere
from oceansim.rigid_body import BodyPose, RigidBody, box_inertia
from oceansim.spectra import SpectrumParams
from oceansim.surface import FIELD_NAMES, assemble_coefficients, build_cascades, direct_field, generate_maps
from oceansim.velocity import velocity_direct


def test_c1_packed_transform(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for N in (8, 64, 256):
        for _ in range(200):
            X = random_hermitian(N, rng)
            Y = random_hermitian(N, rng)
            a, b = ifft2_hermitian_pair(X, Y)
            worst = max(worst, np.max(np.abs(a - ifft2_centered(X).real)), np.max(np.abs(b - ifft2_centered(Y).real)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-9 and elapsed < 5.0
    criterion(1, ok, f"packed pair vs two transforms: max err {worst:.2e}, {elapsed:.2f} s")
    assert ok


def test_c2_direct_sum_oracle(criterion):
    t0 = time.perf_counter()
    worst = 0.0
    for N in (16, 32):
        for seed in range(5):
            cs = build_cascades(SpectrumParams(wind_speed=15.0, swell=0.4, rng_seed=seed), N=N)
            t = 0.5 + seed
            maps = generate_maps(cs, t)
            for ci, g in enumerate(cs):
                x, z = np.meshgrid(np.arange(N) * g.L / N, np.arange(N) * g.L / N, indexing="ij")
                coeffs = assemble_coefficients(g, t)
                for fi, name in enumerate(FIELD_NAMES):
                    ref = direct_field(g, coeffs[name], x, z)
                    worst = max(worst, np.max(np.abs(maps.fields[ci][fi] - ref)))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 30.0
    criterion(2, ok, f"FFT maps vs direct sum: max err {worst:.2e} m, {elapsed:.1f} s")
    assert ok


@pytest.mark.xfail(strict=True, reason="polynomial normalization factor diverges below the peak frequency")
def test_c3_normalization_study(criterion):
    t0 = time.perf_counter()
    res = bench.normalization(10000, seed=0)
    elapsed = time.perf_counter() - t0
    mean = res.polynomial_mean
    ok = 1.02 <= mean <= 1.12 and elapsed < 60.0
    criterion(3, ok, f"polynomial-normalized mean {mean:.4f} (band [1.02, 1.12]); "
                     f"quadrature-normalized mean {res.quadrature_mean:.6f}; {elapsed:.1f} s")
    assert ok


@pytest.fixture(scope="module")
def convergence_study():
    t0 = time.perf_counter()
    res = bench.convergence()
    return res, time.perf_counter() - t0


def test_c4_mean_iterations_grow_with_wind(convergence_study):
    res, elapsed = convergence_study
    assert elapsed < 600.0
    # non-decreasing up to sampling noise: no drop larger than one standard error
    se = np.sqrt(res.var_iters / 1000.0)
    drops = res.mean_iters[:-1] - res.mean_iters[1:]
    assert np.all(drops <= 3 * np.maximum(se[:-1], se[1:]) + 1e-12)
    assert res.mean_iters[0] <= res.mean_iters[-1]


@pytest.mark.xfail(strict=True, reason="most points need more than 4 retrieval passes at moderate and high wind")
def test_c4_convergence_study(convergence_study, criterion):
    res, elapsed = convergence_study
    se = np.sqrt(res.var_iters / 1000.0)
    drops = res.mean_iters[:-1] - res.mean_iters[1:]
    monotone = bool(np.all(drops <= 3 * np.maximum(se[:-1], se[1:]) + 1e-12))
    worst = int(np.argmin(res.frac_within))
    ok = bool(np.all(res.frac_within >= 0.95)) and monotone and elapsed < 600.0
    criterion(4, ok, f"min fraction within 4 passes {res.frac_within[worst]:.3f} at U={res.winds[worst]} "
                     f"(need >= 0.95); mean iterations {res.mean_iters[0]:.2f} -> {res.mean_iters[-1]:.2f}, "
                     f"non-decreasing: {monotone}; {elapsed:.1f} s")
    assert ok


def test_c5_velocity_interpolation(criterion):
    t0 = time.perf_counter()
    res = bench.interp_accuracy(SpectrumParams(wind_speed=20.0), N=128, n_points=10000, d_values=(8,))
    elapsed = time.perf_counter() - t0
    e = {(s, i): res.mean_error(8, s, i) for s in ("log", "uniform") for i in ("exp", "linear")}
    a = e["log", "exp"] < e["uniform", "linear"]
    b = e["log", "exp"] < e["uniform", "exp"] and e["log", "linear"] < e["uniform", "linear"]
    ok = a and b and elapsed < 600.0
    detail = ", ".join(f"{s}+{i} {v:.4f}" for (s, i), v in e.items())
    criterion(5, ok, f"mean speed error at d=8 (m/s): {detail}; {elapsed:.1f} s")
    assert ok


def test_c6_physical_field_properties(criterion):
    t0 = time.perf_counter()
    cs = build_cascades(SpectrumParams(wind_speed=20.0, rng_seed=6), N=16)
    rng = np.random.default_rng(6)
    n, eps, t = 100, 0.1, 1.3
    x, z = rng.uniform(-300, 300, (2, n))
    y = rng.uniform(-30, -1, n)

    def v(dx=0.0, dy=0.0, dz=0.0):
        return velocity_direct(cs, x + dx, y + dy, z + dz, t)

    gx = (v(dx=eps) - v(dx=-eps)) / (2 * eps)
    gy = (v(dy=eps) - v(dy=-eps)) / (2 * eps)
    gz = (v(dz=eps) - v(dz=-eps)) / (2 * eps)
    speed = np.linalg.norm(v(), axis=0)
    div = np.max(np.abs(gx[0] + gy[1] + gz[2]) / speed)
    curl = np.max(np.linalg.norm(np.stack([gy[2] - gz[1], gz[0] - gx[2], gx[1] - gy[0]]), axis=0) / speed)

    xs, zs = rng.uniform(-300, 300, (2, 100))
    dt = 1e-4
    vy = velocity_direct(cs, xs, 0.0, zs, t)[1]
    h = [sum(direct_field(g, assemble_coefficients(g, tt)["h"], xs, zs) for g in cs) for tt in (t - dt, t + dt)]
    fd = (h[1] - h[0]) / (2 * dt)
    rms = np.sqrt(np.mean((vy - fd) ** 2)) / np.sqrt(np.mean(fd**2))
    elapsed = time.perf_counter() - t0
    ok = div < 1e-3 and curl < 1e-3 and rms < 0.01 and elapsed < 60.0
    criterion(6, ok, f"max |div|/|v| {div:.1e}, max |curl|/|v| {curl:.1e}, surface v_y vs dh/dt rel RMS {rms:.1e}; "
                     f"{elapsed:.1f} s")
    assert ok


def test_c7_archimedes(criterion):
    t0 = time.perf_counter()
    size = (2.0, 1.0, 2.0)
    mesh = box(size)
    fluid = FluidQuery(flat_sea())
    mass = 0.5 * fluid.rho_water * mesh.volume
    body = RigidBody(mass, box_inertia(mass, size), BodyPose(position=[0.0, 0.3, 0.0]))
    for _ in range(7200):
        aggregate(mesh, body.pose, fluid).apply_to(body)
        body.integrate(1 / 60)
    draft = aggregate(mesh, body.pose, fluid).volume / mesh.volume

    cube = box()
    v_cube = submerged_volume(classify_clip(cube, BodyPose(position=[0.2, -5.0, 0.1]), fluid))
    sphere = icosphere(4)
    v_sph = submerged_volume(classify_clip(sphere, BodyPose(position=[0.0, -5.0, 0.0]), fluid))
    err_cube = abs(v_cube - cube.volume) / cube.volume
    err_sph = abs(v_sph - sphere.volume) / sphere.volume
    elapsed = time.perf_counter() - t0
    ok = abs(draft - 0.5) <= 0.025 and err_cube < 1e-6 and err_sph < 1e-6 and elapsed < 60.0
    criterion(7, ok, f"settled draft {draft:.4f} (0.5 +- 5%), submerged volume rel err cube {err_cube:.1e}, "
                     f"icosphere {err_sph:.1e}; {elapsed:.1f} s")
    assert ok


def _winding(px, pz, loop):
    d = loop[None, :, :] - np.stack([px, pz], axis=-1)[:, None, :]
    e = np.roll(d, -1, axis=1)
    ang = np.arctan2(d[..., 0] * e[..., 1] - d[..., 1] * e[..., 0], np.einsum("pmk,pmk->pm", d, e))
    return np.rint(ang.sum(axis=1) / (2 * np.pi)).astype(int)


def test_c8_fdm_suite(criterion):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    dt = 1 / 60

    # CFL construction
    ratios = []
    prev = None
    for speed in rng.uniform(0, 30, 1000):
        prev, c = stable_spacing(speed, dt, 0.005, 2.0, prev)
        ratios.append((c * dt / prev) ** 2)
    cfl = np.max(np.abs(np.array(ratios) - CFL_TARGET))

    # bounded run with moving forcing
    params = FdmParams(grid_size=96, margin=8, delta_min=0.01, delta_max=1.0)
    zone = FdmZone.around([0.0, 0.0], params, dt)
    pos = np.zeros(2)
    peak = 0.0
    for k in range(10000):
        speed = 3.0 + 2.0 * np.sin(k / 300)
        pos = pos + [speed * dt, 0.0]
        zone.update_stability(speed, dt)
        X, Z = zone.node_positions()
        apply_mask(zone, (X - pos[0]) ** 2 / 4 + (Z - pos[1]) ** 2 < 1.0, 10.0 * np.sin(k / 7.0))
        zone.step(dt, pos, speed)
        peak = max(peak, float(np.abs(zone.h).max()))
    bounded = np.isfinite(peak) and peak < 1000.0

    # unforced discrete energy decays
    zone.step(dt, pos, 0.0)
    e = []
    for _ in range(500):
        zone.step(dt, pos, 0.0)
        e.append(zone.wave_energy())
    energy_ok = bool(np.all(np.diff(e) <= 1e-12 * e[0]))

    # wavefront speed
    wz = FdmZone.around([0.0, 0.0], FdmParams(grid_size=512, delta_min=0.01, delta_max=1.0), dt, delta=0.1)
    X, Z = wz.node_positions()
    r = np.hypot(X, Z)
    disk = r < 1.0
    apply_mask(wz, disk, 1.0)
    wz.h_prev[disk] = 1.0
    bins = np.arange(0, r.max(), wz.delta)
    idx = np.digitize(r.ravel(), bins)
    counts = np.maximum(np.bincount(idx, minlength=len(bins) + 1), 1)
    front = {}
    for k in range(1, 101):
        wz.step(dt, [0.0, 0.0])
        if k in (40, 100):
            prof = np.bincount(idx, np.abs(wz.h).ravel(), len(bins) + 1) / counts
            front[k] = bins[np.flatnonzero(prof > 0.1 * prof.max()).max() - 1]
    front_speed = (front[100] - front[40]) / (60 * dt)
    speed_err = abs(front_speed / wz.c - 1)

    # shifted-run equivalence
    n, w, steps = 192, 2, 30
    ii = np.arange(n)
    r2 = ((ii[:, None] - 110) ** 2 + (ii[None, :] - n // 2) ** 2).astype(float)
    bump = np.where(r2 < 36, (36 - r2) ** 2 / 1296.0, 0.0)
    sp = FdmParams(grid_size=n, margin=8, delta_min=0.01, delta_max=1.0)
    static = FdmZone.around([0.0, 0.0], sp, dt, delta=0.1)
    moving = FdmZone.around([0.0, 0.0], sp, dt, delta=0.1)
    for zz in (static, moving):
        zz.h, zz.h_prev = bump.copy(), bump.copy()
    for _ in range(steps):
        static.step(dt, static.center)
        moving.step(dt, moving.center + [(w + 0.5) * 0.1, 0.0])
    shift_err = np.max(np.abs(moving.h[: n - w * steps] - static.h[w * steps:]))

    # point in polygon vs winding number
    pts = rng.uniform(-1.6, 1.6, (2, 500))
    pip_ok = True
    for _ in range(100):
        m = rng.integers(3, 14)
        ang = np.sort(rng.uniform(0, 2 * np.pi, m))
        rad = rng.uniform(0.3, 1.0, m)
        loop = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1) + rng.uniform(-0.5, 0.5, 2)
        pip_ok &= bool(np.array_equal(points_in_loops(pts[0], pts[1], [loop]), _winding(pts[0], pts[1], loop) != 0))

    elapsed = time.perf_counter() - t0
    ok = (cfl < 1e-12 and bounded and energy_ok and speed_err < 0.1 and shift_err < 1e-9 and pip_ok
          and elapsed < 300.0)
    criterion(8, ok, f"CFL dev {cfl:.1e}; 10k-step peak {peak:.2f} m; energy decay {energy_ok}; "
                     f"front speed {front_speed:.3f} vs c {wz.c:.3f} m/s; shifted-run err {shift_err:.1e}; "
                     f"PIP == winding on 100 polygons {pip_ok}; {elapsed:.1f} s")
    assert ok


def test_c9_timing_report(tmp_path, criterion, capsys):
    code = main(["run", "--config", "one-solid", "--out", str(tmp_path), "--steps", "30", "--report-timing",
                 "--no-figures"])
    rows = (tmp_path / "timing.csv").read_text().splitlines()
    total = rows[-1].split(",")
    criterion(9, code == 0, f"timing report only, not asserted: {float(total[2]):.1f} ms per step (one-solid, "
                            f"30 steps, N=64)")
    assert code == 0


def test_c10_benchmark_determinism(tmp_path, criterion):
    runs = {
        "interp-accuracy": (["--N", "32", "--points", "500"], "interp_accuracy.csv"),
        "convergence": (["--N", "32", "--points", "200", "--wind-min", "0.1", "--wind-max", "10.1",
                         "--wind-step", "2.5"], "convergence.csv"),
        "normalization": (["--samples", "1000"], "normalization_samples.csv"),
        "degree-study": (["--N", "32", "--points", "300", "--d", "2", "4", "8"], "degree_study.csv"),
    }
    same = {}
    for study, (args, name) in runs.items():
        for out in ("a", "b"):
            assert main(["bench", study, *args, "--seed", "17", "--threads", "2", "--no-figures",
                         "--out", str(tmp_path / out / study)]) == 0
        same[study] = filecmp.cmp(tmp_path / "a" / study / name, tmp_path / "b" / study / name, shallow=False)
    ok = all(same.values())
    criterion(10, ok, "bit-identical re-runs: " + ", ".join(f"{k} {v}" for k, v in same.items()))
    assert ok
