import filecmp
import warnings

import numpy as np
import pytest

from oceansim.cli import build_parser, main
from oceansim.config import parse_scenario
from oceansim.meshes import box, save_obj
from oceansim.surface import build_cascades, generate_maps, height_at, read_heightfield

SMALL = """
seed = 3
duration = 0.1
[spectrum]
wind_speed = 9.0
peak_frequency = "cube-root"
[ocean]
N = 16
[velocity]
d = 4
[fdm]
grid_size = 32
margin = 4
[output]
figures = false
"""

BODY = """
[[bodies]]
name = "crate"
size = [1.0, 1.0, 1.0]
"""

RUNAWAY = SMALL + """
[[bodies]]
name = "feather"
density = 1e-9
velocity = [300.0, 0.0, 0.0]
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def error_line(capsys):
    err = [l for l in capsys.readouterr().err.splitlines() if l.startswith("ERROR")]
    assert len(err) == 1
    return err[0]


def test_run_writes_csvs(tmp_path, capsys):
    cfg = write(tmp_path, "s.toml", SMALL + BODY)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    for name in ("trajectory_crate.csv", "forces_crate.csv", "zone_crate.csv"):
        assert (tmp_path / "o" / name).exists()
    rows = np.loadtxt(tmp_path / "o" / "trajectory_crate.csv", delimiter=",", skiprows=1)
    assert rows.shape == (6, 14)


def test_run_report_timing(tmp_path, capsys):
    cfg = write(tmp_path, "s.toml", SMALL + BODY)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o"), "--report-timing", "--steps", "2"]) == 0
    lines = (tmp_path / "o" / "timing.csv").read_text().splitlines()
    assert lines[0] == "stage,total_s,per_step_ms" and lines[-1].startswith("total,")
    assert "per_step_ms" in capsys.readouterr().out


def test_figures_written(tmp_path):
    cfg = write(tmp_path, "s.toml", SMALL.replace("figures = false", "figures = true\nsnapshot_stride = 2") + BODY)
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    for name in ("trajectory.png", "forces.png", "surface.png", "zone.png"):
        assert (tmp_path / "o" / name).stat().st_size > 0


def test_run_deterministic_and_seed_override(tmp_path):
    cfg = write(tmp_path, "s.toml", SMALL + BODY)
    for out, seed in (("a", []), ("b", []), ("c", ["--seed", "99"])):
        assert main(["run", "--config", cfg, "--out", str(tmp_path / out)] + seed) == 0
    name = "trajectory_crate.csv"
    assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False)
    assert not filecmp.cmp(tmp_path / "a" / name, tmp_path / "c" / name, shallow=False)


def test_threads_do_not_change_bits(tmp_path):
    cfg = write(tmp_path, "s.toml", SMALL + BODY + BODY.replace("crate", "crate2").replace(
        'size = [1.0, 1.0, 1.0]', 'size = [1.0, 1.0, 1.0]\nposition = [3.0, 0.0, 0.0]'))
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "a"), "--threads", "1"]) == 0
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "3"]) == 0
    for name in ("trajectory_crate.csv", "forces_crate2.csv", "zone_crate.csv"):
        assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False)


def test_bundled_empty_ocean_snapshots_only(tmp_path):
    out = tmp_path / "o"
    assert main(["run", "--config", "empty-ocean", "--out", str(out), "--steps", "3", "--no-figures"]) == 0
    files = sorted(p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file())
    assert files and all(f.startswith("snapshots/ocean_") for f in files)


@pytest.mark.parametrize("name, bodies", [("one-solid", 1), ("ten-solids", 10)])
def test_bundled_body_scenarios(tmp_path, name, bodies, capsys):
    out = tmp_path / "o"
    assert main(["run", "--config", name, "--out", str(out), "--steps", "2", "--no-figures"]) == 0
    assert len(list(out.glob("trajectory_*.csv"))) == bodies


def test_config_error_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, "bad.toml", "seed = 1\n[ocean]\n  bogus = 2\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    line = error_line(capsys)
    assert line.startswith("ERROR 2 ") and "line 3, column 3" in line
    assert main(["run", "--out", str(tmp_path / "o")]) == 2
    assert main(["run", "--config", "no-such-scenario", "--out", str(tmp_path / "o")]) == 2


def test_mesh_error_exit_3(tmp_path, capsys):
    m = box()
    (tmp_path / "open.obj").write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
    cfg = write(tmp_path, "m.toml", SMALL + '[[bodies]]\nname = "x"\nmesh = "open.obj"\n')
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    assert error_line(capsys).startswith("ERROR 3 ")
    save_obj(tmp_path / "ok.obj", m)
    assert main(["validate-mesh", str(tmp_path / "ok.obj")]) == 0
    assert "12 triangles" in capsys.readouterr().out
    assert main(["validate-mesh", str(tmp_path / "open.obj")]) == 3
    assert main(["validate-mesh", "--config", "ten-solids"]) == 0


def test_numeric_blow_up_exit_4(tmp_path, capsys):
    cfg = write(tmp_path, "r.toml", RUNAWAY)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 4
    assert error_line(capsys).startswith("ERROR 4 numeric blow-up at step 1")


def test_io_error_exit_5(tmp_path, capsys):
    (tmp_path / "file").write_text("x")
    assert main(["dump-surface", "--out", str(tmp_path / "file" / "sub")]) == 5
    assert error_line(capsys).startswith("ERROR 5 ")


def test_unknown_flag_rejected():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["run", "--bogus"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "--seed", "-1"])


def test_dump_surface_matches_height_at(tmp_path):
    cfg = write(tmp_path, "s.toml", SMALL)
    for out in ("a", "b"):
        assert main(["dump-surface", "--config", cfg, "--t", "1.25", "--out", str(tmp_path / out), "--csv"]) == 0
    for name in ("surface_h.abhf", "surface_dh_dx.abhf", "surface_Dx.abhf"):
        assert filecmp.cmp(tmp_path / "a" / name, tmp_path / "b" / name, shallow=False)
    h, cid, t = read_heightfield(tmp_path / "a" / "surface_h.abhf")
    assert cid == -1 and t == 1.25
    sc = parse_scenario(SMALL)
    maps = generate_maps(build_cascades(sc.spectrum, N=16), 1.25)
    rng = np.random.default_rng(0)
    i, j = rng.integers(0, 16, (2, 20))
    L = sc.ocean.lengths[0]
    ref = height_at(maps, i * L / 16, j * L / 16, n_iter=sc.ocean.n_iter)
    assert np.allclose(h[i, j], ref, atol=1e-5)
    assert (tmp_path / "a" / "surface_h.csv").exists()


def test_bench_subcommands_deterministic(tmp_path, capsys):
    runs = [
        ["interp-accuracy", "--N", "16", "--points", "200", "--d", "4", "8"],
        ["convergence", "--N", "16", "--points", "50", "--wind-min", "0.1", "--wind-max", "1.1"],
        ["normalization", "--samples", "200"],
        ["degree-study", "--N", "16", "--points", "100", "--d", "2", "4"],
    ]
    results = {"interp-accuracy": "interp_accuracy.csv", "convergence": "convergence.csv",
               "normalization": "normalization_samples.csv", "degree-study": "degree_study.csv"}
    for args in runs:
        for out in ("a", "b"):
            assert main(["bench", *args, "--out", str(tmp_path / out / args[0]), "--seed", "5"]) == 0
        name = results[args[0]]
        assert filecmp.cmp(tmp_path / "a" / args[0] / name, tmp_path / "b" / args[0] / name, shallow=False)
        assert list((tmp_path / "a" / args[0]).glob("*.png"))
    out = capsys.readouterr().out
    assert "best d =" in out and "quadrature factor mean" in out
