"""PNG figures written next to the CSV outputs (matplotlib, Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from oceansim.surface import read_heightfield  # noqa: E402


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def _read_csv(path: Path):
    return np.genfromtxt(path, delimiter=",", names=True, dtype=None, encoding="utf-8")


def run_figures(out_dir) -> list:
    """Track, heave and force plots per body plus the latest ocean snapshot."""
    out = Path(out_dir)
    paths = []
    trajs = sorted(out.glob("trajectory_*.csv"))
    if trajs:
        fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
        for p in trajs:
            d = np.atleast_1d(_read_csv(p))
            label = p.stem[len("trajectory_"):]
            ax1.plot(d["px"], d["pz"], label=label)
            ax2.plot(d["t"], d["py"], label=label)
        ax1.set(xlabel="x (m)", ylabel="z (m)", title="track", aspect="equal")
        ax2.set(xlabel="t (s)", ylabel="y (m)", title="heave")
        ax1.legend(fontsize=7)
        paths.append(_save(fig, out / "trajectory.png"))
    forces = sorted(out.glob("forces_*.csv"))
    if forces:
        fig, ax = plt.subplots(figsize=(6, 4))
        for p in forces:
            d = np.atleast_1d(_read_csv(p))
            ax.plot(d["t"], d["fb_y"] / 1e3, label=p.stem[len("forces_"):])
        ax.set(xlabel="t (s)", ylabel="buoyancy (kN)")
        ax.legend(fontsize=7)
        paths.append(_save(fig, out / "forces.png"))
    snaps = sorted((out / "snapshots").glob("ocean_*.abhf")) if (out / "snapshots").exists() else []
    if snaps:
        h, _, t = read_heightfield(snaps[-1])
        fig, ax = plt.subplots(figsize=(5, 4))
        im = ax.imshow(h.T, origin="lower", cmap="viridis")
        fig.colorbar(im, ax=ax, label="h (m)")
        ax.set(title=f"surface at t = {t:.2f} s", xlabel="i (x)", ylabel="j (z)")
        paths.append(_save(fig, out / "surface.png"))
    zones = sorted((out / "snapshots").glob("zone_*.abhf")) if (out / "snapshots").exists() else []
    if zones:
        h, _, t = read_heightfield(zones[-1])
        fig, ax = plt.subplots(figsize=(5, 4))
        lim = float(np.abs(h).max()) or 1.0
        im = ax.imshow(h.T, origin="lower", cmap="RdBu_r", vmin=-lim, vmax=lim)
        fig.colorbar(im, ax=ax, label="h (m)")
        ax.set(title=zones[-1].stem)
        paths.append(_save(fig, out / "zone.png"))
    return paths


def interp_figure(res, out_dir) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ds = sorted({r[0] for r in res.rows})
    for scheme in ("log", "uniform"):
        for interp in ("exp", "linear"):
            ax.plot(ds, [res.mean_error(d, scheme, interp) for d in ds], "o-", label=f"{scheme} + {interp}")
    ax.set(xlabel="slices d", ylabel="mean speed error (m/s)", yscale="log")
    ax.legend()
    return _save(fig, Path(out_dir) / "interp_accuracy.png")


def convergence_figure(res, out_dir) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(res.winds, res.mean_iters, label="mean iterations")
    ax.fill_between(res.winds, res.mean_iters - np.sqrt(res.var_iters), res.mean_iters + np.sqrt(res.var_iters),
                    alpha=0.3)
    ax.set(xlabel="wind (m/s)", ylabel="iterations")
    ax2 = ax.twinx()
    ax2.plot(res.winds, res.frac_within, "r--", label=f"fraction within {res.n_iter}")
    ax2.set(ylabel="fraction", ylim=(0, 1.05))
    fig.legend(loc="lower right", fontsize=8)
    return _save(fig, Path(out_dir) / "convergence.png")


def normalization_figure(res, out_dir) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    order = np.argsort(res.r_omega)
    ax.plot(res.r_omega[order], res.quadrature[order], ".", ms=2, label="quadrature factor")
    ax.plot(res.r_omega[order], res.polynomial[order], ".", ms=2, label="polynomial factor")
    ax.axhline(1.0, color="k", lw=0.8)
    ax.set(xscale="log", xlabel="omega / omega_p", ylabel="normalized integral", ylim=(-5, 5))
    ax.legend()
    return _save(fig, Path(out_dir) / "normalization.png")


def degree_figure(res, out_dir) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(res.degrees, res.beta * res.accuracy, "o-", label="beta A(d)")
    ax.plot(res.degrees, res.alpha * res.runtime, "s-", label="alpha P(d)")
    ax.plot(res.degrees, res.objective, "k^-", label="J(d)")
    ax.axvline(res.best_degree, color="gray", ls=":")
    ax.set(xlabel="slices d")
    ax.legend()
    return _save(fig, Path(out_dir) / "degree_study.png")
