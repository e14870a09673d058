"""Numerical studies: interpolation accuracy, retrieval convergence,
directional normalization and slice-count selection.

Every study returns plain arrays and writes a deterministic CSV of computed
values. Wall-clock measurements go to a separate ``*_timing.csv`` so that
re-runs with the same seed reproduce the result files bit for bit.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from oceansim.spectra import SpectrumParams, dbxi_integral, q_dbxi_approx, q_dbxi_exact
from oceansim.surface import build_cascades, generate_maps, height_at
from oceansim.velocity import (build_slices, degree_study, random_query_points, speed_error,
                               velocity_at, velocity_direct)

CONVERGENCE_WINDS = tuple(np.round(np.arange(0.1, 35.0 + 1e-9, 0.5), 10))


def write_csv(path, header, rows, fmt="%.17g") -> Path:
    path = Path(path)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt % v for v in row) + "\n")
    return path


# interpolation accuracy ---------------------------------------------------

@dataclass
class InterpAccuracy:
    rows: list      # (d, scheme, interp, mean_error, p95_error)
    timing: list    # (d, scheme, interp, build_ms, query_ns)

    def mean_error(self, d, scheme, interp) -> float:
        for r in self.rows:
            if r[0] == d and r[1] == scheme and r[2] == interp:
                return r[3]
        raise KeyError((d, scheme, interp))


def interp_accuracy(params: SpectrumParams, N: int = 128, n_points: int = 10000, d_values=(4, 8, 16),
                    t: float = 0.0, seed: int = 0, y_min: float = -125.0, y_max: float = 4.5,
                    box=((-1000.0, 1000.0), (-125.0, 4.5), (-1000.0, 1000.0))) -> InterpAccuracy:
    """Speed error of slice sampling against the direct sum at random points."""
    cascades = build_cascades(params, N=N)
    rng = np.random.default_rng(seed)
    x, y, z = random_query_points(n_points, rng, box)
    v_ref = velocity_direct(cascades, x, y, z, t)
    rows, timing = [], []
    for d in d_values:
        for scheme in ("log", "uniform"):
            t0 = time.perf_counter()
            sl = build_slices(cascades, t, y_min, y_max, int(d), scheme)
            build = time.perf_counter() - t0
            for interp in ("exp", "linear"):
                t1 = time.perf_counter()
                v = velocity_at(sl, x, y, z, interp)
                query = time.perf_counter() - t1
                err = speed_error(v, v_ref)
                rows.append((int(d), scheme, interp, float(err.mean()), float(np.percentile(err, 95))))
                timing.append((int(d), scheme, interp, 1e3 * build, 1e9 * query / n_points))
    return InterpAccuracy(rows, timing)


def write_interp_accuracy(res: InterpAccuracy, out) -> list:
    out = Path(out)
    return [
        write_csv(out / "interp_accuracy.csv", ("d", "scheme", "interp", "mean_error", "p95_error"),
                  [(str(d), s, i, m, p) for d, s, i, m, p in res.rows]),
        write_csv(out / "interp_accuracy_timing.csv", ("d", "scheme", "interp", "build_ms", "query_ns"),
                  [(str(d), s, i, b, q) for d, s, i, b, q in res.timing], fmt="%.6g"),
    ]


# retrieval convergence ----------------------------------------------------

@dataclass
class Convergence:
    winds: np.ndarray
    mean_iters: np.ndarray
    var_iters: np.ndarray
    frac_within: np.ndarray   # fraction converged within ``n_iter`` passes
    max_iters: np.ndarray
    n_iter: int = 4


def convergence(winds=CONVERGENCE_WINDS, n_points: int = 1000, domain: float = 1e4, tol: float = 0.01,
                N: int = 256, seed: int = 0, n_iter: int = 4, max_iter: int = 50,
                base: SpectrumParams | None = None) -> Convergence:
    """Iterations needed by the height retrieval to settle within ``tol``.

    One sea is generated per wind speed with the same seed; the query points
    are shared across winds.
    """
    base = base or SpectrumParams(rng_seed=seed)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-0.5 * domain, 0.5 * domain, n_points)
    z = rng.uniform(-0.5 * domain, 0.5 * domain, n_points)
    winds = np.asarray(winds, dtype=float)
    stats = []
    for U in winds:
        params = SpectrumParams(**{**base.__dict__, "wind_speed": float(U), "rng_seed": seed})
        maps = generate_maps(build_cascades(params, N=N), 0.0)
        it = height_at(maps, x, z, tol=tol, max_iter=max_iter, full=True).iterations
        stats.append((it.mean(), it.var(), np.mean(it <= n_iter), it.max()))
    s = np.array(stats).reshape(-1, 4)
    return Convergence(winds, s[:, 0], s[:, 1], s[:, 2], s[:, 3].astype(int), n_iter)


def write_convergence(res: Convergence, out) -> list:
    rows = zip(res.winds, res.mean_iters, res.var_iters, res.frac_within, res.max_iters)
    return [write_csv(Path(out) / "convergence.csv",
                      ("wind", "mean_iters", "var_iters", f"frac_within_{res.n_iter}", "max_iters"), rows)]


# directional normalization -------------------------------------------------

@dataclass
class Normalization:
    r_omega: np.ndarray
    xi: np.ndarray
    integral: np.ndarray        # int D_DB D_xi dtheta without normalization
    polynomial: np.ndarray      # integral times the polynomial factor
    quadrature: np.ndarray      # integral times the tabulated exact factor

    @property
    def polynomial_mean(self) -> float:
        return float(self.polynomial.mean())

    @property
    def quadrature_mean(self) -> float:
        return float(self.quadrature.mean())


def normalization(n_samples: int = 10000, seed: int = 0, r_range=(0.1, 10.0), xi_range=(0.0, 1.0),
                  chunk: int = 500) -> Normalization:
    """Monte-Carlo mean of the normalized directional integral.

    ``r_omega`` is drawn log-uniformly over ``r_range`` and the swell
    parameter uniformly from a 0.01 grid over ``xi_range``; the grid keeps
    the number of tabulated exact factors small.
    """
    rng = np.random.default_rng(seed)
    lo, hi = np.log(r_range[0]), np.log(r_range[1])
    r = np.exp(rng.uniform(lo, hi, n_samples))
    steps = int(round(100 * (xi_range[1] - xi_range[0])))
    xi = xi_range[0] + rng.integers(0, steps + 1, n_samples) / 100.0
    integral = np.concatenate([dbxi_integral(r[i:i + chunk], xi[i:i + chunk])
                               for i in range(0, n_samples, chunk)])
    exact = np.empty(n_samples)
    for value in np.unique(xi):
        sel = xi == value
        exact[sel] = q_dbxi_exact(r[sel], float(value))
    return Normalization(r, xi, integral, q_dbxi_approx(r) * integral, exact * integral)


def write_normalization(res: Normalization, out) -> list:
    out = Path(out)
    summary = [("polynomial", res.polynomial_mean, float(res.polynomial.std())),
               ("quadrature", res.quadrature_mean, float(res.quadrature.std()))]
    return [
        write_csv(out / "normalization.csv", ("factor", "mean", "std"), summary),
        write_csv(out / "normalization_samples.csv", ("r_omega", "xi", "integral", "polynomial", "quadrature"),
                  zip(res.r_omega, res.xi, res.integral, res.polynomial, res.quadrature)),
    ]


# slice count selection -----------------------------------------------------

def run_degree_study(params: SpectrumParams, N: int = 128, n_points: int = 2000, d_values=range(2, 17),
                     t: float = 0.0, seed: int = 0, alpha: float = 10.0, beta: float = 2.0):
    cascades = build_cascades(params, N=N)
    rng = np.random.default_rng(seed)
    x, y, z = random_query_points(n_points, rng)
    v_ref = velocity_direct(cascades, x, y, z, t)
    return degree_study(cascades, t, d_values, (x, y, z), v_ref, alpha, beta)


def write_degree_study(res, out) -> list:
    out = Path(out)
    return [
        write_csv(out / "degree_study.csv", ("d", "accuracy"),
                  [(str(d), a) for d, a in zip(res.degrees, res.accuracy)]),
        write_csv(out / "degree_study_timing.csv", ("d", "runtime_s", "objective", "best"),
                  [(str(d), p, j, "1" if d == res.best_degree else "0")
                   for d, p, j in zip(res.degrees, res.runtime, res.objective)], fmt="%.6g"),
    ]
