"""Water velocity below and just above the mean surface.

The exact field is a spectral sum over all cascades with a depth-dependent
attenuation. The fast path evaluates it on a few horizontal slices with
inverse FFTs and interpolates between them in depth.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from oceansim.errors import ConfigError
from oceansim.fft_core import ifft2_hermitian_pair
from oceansim.parallel import ordered_map
from oceansim.surface import CascadeSet, bilinear_periodic, time_factors

LOG_ALPHA = 1e-4
ANTIPODAL_GAP = np.pi - 0.1
_TINY = 1e-12


def attenuation(k, y):
    """Depth attenuation: ``exp(k y)`` for y <= 0 and ``1 + k y`` above."""
    k = np.asarray(k, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(k < 0):
        raise ValueError("k must be non-negative")
    with np.errstate(over="ignore"):
        return np.where(y > 0, 1.0 + k * y, np.exp(k * np.minimum(y, 0.0)))


def _mode_factors(grid, t):
    """Per-mode ``(h0 e^{iwt} - h0*(-k) e^{-iwt})`` and the three direction terms."""
    a, b = time_factors(grid, t)
    diff = a - b
    w = grid.omega
    safe = np.where(w > 0, w, 1.0)
    g = grid.gravity
    fx = np.where(w > 0, -grid.kx * g / safe, 0.0)
    fz = np.where(w > 0, -grid.kz * g / safe, 0.0)
    fy = 1j * w
    return diff, fx, fy, fz


def velocity_coefficients(grid, y: float, t: float):
    """Spectral coefficients ``(vx, vy, vz)`` of one cascade at depth y."""
    diff, fx, fy, fz = _mode_factors(grid, t)
    c = attenuation(grid.k, y) * diff
    return c * fx, c * fy, c * fz


def velocity_direct(cascades: CascadeSet, x, y, z, t: float, chunk: int = 128) -> np.ndarray:
    """Exact velocity by direct summation over every nonzero mode.

    ``x``, ``y``, ``z`` broadcast together; returns shape ``(3,) + shape``.
    """
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    shape = x.shape
    xs, ys, zs = x.ravel(), y.ravel(), z.ravel()
    modes = []
    for grid in cascades.grids:
        diff, fx, fy, fz = _mode_factors(grid, t)
        live = diff != 0
        modes.append((grid.kx[live], grid.kz[live], grid.k[live], diff[live],
                       np.stack([fx[live], fy[live], fz[live]])))
    kx = np.concatenate([m[0] for m in modes])
    kz = np.concatenate([m[1] for m in modes])
    k = np.concatenate([m[2] for m in modes])
    diff = np.concatenate([m[3] for m in modes])
    dirs = np.concatenate([m[4] for m in modes], axis=1)
    out = np.zeros((3, xs.size))
    for s in range(0, xs.size, chunk):
        sl = slice(s, s + chunk)
        phase = np.exp(1j * (np.outer(xs[sl], kx) + np.outer(zs[sl], kz)))
        att = attenuation(k[None, :], ys[sl, None])
        base = phase * att * diff
        out[:, sl] = (base @ dirs.T).real.T
    return out.reshape((3,) + shape)


def dh_dt_coefficients(grid, t: float):
    """Spectral coefficients of the time derivative of the height."""
    a, b = time_factors(grid, t)
    return 1j * grid.omega * (a - b)


def log_distribution(y, y_min: float, alpha: float = LOG_ALPHA):
    """Depth distortion ``sign(y) beta ln(alpha y^2 + 1)`` with ``l(y_min) = y_min / 2``."""
    if not y_min < 0:
        raise ValueError("y_min must be negative")
    beta = -y_min / (2.0 * np.log(alpha * y_min * y_min + 1.0))
    y = np.asarray(y, dtype=float)
    return np.sign(y) * beta * np.log(alpha * y * y + 1.0)


def log_distribution_inverse(l, y_min: float, alpha: float = LOG_ALPHA):
    beta = -y_min / (2.0 * np.log(alpha * y_min * y_min + 1.0))
    l = np.asarray(l, dtype=float)
    return np.sign(l) * np.sqrt(np.expm1(np.abs(l) / beta) / alpha)


def slice_depths(y_min: float, y_max: float, d: int, scheme: str = "log") -> np.ndarray:
    """Depths of the d sampled planes.

    ``"log"`` maps d evenly spaced pre-images through :func:`log_distribution`.
    The pre-image range runs from ``y_min`` to the pre-image of ``y_max`` so the
    planes span ``[y_min / 2, y_max]``. ``"uniform"`` spaces planes evenly on
    ``[y_min, y_max]``.
    """
    if not y_min < y_max:
        raise ConfigError("y_min must be below y_max")
    if d < 2:
        raise ConfigError("at least two slices are required")
    if scheme == "uniform":
        return np.linspace(y_min, y_max, d)
    if scheme != "log":
        raise ConfigError(f"unknown depth scheme {scheme!r}")
    if not y_min < 0:
        raise ConfigError("logarithmic depths need y_min < 0")
    top = log_distribution_inverse(y_max, y_min)
    depths = log_distribution(np.linspace(y_min, top, d), y_min)
    depths[-1] = y_max
    return depths


@dataclass(frozen=True, eq=False)
class VelocitySlices:
    """Velocity fields sampled on horizontal planes.

    ``fields[c]`` has shape ``(d, 3, N, N)`` for cascade ``c``.
    """

    depths: np.ndarray
    y_min: float
    y_max: float
    lengths: tuple
    fields: tuple
    t: float
    scheme: str = "log"

    @property
    def d(self) -> int:
        return len(self.depths)


def _cascade_slices(grid, depths, t):
    N = grid.N
    diff, fx, fy, fz = _mode_factors(grid, t)
    d = len(depths)
    coeffs = []
    for y in depths:
        c = attenuation(grid.k, y) * diff
        coeffs.append((c * fx, c * fz))
    vys = [attenuation(grid.k, y) * diff * fy for y in depths]
    if d % 2:
        vys.append(np.zeros_like(vys[0]))
    X = np.stack([a for a, _ in coeffs] + vys[0::2])
    Y = np.stack([b for _, b in coeffs] + vys[1::2])
    re, im = ifft2_hermitian_pair(X, Y)
    scale = float(N * N)
    out = np.empty((d, 3, N, N))
    out[:, 0] = re[:d] * scale
    out[:, 2] = im[:d] * scale
    vy = np.empty((2 * len(vys[0::2]), N, N))
    vy[0::2] = re[d:] * scale
    vy[1::2] = im[d:] * scale
    out[:, 1] = vy[:d]
    return out


def build_slices(cascades: CascadeSet, t: float, y_min: float = -125.0, y_max: float = 4.5,
                 d: int = 8, scheme: str = "log") -> VelocitySlices:
    """Velocity planes at the depths chosen by :func:`slice_depths`."""
    depths = slice_depths(y_min, y_max, d, scheme)
    fields = ordered_map(lambda g: _cascade_slices(g, depths, t), cascades.grids)
    return VelocitySlices(depths, float(y_min), float(y_max), cascades.lengths,
                          tuple(fields), float(t), scheme)


def exp_interp(a, f_a, b, f_b, x):
    """Interpolate with ``alpha exp(beta x)`` through (a, f_a) and (b, f_b).

    Falls back to linear interpolation where the end values differ in sign or
    either magnitude is below 1e-12.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.any(a == b):
        raise ValueError("exp_interp needs a != b")
    f_a = np.asarray(f_a, dtype=float)
    f_b = np.asarray(f_b, dtype=float)
    x = np.asarray(x, dtype=float)
    ok = (np.abs(f_a) >= _TINY) & (np.abs(f_b) >= _TINY) & (np.sign(f_a) == np.sign(f_b))
    t = (x - a) / (b - a)
    lin = f_a + (f_b - f_a) * t
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = (np.log(np.abs(f_b)) - np.log(np.abs(f_a))) / (b - a)
        ex = f_a * np.exp(beta * (x - a))
    return np.where(ok, ex, lin)


def _exp_weight(a, m_a, b, m_b, x):
    """Normalized position of ``x`` along the exponential through the magnitudes."""
    t = (x - a) / (b - a)
    ok = (m_a >= _TINY) & (m_b >= _TINY) & (np.abs(m_b - m_a) > _TINY * np.maximum(m_a, m_b))
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.log(m_b / m_a)
        w = np.expm1(r * t) / np.expm1(r)
    return np.where(ok, w, t)


def sample_slices(slices: VelocitySlices, x, z) -> np.ndarray:
    """All slices sampled at (x, z); shape ``(d, 3) + shape``."""
    total = None
    for L, f in zip(slices.lengths, slices.fields):
        s = bilinear_periodic(f, L, x, z)
        total = s if total is None else total + s
    return total


def velocity_at(slices: VelocitySlices, x, y, z, interp: str = "exp") -> np.ndarray:
    """Interpolated velocity at (x, y, z); returns shape ``(3,) + shape``.

    ``interp="exp"`` interpolates horizontal magnitude and vertical component
    exponentially and the horizontal angle along the shortest arc.
    ``interp="linear"`` interpolates the components linearly. Below the
    deepest slice the velocity goes to zero at ``y_min``.
    """
    x, y, z = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, z)))
    if np.any((y < slices.y_min) | (y > slices.y_max)):
        raise ValueError(f"y must lie in [{slices.y_min}, {slices.y_max}]")
    samples = sample_slices(slices, x, z)
    nodes = np.asarray(slices.depths, dtype=float)
    if nodes[0] > slices.y_min:
        nodes = np.concatenate([[slices.y_min], nodes])
        samples = np.concatenate([np.zeros((1,) + samples.shape[1:]), samples], axis=0)
    n = len(nodes)
    lo = np.clip(np.searchsorted(nodes, y, side="right") - 1, 0, n - 2)
    a, b = nodes[lo], nodes[lo + 1]
    va = np.take_along_axis(samples, lo[None, None], axis=0)[0]
    vb = np.take_along_axis(samples, (lo + 1)[None, None], axis=0)[0]
    if interp == "linear":
        t = (y - a) / (b - a)
        return va + (vb - va) * t
    if interp != "exp":
        raise ValueError(f"unknown interpolation {interp!r}")

    m_a = np.hypot(va[0], va[2])
    m_b = np.hypot(vb[0], vb[2])
    phi_a = np.arctan2(va[2], va[0])
    phi_b = np.arctan2(vb[2], vb[0])
    phi_a = np.where(m_a < _TINY, phi_b, phi_a)
    phi_b = np.where(m_b < _TINY, phi_a, phi_b)
    gap = (phi_b - phi_a + np.pi) % (2 * np.pi) - np.pi
    mag = exp_interp(a, m_a, b, m_b, y)
    phi = phi_a + _exp_weight(a, m_a, b, m_b, y) * gap
    vy = exp_interp(a, va[1], b, vb[1], y)
    t = (y - a) / (b - a)
    antipodal = np.abs(gap) > ANTIPODAL_GAP
    vx = np.where(antipodal, va[0] + (vb[0] - va[0]) * t, mag * np.cos(phi))
    vz = np.where(antipodal, va[2] + (vb[2] - va[2]) * t, mag * np.sin(phi))
    return np.stack([vx, vy, vz])


def random_query_points(n: int, rng: np.random.Generator, box=((-1000, 1000), (-125, 4.5), (-1000, 1000))):
    lo = np.array([b[0] for b in box], dtype=float)
    hi = np.array([b[1] for b in box], dtype=float)
    p = lo + (hi - lo) * rng.random((n, 3))
    return p[:, 0], p[:, 1], p[:, 2]


def speed_error(v_interp: np.ndarray, v_ref: np.ndarray) -> np.ndarray:
    """Per-point ``| |v_interp| - |v_ref| |``."""
    return np.abs(np.linalg.norm(v_interp, axis=0) - np.linalg.norm(v_ref, axis=0))


@dataclass
class DegreeStudyResult:
    """Accuracy A, runtime P and objective ``J = alpha P + beta A`` per degree."""

    degrees: np.ndarray
    accuracy: np.ndarray
    runtime: np.ndarray
    alpha: float = 10.0
    beta: float = 2.0

    @property
    def objective(self) -> np.ndarray:
        return self.alpha * self.runtime + self.beta * self.accuracy

    @property
    def best_degree(self) -> int:
        return int(self.degrees[int(np.argmin(self.objective))])


def degree_study(cascades: CascadeSet, t: float, d_values, points, v_ref, alpha: float = 10.0,
                 beta: float = 2.0, y_min: float = -125.0, y_max: float = 4.5) -> DegreeStudyResult:
    """Mean speed error and wall time (build plus query) per slice count."""
    d_values = np.asarray(list(d_values), dtype=int)
    if d_values.size == 0:
        raise ValueError("d_values must be non-empty")
    x, y, z = points
    acc, run = [], []
    for d in d_values:
        t0 = time.perf_counter()
        sl = build_slices(cascades, t, y_min, y_max, int(d), "log")
        v = velocity_at(sl, x, y, z, "exp")
        run.append(time.perf_counter() - t0)
        acc.append(float(np.mean(speed_error(v, v_ref))))
    return DegreeStudyResult(d_values, np.array(acc), np.array(run), alpha, beta)
