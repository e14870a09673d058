"""Per-cascade surface maps, periodic sampling and iterative height retrieval.

Spatial node ``(i, j)`` of a cascade of length L and resolution N sits at
``(x, z) = (i L / N, j L / N)``. Maps hold the unnormalized spectral sum
``sum_k c(k) exp(i k . x)``, i.e. ``N^2`` times the centered inverse FFT.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from oceansim.errors import ConfigError
from oceansim.fft_core import ifft2_centered, ifft2_hermitian_pair
from oceansim.parallel import ordered_map
from oceansim.spectra import GridConfig, SpectrumParams, WaveGrid, generate_h0

FIELD_NAMES = ("h", "Dx", "Dz", "dDx_dx", "dDz_dx", "dDz_dz", "dh_dx", "dh_dz")
FIELD_INDEX = {name: i for i, name in enumerate(FIELD_NAMES)}
DEFAULT_LENGTHS = (256.0, 16.0, 4.0)


def default_cutoffs(lengths):
    """Band edges ``12 pi / L_{i+1}`` between consecutive cascades."""
    return [12.0 * np.pi / L for L in lengths[1:]]


@dataclass(frozen=True, eq=False)
class CascadeSet:
    """Spectral tiles with disjoint wavenumber bands.

    ``choppiness`` scales the horizontal displacement and its derivatives.
    """

    grids: tuple
    params: SpectrumParams
    choppiness: float = 1.0

    def __post_init__(self):
        Ls = [g.L for g in self.grids]
        if any(a <= b for a, b in zip(Ls, Ls[1:])):
            raise ConfigError(f"cascade lengths must be strictly decreasing, got {Ls}")
        for a, b in zip(self.grids, self.grids[1:]):
            if a.band[1] > b.band[0]:
                raise ConfigError("cascade bands overlap")

    @property
    def lengths(self):
        return tuple(g.L for g in self.grids)

    def __len__(self):
        return len(self.grids)

    def __iter__(self):
        return iter(self.grids)


def build_cascades(
    params: SpectrumParams,
    N: int = 256,
    lengths=DEFAULT_LENGTHS,
    cutoffs=None,
    choppiness: float = 1.0,
    dtype=np.complex128,
) -> CascadeSet:
    """Generate all cascades. Cascade i keeps ``k`` in ``[c_{i-1}, c_i)``."""
    lengths = [float(L) for L in lengths]
    if not lengths:
        raise ConfigError("at least one cascade is required")
    cuts = default_cutoffs(lengths) if cutoffs is None else [float(c) for c in cutoffs]
    if len(cuts) != len(lengths) - 1:
        raise ConfigError("need exactly one cutoff between consecutive cascades")
    edges = [0.0] + cuts + [np.inf]
    configs = [
        GridConfig(N=N, L=L, k_min=edges[i], k_max=edges[i + 1], index=i)
        for i, L in enumerate(lengths)
    ]
    grids = ordered_map(lambda c: generate_h0(c, params, dtype=dtype), configs)
    return CascadeSet(tuple(grids), params, float(choppiness))


def time_factors(grid: WaveGrid, t: float):
    ph = np.exp(1j * grid.omega * t)
    return grid.h0 * ph, grid.h0_conj_neg * np.conj(ph)


def unit_k(grid: WaveGrid):
    """``(kx/k, kz/k)`` with zero at k = 0."""
    k = grid.k
    safe = np.where(k > 0, k, 1.0)
    return np.where(k > 0, grid.kx / safe, 0.0), np.where(k > 0, grid.kz / safe, 0.0)


def assemble_coefficients(grid: WaveGrid, t: float, choppiness: float = 1.0) -> dict:
    """Frequency-space coefficients of the eight surface fields at time t."""
    a, b = time_factors(grid, t)
    ht = a + b
    ux, uz = unit_k(grid)
    kx, kz = grid.kx, grid.kz
    lam = choppiness
    dx = 1j * ux * ht * lam
    dz = 1j * uz * ht * lam
    return {
        "h": ht,
        "Dx": dx,
        "Dz": dz,
        "dDx_dx": 1j * kx * dx,
        "dDz_dx": 1j * kx * dz,
        "dDz_dz": 1j * kz * dz,
        "dh_dx": 1j * kx * ht,
        "dh_dz": 1j * kz * ht,
    }


def cross_derivative_coefficients(grid: WaveGrid, t: float, choppiness: float = 1.0):
    """Both ``dDz/dx`` and ``dDx/dz`` coefficients, which coincide."""
    c = assemble_coefficients(grid, t, choppiness)
    return c["dDz_dx"], 1j * grid.kz * c["Dx"]


@dataclass(frozen=True, eq=False)
class SurfaceMaps:
    """Spatial fields of every cascade at time ``t``.

    ``fields[c]`` has shape ``(8, N, N)`` ordered as :data:`FIELD_NAMES`.
    """

    t: float
    lengths: tuple
    fields: tuple
    choppiness: float = 1.0
    residual: float = 0.0

    def get(self, name: str, cascade: int = 0) -> np.ndarray:
        return self.fields[cascade][FIELD_INDEX[name]]

    @property
    def N(self) -> int:
        return self.fields[0].shape[-1]

    @cached_property
    def stacked(self) -> np.ndarray:
        """All cascades as one ``(C, 8, N * N)`` array."""
        return np.stack(self.fields).reshape(len(self.fields), len(FIELD_NAMES), -1)


_PAIRS = (("h", "Dx"), ("Dz", "dDx_dx"), ("dDz_dx", "dDz_dz"), ("dh_dx", "dh_dz"))


def cascade_maps(grid: WaveGrid, t: float, choppiness: float = 1.0, packed: bool = True):
    """Eight real fields of one cascade.

    Returns ``(fields, residual)`` where ``residual`` is the max imaginary
    part seen when ``packed`` is False (0 otherwise).
    """
    coeffs = assemble_coefficients(grid, t, choppiness)
    N = grid.N
    scale = float(N * N)
    ctype = grid.h0.dtype
    out = np.empty((8, N, N), dtype=np.finfo(ctype).dtype)
    residual = 0.0
    if packed:
        stack_x = np.stack([coeffs[a] for a, _ in _PAIRS]).astype(ctype, copy=False)
        stack_y = np.stack([coeffs[b] for _, b in _PAIRS]).astype(ctype, copy=False)
        re, im = ifft2_hermitian_pair(stack_x, stack_y)
        for p, (a, b) in enumerate(_PAIRS):
            out[FIELD_INDEX[a]] = re[p] * scale
            out[FIELD_INDEX[b]] = im[p] * scale
    else:
        full = ifft2_centered(np.stack([coeffs[n] for n in FIELD_NAMES]).astype(ctype, copy=False)) * scale
        out[:] = full.real
        residual = float(np.max(np.abs(full.imag)))
    return out, residual


def generate_maps(cascades: CascadeSet, t: float, packed: bool = True) -> SurfaceMaps:
    """Surface maps for all cascades at time ``t``."""
    res = ordered_map(lambda g: cascade_maps(g, t, cascades.choppiness, packed), cascades.grids)
    return SurfaceMaps(
        t=float(t),
        lengths=cascades.lengths,
        fields=tuple(f for f, _ in res),
        choppiness=cascades.choppiness,
        residual=max(r for _, r in res),
    )


def direct_field(grid: WaveGrid, coeff: np.ndarray, x, z) -> np.ndarray:
    """Real part of ``sum_k coeff(k) exp(i k . x)`` at arbitrary points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    live = coeff != 0
    c = coeff[live]
    kx, kz = grid.kx[live], grid.kz[live]
    out = np.empty(x.shape)
    flat_x, flat_z, flat_o = x.ravel(), z.ravel(), out.reshape(-1)
    for s in range(0, flat_x.size, 256):
        ph = np.exp(1j * (np.outer(flat_x[s : s + 256], kx) + np.outer(flat_z[s : s + 256], kz)))
        flat_o[s : s + 256] = (ph @ c).real
    return out


def bilinear_periodic(field: np.ndarray, L: float, x, z, channels=None) -> np.ndarray:
    """Bilinear sample of a periodic N x N tile of length L.

    ``field`` is ``(..., N, N)``. With ``channels`` only those leading
    entries of a ``(C, N, N)`` stack are gathered.
    """
    N = field.shape[-1]
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    shape = np.broadcast(x, z).shape
    u = np.broadcast_to(x, shape).ravel() * (N / L)
    v = np.broadcast_to(z, shape).ravel() * (N / L)
    u0 = np.floor(u)
    v0 = np.floor(v)
    fu = u - u0
    fv = v - v0
    i0 = u0.astype(np.int64) % N
    j0 = v0.astype(np.int64) % N
    i1 = (i0 + 1) % N
    j1 = (j0 + 1) % N
    flat = field.reshape(field.shape[:-2] + (N * N,))
    if channels is None:
        pick = lambda k: flat[..., k]  # noqa: E731
    else:
        ch = np.asarray(channels)[:, None]
        pick = lambda k: flat[ch, k]  # noqa: E731
    out = (
        pick(i0 * N + j0) * (1 - fu) * (1 - fv)
        + pick(i1 * N + j0) * fu * (1 - fv)
        + pick(i0 * N + j1) * (1 - fu) * fv
        + pick(i1 * N + j1) * fu * fv
    )
    return out.reshape(out.shape[:-1] + shape)


_DISP = np.array([FIELD_INDEX["Dx"], FIELD_INDEX["h"], FIELD_INDEX["Dz"]])


def _sample_stack(maps: SurfaceMaps, idx: np.ndarray, x, z) -> np.ndarray:
    """Bilinear samples of channels ``idx`` summed over cascades in one gather."""
    N = maps.N
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    shape = np.broadcast(x, z).shape
    scale = N / np.asarray(maps.lengths, dtype=float)[:, None]
    u = np.broadcast_to(x, shape).ravel()[None, :] * scale
    v = np.broadcast_to(z, shape).ravel()[None, :] * scale
    u0 = np.floor(u)
    v0 = np.floor(v)
    fu = (u - u0)[:, None, :]
    fv = (v - v0)[:, None, :]
    i0 = u0.astype(np.int64) % N
    j0 = v0.astype(np.int64) % N
    i1 = (i0 + 1) % N
    j1 = (j0 + 1) % N
    flat = maps.stacked
    c = np.arange(flat.shape[0])[:, None, None]
    ch = idx[None, :, None]
    pick = lambda k: flat[c, ch, k[:, None, :]]  # noqa: E731
    s = (
        pick(i0 * N + j0) * (1 - fu) * (1 - fv)
        + pick(i1 * N + j0) * fu * (1 - fv)
        + pick(i0 * N + j1) * (1 - fu) * fv
        + pick(i1 * N + j1) * fu * fv
    )
    total = s[0]
    for k in range(1, s.shape[0]):
        total = total + s[k]
    return total.reshape((len(idx),) + shape)


def sample_fields(maps: SurfaceMaps, names, x, z) -> np.ndarray:
    """Sum over cascades of bilinear samples of the named fields.

    Returns an array of shape ``(len(names),) + shape(x)``.
    """
    return _sample_stack(maps, np.array([FIELD_INDEX[n] for n in names]), x, z)


def sample_displacement(maps: SurfaceMaps, x, z):
    """``(Dx, h, Dz)`` summed over cascades at horizontal positions (x, z)."""
    total = _sample_stack(maps, _DISP, x, z)
    return total[0], total[1], total[2]


@dataclass
class HeightResult:
    height: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    history: list = field(default_factory=list)


def height_at(maps: SurfaceMaps, x, z, n_iter: int = 4, tol: float | None = None,
              max_iter: int = 50, full: bool = False):
    """Water height at horizontal positions (x, z) by fixed-point retrieval.

    Starting from ``p = (x, z)``, each pass samples the displacement at ``p``
    and sets ``p = (x, z) - D(p)``. With ``tol=None`` exactly ``n_iter``
    passes run. With a tolerance, each point iterates until two successive
    heights differ by less than ``tol`` (starting from height 0) or
    ``max_iter`` passes are done.

    Returns the height array, or a :class:`HeightResult` when ``full``.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    px, pz = x.copy(), z.copy()
    h_prev = np.zeros(np.broadcast(x, z).shape)
    iters = np.zeros(h_prev.shape, dtype=np.int64)
    done = np.zeros(h_prev.shape, dtype=bool)
    h = h_prev
    limit = n_iter if tol is None else max_iter
    history = []
    for j in range(1, limit + 1):
        dx, h, dz = sample_displacement(maps, px, pz)
        if full:
            history.append(np.array(h, copy=True))
        if tol is not None:
            newly = ~done & (np.abs(h - h_prev) < tol)
            iters[newly] = j
            done |= newly
            h = np.where(done & ~newly, h_prev, h)
            if done.all():
                break
        px = np.where(done, px, x - dx)
        pz = np.where(done, pz, z - dz)
        h_prev = h
    if tol is None:
        iters[...] = n_iter
        done[...] = True
    else:
        iters[~done] = limit
    if full:
        return HeightResult(h, iters, done, history)
    return h


def surface_normal_terms(maps: SurfaceMaps, x, z):
    """Slope and displacement Jacobian at horizontal positions.

    Returns ``(dh_dx, dh_dz, jacobian)`` where
    ``J = (1 + dDx/dx)(1 + dDz/dz) - (dDz/dx)^2``.
    """
    s = sample_fields(maps, ("dh_dx", "dh_dz", "dDx_dx", "dDz_dz", "dDz_dx"), x, z)
    jac = (1 + s[2]) * (1 + s[3]) - s[4] ** 2
    return s[0], s[1], jac


# Heightfield file format: 16-byte little-endian header then N*N float32
# values in row-major order (x index outer, z index inner).
#   bytes 0-3   b"ABHF"
#   bytes 4-7   uint32 N
#   bytes 8-11  int32 cascade id, -1 for a composed field
#   bytes 12-15 float32 time in seconds
_MAGIC = b"ABHF"
_HEADER = struct.Struct("<4sIif")
COMPOSED = -1


def write_heightfield(path, data: np.ndarray, cascade: int = COMPOSED, t: float = 0.0) -> None:
    data = np.asarray(data)
    if data.ndim != 2 or data.shape[0] != data.shape[1]:
        raise ValueError(f"heightfield must be square, got {data.shape}")
    header = _HEADER.pack(_MAGIC, data.shape[0], int(cascade), float(t))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(data, dtype="<f4").tobytes())


def read_heightfield(path):
    """Return ``(data, cascade, t)`` from a heightfield file."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated heightfield header")
    magic, N, cascade, t = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    body = raw[_HEADER.size :]
    if len(body) != 4 * N * N:
        raise ValueError(f"expected {4 * N * N} data bytes, found {len(body)}")
    data = np.frombuffer(body, dtype="<f4").reshape(N, N).astype(np.float32)
    return data, cascade, t


def write_heightfield_csv(path, data: np.ndarray, L: float) -> None:
    """CSV with columns ``i,j,x,z,value``."""
    N = data.shape[0]
    i, j = np.meshgrid(np.arange(N), np.arange(N), indexing="ij")
    table = np.column_stack([i.ravel(), j.ravel(), i.ravel() * L / N, j.ravel() * L / N, data.ravel()])
    np.savetxt(path, table, delimiter=",", header="i,j,x,z,value", comments="",
               fmt=["%d", "%d", "%.6f", "%.6f", "%.9g"])


def composed_grid(maps: SurfaceMaps, n_iter: int = 4, names=None):
    """Composed fields on the nodes of the first (longest) cascade.

    Height is obtained with :func:`height_at`. Other named fields are plain
    cascade sums at the nodes.
    """
    L, N = maps.lengths[0], maps.N
    x, z = np.meshgrid(np.arange(N) * L / N, np.arange(N) * L / N, indexing="ij")
    out = {"h": height_at(maps, x, z, n_iter=n_iter)}
    for name in names or ():
        out[name] = sample_fields(maps, (name,), x, z)[0]
    return out
