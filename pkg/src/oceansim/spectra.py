"""Wave spectra and initial spectral amplitudes.

Conventions
-----------
Frequency index ``n`` in ``[-N/2, N/2)`` is stored at ``n + N/2``. Axis 0 of
every N x N array is the x direction and axis 1 is the z direction, so
``kx[s1, s2] = 2*pi*(s1 - N/2)/L`` and ``kz[s1, s2] = 2*pi*(s2 - N/2)/L``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from oceansim.errors import ConfigError

G = 9.80665
GAMMA = 3.3
TWO_PI = 2.0 * np.pi

_NORMALIZATIONS = ("quadrature", "polynomial")


@dataclass(frozen=True)
class SpectrumParams:
    """Sea-state parameters.

    Parameters
    ----------
    wind_speed : float
        Wind speed U at 10 m, m/s.
    fetch : float
        Fetch F, m.
    wind_direction : float
        Mean wave direction theta_0, rad.
    swell : float
        Swell factor xi in [0, 1].
    direction_mix : float
        Blend delta in [0, 1] between the uniform and directional spread.
    peak_frequency : float, str or None
        ``None`` uses ``22 g^2 / (U F)``. A number overrides omega_p directly.
        ``"cube-root"`` uses the ``22 (g^2 / (U F))^(1/3)`` form.
    normalization : str
        ``"quadrature"`` normalizes the directional product exactly from a
        precomputed table, ``"polynomial"`` uses :func:`q_dbxi_approx`.
    """

    wind_speed: float = 20.0
    fetch: float = 100_000.0
    wind_direction: float = 0.0
    swell: float = 0.0
    direction_mix: float = 1.0
    gravity: float = G
    rng_seed: int = 0
    peak_frequency: float | str | None = None
    normalization: str = "quadrature"

    def __post_init__(self):
        if not self.wind_speed > 0:
            raise ConfigError(f"wind_speed must be > 0, got {self.wind_speed}")
        if not self.fetch > 0:
            raise ConfigError(f"fetch must be > 0, got {self.fetch}")
        if not 0.0 <= self.swell <= 1.0:
            raise ConfigError(f"swell must lie in [0, 1], got {self.swell}")
        if not 0.0 <= self.direction_mix <= 1.0:
            raise ConfigError(f"direction_mix must lie in [0, 1], got {self.direction_mix}")
        if not self.gravity > 0:
            raise ConfigError(f"gravity must be > 0, got {self.gravity}")
        if self.normalization not in _NORMALIZATIONS:
            raise ConfigError(f"normalization must be one of {_NORMALIZATIONS}")
        pf = self.peak_frequency
        if isinstance(pf, str):
            if pf != "cube-root":
                raise ConfigError(f"unknown peak_frequency mode {pf!r}")
        elif pf is not None and not pf > 0:
            raise ConfigError(f"peak_frequency must be > 0, got {pf}")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise ConfigError("rng_seed must fit in an unsigned 64-bit integer")


def dispersion(k, g=G):
    """Deep-water dispersion relation ``omega = sqrt(g k)``."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("wavenumber must be non-negative")
    return np.sqrt(g * k)


def peak_frequency(params: SpectrumParams) -> float:
    """Peak angular frequency omega_p in rad/s."""
    pf = params.peak_frequency
    g, U, F = params.gravity, params.wind_speed, params.fetch
    if pf is None:
        return 22.0 * g * g / (U * F)
    if pf == "cube-root":
        return 22.0 * (g * g / (U * F)) ** (1.0 / 3.0)
    return float(pf)


def jonswap_alpha(params: SpectrumParams) -> float:
    U, F, g = params.wind_speed, params.fetch, params.gravity
    return 0.076 * (U * U / (F * g)) ** 0.22


def jonswap(omega, params: SpectrumParams, omega_p=None):
    """JONSWAP frequency spectrum S(omega) in m^2 s.

    Evaluated in log space so that very small omega underflow cleanly to 0
    instead of producing ``inf * 0``.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(~(omega > 0)):
        raise ValueError("jonswap requires omega > 0")
    wp = peak_frequency(params) if omega_p is None else float(omega_p)
    g = params.gravity
    sigma = np.where(omega <= wp, 0.07, 0.09)
    r = np.exp(-((omega - wp) ** 2) / (2.0 * sigma**2 * wp**2))
    log_s = (
        np.log(jonswap_alpha(params) * g * g)
        - 5.0 * np.log(omega)
        - 1.25 * (wp / omega) ** 4
        + r * np.log(GAMMA)
    )
    return np.exp(log_s)


def beta_s(r_omega):
    """Donelan-Banner spreading exponent as a function of omega / omega_p."""
    r = np.asarray(r_omega, dtype=float)
    if np.any(~(r > 0)):
        raise ValueError("r_omega must be > 0")
    with np.errstate(over="ignore"):
        eps = 0.8393 * np.exp(-0.567 * np.log(r * r)) - 0.4
        high = 10.0**eps
    return np.where(r < 0.95, 2.61 * r**1.3, np.where(r < 1.6, 2.28 * r**-1.3, high))


def wrap_angle(theta):
    """Map angles to [-pi, pi)."""
    return (np.asarray(theta, dtype=float) + np.pi) % TWO_PI - np.pi


def _db_from_beta(beta, theta):
    return 0.5 * beta / np.tanh(beta * np.pi) / np.cosh(beta * theta) ** 2


def donelan_banner(omega, theta, omega_p):
    """Normalized Donelan-Banner spreading ``Q_DB beta_s/2 sech^2(beta_s theta)``."""
    b = beta_s(np.asarray(omega, dtype=float) / omega_p)
    return _db_from_beta(b, np.asarray(theta, dtype=float))


def swell_exponent(r_omega, xi):
    return 16.0 * np.tanh(1.0 / np.asarray(r_omega, dtype=float)) * xi * xi


def swell_spread(omega, theta, omega_p, xi):
    """Swell elongation factor ``|cos(theta/2)|^(2 s_xi)``."""
    s = swell_exponent(np.asarray(omega, dtype=float) / omega_p, xi)
    return np.abs(np.cos(0.5 * np.asarray(theta, dtype=float))) ** (2.0 * s)


def q_dbxi_approx(r_omega):
    """Piecewise polynomial approximation of the swell normalization factor.

    Coefficients are reproduced as published. They are only usable for
    ``r_omega < 0.94``; see :func:`q_dbxi_exact` for the quadrature value.
    """
    r = np.asarray(r_omega, dtype=float)
    if np.any(~(r > 0)):
        raise ValueError("r_omega must be > 0")
    return np.select(
        [r < 0.94, r < 5.0, r < 100.0],
        [
            7.1467551 * r**2 - 13.4662001 * r + 7.75651088,
            -0.69906109 * r**2 + 0.77975933 * r + 0.10169164,
            -2.1860997 * r**2 + 0.0269209 * r + 0.00016283,
        ],
        1.2038847 * r + 0.0008147,
    )


def dbxi_integral(r_omega, xi, n_theta=2049):
    """Composite Simpson integral of ``D_DB * D_xi`` over [-pi, pi].

    Vectorized over ``r_omega``; ``n_theta`` must be odd.
    """
    r = np.atleast_1d(np.asarray(r_omega, dtype=float))
    theta = np.linspace(-np.pi, np.pi, n_theta)
    w = np.ones(n_theta)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (theta[1] - theta[0]) / 3.0
    b = beta_s(r)[:, None]
    s = swell_exponent(r, xi)[:, None]
    f = _db_from_beta(b, theta[None, :]) * np.abs(np.cos(0.5 * theta[None, :])) ** (2.0 * s)
    out = f @ w
    return out if np.ndim(r_omega) else float(out[0])


# Log-spaced nodes plus both sides of the beta_s branch points, where the
# integral has a jump or a kink.
_BREAKS = np.array([0.95, 1.6])
_LOG_R = np.sort(np.concatenate([np.linspace(np.log(1e-4), np.log(1e7), 1201), np.log(_BREAKS),
                                 np.log(_BREAKS * (1.0 - 1e-12))]))


@lru_cache(maxsize=64)
def _q_table(xi: float) -> np.ndarray:
    return 1.0 / dbxi_integral(np.exp(_LOG_R), xi)


def q_dbxi_exact(r_omega, xi):
    """Exact normalization ``1 / int D_DB D_xi dtheta`` via a log-r lookup table.

    Outside the table range the end values are held; both limits are flat.
    """
    r = np.asarray(r_omega, dtype=float)
    return np.interp(np.log(r), _LOG_R, _q_table(float(xi)))


def directional(omega, theta, params: SpectrumParams, omega_p=None):
    """Directional spreading D(omega, theta) with uniform/directional blend.

    ``theta`` is measured from the wind direction and is wrapped to [-pi, pi).
    """
    omega = np.asarray(omega, dtype=float)
    theta = wrap_angle(theta)
    delta = params.direction_mix
    uniform = np.full(np.broadcast(omega, theta).shape, 1.0 / TWO_PI)
    if delta == 0.0:
        return uniform
    wp = peak_frequency(params) if omega_p is None else float(omega_p)
    r = omega / wp
    prod = donelan_banner(omega, theta, wp) * swell_spread(omega, theta, wp, params.swell)
    if params.normalization == "polynomial":
        q = q_dbxi_approx(r)
    else:
        q = q_dbxi_exact(r, params.swell)
    return (1.0 - delta) * uniform + delta * q * prod


@dataclass(frozen=True)
class GridConfig:
    """Spectral grid of one cascade.

    Parameters
    ----------
    N : int
        Resolution, a power of two >= 2.
    L : float
        Physical tile length in m.
    k_min, k_max : float
        Half-open band ``[k_min, k_max)`` of retained wavenumbers.
    index : int
        Cascade index, part of the RNG key.
    """

    N: int = 256
    L: float = 256.0
    k_min: float = 0.0
    k_max: float = np.inf
    index: int = 0

    def __post_init__(self):
        N = self.N
        if not isinstance(N, (int, np.integer)) or N < 2 or N & (N - 1):
            raise ConfigError(f"N must be a power of two >= 2, got {N}")
        if not self.L > 0:
            raise ConfigError(f"L must be > 0, got {self.L}")
        if not 0 <= self.k_min < self.k_max:
            raise ConfigError(f"invalid band [{self.k_min}, {self.k_max})")


def wave_numbers(N: int, L: float):
    """Centered wave-vector components ``(kx, kz)`` as N x N arrays."""
    k1 = TWO_PI * np.arange(-N // 2, N // 2) / L
    kx, kz = np.meshgrid(k1, k1, indexing="ij")
    return kx, kz


def conj_neg(a: np.ndarray) -> np.ndarray:
    """``conj(a(-k))`` in centered storage: index s maps to (N - s) mod N."""
    return np.conj(np.roll(a[::-1, ::-1], 1, axis=(0, 1)))


@dataclass(frozen=True, eq=False)
class WaveGrid:
    """Time-independent spectral tables of one cascade."""

    config: GridConfig
    kx: np.ndarray
    kz: np.ndarray
    k: np.ndarray
    omega: np.ndarray
    h0: np.ndarray
    h0_conj_neg: np.ndarray
    gravity: float = G
    extra: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        return self.config.N

    @property
    def L(self) -> float:
        return self.config.L

    @property
    def band(self):
        return (self.config.k_min, self.config.k_max)


def gaussian_draws(seed: int, cascade: int, N: int) -> np.ndarray:
    """Complex unit-variance Gaussians, one Philox stream per row.

    Row ``s1`` uses key ``(seed, cascade)`` and counter ``(0, s1, 0, 0)``, so
    any row can be regenerated independently of the others.
    """
    out = np.empty((N, N), dtype=complex)
    key = np.array([int(seed) % 2**64, int(cascade) % 2**64], dtype=np.uint64)
    for s1 in range(N):
        bitgen = np.random.Philox(key=key, counter=np.array([0, s1, 0, 0], dtype=np.uint64))
        g = np.random.Generator(bitgen).standard_normal(2 * N)
        out[s1] = (g[:N] + 1j * g[N:]) / np.sqrt(2.0)
    return out


def amplitude_variance(k, omega, theta, L, params: SpectrumParams, omega_p=None):
    """Expected ``|h0|^2`` for each mode (valid for k > 0).

    ``(4 pi / (L k)) * (2 pi / L) * S(omega) * D(omega, theta) * g / (2 omega)``.
    The ``2 pi / L`` factor is the wavenumber cell width that turns the
    spectral density into a per-mode variance.
    """
    s = jonswap(omega, params, omega_p)
    d = directional(omega, theta, params, omega_p)
    dwdk = params.gravity / (2.0 * omega)
    return (2.0 * TWO_PI / (L * k)) * (TWO_PI / L) * s * d * dwdk


def generate_h0(config: GridConfig, params: SpectrumParams, dtype=np.complex128) -> WaveGrid:
    """Sample initial amplitudes h0(k) for one cascade.

    Entries at k = 0, outside the band, or on the Nyquist row/column (which
    have no -k partner on the grid) are exactly zero.
    """
    N, L = config.N, config.L
    g = params.gravity
    kx, kz = wave_numbers(N, L)
    k = np.hypot(kx, kz)
    omega = np.sqrt(g * k)
    live = (k > 0) & (k >= config.k_min) & (k < config.k_max)
    live[0, :] = False
    live[:, 0] = False

    var = np.zeros((N, N))
    if np.any(live):
        theta = np.arctan2(kz[live], kx[live]) - params.wind_direction
        var[live] = amplitude_variance(k[live], omega[live], theta, L, params)
    xi = gaussian_draws(params.rng_seed, config.index, N)
    h0 = np.where(live, xi * np.sqrt(var), 0.0).astype(dtype)
    for a in (kx, kz, k, omega, h0):
        a.setflags(write=False)
    h0c = conj_neg(h0)
    h0c.setflags(write=False)
    return WaveGrid(config, kx, kz, k, omega, h0, h0c, gravity=g)
