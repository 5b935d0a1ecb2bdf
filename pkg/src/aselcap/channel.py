"""
Channel realizations for the multiuser uplink.

Users are dropped uniformly in a flat-top hexagonal cell with the base station
at its center, large-scale gains follow the free-space path-loss formula and
the fast fading is i.n.i.d. Nakagami-m with uniform phase.  The composed
channel matrix is G = H diag(beta)^(1/2).

All randomness flows through an explicit ``numpy.random.Generator``; use
:func:`trial_rng` to derive reproducible per-trial substreams.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import DomainError

__all__ = ['SystemConfig', 'FadingParams', 'LargeScale', 'ChannelInstance',
           'trial_rng', 'point_in_hexagon', 'sample_positions',
           'path_loss_linear', 'draw_fading', 'compose_channel',
           'large_scale_gains', 'draw_channel', 'dbm_to_mw']

_SQRT3 = math.sqrt(3.0)


def dbm_to_mw(p_dbm):
    """Convert a power in dBm to linear milliwatts."""
    return 10.0 ** (p_dbm / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Dimensions, powers and geometry of one simulated system.

    Powers are given in dBm; ``rho`` is the linear per-user SNR p_u / sigma^2.
    """
    n: int = 128
    k: int = 4
    l: int = 8
    pu_dbm: float = 10.0
    sigma2_dbm: float = -100.0
    seed: int = 1
    cell_radius_m: float = 1000.0
    f0_ghz: float = 4.0
    min_distance_m: float = 0.0

    def __post_init__(self):
        for name in ('n', 'k', 'l'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise DomainError(f"{name} must be a positive integer, got {value!r}")
        if not (self.k <= self.l <= self.n):
            raise DomainError(
                f"need K <= L <= N, got K={self.k}, L={self.l}, N={self.n}")
        if not (0 <= self.seed < 2 ** 64):
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if not self.cell_radius_m > 0:
            raise DomainError("cell radius must be positive")
        if not (0 <= self.min_distance_m < self.cell_radius_m):
            raise DomainError("min distance must lie in [0, cell radius)")
        if not self.f0_ghz > 0:
            raise DomainError("carrier frequency must be positive")

    @property
    def rho(self):
        """Linear SNR, 10^((p_u - sigma^2) / 10)."""
        return 10.0 ** ((self.pu_dbm - self.sigma2_dbm) / 10.0)


@dataclass(frozen=True)
class FadingParams:
    """Per-user Nakagami shape parameters (unit second moment)."""
    m: tuple

    def __post_init__(self):
        m = tuple(float(v) for v in np.atleast_1d(self.m))
        if not m:
            raise DomainError("at least one Nakagami shape is required")
        if any(not (v >= 0.5 and math.isfinite(v)) for v in m):
            raise DomainError(f"Nakagami shapes must be finite and >= 0.5, got {m}")
        object.__setattr__(self, 'm', m)

    @classmethod
    def broadcast(cls, m, k):
        """Build parameters for ``k`` users from a scalar or a length-k sequence."""
        m = np.atleast_1d(np.asarray(m, dtype=float))
        if m.size == 1:
            m = np.repeat(m, k)
        if m.size != k:
            raise DomainError(f"expected 1 or {k} Nakagami shapes, got {m.size}")
        return cls(tuple(m))

    def as_array(self):
        return np.asarray(self.m, dtype=float)


@dataclass(frozen=True)
class LargeScale:
    """User distances (meters), carrier (GHz) and the resulting path-loss gains."""
    distances_m: np.ndarray
    f0_ghz: float
    beta: np.ndarray = field(init=False)

    def __post_init__(self):
        d = np.asarray(self.distances_m, dtype=float)
        object.__setattr__(self, 'distances_m', d)
        object.__setattr__(self, 'beta', path_loss_linear(d / 1000.0, self.f0_ghz))


@dataclass(frozen=True)
class ChannelInstance:
    """Fast fading ``h`` (N x K), large-scale gains ``beta`` (K,) and G = H D^(1/2)."""
    h: np.ndarray
    beta: np.ndarray

    @property
    def g(self):
        return compose_channel(self.h, self.beta)


def trial_rng(seed, *key):
    """Independent generator for the substream identified by ``key`` under ``seed``.

    The stream depends only on (seed, key), never on which worker asks for it.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def point_in_hexagon(point, radius):
    """True iff ``point`` lies in the closed flat-top hexagon of circumradius ``radius``.

    Vertices sit at (+-R, 0) and (+-R/2, +-R sqrt(3)/2).
    """
    x, y = abs(float(point[0])), abs(float(point[1]))
    return y <= radius * _SQRT3 / 2.0 and _SQRT3 * x + y <= _SQRT3 * radius


def _in_hexagon(x, y, radius):
    ax, ay = np.abs(x), np.abs(y)
    return (ay <= radius * _SQRT3 / 2.0) & (_SQRT3 * ax + ay <= _SQRT3 * radius)


def sample_positions(k, radius, min_distance, rng):
    """
    Distances to the cell center of ``k`` users uniform over the hexagon.

    Points are drawn by rejection from the bounding rectangle; points inside
    the exclusion disk of radius ``min_distance`` are rejected too.

    Returns
    -------
    numpy.ndarray
        Shape (k,), distances in meters.
    """
    if not (0 <= min_distance < radius):
        raise DomainError("need 0 <= min_distance < radius")
    out = np.empty(0)
    half_h = radius * _SQRT3 / 2.0
    while out.size < k:
        batch = 2 * (k - out.size) + 8
        x = rng.uniform(-radius, radius, batch)
        y = rng.uniform(-half_h, half_h, batch)
        d = np.hypot(x, y)
        keep = _in_hexagon(x, y, radius) & (d >= min_distance)
        out = np.concatenate([out, d[keep]])
    return out[:k]


def path_loss_linear(d_km, f0_ghz):
    """Free-space gain: -10 log10(beta) = 92.5 + 20 log10(f0[GHz]) + 20 log10(d[km])."""
    d_km = np.asarray(d_km, dtype=float)
    if np.any(~(d_km > 0)) or not f0_ghz > 0:
        raise DomainError("distance and carrier frequency must be positive")
    loss_db = 92.5 + 20.0 * np.log10(f0_ghz) + 20.0 * np.log10(d_km)
    beta = 10.0 ** (-loss_db / 10.0)
    return beta if beta.ndim else float(beta)


def draw_fading(n, k, m, rng):
    """
    Nakagami-m fast fading matrix.

    |h|^2 ~ Gamma(shape=m_k, rate=m_k) per column, phase uniform on [0, 2 pi).
    The gamma draws come first, then the phases, so the stream consumption
    depends only on (n, k).

    Parameters
    ----------
    n, k : int
        Antennas and users.
    m : float or sequence of float
        Shape per user (scalar is broadcast); every m_k >= 0.5.
    rng : numpy.random.Generator

    Returns
    -------
    numpy.ndarray
        Complex array of shape (n, k).
    """
    shapes = FadingParams.broadcast(m, k).as_array()
    power = rng.gamma(shapes, 1.0 / shapes, size=(n, k))
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(n, k))
    return np.sqrt(power) * np.exp(1j * theta)


def compose_channel(h, beta):
    """G = H diag(beta)^(1/2), i.e. g[n, k] = h[n, k] sqrt(beta[k])."""
    h = np.asarray(h)
    beta = np.asarray(beta, dtype=float)
    if h.ndim != 2 or beta.shape != (h.shape[1],):
        raise ValueError(f"dimension mismatch: H {h.shape} vs beta {beta.shape}")
    if np.any(~(beta > 0)):
        raise DomainError("large-scale gains must be positive")
    return h * np.sqrt(beta)


def large_scale_gains(config, rng):
    """Drop ``config.k`` users in the cell and return their :class:`LargeScale`."""
    d = sample_positions(config.k, config.cell_radius_m, config.min_distance_m, rng)
    return LargeScale(d, config.f0_ghz)


def draw_channel(config, m, rng, beta=None):
    """One full realization; user positions are drawn from ``rng`` unless ``beta`` is given."""
    if beta is None:
        beta = large_scale_gains(config, rng).beta
    h = draw_fading(config.n, config.k, m, rng)
    return ChannelInstance(h, np.asarray(beta, dtype=float))
