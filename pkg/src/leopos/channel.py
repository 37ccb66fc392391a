"""UPA steering vectors, free-space gain and co-channel pilot SINR.

Each beam i is served by satellite ``s_i``. Its SINR is evaluated in that
satellite's array frame: the desired beamformer points at the beam's own
footprint center and every co-channel beam k points at footprint center
``c_k``, all seen from ``s_i``. Arrays lie in the horizontal plane with
their x/y axes aligned to the local east/north axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT = 2.99792458e8


@dataclass(frozen=True)
class UpaConfig:
    n_x: int = 4
    n_y: int = 4
    carrier_hz: float = 2.0e9
    gain_tx: float = 1.0
    gain_rx: float = 1.0
    noise_power: float = 1.0e-12
    sinr_window_db: tuple[float, float] = (-40.0, -10.0)

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("array dimensions must be >= 1")
        if self.carrier_hz <= 0:
            raise ValueError("carrier_hz must be positive")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be positive")
        if self.gain_tx <= 0 or self.gain_rx <= 0:
            raise ValueError("antenna gains must be positive")
        lo, hi = self.sinr_window_db
        if not hi > lo:
            raise ValueError("sinr_window_db must be (low, high) with high > low")

    @property
    def n_elements(self) -> int:
        return self.n_x * self.n_y


@dataclass(frozen=True)
class BeamChannel:
    """Channel of one beam: ``g = gain * steering`` plus its beamformer."""

    gain: complex
    steering: np.ndarray
    beamformer: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return self.gain * self.steering


def steering_1d(theta: float, n: int) -> np.ndarray:
    """Half-wavelength ULA response ``exp(-j*pi*k*theta)/sqrt(n)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n)
    return np.exp(-1j * np.pi * k * theta) / np.sqrt(n)


def upa_steering(theta_x: float, theta_y: float, cfg: UpaConfig) -> np.ndarray:
    """Kronecker product of the x and y responses, length ``n_x*n_y``."""
    return np.kron(steering_1d(theta_x, cfg.n_x), steering_1d(theta_y, cfg.n_y))


def direction_cosines(src, dst) -> tuple[float, float]:
    """Projections of the unit vector ``src -> dst`` onto the x and y axes."""
    v = np.asarray(dst, dtype=float) - np.asarray(src, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("direction undefined for coincident points")
    return float(v[0] / norm), float(v[1] / norm)


def path_gain(cfg: UpaConfig, slant_range_m: float) -> float:
    """Large-scale amplitude ``sqrt(Gt*Gr/L)`` with free-space ``L``."""
    if not slant_range_m > 0:
        raise ValueError(f"slant range must be positive, got {slant_range_m}")
    loss = (4.0 * np.pi * cfg.carrier_hz * slant_range_m / SPEED_OF_LIGHT) ** 2
    return float(np.sqrt(cfg.gain_tx * cfg.gain_rx / loss))


def sinr(g_i, f_own, f_others, noise_power: float) -> float:
    """Pilot SINR of beam i against co-channel beamformers.

    Parameters
    ----------
    g_i : array_like, complex, shape (N,)
        Channel vector of beam i.
    f_own : array_like, complex, shape (N,)
        Beamformer of beam i.
    f_others : sequence of array_like
        Beamformers of the co-channel beams ``k != i``.
    noise_power : float
        Receiver noise power ``sigma^2`` [W].
    """
    g_i = np.asarray(g_i)
    f_own = np.asarray(f_own)
    if noise_power <= 0:
        raise ValueError("noise_power must be positive")
    if f_own.shape != g_i.shape:
        raise ValueError(f"dimension mismatch: g {g_i.shape} vs f {f_own.shape}")
    signal = abs(np.vdot(g_i, f_own)) ** 2
    interference = 0.0
    for f_k in f_others:
        f_k = np.asarray(f_k)
        if f_k.shape != g_i.shape:
            raise ValueError(f"dimension mismatch: g {g_i.shape} vs f {f_k.shape}")
        interference += abs(np.vdot(g_i, f_k)) ** 2
    return float(signal / (interference + noise_power))


def normalize_sinr(sinr_linear, lo_db: float = -40.0, hi_db: float = -10.0):
    """Map linear SINR to [0, 1] through a clipped dB window.

    Zero SINR maps to 0. Works elementwise on arrays.
    """
    s = np.asarray(sinr_linear, dtype=float)
    if np.any(s < 0):
        raise ValueError("SINR must be non-negative")
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(s)
    q = (np.clip(db, lo_db, hi_db) - lo_db) / (hi_db - lo_db)
    q = np.where(s > 0, q, 0.0)
    return float(q) if q.ndim == 0 else q


def beam_channels(scenario, cfg: UpaConfig, phases) -> tuple[list[BeamChannel], np.ndarray]:
    """Channels and linear SINR of every beam for a scenario.

    ``phases`` holds the per-beam random phase in radians (drawn by the
    caller so that the channel realization stays seedable).
    """
    centers = scenario.beam_centers
    m, dim = centers.shape
    ut = np.zeros(3)
    ut[:dim] = scenario.ut_true
    ground = np.zeros((m, 3))
    ground[:, :dim] = centers
    channels = []
    sinrs = np.empty(m)
    for i in range(m):
        s_i = scenario.satellite_positions[i]
        beta = path_gain(cfg, float(np.linalg.norm(ut - s_i)))
        steer = upa_steering(*direction_cosines(s_i, ut), cfg)
        gain = beta * np.exp(1j * phases[i])
        formers = [upa_steering(*direction_cosines(s_i, ground[k]), cfg) for k in range(m)]
        channels.append(BeamChannel(gain=complex(gain), steering=steer, beamformer=formers[i]))
        sinrs[i] = sinr(gain * steer, formers[i], formers[:i] + formers[i + 1:], cfg.noise_power)
    return channels, sinrs
