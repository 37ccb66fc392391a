"""Pseudorange synthesis and linearized geometry."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import los_matrix


@dataclass(frozen=True)
class NoiseConfig:
    """Affine map from normalized SINR to pseudorange noise std [m]."""

    sigma_min_m: float = 0.5
    sigma_max_m: float = 50.0

    def __post_init__(self):
        if not 0 < self.sigma_min_m <= self.sigma_max_m:
            raise ValueError("need 0 < sigma_min_m <= sigma_max_m")


@dataclass(frozen=True)
class Observation:
    """One epoch of pseudoranges.

    ``sigmas`` is simulator truth. Learners only see ``sinr_norm``.
    """

    pseudoranges: np.ndarray
    sigmas: np.ndarray
    sinr_norm: np.ndarray

    def __post_init__(self):
        m = len(self.pseudoranges)
        if len(self.sigmas) != m or len(self.sinr_norm) != m:
            raise ValueError("observation fields must have equal length")
        if np.any(~(np.asarray(self.sigmas) > 0)):
            raise ValueError("sigmas must be positive")


def noise_sigma(sinr_norm, cfg: NoiseConfig = NoiseConfig()):
    """``sigma_max - (sigma_max - sigma_min) * q``, elementwise."""
    q = np.asarray(sinr_norm, dtype=float)
    if np.any((q < 0) | (q > 1)):
        raise ValueError("normalized SINR must lie in [0, 1]")
    sig = cfg.sigma_max_m - (cfg.sigma_max_m - cfg.sigma_min_m) * q
    return float(sig) if sig.ndim == 0 else sig


def true_ranges(x, centers) -> np.ndarray:
    diff = np.asarray(centers, dtype=float) - np.asarray(x, dtype=float)
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def synthesize(scenario, sinr_norm, seed, cfg: NoiseConfig = NoiseConfig(), sigmas=None) -> Observation:
    """Draw ``z_i = ||x - c_i|| + b + n_i`` with ``n_i ~ N(0, sigma_i^2)``.

    Exactly M standard normals are consumed from the generator so the draw
    sequence does not depend on the SINR values. ``sigmas`` overrides the
    SINR-derived noise levels (useful for controlled experiments).
    """
    rng = np.random.default_rng(seed)
    q = np.asarray(sinr_norm, dtype=float)
    if q.shape != (scenario.m_beams,):
        raise ValueError(f"sinr_norm must have length {scenario.m_beams}")
    sig = noise_sigma(q, cfg) if sigmas is None else np.asarray(sigmas, dtype=float)
    ranges = true_ranges(scenario.ut_true, scenario.beam_centers)
    z = ranges + scenario.clock_bias_m + sig * rng.standard_normal(scenario.m_beams)
    return Observation(pseudoranges=z, sigmas=np.array(sig, dtype=float), sinr_norm=q.copy())


def linearize(x0, centers) -> np.ndarray:
    """Augmented geometry matrix ``[H 1]`` at ``x0``, shape (M, d+1).

    Row i is the LoS unit vector from center i to ``x0`` followed by a one
    for the clock-bias column.
    """
    h = los_matrix(x0, centers)
    return np.hstack([h, np.ones((h.shape[0], 1))])
