"""Non-learning weighting and positioning baselines."""

from __future__ import annotations

import numpy as np

from .geometry import Scenario

BASELINE_KINDS = (
    "uniform",
    "sinr_proportional",
    "inverse_variance_oracle",
    "geometry_intersection",
    "random",
)


def uniform_weights(m: int) -> np.ndarray:
    if m < 1:
        raise ValueError("m must be >= 1")
    return np.full(m, 1.0 / m)


def sinr_proportional_weights(sinr_norm) -> np.ndarray:
    """Weights proportional to normalized SINR; all-zero input gives uniform."""
    q = np.asarray(sinr_norm, dtype=float)
    if np.any(q < 0):
        raise ValueError("normalized SINR must be non-negative")
    total = q.sum()
    if not total > 0:
        return uniform_weights(q.size)
    return q / total


def inverse_variance_weights(sigmas) -> np.ndarray:
    """``w_i ~ 1/sigma_i^2``, normalized. Needs simulator-truth sigmas."""
    s = np.asarray(sigmas, dtype=float)
    if np.any(~(s > 0)):
        raise ValueError("sigmas must be positive")
    inv = 1.0 / s**2
    return inv / inv.sum()


def geometry_intersection_estimate(scenario: Scenario, footprint_radius: float = 150.0,
                                   sinr_norm=None, threshold: float = 0.5) -> np.ndarray:
    """Footprint-centroid position fix (simplified intersection method).

    A beam qualifies when the UT lies inside its footprint disc and, if
    ``sinr_norm`` is given, its normalized SINR is at least ``threshold``.
    Returns the centroid of the qualifying centers, or the scene center when
    none qualify. No ranging information is used.
    """
    if not footprint_radius > 0:
        raise ValueError("footprint_radius must be positive")
    centers = scenario.beam_centers
    inside = np.linalg.norm(centers - scenario.ut_true, axis=1) <= footprint_radius
    if sinr_norm is not None:
        inside &= np.asarray(sinr_norm, dtype=float) >= threshold
    if not inside.any():
        return scenario.scene_center.copy()
    return centers[inside].mean(axis=0)


class WeightPolicy:
    """Runs the env with a weight vector computed from env-side quantities."""

    static = False

    def __init__(self, name, weight_fn):
        self.name = name
        self._weight_fn = weight_fn

    def step(self, env, state):
        return env.step_weights(self._weight_fn(env))


class RandomActionPolicy:
    static = False

    def __init__(self, rng):
        self.name = "random"
        self.rng = rng

    def step(self, env, state):
        return env.step(int(self.rng.integers(env.n_actions)))


class GeometryPolicy:
    """Static estimate; evaluation uses it without stepping the estimator."""

    static = True

    def __init__(self, footprint_radius=150.0, threshold=0.5):
        self.name = "geometry_intersection"
        self.footprint_radius = footprint_radius
        self.threshold = threshold

    def estimate(self, env):
        return geometry_intersection_estimate(env.scenario, self.footprint_radius,
                                              env.sinr_norm, self.threshold)


def make_baseline(kind: str, rng=None, footprint_radius: float = 150.0, threshold: float = 0.5):
    """Policy object for a baseline name (see ``BASELINE_KINDS``)."""
    if kind == "uniform":
        return WeightPolicy(kind, lambda env: uniform_weights(env.scenario.m_beams))
    if kind == "sinr_proportional":
        return WeightPolicy(kind, lambda env: sinr_proportional_weights(env.sinr_norm))
    if kind == "inverse_variance_oracle":
        return WeightPolicy(kind, lambda env: inverse_variance_weights(env.observation.sigmas))
    if kind == "geometry_intersection":
        return GeometryPolicy(footprint_radius, threshold)
    if kind == "random":
        return RandomActionPolicy(np.random.default_rng(rng))
    raise ValueError(f"unknown baseline {kind!r}; valid names: {', '.join(BASELINE_KINDS)}")
