"""Scenario generation and line-of-sight primitives.

Positions live in a local planar box ``[0, side]^2`` (meters). Beam centers
anchor the pseudorange geometry; the satellite phase centers sit at a fixed
altitude above each beam center and only feed the channel model.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGeometryError, ScenarioGenerationError

# points closer than this (meters) are treated as coincident
COINCIDENT_TOL = 1e-9


@dataclass(frozen=True)
class ScenarioConfig:
    m_beams: int = 10
    area_side_m: float = 1000.0
    min_separation_m: float = 50.0
    altitude_m: float = 1000.0
    clock_bias_range_m: tuple[float, float] = (-100.0, 100.0)
    max_condition: float = 10.0
    max_retries: int = 1000

    def __post_init__(self):
        if self.m_beams < 3:
            raise ValueError(f"m_beams must be >= 3, got {self.m_beams}")
        if self.area_side_m <= 0:
            raise ValueError("area_side_m must be positive")
        if self.min_separation_m < 0:
            raise ValueError("min_separation_m must be non-negative")
        if self.altitude_m <= 0:
            raise ValueError("altitude_m must be positive")
        lo, hi = self.clock_bias_range_m
        if hi < lo:
            raise ValueError("clock_bias_range_m must be (low, high)")
        if self.max_condition <= 1:
            raise ValueError("max_condition must exceed 1")
        if self.max_retries < 1:
            raise ValueError("max_retries must be >= 1")


@dataclass(frozen=True)
class Scenario:
    """One frozen positioning geometry.

    Attributes
    ----------
    beam_centers : ndarray, shape (M, 2)
        Ground-projected beam centers [m].
    satellite_positions : ndarray, shape (M, 3)
        Satellite antenna phase centers [m]; used by the channel model only.
    ut_true : ndarray, shape (2,)
        True user terminal position [m].
    clock_bias_m : float
        Range-equivalent receiver clock bias [m].
    area_side_m : float
        Side of the square coverage area [m].
    """

    beam_centers: np.ndarray
    satellite_positions: np.ndarray
    ut_true: np.ndarray
    clock_bias_m: float
    area_side_m: float
    m_beams: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "m_beams", int(self.beam_centers.shape[0]))

    @property
    def scene_center(self) -> np.ndarray:
        return np.full(self.beam_centers.shape[1], 0.5 * self.area_side_m)

    @property
    def scene_diagonal(self) -> float:
        return float(np.sqrt(self.beam_centers.shape[1]) * self.area_side_m)


def los_unit_vector(x, c) -> np.ndarray:
    """Unit vector pointing from beam center ``c`` to position ``x``."""
    diff = np.asarray(x, dtype=float) - np.asarray(c, dtype=float)
    norm = np.linalg.norm(diff)
    if not norm > COINCIDENT_TOL:
        raise DegenerateGeometryError(f"LoS vector undefined: x coincides with center {c}")
    return diff / norm


def los_matrix(x, centers) -> np.ndarray:
    """Stack of LoS unit vectors, one row per center, shape (M, d)."""
    diff = np.asarray(x, dtype=float)[None, :] - np.asarray(centers, dtype=float)
    norms = np.linalg.norm(diff, axis=1)
    if np.any(~(norms > COINCIDENT_TOL)):
        idx = int(np.argmin(norms))
        raise DegenerateGeometryError(f"position coincides with center {idx}")
    return diff / norms[:, None]


def bearing_features(x, c) -> tuple[float, float]:
    """(sin, cos) of the bearing from ``c`` to ``x``.

    The angle is measured counter-clockwise from east (+x), so due north
    gives (1, 0) and due east (0, 1). Only planar components are used.
    """
    u = los_unit_vector(np.asarray(x, dtype=float)[:2], np.asarray(c, dtype=float)[:2])
    return float(u[1]), float(u[0])


def geometry_condition(x, centers) -> tuple[float, float]:
    """Condition number and smallest singular value of ``[H 1]`` at ``x``."""
    h = los_matrix(x, centers)
    h_aug = np.hstack([h, np.ones((h.shape[0], 1))])
    sv = np.linalg.svd(h_aug, compute_uv=False)
    if sv[-1] == 0.0:
        return np.inf, 0.0
    return float(sv[0] / sv[-1]), float(sv[-1])


def _draw_centers(cfg: ScenarioConfig, rng: np.random.Generator, budget: int):
    centers: list[np.ndarray] = []
    attempts = 0
    while len(centers) < cfg.m_beams:
        if attempts >= budget:
            return None, attempts
        attempts += 1
        p = rng.uniform(0.0, cfg.area_side_m, size=2)
        if all(np.linalg.norm(p - q) >= cfg.min_separation_m for q in centers):
            centers.append(p)
    return np.array(centers), attempts


def generate_scenario(cfg: ScenarioConfig, seed) -> Scenario:
    """Sample beam centers, UT position and clock bias.

    Beam centers are rejection-sampled with a minimum pairwise separation,
    the UT is uniform in the box and the whole draw is repeated until the
    augmented geometry matrix at the true position is well conditioned.

    Parameters
    ----------
    cfg : ScenarioConfig
    seed : int, SeedSequence or Generator
        Anything ``np.random.default_rng`` accepts.

    Raises
    ------
    ScenarioGenerationError
        If ``cfg.max_retries`` full draws fail, or center placement alone
        needs more than ``cfg.max_retries * m_beams * 10`` attempts.
    """
    rng = np.random.default_rng(seed)
    placement_budget = cfg.max_retries * cfg.m_beams * 10
    lo, hi = cfg.clock_bias_range_m
    for _ in range(cfg.max_retries):
        centers, used = _draw_centers(cfg, rng, placement_budget)
        placement_budget -= used
        if centers is None:
            break
        ut = rng.uniform(0.0, cfg.area_side_m, size=2)
        bias = float(rng.uniform(lo, hi))
        if np.min(np.linalg.norm(centers - ut, axis=1)) <= COINCIDENT_TOL:
            continue
        cond, _ = geometry_condition(ut, centers)
        if cond > cfg.max_condition:
            continue
        sats = np.hstack([centers, np.full((cfg.m_beams, 1), cfg.altitude_m)])
        return Scenario(
            beam_centers=centers,
            satellite_positions=sats,
            ut_true=ut,
            clock_bias_m=bias,
            area_side_m=float(cfg.area_side_m),
        )
    raise ScenarioGenerationError(
        f"no admissible scenario for M={cfg.m_beams}, side={cfg.area_side_m} m, "
        f"min_separation={cfg.min_separation_m} m within the retry budget"
    )
