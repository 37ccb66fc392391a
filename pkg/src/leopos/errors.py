"""Exception types shared across the package."""

import numpy as np


class DegenerateGeometryError(ValueError):
    """Coincident points or a geometry that cannot be linearized."""


class ScenarioGenerationError(RuntimeError):
    """Scenario sampling exhausted its retry budget."""


class RankDeficiencyError(np.linalg.LinAlgError):
    """The weighted normal matrix does not determine position and clock bias."""


class DivergenceError(RuntimeError):
    """Gauss-Newton iterations moved further than the scene allows."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
