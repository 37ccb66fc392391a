"""BeamEnv: the beam-weighting MDP wrapped around the WLS estimator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import UpaConfig, beam_channels, normalize_sinr
from .codebook import ActionCodebook, build_codebook, decode
from .errors import DivergenceError, RankDeficiencyError
from .estimator import positioning_error, wls_solve
from .geometry import COINCIDENT_TOL, Scenario, ScenarioConfig, generate_scenario
from .measurement import NoiseConfig, Observation, noise_sigma, synthesize

FEATURES_PER_BEAM = 6
MULTISTART_MODES = ("first", "always", "never")


@dataclass(frozen=True)
class RewardConfig:
    tau: float = 50.0
    alpha: float = 0.1
    beta: float = 0.05

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")


@dataclass(frozen=True)
class EstimatorConfig:
    ridge: float = 1e-6
    max_iter: int = 10
    tol: float = 1e-6


@dataclass(frozen=True)
class EnvConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    channel: UpaConfig = field(default_factory=UpaConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    reward: RewardConfig = field(default_factory=RewardConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    steps: int = 100
    rank_penalty: float = -10.0
    reward_floor: float | None = -10.0
    multistart: str = "always"

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.multistart not in MULTISTART_MODES:
            raise ValueError(f"multistart must be one of {MULTISTART_MODES}")


@dataclass(frozen=True)
class StepOutcome:
    next_state: np.ndarray
    reward: float
    error_m: float
    done: bool
    info: dict


def entropy(w) -> float:
    """Natural-log entropy of a weight vector with ``0 log 0 = 0``."""
    w = np.asarray(w, dtype=float)
    nz = w[w > 0]
    return float(-np.sum(nz * np.log(nz)))


def reward(e: float, w, sinr_norm, cfg: RewardConfig) -> float:
    """Squared scaled error, low-quality-beam penalty and entropy term."""
    w = np.asarray(w, dtype=float)
    q = np.asarray(sinr_norm, dtype=float)
    return float(
        -((e / cfg.tau) ** 2)
        - cfg.alpha * np.sum(w * (1.0 - q))
        - cfg.beta * (1.0 - entropy(w))
    )


class BeamEnv:
    """Episodic environment over one frozen scenario per episode.

    Geometry, UT position, clock bias and the channel realization are fixed
    at :meth:`reset`; only the pseudorange noise is redrawn every step.
    Each solve starts from the previous estimate (the scene center at the
    first step); until a first fix exists the solver also tries its
    closed-form start.

    With a ``"ranked"`` codebook the per-beam state blocks and the action
    slots are both ordered by descending normalized SINR (ties by beam
    index), so the agent never sees raw beam indices.
    """

    def __init__(self, config: EnvConfig | None = None, codebook: ActionCodebook | None = None):
        self.config = config or EnvConfig()
        m = self.config.scenario.m_beams
        self.codebook = codebook or build_codebook(m)
        if self.codebook.m != m:
            raise ValueError(f"codebook built for {self.codebook.m} beams, env has {m}")
        self.n_features = FEATURES_PER_BEAM * m
        self.n_actions = self.codebook.size
        self.scenario: Scenario | None = None
        self.observation: Observation | None = None
        self.t = 0
        self.done = True

    # episode lifecycle

    def reset(self, seed) -> np.ndarray:
        ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        scen_ss, chan_ss, noise_ss = ss.spawn(3)
        cfg = self.config
        self.scenario = generate_scenario(cfg.scenario, scen_ss)
        m = self.scenario.m_beams
        phases = np.random.default_rng(chan_ss).uniform(0.0, 2.0 * np.pi, size=m)
        _, sinr_lin = beam_channels(self.scenario, cfg.channel, phases)
        self.sinr_linear = sinr_lin
        self.sinr_norm = normalize_sinr(sinr_lin, *cfg.channel.sinr_window_db)
        self.sigmas = noise_sigma(self.sinr_norm, cfg.noise)
        if self.codebook.mode == "ranked":
            self.slot_order = np.argsort(-self.sinr_norm, kind="stable")
        else:
            self.slot_order = np.arange(m)
        self._noise_rng = np.random.default_rng(noise_ss)
        self.observation = self._observe()
        self.estimate = self.scenario.scene_center.copy()
        self.clock_bias = 0.0
        self.prev_weights = np.full(m, 1.0 / m)
        self.prev_residuals = np.zeros(m)
        self._have_fix = False
        self.t = 0
        self.done = False
        return self.state()

    def _observe(self) -> Observation:
        return synthesize(self.scenario, self.sinr_norm, self._noise_rng, self.config.noise,
                          sigmas=self.sigmas)

    def state(self) -> np.ndarray:
        """Feature vector of length ``6*M`` in slot order."""
        scen = self.scenario
        diff = self.estimate[None, :] - scen.beam_centers
        dist = np.linalg.norm(diff, axis=1)
        safe = np.where(dist > COINCIDENT_TOL, dist, 1.0)
        unit = np.where((dist > COINCIDENT_TOL)[:, None], diff / safe[:, None], 0.0)
        feats = np.empty((scen.m_beams, FEATURES_PER_BEAM))
        feats[:, 0] = np.clip(dist / scen.scene_diagonal, 0.0, 1.0)
        feats[:, 1] = unit[:, 1]
        feats[:, 2] = unit[:, 0]
        feats[:, 3] = self.sinr_norm
        feats[:, 4] = np.clip(self.prev_residuals / self.config.reward.tau, -1.0, 1.0)
        feats[:, 5] = self.prev_weights
        return feats[self.slot_order].ravel()

    # transitions

    def weights_for(self, action_index: int) -> np.ndarray:
        """Beam-ordered weight vector of a codebook action."""
        slot_w = decode(self.codebook, action_index)
        w = np.zeros_like(slot_w)
        w[self.slot_order] = slot_w
        return w

    def _use_multistart(self) -> bool:
        mode = self.config.multistart
        return mode == "always" or (mode == "first" and not self._have_fix)

    def step(self, action_index: int) -> StepOutcome:
        return self.step_weights(self.weights_for(action_index), action_index)

    def step_weights(self, w, action_index: int | None = None) -> StepOutcome:
        """Advance one step with an explicit beam-ordered weight vector."""
        if self.done:
            raise RuntimeError("episode finished; call reset()")
        cfg = self.config
        scen = self.scenario
        w = np.asarray(w, dtype=float)
        obs = self.observation
        deficient = False
        try:
            sol = wls_solve(obs, scen.beam_centers, w, self.estimate,
                            ridge=cfg.estimator.ridge, max_iter=cfg.estimator.max_iter,
                            tol=cfg.estimator.tol, scene_scale=scen.scene_diagonal,
                            multistart=self._use_multistart())
            x_hat, b_hat, residuals = sol.position, sol.clock_bias, sol.residuals
            self._have_fix = True
        except (RankDeficiencyError, DivergenceError):
            deficient = True
            x_hat, b_hat, residuals = self.estimate, self.clock_bias, np.zeros(scen.m_beams)
        err = positioning_error(x_hat, scen.ut_true)
        if deficient:
            r = float(cfg.rank_penalty)
        else:
            r = reward(err, w, self.sinr_norm, cfg.reward)
            if cfg.reward_floor is not None:
                r = max(r, float(cfg.reward_floor))
        self.t += 1
        self.done = self.t >= cfg.steps
        self.estimate = np.array(x_hat, dtype=float)
        self.clock_bias = float(b_hat)
        self.prev_weights = w
        self.prev_residuals = residuals
        self.observation = self._observe()
        info = {
            "estimate": self.estimate.copy(),
            "clock_bias": self.clock_bias,
            "weights": w.copy(),
            "action": action_index,
            "rank_deficient": deficient,
            "t": self.t,
        }
        return StepOutcome(next_state=self.state(), reward=r, error_m=err, done=self.done, info=info)
