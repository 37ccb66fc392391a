"""DQN training loop with replay, epsilon-greedy exploration and target sync.

RNG draw order inside :func:`train` (all from the agent stream):

1. per step: one uniform for the epsilon test, then one integer action if
   exploring;
2. per gradient update: ``batch`` replay indices.

Environment randomness comes from per-episode streams, and network
initialization from its own stream, see :mod:`leopos.seeding`.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import seeding
from .codebook import ActionCodebook, build_codebook
from .env import BeamEnv, EnvConfig
from .neural import (AdamState, QNetwork, adam_step, backward, build_qnetwork,
                     clip_global_norm, forward, save_checkpoint)


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.99
    lr: float = 1e-3
    target_sync: int = 200
    batch: int = 32
    buffer_capacity: int = 10_000
    eps_start: float = 1.0
    eps_end: float = 0.01
    eps_decay_steps: int | None = None
    episodes: int = 1000
    steps: int = 100
    learning_starts: int = 1000
    hidden: tuple[int, ...] = (128, 128)
    grad_clip: float = 5.0
    output_init_scale: float = 0.01
    ddqn: bool = False
    checkpoint_every: int = 0

    def __post_init__(self):
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        if self.batch < 1 or self.batch > self.buffer_capacity:
            raise ValueError("need 1 <= batch <= buffer_capacity")
        if not 0 < self.eps_end <= self.eps_start <= 1:
            raise ValueError("need 0 < eps_end <= eps_start <= 1")
        if self.episodes < 1 or self.steps < 1:
            raise ValueError("episodes and steps must be >= 1")
        if self.target_sync < 1:
            raise ValueError("target_sync must be >= 1")

    @property
    def decay_steps(self) -> int:
        if self.eps_decay_steps is not None:
            return int(self.eps_decay_steps)
        return max(1, int(0.8 * self.episodes * self.steps))


@dataclass(frozen=True)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


class ReplayBuffer:
    """Fixed-capacity FIFO ring of transitions stored as flat arrays."""

    def __init__(self, capacity: int, n_features: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.states = np.zeros((capacity, n_features))
        self.next_states = np.zeros((capacity, n_features))
        self.actions = np.zeros(capacity, dtype=np.int64)
        self.rewards = np.zeros(capacity)
        self.dones = np.zeros(capacity, dtype=bool)
        self.cursor = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def push(self, tr: Transition) -> None:
        i = self.cursor
        self.states[i] = tr.state
        self.actions[i] = tr.action
        self.rewards[i] = tr.reward
        self.next_states[i] = tr.next_state
        self.dones[i] = tr.done
        self.cursor = (i + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def get(self, i: int) -> Transition:
        """Transition at storage slot ``i``."""
        return Transition(self.states[i].copy(), int(self.actions[i]), float(self.rewards[i]),
                          self.next_states[i].copy(), bool(self.dones[i]))

    def sample_indices(self, batch: int, rng: np.random.Generator) -> np.ndarray:
        """``batch`` slot indices drawn uniformly (with replacement)."""
        if self.size == 0:
            raise ValueError("cannot sample from an empty buffer")
        return rng.integers(0, self.size, size=batch)

    def batch(self, idx):
        return (self.states[idx], self.actions[idx], self.rewards[idx],
                self.next_states[idx], self.dones[idx])


def epsilon_at(step: int, cfg: AgentConfig) -> float:
    """Exponential decay from eps_start to eps_end over ``decay_steps``."""
    if step < 0:
        raise ValueError("step must be >= 0")
    tau = cfg.decay_steps / math.log(cfg.eps_start / cfg.eps_end) if cfg.eps_start > cfg.eps_end else math.inf
    return max(cfg.eps_end, cfg.eps_start * math.exp(-step / tau))


def select_action(net: QNetwork, state, epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy; greedy ties go to the lowest index."""
    if not 0 <= epsilon <= 1:
        raise ValueError("epsilon must lie in [0, 1]")
    n_actions = net.weights[-1].shape[1]
    if rng.random() < epsilon:
        return int(rng.integers(n_actions))
    return int(np.argmax(forward(net, state)))


def td_targets(target_net: QNetwork, online_net: QNetwork, batch, gamma: float,
               ddqn: bool = False) -> np.ndarray:
    """Bootstrapped targets ``r + gamma * Q_target(s', a*)``; ``r`` at terminals.

    ``batch`` is ``(states, actions, rewards, next_states, dones)``. The
    standard target takes ``a*`` as the argmax of the target network; the
    double-DQN variant picks ``a*`` with the online network.
    """
    _, _, rewards, next_states, dones = batch
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0:
        raise ValueError("empty batch")
    q_next = forward(target_net, next_states)
    if ddqn:
        a_star = np.argmax(forward(online_net, next_states), axis=1)
    else:
        a_star = np.argmax(q_next, axis=1)
    boot = q_next[np.arange(len(rewards)), a_star]
    return rewards + gamma * np.where(np.asarray(dones, dtype=bool), 0.0, boot)


def sync_target(online: QNetwork, target: QNetwork) -> QNetwork:
    """Copy online parameters into ``target`` in place."""
    if online.layer_sizes != target.layer_sizes:
        raise ValueError(f"architecture mismatch: {online.layer_sizes} vs {target.layer_sizes}")
    for src, dst in zip(online.params(), target.params()):
        np.copyto(dst, src)
    return target


@dataclass(frozen=True)
class EpisodeMetrics:
    episode: int
    cum_reward: float
    mean_error_m: float
    final_error_m: float
    epsilon: float
    mean_loss: float


METRICS_HEADER = [f.name for f in fields(EpisodeMetrics)]


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, float) else str(v)


def write_metrics_csv(path, rows) -> Path:
    """Fixed-header CSV; floats use ``repr`` so they parse back exactly."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(METRICS_HEADER)
        for r in rows:
            wr.writerow([_fmt(getattr(r, k)) for k in METRICS_HEADER])
    return path


def read_metrics_csv(path) -> list[EpisodeMetrics]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        if rd.fieldnames != METRICS_HEADER:
            raise ValueError(f"{path}: unexpected header {rd.fieldnames}")
        return [EpisodeMetrics(int(r["episode"]), *(float(r[k]) for k in METRICS_HEADER[1:]))
                for r in rd]


@dataclass
class TrainResult:
    net: QNetwork
    metrics: list[EpisodeMetrics]
    n_updates: int = 0
    n_env_steps: int = 0
    sync_updates: list[int] = field(default_factory=list)
    episode_seconds: list[float] = field(default_factory=list)
    buffer: ReplayBuffer | None = None


def train(agent_cfg: AgentConfig | None = None, env_cfg: EnvConfig | None = None, seed: int = 0,
          codebook: ActionCodebook | None = None, checkpoint_dir=None, log=None) -> TrainResult:
    """Train a Q-network on BeamEnv and return it with per-episode metrics.

    The loop only consumes what :meth:`BeamEnv.reset` and
    :meth:`BeamEnv.step` return; nothing else from the environment reaches
    the agent. ``mean_loss`` is 0.0 for episodes without a gradient update.
    """
    agent_cfg = agent_cfg or AgentConfig()
    env_cfg = replace(env_cfg or EnvConfig(), steps=agent_cfg.steps)
    codebook = codebook or build_codebook(env_cfg.scenario.m_beams)
    env = BeamEnv(env_cfg, codebook)

    sizes = [env.n_features, *agent_cfg.hidden, env.n_actions]
    online = build_qnetwork(sizes, seeding.stream(seed, seeding.NETWORK_INIT),
                            agent_cfg.output_init_scale)
    target = online.copy()
    adam = AdamState.for_network(online, lr=agent_cfg.lr)
    buf = ReplayBuffer(agent_cfg.buffer_capacity, env.n_features)
    rng = seeding.rng(seed, seeding.AGENT)

    result = TrainResult(net=online, metrics=[], buffer=buf)
    total_steps = 0
    for ep in range(agent_cfg.episodes):
        t0 = time.perf_counter()
        state = env.reset(seeding.stream(seed, seeding.TRAIN_EPISODE, ep))
        cum_r = 0.0
        errs = []
        losses = []
        eps = epsilon_at(total_steps, agent_cfg)
        done = False
        while not done:
            eps = epsilon_at(total_steps, agent_cfg)
            a = select_action(online, state, eps, rng)
            out = env.step(a)
            buf.push(Transition(state, a, out.reward, out.next_state, out.done))
            cum_r += out.reward
            errs.append(out.error_m)
            state = out.next_state
            done = out.done
            total_steps += 1

            if buf.size >= max(agent_cfg.batch, agent_cfg.learning_starts):
                batch = buf.batch(buf.sample_indices(agent_cfg.batch, rng))
                y = td_targets(target, online, batch, agent_cfg.gamma, agent_cfg.ddqn)
                grads, loss = backward(online, batch[0], batch[1], y)
                grads = clip_global_norm(grads, agent_cfg.grad_clip)
                adam_step(online, grads, adam)
                losses.append(loss)
                result.n_updates += 1
                if result.n_updates % agent_cfg.target_sync == 0:
                    sync_target(online, target)
                    result.sync_updates.append(result.n_updates)

        row = EpisodeMetrics(
            episode=ep + 1,
            cum_reward=float(cum_r),
            mean_error_m=float(np.mean(errs)),
            final_error_m=float(errs[-1]),
            epsilon=float(eps),
            mean_loss=float(np.mean(losses)) if losses else 0.0,
        )
        result.metrics.append(row)
        result.episode_seconds.append(time.perf_counter() - t0)
        if log is not None:
            log(row)
        if checkpoint_dir is not None and agent_cfg.checkpoint_every and (ep + 1) % agent_cfg.checkpoint_every == 0:
            save_checkpoint(Path(checkpoint_dir) / f"checkpoint_ep{ep + 1:05d}.npz", online,
                            {"episode": ep + 1, "seed": seed})
    result.n_env_steps = total_steps
    return result


class GreedyPolicy:
    """Greedy (epsilon = 0) action selection with a Q-network."""

    static = False

    def __init__(self, net: QNetwork, name: str = "dqn"):
        self.net = net
        self.name = name

    def step(self, env, state):
        return env.step(int(np.argmax(forward(self.net, state))))


@dataclass
class EvalReport:
    policy: str
    seed: int
    final_errors: np.ndarray
    mean_errors: np.ndarray

    @property
    def rmse(self) -> float:
        return float(np.sqrt(np.mean(self.final_errors**2)))

    @property
    def mean_error(self) -> float:
        return float(np.mean(self.final_errors))

    @property
    def n_episodes(self) -> int:
        return int(self.final_errors.size)


def evaluate(policy, n_episodes: int, seed: int, env_cfg: EnvConfig | None = None,
             codebook: ActionCodebook | None = None, steps: int | None = None) -> EvalReport:
    """Roll a policy out on freshly seeded scenarios.

    ``policy`` is a :class:`QNetwork` (run greedily) or any object with a
    ``step(env, state)`` method (see :mod:`leopos.baselines`). Episode ``j``
    uses the same scenario and noise stream for every policy given the same
    ``seed``. RMSE is taken over final-step errors.
    """
    env_cfg = env_cfg or EnvConfig()
    if steps is not None:
        env_cfg = replace(env_cfg, steps=steps)
    codebook = codebook or build_codebook(env_cfg.scenario.m_beams)
    if isinstance(policy, QNetwork):
        policy = GreedyPolicy(policy)
    env = BeamEnv(env_cfg, codebook)
    finals = np.empty(n_episodes)
    means = np.empty(n_episodes)
    for j in range(n_episodes):
        state = env.reset(seeding.stream(seed, seeding.EVAL_EPISODE, j))
        if getattr(policy, "static", False):
            err = float(np.linalg.norm(policy.estimate(env) - env.scenario.ut_true))
            finals[j] = means[j] = err
            continue
        errs = []
        done = False
        while not done:
            out = policy.step(env, state)
            errs.append(out.error_m)
            state = out.next_state
            done = out.done
        finals[j] = errs[-1]
        means[j] = float(np.mean(errs))
    return EvalReport(policy=getattr(policy, "name", "policy"), seed=seed,
                      final_errors=finals, mean_errors=means)
