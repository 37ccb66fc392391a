"""A small dense Q-network in numpy: forward, backprop, Adam, Huber loss.

Layers are stored as ``W`` with shape (fan_in, fan_out) so a batch of row
vectors ``X`` maps to ``X @ W + b``. All arithmetic is float64.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_FORMAT = "leopos-qnet"
CHECKPOINT_VERSION = 1


@dataclass
class QNetwork:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias per weight matrix")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {l}: weight {w.shape} / bias {b.shape} mismatch")
            if l and self.weights[l - 1].shape[1] != w.shape[0]:
                raise ValueError(f"layer {l} does not chain onto layer {l - 1}")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def copy(self) -> "QNetwork":
        return QNetwork([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def n_params(self) -> int:
        return sum(p.size for p in self.params())


def he_init(shape, seed) -> np.ndarray:
    """Normal(0, 2/fan_in) matrix of ``shape = (fan_in, fan_out)``."""
    fan_in = shape[0]
    if min(shape) < 1:
        raise ValueError("dimensions must be positive")
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


def build_qnetwork(layer_sizes, seed, output_scale: float = 1.0) -> QNetwork:
    """He-initialized network, e.g. ``layer_sizes=[60, 128, 128, n_actions]``.

    ``output_scale`` shrinks the output layer's initial weights. With many
    actions a full-scale head starts with a wide spread of Q-values whose
    maximum the bootstrapped target keeps feeding back; a small head keeps
    early targets near the reward scale.
    """
    if output_scale < 0:
        raise ValueError("output_scale must be non-negative")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        weights.append(he_init((fan_in, fan_out), rng))
        biases.append(np.zeros(fan_out))
    weights[-1] *= output_scale
    return QNetwork(weights, biases)


def forward(net: QNetwork, state) -> np.ndarray:
    """Q-values for one state (1-D) or a batch of states (2-D)."""
    x = np.asarray(state, dtype=float)
    if x.shape[-1] != net.weights[0].shape[0]:
        raise ValueError(f"state has {x.shape[-1]} features, network expects {net.weights[0].shape[0]}")
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        x = x @ w + b
        if l < last:
            x = np.maximum(x, 0.0)
    return x


def huber(delta):
    """Quadratic inside |delta| < 1, linear outside; continuous at 1."""
    d = np.asarray(delta, dtype=float)
    a = np.abs(d)
    out = np.where(a < 1.0, 0.5 * d * d, a - 0.5)
    return float(out) if out.ndim == 0 else out


def huber_grad(delta):
    return np.clip(delta, -1.0, 1.0)


def backward(net: QNetwork, states, actions, targets):
    """Gradients of the batch-mean Huber TD loss.

    The loss only touches the output of the action taken in each sample:
    ``mean_j huber(Q(s_j)[a_j] - y_j)``.

    Returns
    -------
    grads : list of ndarray
        Same order as :meth:`QNetwork.params`.
    loss : float
    """
    x = np.atleast_2d(np.asarray(states, dtype=float))
    actions = np.asarray(actions, dtype=int)
    targets = np.asarray(targets, dtype=float)
    n = x.shape[0]
    if actions.shape != (n,) or targets.shape != (n,):
        raise ValueError("states, actions and targets must share the batch dimension")
    if x.shape[1] != net.weights[0].shape[0]:
        raise ValueError("state width does not match the network input")

    acts = [x]
    pre = []
    last = len(net.weights) - 1
    h = x
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0) if l < last else z
        acts.append(h)

    rows = np.arange(n)
    delta = acts[-1][rows, actions] - targets
    loss = float(np.mean(huber(delta)))
    g_out = np.zeros_like(acts[-1])
    g_out[rows, actions] = huber_grad(delta) / n

    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.weights)
    g = g_out
    for l in range(last, -1, -1):
        grads_w[l] = acts[l].T @ g
        grads_b[l] = g.sum(axis=0)
        if l:
            g = (g @ net.weights[l].T) * (pre[l - 1] > 0)
    grads = []
    for gw, gb in zip(grads_w, grads_b):
        grads += [gw, gb]
    return grads, loss


def global_norm(grads) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads)))


def clip_global_norm(grads, max_norm: float = 5.0):
    """Rescale all gradients together so their joint l2 norm is <= max_norm."""
    norm = global_norm(grads)
    if norm > max_norm:
        scale = max_norm / norm
        return [g * scale for g in grads]
    return grads


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_network(cls, net: QNetwork, **kwargs) -> "AdamState":
        st = cls(**kwargs)
        st.m = [np.zeros_like(p) for p in net.params()]
        st.v = [np.zeros_like(p) for p in net.params()]
        return st


def adam_step(net: QNetwork, grads, state: AdamState) -> QNetwork:
    """Bias-corrected Adam update, applied to ``net`` in place."""
    params = net.params()
    if not state.m:
        state.m = [np.zeros_like(p) for p in params]
        state.v = [np.zeros_like(p) for p in params]
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    step_size = state.lr / c1
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        denom = np.sqrt(v / c2)
        denom += state.eps
        np.divide(m, denom, out=denom)
        denom *= step_size
        p -= denom
    return net


def save_checkpoint(path, net: QNetwork, metadata: dict | None = None) -> Path:
    """Write ``net`` as an ``.npz`` container (see README for the layout)."""
    path = Path(path)
    arrays = {
        "format": np.array(CHECKPOINT_FORMAT),
        "version": np.array(CHECKPOINT_VERSION),
        "layer_sizes": np.array(net.layer_sizes, dtype=np.int64),
        "metadata": np.array(json.dumps(metadata or {}, sort_keys=True)),
    }
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays[f"W{l}"] = np.ascontiguousarray(w, dtype="<f8")
        arrays[f"b{l}"] = np.ascontiguousarray(b, dtype="<f8")
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def load_checkpoint(path) -> tuple[QNetwork, dict]:
    with np.load(Path(path), allow_pickle=False) as data:
        if str(data["format"]) != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} checkpoint")
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        sizes = [int(s) for s in data["layer_sizes"]]
        weights = [data[f"W{l}"].copy() for l in range(len(sizes) - 1)]
        biases = [data[f"b{l}"].copy() for l in range(len(sizes) - 1)]
        meta = json.loads(str(data["metadata"]))
    net = QNetwork(weights, biases)
    if net.layer_sizes != sizes:
        raise ValueError(f"{path}: layer shapes disagree with header")
    return net, meta
