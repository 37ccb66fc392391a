"""Discrete beam-weight action codebooks.

Two construction modes:

``"ranked"`` (default)
    Actions are weight profiles over SINR-rank *slots*: slot 0 is the
    strongest beam of the current epoch, slot M-1 the weakest. The set is
    every slot one-hot plus every non-increasing profile over the coarse
    levels that starts at the top level, with at most ``k`` non-zero slots.
    The environment maps slots to beams.

``"enumerate"``
    Actions are attached to fixed beam indices. Supports of size 1..k are
    enumerated (size-major, lexicographic within a size); each support gets
    the uniform pattern and, for size >= 2, every rotation of one dominant
    1.0 with the rest at 0.5.

Both modes l1-normalize, then keep an action only if its cosine
similarity to every previously kept action is below ``prune_threshold``,
stopping at ``cap`` actions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

DEFAULT_LEVELS = (0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class ActionCodebook:
    actions: np.ndarray
    m: int
    k: int
    levels: tuple[float, ...]
    prune_threshold: float
    cap: int
    mode: str

    def __len__(self) -> int:
        return self.actions.shape[0]

    @property
    def size(self) -> int:
        return self.actions.shape[0]


def _enumerate_candidates(m: int, k: int, levels):
    top = max(levels)
    half = 0.5 * top
    for size in range(1, k + 1):
        for support in itertools.combinations(range(m), size):
            patterns = [np.full(size, top)]
            if size >= 2:
                for lead in range(size):
                    p = np.full(size, half)
                    p[lead] = top
                    patterns.append(p)
            for p in patterns:
                w = np.zeros(m)
                w[list(support)] = p
                yield w


def _ranked_candidates(m: int, k: int, levels):
    for j in range(m):
        w = np.zeros(m)
        w[j] = 1.0
        yield w
    desc = sorted(levels, reverse=True)
    top = desc[0]
    profiles = []
    for size in range(1, k + 1):
        # non-increasing tails after a leading top level
        for tail in itertools.combinations_with_replacement(range(len(desc)), size - 1):
            w = np.zeros(m)
            w[0] = top
            w[1:size] = [desc[i] for i in tail]
            profiles.append(w)
    # heavier profiles first within a support size
    profiles.sort(key=lambda v: (np.count_nonzero(v), tuple(-v)))
    yield from profiles


def build_codebook(
    m: int = 10,
    k: int | None = None,
    levels=DEFAULT_LEVELS,
    prune_threshold: float = 0.98,
    cap: int = 128,
    mode: str = "ranked",
) -> ActionCodebook:
    """Build a deterministic codebook of normalized weight vectors.

    Parameters
    ----------
    m : int
        Number of beams (or rank slots).
    k : int, optional
        Largest support size. Defaults to ``m`` for ``"ranked"`` and 3 for
        ``"enumerate"``.
    levels : sequence of float
        Non-zero coarse weight levels in (0, 1]; zero is implicit.
    prune_threshold : float
        Cosine-similarity screening threshold.
    cap : int
        Maximum number of actions kept (must be >= m).
    mode : {"ranked", "enumerate"}
    """
    if mode not in ("ranked", "enumerate"):
        raise ValueError(f"unknown codebook mode {mode!r}")
    if k is None:
        k = m if mode == "ranked" else min(3, m)
    levels = tuple(float(v) for v in levels)
    if m < 1 or not 1 <= k <= m:
        raise ValueError(f"need 1 <= k <= m, got k={k}, m={m}")
    if not levels:
        raise ValueError("levels must be non-empty")
    if any(not 0 < v <= 1 for v in levels):
        raise ValueError("levels must lie in (0, 1]")
    if cap < m:
        raise ValueError("cap must be >= m")
    if not 0 < prune_threshold <= 1:
        raise ValueError("prune_threshold must lie in (0, 1]")

    gen = _ranked_candidates if mode == "ranked" else _enumerate_candidates
    kept: list[np.ndarray] = []
    units: list[np.ndarray] = []
    for w in gen(m, k, levels):
        u = w / np.linalg.norm(w)
        if units and np.max(np.asarray(units) @ u) >= prune_threshold:
            continue
        kept.append(w / w.sum())
        units.append(u)
        if len(kept) >= cap:
            break
    actions = np.array(kept)
    actions.setflags(write=False)
    return ActionCodebook(actions=actions, m=m, k=k, levels=levels,
                          prune_threshold=prune_threshold, cap=cap, mode=mode)


def decode(codebook: ActionCodebook, index: int) -> np.ndarray:
    """Weight vector of action ``index`` (a copy)."""
    if not 0 <= int(index) < codebook.size:
        raise IndexError(f"action {index} out of range [0, {codebook.size})")
    return codebook.actions[int(index)].copy()
