"""Named random sub-streams derived from one top-level seed.

Every consumer gets its own ``SeedSequence`` child keyed by a fixed tag, so
changing how often one component draws never shifts another's stream.
"""

import numpy as np

NETWORK_INIT = 1
AGENT = 2
TRAIN_EPISODE = 3
EVAL_EPISODE = 4
BASELINE = 5


def stream(seed: int, tag: int, *index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(tag, *map(int, index)))


def rng(seed: int, tag: int, *index: int) -> np.random.Generator:
    return np.random.default_rng(stream(seed, tag, *index))
