import numpy as np


def make_stream(root_seed: int, worker_index: int = 0, *purpose: int) -> np.random.Generator:
    """Independent random stream for one worker.

    The key (root_seed, worker_index, *purpose) is hashed by SeedSequence, so
    streams with distinct keys never overlap and the same key always yields
    the same draws.
    """
    key = [int(root_seed), int(worker_index), *(int(p) for p in purpose)]
    return np.random.default_rng(np.random.SeedSequence(key))
