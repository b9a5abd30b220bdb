# Save as: snapslam/rng.py
"""Deterministic random substreams.

Every random draw in the package comes from a Philox (counter-based) generator
whose key is derived from (master_seed, trial_index, stream role). Within a
stream the draw order is fixed by path index (phases) or AP index (noise), so
the values a trial sees never depend on which worker runs it or when.
"""
from enum import IntEnum

import numpy as np


class Stream(IntEnum):
    PLACEMENT = 0
    PHASES = 1
    NOISE = 2


def substream(master_seed: int, trial_index: int, role: Stream) -> np.random.Generator:
    if master_seed < 0 or trial_index < 0:
        raise ValueError("seeds and trial indices must be non-negative")
    seq = np.random.SeedSequence([int(master_seed), int(trial_index), int(role)])
    return np.random.Generator(np.random.Philox(seq))
