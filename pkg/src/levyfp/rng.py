"""Counter-based random streams keyed by (seed, *stream ids).

Every draw in the package goes through :func:`stream`, so results depend only
on the seed and the logical position of the draw (step, block, purpose), never
on how work is scheduled across threads.
"""

import numpy as np

# reserved first key component for non-step draws
INIT_STREAM = 2**31 - 1


def stream(seed, *ids):
    """Return a Philox generator for the stream ``(seed, ids...)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in ids))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed, *ids):
    """Derive an independent integer seed (used for self-noise replicas)."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(i) for i in ids))
    return int(ss.generate_state(1, dtype=np.uint32)[0])
