"""Seeded random streams.

Every random draw in the package goes through a ``numpy.random.Generator``
backed by Philox-4x64, a counter-based bit generator whose output stream is
fixed by its key and therefore identical across platforms.  Independent
streams for workers or sub-sessions are derived with ``SeedSequence.spawn``
so that results depend only on the master seed.
"""

import numpy as np


def make_rng(seed):
    """Return a Philox-backed generator for an integer seed or SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seed))


def spawn_seeds(master_seed, count):
    """Derive ``count`` independent child seed sequences from a master seed."""
    if isinstance(master_seed, np.random.SeedSequence):
        root = master_seed
    else:
        root = np.random.SeedSequence(int(master_seed))
    return root.spawn(count)


def child_seed(seed_seq):
    """Collapse a SeedSequence to a plain integer (for serialisable configs)."""
    return int(seed_seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
