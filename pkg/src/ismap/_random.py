"""Named PRNG streams split from a single run seed.

Each consumer draws from its own child of ``SeedSequence(seed)`` so that,
for example, changing the initialisation scale never perturbs the dataset.
"""

import numpy as np

STREAMS = {
    "dataset": 0,
    "split": 1,
    "anchors": 2,
    "init": 3,
    "subsample": 4,
}


def stream(seed, name):
    """Return a ``numpy.random.Generator`` for the named stream of ``seed``."""
    try:
        key = STREAMS[name]
    except KeyError:
        raise ValueError(f"unknown PRNG stream {name!r}; known: {sorted(STREAMS)}") from None
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))
