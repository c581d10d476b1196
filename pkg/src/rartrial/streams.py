"""Deterministic derived random streams.

Every simulation unit (a stage's enrollment, an arm's outcome draws, one
Gibbs chain) owns a generator derived from the master seed and an integer
key.  Derivation goes through ``numpy.random.SeedSequence`` with the key as
``spawn_key``, which hashes (seed, key...) through a counter-based mixer, so
unit streams are independent of each other and of worker scheduling.

Key layout used by this package (first element is the subsystem):
  (1, replicate, stage, arm, unit)   boundary calibration
  (2, replicate, stage, arm, unit)   trial engine
with unit 0 = outcome draws, 1 = Gibbs chain, 2 = stage assignment.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))
