"""Deterministic seed splitting.

All randomness in the engine flows through named substreams derived from a
single integer seed via ``numpy.random.SeedSequence`` spawn keys.  The scheme
is part of the reproducibility contract:

* a mechanism run with seed ``s`` draws candidates from ``substream(s, 0)``
  and the final reply from ``substream(s, 1)``, so changing the candidate
  count never perturbs the final draw;
* sweeps derive one child seed per (instance index, seed index) cell with
  ``derive_seed(master, instance_idx, seed_idx)``;
* counterfactual reruns use ``derive_seed(run_seed, 2, advertiser_idx)``.
"""

from __future__ import annotations

import numpy as np

PHASE_CANDIDATES = 0
PHASE_FINAL_DRAW = 1
PHASE_COUNTERFACTUAL = 2


def substream(seed: int, *key: int) -> np.random.Generator:
    """Return the generator for the named substream of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def derive_seed(seed: int, *key: int) -> int:
    """Collapse a named substream into a fresh 63-bit integer seed."""
    state = np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1, np.uint64)
    return int(state[0] >> np.uint64(1))
