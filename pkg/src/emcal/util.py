"""Deterministic seed-stream derivation and worker-count control."""

from __future__ import annotations

import os

import numpy as np

# Stream tags keep the seeded draws of different pipeline stages independent
# even when they share one user-facing seed.
DATASET_STREAM = 1
GAMMA_STREAM = 2
PAIR_STREAM = 3


def child_seed(base_seed: int, *key: int) -> int:
    """Derive a stable integer seed from a base seed and an integer key path."""
    ss = np.random.SeedSequence([int(base_seed), *(int(k) for k in key)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def worker_count(task_count: int) -> int:
    """Number of parallel workers to use, capped by the EMCAL_THREADS variable."""
    limit = os.cpu_count() or 1
    raw = os.environ.get("EMCAL_THREADS")
    if raw:
        try:
            limit = min(limit, max(1, int(raw)))
        except ValueError:
            pass
    return max(1, min(int(task_count), limit))
