"""Seed splitting.

Every random draw in the simulator descends from one integer master seed via
``numpy.random.SeedSequence`` spawn keys.  The key layout is fixed:

* crossbar cell ``(r, c)``:           ``(STREAM_CELL, r, c)``
* noise of one measurement:           ``(STREAM_NOISE, purpose, kind, r, c, rep)``
* independent trial / device seeds:   ``(STREAM_TRIAL, *key)``

``purpose`` separates legitimate reads, enrollment reads and attack traces so
that their noise streams never collide.
"""

from __future__ import annotations

import numpy as np

STREAM_CELL = 0
STREAM_NOISE = 1
STREAM_TRIAL = 2

PURPOSE_READ = 0
PURPOSE_ENROLL = 1
PURPOSE_ATTACK = 2


def cell_seed(master_seed: int, row: int, col: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(STREAM_CELL, row, col))


def noise_seed(master_seed: int, *key: int) -> int:
    """Derive a 63-bit integer seed for one noisy evaluation."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(STREAM_NOISE, *key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def sub_seed(master_seed: int, *key: int) -> int:
    """Derive an independent integer master seed, e.g. one per Monte-Carlo trial."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(STREAM_TRIAL, *key))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
