"""Deterministic derivation of independent random streams.

Every stream used by an experiment is keyed by a tuple of integers
(master seed, run, generation, couple, purpose, ...).  Keys are folded one
by one through the splitmix64 finalizer::

    h = GOLDEN
    for k in keys:
        h = splitmix64(h ^ (k mod 2**64))

    splitmix64(x):
        x = (x + GOLDEN)                    mod 2**64
        x = (x ^ (x >> 30)) * MIX1          mod 2**64
        x = (x ^ (x >> 27)) * MIX2          mod 2**64
        return x ^ (x >> 31)

with GOLDEN = 0x9E3779B97F4A7C15, MIX1 = 0xBF58476D1CE4E5B9 and
MIX2 = 0x94D049BB133111EB.  Because a stream depends only on its key and
not on the order in which streams are created, serial and parallel
schedules consume identical random numbers.
"""
from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB

# stream purposes
INIT = 1
EVALUATE = 2
SELECT = 3
PAIR = 4
TRAIN = 5
METRICS = 6
DATA = 7
CELL = 8


def splitmix64(x: int) -> int:
    x = (x + GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * MIX1) & MASK64
    x = ((x ^ (x >> 27)) * MIX2) & MASK64
    return x ^ (x >> 31)


def mix(*keys: int) -> int:
    h = GOLDEN
    for k in keys:
        h = splitmix64(h ^ (int(k) & MASK64))
    return h


def stream(*keys: int) -> np.random.Generator:
    return np.random.default_rng(mix(*keys))
