"""
Counter-based random streams.

Every replication owns a Philox stream keyed by (master seed, replication index), so a
replication's draws do not depend on which worker runs it or in what order.
"""
from typing import Tuple

import numpy as np


def replication_seed(master_seed: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(rep,))


def replication_streams(master_seed: int, rep: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """
    Return (outcome stream, fit stream) for one replication.

    The outcome stream drives randomization and patient outcomes. The fit stream only
    hands out MCMC seeds, so design variants that differ in their final model still
    see the same trial data.
    """
    outcome_seq, fit_seq = replication_seed(master_seed, rep).spawn(2)
    return (
        np.random.Generator(np.random.Philox(outcome_seq)),
        np.random.Generator(np.random.Philox(fit_seq)),
    )


def make_generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def draw_seed(stream: np.random.Generator) -> int:
    """Draw a 63-bit seed for a downstream fit."""
    return int(stream.integers(0, 2**63 - 1, dtype=np.int64))
