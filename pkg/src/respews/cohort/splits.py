"""Random train/validation/test partitions of a cohort, by stay."""

from __future__ import annotations

import numpy as np

from respews.cohort.types import Cohort, CohortSplit
from respews.errors import ConfigError


def make_splits(
    cohort: Cohort,
    n_splits: int,
    train_frac: float,
    valid_frac: float,
    seed: int,
) -> list[CohortSplit]:
    """Build `n_splits` independent random partitions of the cohort.

    Partitioning is always by stay, never by time point.  Subset sizes are
    round(frac * n) for train and validation (within one stay of the
    configured ratios); the remainder is the test set.
    """
    if not (0 < train_frac < 1 and 0 < valid_frac < 1 and train_frac + valid_frac < 1):
        raise ConfigError("fractions must lie in (0,1) and sum to < 1")
    if n_splits < 1:
        raise ConfigError("n_splits must be >= 1")
    stay_ids = np.array(cohort.stay_ids)
    n = len(stay_ids)
    if n < 3:
        raise ConfigError(f"cohort has {n} stays; need at least 3 to split")
    splits = []
    for split_id in range(n_splits):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(split_id,)))
        order = rng.permutation(n)
        n_train = int(round(train_frac * n))
        n_valid = int(round(valid_frac * n))
        n_train = min(max(n_train, 1), n - 2)
        n_valid = min(max(n_valid, 1), n - n_train - 1)
        shuffled = stay_ids[order]
        splits.append(
            CohortSplit(
                split_id=split_id,
                train=tuple(sorted(shuffled[:n_train])),
                validation=tuple(sorted(shuffled[n_train : n_train + n_valid])),
                test=tuple(sorted(shuffled[n_train + n_valid :])),
            )
        )
    return splits
