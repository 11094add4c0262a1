"""Counter-based uniforms: draw (trial, slot) is a pure function of the seed.

Philox is a counter-based generator, so the stream can be entered at any
position. Any chunking or parallel split of trials sees the same numbers.
"""

from __future__ import annotations

import numpy as np

_BLOCK = 4  # Philox emits four 64-bit words per counter step
_TO_UNIT = 2.0 ** -53


def uniforms(seed: int, first_trial: int, n_trials: int, width: int) -> np.ndarray:
    """Array of shape (n_trials, width) with U[0, 1) draws for trials
    ``first_trial .. first_trial + n_trials - 1``."""
    start = first_trial * width
    bg = np.random.Philox(key=seed)
    bg.advance(start // _BLOCK)
    skip = start % _BLOCK
    raw = bg.random_raw(skip + n_trials * width)[skip:]
    return ((raw >> np.uint64(11)).astype(np.float64) * _TO_UNIT).reshape(n_trials, width)
