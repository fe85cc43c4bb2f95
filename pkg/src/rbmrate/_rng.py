"""Counter-based random-number substreams.

Every simulated path draws from its own Philox stream keyed by
(seed, path_index), so results are bit-identical no matter how paths are
batched across chunks or threads.  Within a path, increments are consumed
in (step, coordinate) order.
"""
from __future__ import annotations

import numpy as np

SAMPLER_NAME = "philox4x64:key=(seed,path_index):standard_normal"

_MASK = (1 << 64) - 1


def substream(seed: int, path_index: int) -> np.random.Generator:
    key = np.array([seed & _MASK, path_index & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def chunk_normals(seed: int, path_indices, n_steps: int, d: int) -> np.ndarray:
    """Standard-normal increments for a chunk of paths, shape
    (len(path_indices), n_steps, d).  Each path's slice is a pure function
    of (seed, path_index, n_steps, d)."""
    out = np.empty((len(path_indices), n_steps, d))
    for row, idx in enumerate(path_indices):
        out[row] = substream(seed, int(idx)).standard_normal((n_steps, d))
    return out
