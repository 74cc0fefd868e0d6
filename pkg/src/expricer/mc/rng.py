"""Counter-based random streams for reproducible parallel simulation.

Paths are partitioned into fixed-size blocks; block b draws from a
Philox stream keyed by (master seed, b). A path's randomness is a pure
function of (seed, path index): it never depends on the total path count
or on how blocks are assigned to workers. Partial trailing blocks
generate the full block's draws and discard the unused columns.
"""

from __future__ import annotations

import numpy as np

BLOCK_SIZE = 65536


def block_generator(seed: int, block_idx: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64(block_idx)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def iter_blocks(n_paths: int, block_size: int = BLOCK_SIZE):
    """Yield (block_idx, start, size) covering ``n_paths`` paths."""
    n_blocks = (n_paths + block_size - 1) // block_size
    for b in range(n_blocks):
        start = b * block_size
        yield b, start, min(block_size, n_paths - start)


def block_normals(gen: np.random.Generator, n_vars: int, block_size: int,
                  antithetic: bool) -> np.ndarray:
    """Draw an (n_vars, block_size) normal panel for one block.

    With antithetic sampling, adjacent columns (2i, 2i+1) hold mirrored
    draws, so slicing an even prefix keeps pairs intact.
    """
    if antithetic:
        half = block_size // 2
        z = gen.standard_normal((n_vars, half))
        out = np.empty((n_vars, block_size))
        out[:, 0::2] = z
        out[:, 1::2] = -z
        return out
    return gen.standard_normal((n_vars, block_size))
