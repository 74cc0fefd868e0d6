from .engine import (BatchConfig, HestonSpec, MCEstimate, PathBatch,
                     heston_characteristics, simulate_expected_price,
                     simulate_first_passage)
from .rng import BLOCK_SIZE, block_generator, block_normals, iter_blocks

__all__ = [
    "BatchConfig", "HestonSpec", "MCEstimate", "PathBatch",
    "heston_characteristics", "simulate_expected_price",
    "simulate_first_passage", "BLOCK_SIZE", "block_generator",
    "block_normals", "iter_blocks",
]
