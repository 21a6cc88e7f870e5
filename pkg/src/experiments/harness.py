# src/experiments/harness.py

"""
Replicate engine
Replicates are cut into fixed-size blocks; block b always draws from the
stream (seed, stream_base + b), so results do not depend on how many
workers run the blocks. Block outputs are merged in block order.
"""

import time
from dataclasses import dataclass
from multiprocessing import Pool
from typing import Callable, List, Tuple

import numpy as np
from loguru import logger
from tqdm import tqdm

from src.moments.errors import ConfigError
from src.stochastic.sampling import SeedSpec

# task(rng, size) -> array with `size` rows
BlockTask = Callable[[np.random.Generator, int], np.ndarray]

STAGE_STRIDE = 2 ** 32


@dataclass(frozen=True)
class ReplicateBlock:
    index: int
    size: int
    seed: SeedSpec


def stage_base(stage: int) -> int:
    """Stream offset for the stage-th sampling stage of an experiment"""
    return stage * STAGE_STRIDE


def plan_blocks(reps: int, block_size: int, seed: int, stream_base: int = 0) -> List[ReplicateBlock]:
    if reps < 1 or block_size < 1:
        raise ConfigError(f"need reps ≥ 1 and block_size ≥ 1, got {reps} and {block_size}")
    blocks = []
    for index, start in enumerate(range(0, reps, block_size)):
        size = min(block_size, reps - start)
        blocks.append(ReplicateBlock(index, size, SeedSpec(seed=seed, stream_id=stream_base + index)))
    return blocks


def _run_block(job: Tuple[BlockTask, ReplicateBlock]) -> Tuple[int, np.ndarray]:
    task, block = job
    out = np.asarray(task(block.seed.generator(), block.size))
    if out.shape[0] != block.size:
        raise ValueError(f"block {block.index} returned {out.shape[0]} rows, expected {block.size}")
    return block.size, out


def run_replicates(task: BlockTask, reps: int, seed: int, block_size: int = 500,
                   workers: int = 1, stream_base: int = 0, label: str = "replicates",
                   quiet: bool = False) -> np.ndarray:
    """
    Run `task` over all blocks and stack the rows

    Args:
        task: picklable callable (module-level function or functools.partial)
        reps: total number of replicates
        seed: master seed
        block_size: replicates per block (part of the reproducibility key)
        workers: process count; 1 runs in-process
        stream_base: offset separating the stages of one experiment
        label: progress-bar caption
        quiet: suppress the progress bar
    """
    blocks = plan_blocks(reps, block_size, seed, stream_base)
    jobs = [(task, block) for block in blocks]
    results: List[np.ndarray] = []
    start = time.perf_counter()

    with tqdm(total=reps, desc=f"   {label}", unit=" rep", ncols=100,
              disable=True if quiet else None) as progress_bar:
        if workers > 1:
            logger.debug(f"{label}: {len(blocks)} blocks on {workers} processes")
            with Pool(processes=workers) as pool:
                # imap keeps block order
                for processed, out in pool.imap(_run_block, jobs):
                    results.append(out)
                    progress_bar.update(processed)
        else:
            for job in jobs:
                processed, out = _run_block(job)
                results.append(out)
                progress_bar.update(processed)

    logger.debug(f"{label}: {reps} replicates in {time.perf_counter() - start:.2f}s")
    return np.concatenate(results, axis=0)
