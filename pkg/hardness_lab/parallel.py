"""
Seed-partitioned chunk helpers.

Work is split into fixed-size chunks whose random streams are spawned from a
single ``SeedSequence``; chunk results are merged in chunk order. Worker count
only changes how many chunks run at once, never the numbers produced.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
from tqdm import tqdm

from .config import SAMPLE_CHUNK_SIZE, VERBOSE

T = TypeVar('T')
R = TypeVar('R')


def chunk_sizes(n: int, chunk_size: int = SAMPLE_CHUNK_SIZE) -> List[int]:
    """Sizes of the consecutive chunks covering ``n`` items."""
    full, rest = divmod(n, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def spawn_generators(seed: int, n_streams: int) -> List[np.random.Generator]:
    """Independent generators, one per chunk, derived deterministically from seed."""
    children = np.random.SeedSequence(seed).spawn(n_streams)
    return [np.random.default_rng(child) for child in children]


def derive_seed(*keys: int) -> int:
    """Deterministic 63-bit seed from a tuple of non-negative integers."""
    state = np.random.SeedSequence(list(keys)).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 31 | int(state[1] >> 1)


def ordered_map(fn: Callable[[T], R], items: Sequence[T], workers: int = 1,
                desc: Optional[str] = None) -> List[R]:
    """
    Map ``fn`` over items, in parallel when workers > 1, preserving order.

    With ``desc`` a tqdm progress bar is shown on stderr (unless LAB_VERBOSE is off).
    """
    show = desc is not None and VERBOSE
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in tqdm(items, desc=desc, disable=not show, leave=False)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(tqdm(pool.map(fn, items), total=len(items), desc=desc,
                         disable=not show, leave=False))


@dataclass
class Moments:
    """Count, mean and sum of squared deviations of a block of values."""

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def of(cls, values: np.ndarray) -> 'Moments':
        """Moments along axis 0 (scalar or per-column)."""
        values = np.asarray(values, dtype=float)
        mean = values.mean(axis=0)
        m2 = ((values - mean) ** 2).sum(axis=0)
        return cls(values.shape[0], mean, m2)

    def merge(self, other: 'Moments') -> 'Moments':
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * (other.count / n)
        m2 = self.m2 + other.m2 + delta ** 2 * (self.count * other.count / n)
        return Moments(n, mean, m2)

    @property
    def variance(self) -> np.ndarray:
        """Unbiased sample variance."""
        return self.m2 / (self.count - 1)

    @property
    def std_error(self) -> np.ndarray:
        return np.sqrt(self.variance / self.count)


def merge_moments(parts: Iterable[Moments]) -> Moments:
    """Merge chunk moments in the given (chunk) order."""
    parts = list(parts)
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total
