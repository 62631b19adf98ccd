"""
Non-IID partitioning of a dataset across clients.

Client dataset sizes follow a Zipf law with exponent ``sigma`` and each
client's class mixture is drawn from a symmetric Dirichlet with concentration
``alpha``. Sizes are fixed first, mixtures then set per-client class demand,
and samples are allocated class by class to the client with the largest
remaining demand. Clients whose demand could not be met from their preferred
classes are topped up from the leftover pool so every client gets exactly its
Zipf size.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from core.exceptions import ParameterError
from core.numerics import stable_softmax
from core.rng import RngStream
from .datasets import Dataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PartitionSpec:
    """Heterogeneity controls.

    Attributes:
        sigma: Zipf exponent for dataset sizes (0 = equal sizes)
        alpha: Dirichlet concentration for class mixtures (small = few classes per client)
        num_clients: Number of clients N
        total_samples: How many samples to hand out (defaults to the whole dataset)
    """

    sigma: float
    alpha: float
    num_clients: int
    total_samples: Optional[int] = None

    def __post_init__(self):
        if not np.isfinite(self.sigma) or self.sigma < 0:
            raise ParameterError(f"Zipf exponent must be finite and non-negative, got {self.sigma}")
        if not self.alpha > 0:
            raise ParameterError(f"Dirichlet concentration must be positive, got {self.alpha}")
        if self.num_clients < 1:
            raise ParameterError(f"num_clients must be at least 1, got {self.num_clients}")


@dataclass(frozen=True)
class Partition:
    """Per-client sample indices into one dataset."""

    assignments: tuple

    def __len__(self) -> int:
        return len(self.assignments)

    def __getitem__(self, client: int) -> np.ndarray:
        return self.assignments[client]

    def sizes(self) -> List[int]:
        return [int(a.size) for a in self.assignments]


def _largest_remainder(shares: np.ndarray, total: int) -> np.ndarray:
    """Round non-negative real shares to integers summing to ``total``.

    Floors first, then hands the remainder to the largest fractional parts;
    ties go to the lower index.
    """
    counts = np.floor(shares).astype(np.int64)
    remainder = int(total - counts.sum())
    if remainder > 0:
        fractions = shares - counts
        # stable sort on the negated fractions keeps lower indices first among ties
        order = np.argsort(-fractions, kind="stable")
        counts[order[:remainder]] += 1
    return counts


def zipf_sizes(d: int, n: int, sigma: float) -> List[int]:
    """Zipf-distributed client dataset sizes d_i = d / (i^sigma * sum_j j^-sigma).

    Returns:
        ``n`` non-increasing integer counts summing exactly to ``d``
    """
    if n < 1 or d < n:
        raise ParameterError(f"Need d >= n >= 1, got d={d}, n={n}")
    if sigma < 0:
        raise ParameterError(f"Zipf exponent must be non-negative, got {sigma}")
    ranks = np.arange(1, n + 1, dtype=np.float64)
    weights = ranks ** (-float(sigma))
    shares = d * weights / weights.sum()
    return [int(c) for c in _largest_remainder(shares, d)]


def dirichlet_class_mixtures(n: int, num_classes: int, alpha: float, rng: RngStream) -> np.ndarray:
    """Draw ``n`` class-probability vectors from a symmetric Dirichlet(alpha).

    Gamma variates are drawn in log space (Gamma(alpha) = Gamma(alpha + 1) * U^(1/alpha))
    and normalised with a softmax, so very small ``alpha`` does not underflow to an
    all-zero vector.

    Returns:
        Array of shape (n, num_classes); rows are non-negative and sum to one
    """
    if not alpha > 0:
        raise ParameterError(f"Dirichlet concentration must be positive, got {alpha}")
    if num_classes < 1:
        raise ParameterError(f"num_classes must be at least 1, got {num_classes}")
    generator = rng.generator
    boosted = generator.gamma(alpha + 1.0, size=(n, num_classes))
    uniforms = generator.random(size=(n, num_classes))
    log_gamma = np.log(boosted) + np.log1p(-uniforms) / alpha
    return np.vstack([stable_softmax(row) for row in log_gamma])


def partition_dataset(ds: Dataset, spec: PartitionSpec, rng: RngStream,
                      mixtures: Optional[np.ndarray] = None) -> Partition:
    """Split ``ds`` into ``spec.num_clients`` disjoint shards.

    Args:
        ds: Dataset to split; it must contain every class at least once
        spec: Zipf/Dirichlet controls
        rng: Stream for mixtures and shuffling
        mixtures: Pre-drawn class mixtures (shape N x C); reusing the training
            mixtures gives test shards with matching class composition

    Returns:
        Partition whose client i holds exactly ``zipf_sizes(...)[i]`` samples

    Raises:
        ParameterError: If more samples are demanded than the dataset holds, a
            class is missing, or a client would receive no samples
    """
    n = spec.num_clients
    total = len(ds) if spec.total_samples is None else spec.total_samples
    if total > len(ds):
        raise ParameterError(f"Partition demands {total} samples but the dataset has {len(ds)}")
    class_pools = [ds.class_indices(c) for c in range(ds.num_classes)]
    missing = [c for c, pool in enumerate(class_pools) if pool.size == 0]
    if missing:
        raise ParameterError(f"Dataset has no samples for classes {missing}")

    sizes = zipf_sizes(total, n, spec.sigma)
    if min(sizes) < 1:
        raise ParameterError(f"Zipf exponent {spec.sigma} leaves a client without samples "
                             f"({total} samples over {n} clients)")
    if mixtures is None:
        mixtures = dirichlet_class_mixtures(n, ds.num_classes, spec.alpha, rng)
    generator = rng.generator

    demand = np.vstack([_largest_remainder(sizes[i] * mixtures[i], sizes[i]) for i in range(n)])
    assigned: List[List[np.ndarray]] = [[] for _ in range(n)]
    shortfall = np.zeros(n, dtype=np.int64)
    leftovers = []
    for c, pool in enumerate(class_pools):
        supply = generator.permutation(pool)
        cursor = 0
        # largest remaining demand first, ties to the lower client id
        for i in sorted(range(n), key=lambda k: (-demand[k, c], k)):
            want = int(demand[i, c])
            if want == 0:
                continue
            take = min(want, supply.size - cursor)
            if take > 0:
                assigned[i].append(supply[cursor:cursor + take])
                cursor += take
            shortfall[i] += want - take
        leftovers.append(supply[cursor:])

    if shortfall.any():
        pool = generator.permutation(np.concatenate(leftovers))
        cursor = 0
        for i in sorted(range(n), key=lambda k: (-shortfall[k], k)):
            want = int(shortfall[i])
            if want == 0:
                continue
            assigned[i].append(pool[cursor:cursor + want])
            cursor += want
        logger.debug(f"Topped up {int(shortfall.sum())} samples from other classes after supply ran out")

    shards = tuple(np.sort(np.concatenate(parts)) if parts else np.empty(0, dtype=np.int64)
                   for parts in assigned)
    logger.info(f"Partitioned {total} samples over {n} clients (sigma={spec.sigma}, alpha={spec.alpha})")
    return Partition(shards)


def class_histogram(ds: Dataset, indices: Sequence[int]) -> np.ndarray:
    """Per-class sample counts for a shard."""
    return np.bincount(ds.labels[np.asarray(indices, dtype=np.int64)], minlength=ds.num_classes)
