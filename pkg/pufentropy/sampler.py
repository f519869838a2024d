#  Copyright (c) 2024 pufentropy developers
"""
Monte-Carlo estimation of the PUF class distribution.

Every round draws ``n`` i.i.d. weights, sorts their absolute values (the weights of the canonical form),
computes the Chow parameters and counts the resulting class key. Rounds are split over independent shards.
Draw ``j`` of shard ``k`` only depends on ``(seed, k, j)``: shard ``k`` uses blocks of ``BLOCK_SIZE`` draws,
block ``b`` coming from a Philox generator keyed by ``SeedSequence(seed, spawn_key=(k, b))``.
"""

import concurrent.futures
import enum
import functools
import logging
import numbers
import os
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from pufentropy.basetypes import FrozenValue
from pufentropy.errors import IncompatibleMaps, IntegrityError
from pufentropy.group import orbit_size
from pufentropy.puf import ClassKey, WeightVector, chow_batch, _check_n
from pufentropy.tables import PUF_COUNTS

logger = logging.getLogger(__name__)

#: number of draws per random block of a shard; changing it changes all streams
BLOCK_SIZE = 4096

#: largest seed (seeds are unsigned 64-bit integers)
MAX_SEED = 2 ** 64 - 1

# spawn key of the stream that draws Poissonized sample sizes (shard streams use keys of length 2)
_POISSON_STREAM = (2 ** 32 - 1,)


class Distribution(enum.Enum):
    """
    Symmetric weight distributions with 0 in their support.
    """
    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    LAPLACE = "laplace"

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        """
        Draw weights.

        :param rng: numpy random generator
        :param size: output shape
        :return: array of draws
        """
        if self is Distribution.GAUSSIAN:
            return rng.standard_normal(size)
        elif self is Distribution.UNIFORM:
            return rng.uniform(-1.0, 1.0, size)
        else:
            return rng.laplace(0.0, 1.0, size)

    def __str__(self):
        return self.value


def _check_positive(name, value):
    if not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value}")
    return int(value)


def _check_seed(seed):
    if not isinstance(seed, numbers.Integral) or not (0 <= seed <= MAX_SEED):
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return int(seed)


class SamplerConfig(FrozenValue):
    """
    Configuration of a sampling run.
    """

    def __init__(self, n: int, rounds: int, seed: int = 0, shards: int = 1,
                 distribution=Distribution.GAUSSIAN, poissonized: bool = False):
        """
        :param n: number of weights
        :param rounds: number of samples (the Poisson parameter for Poissonized runs)
        :param seed: unsigned 64-bit seed
        :param shards: number of independent shards
        :param distribution: a :class:`Distribution` or its name
        :param poissonized: whether the number of samples is drawn from a Poisson distribution with mean ``rounds``
        """
        n = _check_n(n)
        rounds = _check_positive("rounds", rounds)
        shards = _check_positive("shards", shards)
        seed = _check_seed(seed)
        distribution = Distribution(distribution)
        super().__init__(value=(n, rounds, seed, shards, distribution, bool(poissonized)))
        self._freeze(n=n, rounds=rounds, seed=seed, shards=shards, distribution=distribution,
                     poissonized=bool(poissonized))

    def replace(self, **kwargs):
        """
        A copy of this configuration with some fields replaced.
        """
        fields = dict(n=self.n, rounds=self.rounds, seed=self.seed, shards=self.shards,
                      distribution=self.distribution, poissonized=self.poissonized)
        fields.update(kwargs)
        return SamplerConfig(**fields)

    def __repr__(self):
        return (f"SamplerConfig(n={self.n}, rounds={self.rounds}, seed={self.seed}, shards={self.shards}, "
                f"distribution={self.distribution}, poissonized={self.poissonized})")


class ClassMap:
    """
    Counts of observed canonical classes together with the metadata of the run that produced them.
    The number of rounds performed is the sum of all counts.
    """

    def __init__(self, n: int, distribution: str, counts: Optional[Dict[Tuple[int, ...], int]] = None,
                 seed: int = 0, shards: int = 1, poisson_n: Optional[int] = None, rejected: int = 0,
                 exact: bool = False):
        """
        :param n: number of weights
        :param distribution: name of the weight distribution (``"census"`` for exact censuses)
        :param counts: mapping from class keys (tuples) to counts
        :param seed: seed of the run
        :param shards: number of shards of the run
        :param poisson_n: Poisson parameter for Poissonized runs, otherwise ``None``
        :param rejected: number of weight vectors resampled because of a zero dot product
        :param exact: whether counts are orbit sizes of an exhaustive census instead of samples
        """
        self.n = _check_n(n)
        self.distribution = str(distribution)
        self.seed = seed
        self.shards = shards
        self.poisson_n = poisson_n
        self.rejected = rejected
        self.exact = exact
        self._counts = {}
        for key, count in (counts or {}).items():
            self.add(key, count)

    def add(self, key, count: int = 1):
        """
        Add ``count`` observations of a class.

        :param key: a :class:`ClassKey` or a tuple of integers
        :param count: non-negative count
        """
        if isinstance(key, ClassKey):
            key = key.to_tuple()
        else:
            key = tuple(int(v) for v in key)
        if len(key) != self.n:
            raise ValueError(f"class key {key} does not have {self.n} entries")
        if count < 0:
            raise ValueError(f"counts must be non-negative, got {count}")
        if count:
            self._counts[key] = self._counts.get(key, 0) + int(count)

    @property
    def rounds(self) -> int:
        return sum(self._counts.values())

    def total(self) -> int:
        return self.rounds

    def __len__(self):
        return len(self._counts)

    def __contains__(self, key):
        if isinstance(key, ClassKey):
            key = key.to_tuple()
        return tuple(key) in self._counts

    def count(self, key) -> int:
        if isinstance(key, ClassKey):
            key = key.to_tuple()
        return self._counts.get(tuple(key), 0)

    def keys(self) -> List[ClassKey]:
        """
        Observed class keys, sorted lexicographically descending.
        """
        return [ClassKey(key) for key in sorted(self._counts, reverse=True)]

    def items(self) -> List[Tuple[ClassKey, int]]:
        return [(ClassKey(key), self._counts[key]) for key in sorted(self._counts, reverse=True)]

    def counts(self) -> Dict[Tuple[int, ...], int]:
        return dict(self._counts)

    def frequencies(self) -> Dict[ClassKey, float]:
        total = self.rounds
        return {key: count / total for key, count in self.items()}

    def orbit_sizes(self) -> Dict[ClassKey, int]:
        return {key: orbit_size(key) for key in self.keys()}

    def covered_pufs(self) -> int:
        """
        Number of PUFs in the observed classes.
        """
        return sum(self.orbit_sizes().values())

    def validate(self):
        """
        Check that every key is a valid canonical class key and that the observed classes do not contain more
        PUFs than exist for ``n``.

        :raises IntegrityError: if an invariant is violated
        """
        for key in self._counts:
            try:
                ClassKey(key)
            except ValueError as e:
                raise IntegrityError(f"invalid class key {key}: {e}")
        known = PUF_COUNTS.get(self.n)
        if known is not None and self.covered_pufs() > known:
            raise IntegrityError(f"observed classes cover {self.covered_pufs()} PUFs, but only {known} exist "
                                 f"for n={self.n}")

    def metadata(self) -> dict:
        return dict(n=self.n, distribution=self.distribution, seed=self.seed, shards=self.shards,
                    rounds=self.rounds, poisson_n=self.poisson_n, rejected=self.rejected, exact=self.exact)

    def __eq__(self, other):
        if not isinstance(other, ClassMap):
            return NotImplemented
        return self.metadata() == other.metadata() and self._counts == other._counts

    def __repr__(self):
        return (f"ClassMap(n={self.n}, distribution={self.distribution}, rounds={self.rounds}, "
                f"classes={len(self)})")


def merge(maps: Iterable[ClassMap]) -> ClassMap:
    """
    Merge class maps of the same ``n`` and distribution by summing counts.
    Seed and shards are taken from the first map; Poisson parameters add up if all maps are Poissonized
    (a sum of independent Poisson counts is Poisson). A merge of several maps is never an exact census.

    :param maps: class maps
    :return: the merged map
    :raises IncompatibleMaps: if ``n`` or the distribution differ
    """
    maps = list(maps)
    if not maps:
        raise ValueError("need at least one class map to merge")
    first = maps[0]
    for other in maps[1:]:
        if other.n != first.n or other.distribution != first.distribution:
            raise IncompatibleMaps(f"cannot merge map (n={other.n}, dist={other.distribution}) into "
                                   f"(n={first.n}, dist={first.distribution})")
    if all(m.poisson_n is not None for m in maps):
        poisson_n = sum(m.poisson_n for m in maps)
    else:
        poisson_n = None
    merged = ClassMap(n=first.n, distribution=first.distribution, seed=first.seed, shards=first.shards,
                      poisson_n=poisson_n, rejected=sum(m.rejected for m in maps),
                      exact=len(maps) == 1 and first.exact)
    for m in maps:
        for key, count in m._counts.items():
            merged._counts[key] = merged._counts.get(key, 0) + count
    return merged


class DrawStream:
    """
    The random weights of one shard. Draw ``index`` is a pure function of ``(seed, shard, index)``.
    """

    def __init__(self, seed: int, shard: int, n: int, distribution=Distribution.GAUSSIAN):
        self.seed = _check_seed(seed)
        self.shard = int(shard)
        self.n = _check_n(n)
        self.distribution = Distribution(distribution)

    def _generator(self, *key):
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.shard,) + key)
        return np.random.Generator(np.random.Philox(sequence))

    def block(self, b: int) -> np.ndarray:
        """
        The ``b``-th block of ``BLOCK_SIZE`` draws, an array of shape ``(BLOCK_SIZE, n)``.
        """
        return self.distribution.sample(self._generator(b), (BLOCK_SIZE, self.n))

    def draws(self, start: int, count: int) -> np.ndarray:
        """
        Draws ``start, ..., start + count - 1`` as an array of shape ``(count, n)``.
        """
        out = np.empty((count, self.n))
        pos = start
        while pos < start + count:
            b, offset = divmod(pos, BLOCK_SIZE)
            take = min(BLOCK_SIZE - offset, start + count - pos)
            out[pos - start:pos - start + take] = self.block(b)[offset:offset + take]
            pos += take
        return out

    def resample(self, index: int, attempt: int) -> np.ndarray:
        """
        Replacement weights for draw ``index`` after ``attempt`` rejections (``attempt >= 1``).
        """
        b, offset = divmod(index, BLOCK_SIZE)
        return self.distribution.sample(self._generator(b, offset, attempt), self.n)


def draw_weights(stream: DrawStream, index: int) -> WeightVector:
    """
    Draw ``index`` of a stream as weight vector.

    :param stream: the random stream of a shard
    :param index: non-negative draw index
    :return: ``n`` independent draws from the stream's distribution
    """
    return WeightVector(stream.draws(index, 1)[0])


def shard_rounds(rounds: int, shards: int, shard: int) -> int:
    """
    Number of rounds performed by ``shard`` when ``rounds`` are split over ``shards``.
    """
    return rounds // shards + (1 if shard < rounds % shards else 0)


def _canonical_chow(weights):
    # sorting absolute values gives the weights of the canonical form
    canonical = np.sort(np.abs(weights), axis=-1)[..., ::-1]
    return chow_batch(canonical)


def _sample_shard(config: SamplerConfig, rounds: int, shard: int) -> ClassMap:
    count = shard_rounds(rounds, config.shards, shard)
    stream = DrawStream(config.seed, shard, config.n, config.distribution)
    result = ClassMap(n=config.n, distribution=str(config.distribution), seed=config.seed, shards=config.shards)
    logger.debug(f"shard {shard}/{config.shards}: sampling {count} rounds")
    for b in range(-(-count // BLOCK_SIZE)):
        size = min(BLOCK_SIZE, count - b * BLOCK_SIZE)
        chow, valid = _canonical_chow(stream.block(b)[:size])
        # a zero dot product has probability zero; replace the whole weight vector
        for row in np.flatnonzero(~valid):
            attempt = 0
            while not valid[row]:
                attempt += 1
                result.rejected += 1
                replacement, ok = _canonical_chow(stream.resample(b * BLOCK_SIZE + row, attempt)[None, :])
                chow[row], valid[row] = replacement[0], ok[0]
        # keys are sorted absolute Chow parameters (identical to the Chow parameters of sorted weights)
        keys = np.sort(np.abs(chow), axis=1)[:, ::-1]
        unique, counts = np.unique(keys, axis=0, return_counts=True)
        for key, c in zip(unique.tolist(), counts.tolist()):
            key = tuple(key)
            result._counts[key] = result._counts.get(key, 0) + c
    logger.debug(f"shard {shard}/{config.shards}: {len(result)} classes, {result.rejected} resampled")
    return result


def run_shard(config: SamplerConfig, shard: int) -> ClassMap:
    """
    Sample the part of a run performed by a single shard.

    :param config: run configuration
    :param shard: shard index in ``0, ..., shards - 1``
    :return: the shard's class map
    """
    if not 0 <= shard < config.shards:
        raise ValueError(f"shard index must be in [0, {config.shards}), got {shard}")
    return _sample_shard(config, config.rounds, shard)


def _run(config: SamplerConfig, rounds: int, workers: Optional[int]) -> ClassMap:
    shards = range(config.shards)
    if workers is None:
        workers = os.cpu_count() or 1
    workers = max(1, min(workers, config.shards))
    task = functools.partial(_sample_shard, config, rounds)
    if workers == 1:
        results = [task(shard) for shard in shards]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(task, shards))
    merged = merge(results)
    if merged.rejected:
        logger.info(f"resampled {merged.rejected} weight vectors with a zero dot product")
    return merged


def run(config: SamplerConfig, workers: Optional[int] = None) -> ClassMap:
    """
    Sample ``config.rounds`` PUFs and count their canonical classes.
    A Poissonized configuration is sampled by :func:`run_poissonized` with ``N = rounds``.

    :param config: run configuration
    :param workers: number of worker processes (default: number of CPUs, at most one per shard);
     results do not depend on it
    :return: the class map with ``rounds`` observations (a Poisson number of them if ``config.poissonized``)
    """
    if config.poissonized:
        return run_poissonized(config, workers=workers)
    logger.info(f"sampling {config.rounds} PUFs with n={config.n} ({config.distribution}, {config.shards} shards)")
    return _run(config, config.rounds, workers)


def poisson_rounds(seed: int, poisson_n: int) -> int:
    """
    The Poissonized number of rounds for a seed.
    """
    sequence = np.random.SeedSequence(_check_seed(seed), spawn_key=_POISSON_STREAM)
    return int(np.random.Generator(np.random.Philox(sequence)).poisson(poisson_n))


def run_poissonized(config: SamplerConfig, poisson_n: Optional[int] = None,
                    workers: Optional[int] = None) -> ClassMap:
    """
    Sample a Poisson-distributed number of PUFs, which makes the class counts independent Poisson variables.

    :param config: run configuration
    :param poisson_n: Poisson parameter ``N`` (default: ``config.rounds``)
    :param workers: number of worker processes
    :return: class map recording ``N`` as ``poisson_n`` and the realized number of rounds
    """
    if poisson_n is None:
        poisson_n = config.rounds
    if not isinstance(poisson_n, numbers.Integral) or poisson_n < 0:
        raise ValueError(f"Poisson parameter must be a non-negative integer, got {poisson_n}")
    realized = poisson_rounds(config.seed, poisson_n) if poisson_n > 0 else 0
    logger.info(f"Poissonized run with N={poisson_n}: sampling {realized} PUFs")
    if realized == 0:
        result = ClassMap(n=config.n, distribution=str(config.distribution), seed=config.seed,
                          shards=config.shards)
    else:
        result = _run(config, realized, workers)
    result.poisson_n = int(poisson_n)
    return result


def poisson_batches(config: SamplerConfig, poisson_n: int, batches: int,
                    workers: Optional[int] = None) -> List[ClassMap]:
    """
    Independent Poissonized runs with seeds ``seed, seed + 1, ...`` for batch confidence intervals.
    """
    batches = _check_positive("batches", batches)
    return [run_poissonized(config.replace(seed=(config.seed + b) % (MAX_SEED + 1)), poisson_n, workers)
            for b in range(batches)]
