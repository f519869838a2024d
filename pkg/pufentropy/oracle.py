#  Copyright (c) 2024 pufentropy developers
"""
Exact ground truth for small ``n``: exhaustive enumeration of all PUFs (self-dual threshold functions),
exact class tables and exact class probabilities for ``n = 3``.
"""

import logging
import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy import integrate
from scipy.stats import norm

from pufentropy.basetypes import FrozenValue
from pufentropy.errors import UnsupportedN
from pufentropy.group import canonical_key, dictator_key, orbit_size
from pufentropy.puf import ClassKey, ResponseVector, chow_from_response, challenge_matrix
from pufentropy.sampler import ClassMap
from pufentropy.simplex import RationalSimplex, OPTIMAL

logger = logging.getLogger(__name__)

#: largest ``n`` for exhaustive enumeration (``2^(2^(n-1))`` candidate truth tables)
MAX_ENUMERATION_N = 5

# update budget of the perceptron fast path before falling back to the exact LP
_PERCEPTRON_UPDATES = 2000


class CensusEntry(FrozenValue):
    """
    One equivalence class of an exhaustive census.
    """

    def __init__(self, key: ClassKey, orbit_size: int, representative: ResponseVector):
        """
        :param key: canonical Chow parameters of the class
        :param orbit_size: number of PUFs in the class
        :param representative: truth table of the canonical PUF of the class
        """
        super().__init__(value=(key.to_tuple(), int(orbit_size), representative.value))
        self._freeze(key=key, orbit_size=int(orbit_size), representative=representative)

    def __repr__(self):
        return f"CensusEntry(key={self.key.to_tuple()}, orbit_size={self.orbit_size})"


def _half_space(rv: ResponseVector):
    """
    Challenges with ``c_1 = +1`` (even indices) and their responses; self-duality determines the rest.

    :meta private:
    """
    challenges = challenge_matrix(rv.n)[0::2].astype(np.int64)
    labels = np.where(rv.table()[0::2], 1, -1)
    return challenges, labels


def _unate_mask(tables, n):
    """
    For a stack of truth tables (``K x 2^n``), whether each one is unate in every variable.

    :meta private:
    """
    unate = np.ones(tables.shape[0], dtype=bool)
    for i in range(n):
        split = tables.reshape(tables.shape[0], -1, 2, 2 ** i)
        plus, minus = split[:, :, 0, :], split[:, :, 1, :]
        increasing = np.all(plus >= minus, axis=(1, 2))
        decreasing = np.all(plus <= minus, axis=(1, 2))
        unate &= increasing | decreasing
    return unate


def is_unate(rv: ResponseVector) -> bool:
    """
    Whether the truth table is monotone (increasing or decreasing) in every variable.
    Every threshold function is unate, so this rejects most non-threshold candidates cheaply.
    """
    return bool(_unate_mask(rv.table()[None, :], rv.n)[0])


def _perceptron(challenges, labels):
    # integer perceptron: an exact witness if it converges
    w = np.zeros(challenges.shape[1], dtype=np.int64)
    for _ in range(_PERCEPTRON_UPDATES):
        margins = labels * (challenges @ w)
        violated = np.flatnonzero(margins <= 0)
        if violated.size == 0:
            return w
        k = violated[0]
        w = w + labels[k] * challenges[k]
    return None


def max_margin(rv: ResponseVector) -> Tuple[Fraction, List[Fraction]]:
    """
    Solve ``max t`` subject to ``f(c)·(c·w) >= t`` for all challenges and ``|w_i| <= 1``, exactly.
    The weights are split as ``w = u - v`` with ``u, v >= 0`` and ``u_i + v_i <= 1`` so that the origin is feasible.

    :param rv: a self-dual truth table
    :return: the optimal margin ``t >= 0`` and the optimal weights ``w``
    """
    n = rv.n
    challenges, labels = _half_space(rv)
    rows, rhs = [], []
    # variables: u_1..u_n, v_1..v_n, t
    for c, f in zip(challenges.tolist(), labels.tolist()):
        rows.append([-f * ci for ci in c] + [f * ci for ci in c] + [1])
        rhs.append(0)
    for i in range(n):
        row = [0] * (2 * n + 1)
        row[i] = row[n + i] = 1
        rows.append(row)
        rhs.append(1)
    objective = [0] * (2 * n) + [1]
    status, value, x = RationalSimplex(rows, rhs, objective).solve()
    assert status == OPTIMAL, "the margin is bounded by n"
    return value, [x[i] - x[n + i] for i in range(n)]


def threshold_witness(rv: ResponseVector) -> Optional[List[Fraction]]:
    """
    Weights realising a truth table, if they exist.
    Tries an integer perceptron first and falls back to the exact maximum-margin LP.

    :param rv: a self-dual truth table
    :return: exact weights ``w`` with ``f(c)·(c·w) > 0`` for all challenges, or ``None`` if ``rv`` is not a PUF
    """
    if not is_unate(rv):
        return None
    challenges, labels = _half_space(rv)
    w = _perceptron(challenges, labels)
    if w is not None:
        return [Fraction(int(v)) for v in w]
    margin, w = max_margin(rv)
    if margin > 0:
        return w
    return None


def is_threshold(rv: ResponseVector) -> bool:
    """
    Whether a self-dual truth table is a PUF, i.e. ``f(c) = sign(c·w)`` for some weights ``w``.
    """
    return threshold_witness(rv) is not None


def _candidate_tables(n):
    """
    All self-dual truth tables of size ``n`` as a boolean array of shape ``(2^(2^(n-1)), 2^n)``.
    Candidate ``k`` sets ``f(c) = +1`` on the ``j``-th challenge with ``c_1 = +1`` iff bit ``j`` of ``k`` is set.

    :meta private:
    """
    half = 2 ** (n - 1)
    k = np.arange(2 ** half, dtype=np.int64)[:, None]
    bits = ((k >> np.arange(half)) & 1).astype(bool)
    tables = np.empty((k.shape[0], 2 ** n), dtype=bool)
    tables[:, 0::2] = bits
    # the complement of the even index 2j is 2^n - 1 - 2j
    tables[:, ::-2] = ~bits
    return tables


def enumerate_threshold_responses(n: int) -> List[ResponseVector]:
    """
    All PUFs with ``n`` weights as truth tables.

    :param n: number of weights, ``1 <= n <= 5``
    :return: list of truth tables, ordered by candidate index
    :raises UnsupportedN: for ``n`` outside ``1..5``
    """
    if not 1 <= n <= MAX_ENUMERATION_N:
        raise UnsupportedN(f"exhaustive enumeration supports 1 <= n <= {MAX_ENUMERATION_N}, got {n}")
    tables = _candidate_tables(n)
    candidates = tables[_unate_mask(tables, n)]
    logger.debug(f"n={n}: {len(candidates)} of {len(tables)} self-dual candidates are unate")
    responses = [ResponseVector.from_table(table) for table in candidates]
    return [rv for rv in responses if is_threshold(rv)]


def enumerate_pufs(n: int) -> List[CensusEntry]:
    """
    Exhaustive census of the PUF equivalence classes for ``n`` weights.

    :param n: number of weights, ``1 <= n <= 5``
    :return: census entries sorted by key (lexicographically descending)
    :raises UnsupportedN: for ``n`` outside ``1..5``
    """
    representatives = {}
    members = {}
    for rv in enumerate_threshold_responses(n):
        p = chow_from_response(rv)
        key = canonical_key(p)
        members[key] = members.get(key, 0) + 1
        if p.to_tuple() == key.to_tuple():
            representatives[key] = rv
    census = []
    for key in sorted(members, key=lambda k: k.to_tuple(), reverse=True):
        size = orbit_size(key)
        if members[key] != size:
            logger.warning(f"class {key.to_tuple()}: enumerated {members[key]} PUFs, orbit size is {size}")
        census.append(CensusEntry(key, size, representatives[key]))
    total = sum(entry.orbit_size for entry in census)
    logger.info(f"n={n}: {len(census)} classes, {total} PUFs, H0 = {math.log2(total):.4f} bits")
    return census


def census_map(n: int) -> ClassMap:
    """
    The census of ``n`` as class map whose counts are the orbit sizes (marked exact).
    """
    counts = {entry.key.to_tuple(): entry.orbit_size for entry in enumerate_pufs(n)}
    return ClassMap(n=n, distribution="census", counts=counts, exact=True)


def verify_chow_injectivity(n: int) -> bool:
    """
    Check that distinct PUFs have distinct Chow parameters.

    :param n: number of weights, ``1 <= n <= 5``
    :return: ``True`` if the map from truth tables to Chow parameters is injective
    """
    responses = enumerate_threshold_responses(n)
    chows = {chow_from_response(rv).to_tuple() for rv in responses}
    return len(chows) == len(responses)


def exact_class_probabilities_n3() -> Dict[ClassKey, float]:
    """
    Exact class probabilities for ``n = 3`` with i.i.d. standard gaussian weights.
    A PUF is a dictator ``±c_i`` iff ``|x_i| > |x_j| + |x_k|``; by symmetry the dictator class has probability
    ``6 * P(X_1 > |X_2| + |X_3|)``, integrated with iterated adaptive quadrature of the gaussian tail.

    :return: mapping from the two class keys to their probabilities
    """
    def integrand(b, a):
        return norm.pdf(a) * norm.pdf(b) * norm.sf(a + b)

    # four sign quadrants of (x_2, x_3)
    quadrant, error = integrate.dblquad(integrand, 0, np.inf, 0, np.inf, epsabs=1e-13, epsrel=1e-12)
    if error > 1e-10:
        logger.warning(f"n=3 quadrature error estimate {error:.2e} exceeds tolerance")
    dictator = 6 * 4 * quadrant
    return {dictator_key(3): dictator, ClassKey((2, 2, 2)): 1.0 - dictator}


def exact_power_sum_n3() -> float:
    """
    The exact power sum ``sum_f P(f)^2`` over all PUFs for ``n = 3``.
    """
    return sum(q ** 2 / orbit_size(key) for key, q in exact_class_probabilities_n3().items())
