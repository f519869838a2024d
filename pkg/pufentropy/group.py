#  Copyright (c) 2024 pufentropy developers
"""
The group ``G_n = S_n x {-1, +1}^n`` of signed permutations and its action on weights, Chow parameters and
truth tables.

An element ``g = (sigma, s)`` acts on weights by ``(g·w)_i = s_i * w_{sigma(i)}``. Permutations are stored
0-based. The product is defined so that ``(g1 * g2)·w == g1·(g2·w)``, i.e. ``sigma1`` is applied first:
``g1 * g2 = (i -> sigma2(sigma1(i)), s1_i * s2_{sigma1(i)})``.
All members of an orbit have the same probability under an i.i.d. symmetric weight distribution.
"""

import itertools
import math
from collections import Counter
from typing import Iterable, Iterator

import numpy as np

from pufentropy.basetypes import FrozenValue
from pufentropy.puf import WeightVector, ChowVector, ClassKey, ResponseVector, challenge_matrix, is_canonical


class GroupElement(FrozenValue):
    """
    A signed permutation, element of ``G_n``.
    """

    def __init__(self, sigma: Iterable[int], signs: Iterable[int]):
        """
        :param sigma: a permutation of ``0, ..., n-1``
        :param signs: ``n`` entries in ``{-1, +1}``
        """
        sigma = np.array(sigma, dtype=np.int64)
        signs = np.array(signs, dtype=np.int64)
        if sigma.ndim != 1 or sigma.shape != signs.shape:
            raise ValueError(f"permutation and signs must be sequences of equal length, got {sigma} and {signs}")
        if not np.array_equal(np.sort(sigma), np.arange(sigma.shape[0])):
            raise ValueError(f"not a permutation of 0..{sigma.shape[0] - 1}: {sigma}")
        if not np.all(np.abs(signs) == 1):
            raise ValueError(f"signs must be +1 or -1, got {signs}")
        super().__init__(value=(tuple(int(v) for v in sigma), tuple(int(v) for v in signs)))
        self._freeze(n=sigma.shape[0], sigma=sigma, signs=signs)

    @classmethod
    def identity(cls, n: int):
        return cls(np.arange(n), np.ones(n, dtype=np.int64))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator):
        """
        Draw a uniformly random element of ``G_n``.

        :param n: size
        :param rng: numpy random generator
        :return: a group element
        """
        return cls(rng.permutation(n), rng.choice([-1, 1], size=n))

    @classmethod
    def all(cls, n: int) -> Iterator["GroupElement"]:
        """
        Iterate over all ``2^n * n!`` elements of ``G_n``.
        """
        for sigma in itertools.permutations(range(n)):
            for signs in itertools.product([1, -1], repeat=n):
                yield cls(sigma, signs)

    @classmethod
    def canonicalizing(cls, w: WeightVector):
        """
        The element ``g`` with ``g·w`` sorted non-increasing and non-negative.
        Ties keep their original order.

        :param w: weights
        :return: a group element
        """
        sigma = np.argsort(-np.abs(w.value), kind='stable')
        signs = np.where(w.value[sigma] < 0, -1, 1)
        return cls(sigma, signs)

    def __mul__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        if other.n != self.n:
            raise ValueError(f"cannot multiply elements of G_{self.n} and G_{other.n}")
        return GroupElement(other.sigma[self.sigma], self.signs * other.signs[self.sigma])

    def inverse(self):
        inv = np.argsort(self.sigma)
        signs = np.empty_like(self.signs)
        signs[self.sigma] = self.signs
        return GroupElement(inv, signs)

    def __repr__(self):
        return f"GroupElement(sigma={list(self.sigma)}, signs={list(self.signs)})"


def _check_size(g, n):
    if g.n != n:
        raise ValueError(f"group element of size {g.n} does not match value of size {n}")


def act(g: GroupElement, w: WeightVector) -> WeightVector:
    """
    Act on weights: ``(g·w)_i = s_i * w_{sigma(i)}``.
    """
    _check_size(g, w.n)
    return WeightVector(g.signs * w.value[g.sigma])


def act_chow(g: GroupElement, p: ChowVector) -> ChowVector:
    """
    Act on Chow parameters with the same formula as on weights; the Chow parameters of ``f_{g·w}`` are
    ``g·p`` where ``p`` are those of ``f_w``.
    """
    _check_size(g, p.n)
    return ChowVector(g.signs * p.value[g.sigma])


def act_response(g: GroupElement, rv: ResponseVector) -> ResponseVector:
    """
    Act on truth tables such that ``act_response(g, response_vector(w)) == response_vector(act(g, w))``:
    ``(g·f)(c) = f(c')`` with ``c'_{sigma(i)} = s_i * c_i``.
    """
    _check_size(g, rv.n)
    challenges = challenge_matrix(rv.n).astype(np.int64)
    moved = np.empty_like(challenges)
    moved[:, g.sigma] = challenges * g.signs
    index = ((moved == -1).astype(np.int64) << np.arange(rv.n)).sum(axis=1)
    return ResponseVector.from_table(rv.table()[index])


def canonicalize_weights(w: WeightVector) -> WeightVector:
    """
    Absolute values of the weights sorted non-increasing; the PUF of the result is the canonical form of ``f_w``.
    """
    return act(GroupElement.canonicalizing(w), w)


def canonical_key(p: ChowVector) -> ClassKey:
    """
    The key of the equivalence class of any Chow parameters: their absolute values sorted non-increasing.
    """
    return ClassKey(np.sort(np.abs(p.value))[::-1])


def dictator_key(n: int) -> ClassKey:
    """
    The class of the ``2n`` dictator PUFs ``f(c) = ±c_i``, with key ``(2^(n-1), 0, ..., 0)``.
    """
    p = [0] * n
    p[0] = 2 ** (n - 1)
    return ClassKey(p)


def orbit_size(k: ChowVector) -> int:
    """
    Number of PUFs in the equivalence class with the given (canonical) Chow parameters,
    ``2^n n! / (2^{m(0)} prod_k m(k)!)`` where ``m(k)`` is the multiplicity of the absolute value ``k``.

    :param k: class key
    :return: the orbit size (exact integer)
    """
    if not is_canonical(k):
        k = canonical_key(k)
    multiplicity = Counter(k.to_tuple())
    denominator = 2 ** multiplicity.get(0, 0)
    for m in multiplicity.values():
        denominator *= math.factorial(m)
    return 2 ** k.n * math.factorial(k.n) // denominator
