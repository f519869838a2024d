#  Copyright (c) 2024 pufentropy developers
"""
PUF evaluation and Chow parameters.

A PUF with ``n`` weights ``w`` maps a challenge ``c`` in ``{-1, +1}^n`` to ``sign(c·w)``.
Challenges are encoded as ``n``-bit integers where bit ``i`` set means ``c_{i+1} = -1``
(so challenge ``0`` is the all-ones challenge and the complement ``x ^ (2^n - 1)`` is ``-c``).
A truth table stores bit ``x`` set iff ``f(c) = +1`` for the challenge with index ``x``.
"""

import functools
import numbers
from typing import Iterable, Tuple

import numpy as np

from pufentropy.basetypes import FrozenValue, Converters
from pufentropy.errors import ZeroDotProduct

#: largest number of weights supported (truth tables have ``2^n`` entries)
MAX_N = 24

# number of dot products held in memory at once by the batch paths
_CHUNK_ENTRIES = 1 << 22


def _check_n(n):
    if not isinstance(n, numbers.Integral) or not (1 <= n <= MAX_N):
        raise ValueError(f"n must be an integer between 1 and {MAX_N} (incl.), got {n}")
    return int(n)


class WeightVector(FrozenValue):
    """
    Represents the ``n`` delay differences of a PUF.
    """

    def __init__(self, weights: Iterable[float]):
        """
        :param weights: a sequence of ``n`` finite real numbers
        """
        w = np.array(weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError(f"weights must be one-dimensional, got shape {w.shape}")
        _check_n(w.shape[0])
        if not np.all(np.isfinite(w)):
            raise ValueError(f"weights must be finite, got {w}")
        super().__init__(value=w)
        self._freeze(n=w.shape[0])

    def __repr__(self):
        return f"WeightVector({list(self.value)})"

    def __len__(self):
        return self.n


class Challenge(FrozenValue):
    """
    Represents a challenge ``c`` in ``{-1, +1}^n`` by its ``n``-bit index.
    """

    def __init__(self, n: int, bits: int):
        """
        :param n: number of challenge entries
        :param bits: the challenge index; bit ``i`` set encodes ``c_{i+1} = -1``
        """
        n = _check_n(n)
        if not isinstance(bits, numbers.Integral) or not (0 <= bits < 2 ** n):
            raise ValueError(f"challenge bits must be an integer in [0, 2^{n}), got {bits}")
        super().__init__(value=int(bits))
        signs = 1 - 2 * ((int(bits) >> np.arange(n)) & 1)
        self._freeze(n=n, signs=signs.astype(np.int64))

    @classmethod
    def from_signs(cls, signs: Iterable[int]):
        """
        Create a challenge from its ``±1`` entries.

        :param signs: a sequence of ``+1`` / ``-1``
        :return: the corresponding challenge
        """
        signs = np.array(signs, dtype=np.int64)
        if not np.all(np.abs(signs) == 1):
            raise ValueError(f"challenge entries must be +1 or -1, got {signs}")
        bits = int(np.sum((signs == -1).astype(np.int64) << np.arange(signs.shape[0])))
        return cls(n=signs.shape[0], bits=bits)

    def __repr__(self):
        return f"Challenge({list(self.signs)})"

    def __neg__(self):
        return Challenge(self.n, self.value ^ (2 ** self.n - 1))

    def __hash__(self):
        return hash((self.__class__.__name__, self.n, self.value))

    def __eq__(self, other):
        return type(other) == type(self) and self.n == other.n and self.value == other.value


class ResponseVector(FrozenValue):
    """
    The truth table of a PUF: bit ``x`` of ``bits`` is set iff ``f(c) = +1`` for the challenge with index ``x``.
    Truth tables of PUFs are self-dual, ``f(-c) = -f(c)``.
    """

    def __init__(self, n: int, bits: int):
        """
        :param n: number of weights
        :param bits: a ``2^n``-bit integer
        """
        n = _check_n(n)
        if not isinstance(bits, numbers.Integral) or bits < 0 or int(bits).bit_length() > 2 ** n:
            raise ValueError(f"truth table must be an integer in [0, 2^(2^{n})), got {bits}")
        super().__init__(value=int(bits))
        self._freeze(n=n)
        if not self.is_self_dual():
            raise ValueError(f"truth table {bits:#x} of size {n} is not self-dual")

    @staticmethod
    def _nbytes(n):
        return max(1, 2 ** n // 8)

    @classmethod
    def from_table(cls, table):
        """
        Create a response vector from a boolean array of length ``2^n`` indexed by challenge.

        :param table: boolean array, ``True`` where ``f(c) = +1``
        :return: the response vector
        """
        table = np.asarray(table, dtype=bool)
        size = table.shape[0]
        n = size.bit_length() - 1
        if table.ndim != 1 or 2 ** n != size:
            raise ValueError(f"truth table length must be a power of two, got {size}")
        packed = np.packbits(table, bitorder='little')
        return cls(n=n, bits=int.from_bytes(packed.tobytes(), 'little'))

    def table(self):
        """
        The truth table as boolean array indexed by challenge.

        :return: numpy array of length ``2^n``
        """
        raw = np.frombuffer(self.value.to_bytes(self._nbytes(self.n), 'little'), dtype=np.uint8)
        return np.unpackbits(raw, bitorder='little')[:2 ** self.n].astype(bool)

    def is_self_dual(self):
        table = self.table()
        # the complement of index x is 2^n - 1 - x
        return bool(np.all(table != table[::-1]))

    def __call__(self, challenge: Challenge):
        if challenge.n != self.n:
            raise ValueError(f"challenge of size {challenge.n} does not match truth table of size {self.n}")
        return 1 if (self.value >> challenge.value) & 1 else -1

    def __repr__(self):
        return f"ResponseVector(n={self.n}, bits={self.value:#x})"

    def __hash__(self):
        return hash((self.__class__.__name__, self.n, self.value))

    def __eq__(self, other):
        return type(other) == type(self) and self.n == other.n and self.value == other.value


class ChowVector(FrozenValue):
    """
    The Chow parameters ``p = sum of all challenges c with f(c) = +1`` of a PUF.
    They identify a PUF uniquely. For ``n >= 2`` all entries are even and bounded by ``2^(n-1)``.
    """

    def __init__(self, p: Iterable[int]):
        """
        :param p: a sequence of ``n`` integers
        """
        arr = np.array(p)
        if arr.ndim != 1:
            raise ValueError(f"Chow parameters must be one-dimensional, got shape {arr.shape}")
        n = _check_n(arr.shape[0])
        if arr.dtype.kind not in "iu":
            raise ValueError(f"Chow parameters must be integers, got {p}")
        arr = arr.astype(np.int64)
        if np.any(np.abs(arr) > 2 ** (n - 1)):
            raise ValueError(f"Chow parameters must be bounded by 2^(n-1) = {2 ** (n - 1)}, got {arr}")
        if n >= 2 and np.any(arr % 2):
            raise ValueError(f"Chow parameters must be even for n >= 2, got {arr}")
        super().__init__(value=arr)
        self._freeze(n=n)

    def __repr__(self):
        return f"{self.__class__.__name__}({tuple(int(v) for v in self.value)})"

    def to_tuple(self) -> Tuple[int, ...]:
        return tuple(int(v) for v in self.value)

    def __len__(self):
        return self.n


def is_canonical(p: ChowVector) -> bool:
    """
    Whether Chow parameters are those of a canonical PUF: ``p_1 >= p_2 >= ... >= p_n >= 0``.

    :param p: Chow parameters
    :return: ``True`` if canonical
    """
    v = p.value
    return bool(np.all(v[:-1] >= v[1:]) and v[-1] >= 0)


class ClassKey(ChowVector):
    """
    Identifies an equivalence class of PUFs by the Chow parameters of its canonical member.
    """

    def __init__(self, p: Iterable[int]):
        super().__init__(p)
        if not is_canonical(self):
            raise ValueError(f"class keys must be sorted non-increasing and non-negative, got {self.to_tuple()}")


# challenge tables
# ----------------

@functools.lru_cache(maxsize=None)
def _gray_half(n):
    """
    Gray-code walk over the half-space ``c_1 = +1``.
    Returns the Gray codes over the bits of ``c_2..c_n`` (one per step),
    the coordinate flipped when moving to each step, and whether that coordinate flips to ``-1``.

    :meta private:
    """
    k = np.arange(2 ** (n - 1), dtype=np.int64)
    gray = k ^ (k >> 1)
    steps = k[1:]
    lowbit = steps & -steps
    flipped = np.log2(lowbit).astype(np.int64)
    to_minus = ((gray[1:] >> flipped) & 1).astype(bool)
    # flipped bit j of the Gray code is coordinate j + 1 of the challenge
    return gray, flipped + 1, np.where(to_minus, -2.0, 2.0)


def _project(signs, n):
    """
    Compute ``sum_k signs[..., k] * c^(k)`` over the Gray-ordered half-space challenges ``c^(k)``.

    :meta private:
    """
    gray, _, _ = _gray_half(n)
    cols = [signs.sum(axis=-1)]
    for i in range(1, n):
        column = 1.0 - 2.0 * ((gray >> (i - 1)) & 1)
        cols.append(signs @ column)
    return np.rint(np.stack(cols, axis=-1)).astype(np.int64)


def _gray_dots(weights):
    """
    Dot products of the weights (array of shape ``(..., n)``) with all half-space challenges in Gray-code order;
    one addition per challenge.

    :meta private:
    """
    n = weights.shape[-1]
    _, flipped, delta = _gray_half(n)
    start = weights.sum(axis=-1, keepdims=True)
    if n == 1:
        return start
    increments = np.cumsum(weights[..., flipped] * delta, axis=-1)
    return np.concatenate([start, start + increments], axis=-1)


def _all_dots(w):
    """
    Dot products ``c·w`` for all ``2^n`` challenges, indexed by challenge.

    :meta private:
    """
    dots = np.zeros(1)
    for wi in w:
        # indices with the new (highest) bit unset have c_i = +1
        dots = np.concatenate([dots + wi, dots - wi])
    return dots


@functools.lru_cache(maxsize=16)
def challenge_matrix(n: int):
    """
    All ``2^n`` challenges as rows of ``±1`` entries, indexed by challenge.

    :param n: number of weights
    :return: read-only integer array of shape ``(2^n, n)``
    """
    n = _check_n(n)
    x = np.arange(2 ** n, dtype=np.int64)[:, None]
    mat = (1 - 2 * ((x >> np.arange(n)) & 1)).astype(np.int8)
    mat.flags.writeable = False
    return mat


# operations
# ----------

def evaluate(w: WeightVector, c: Challenge) -> int:
    """
    Evaluate a PUF on a challenge.

    :param w: weights
    :param c: challenge of the same size
    :return: ``sign(c·w)`` (``+1`` or ``-1``)
    :raises ZeroDotProduct: if ``c·w == 0``
    """
    if w.n != c.n:
        raise ValueError(f"challenge of size {c.n} does not match weights of size {w.n}")
    dot = float(np.dot(c.signs, w.value))
    if dot == 0:
        raise ZeroDotProduct(f"challenge {list(c.signs)} has zero dot product with {w}")
    return 1 if dot > 0 else -1


def response_vector(w: WeightVector) -> ResponseVector:
    """
    Evaluate a PUF on all ``2^n`` challenges.

    :param w: weights
    :return: the truth table of ``f_w``
    :raises ZeroDotProduct: if some challenge has a zero dot product
    """
    dots = _all_dots(w.value)
    if np.any(dots == 0):
        raise ZeroDotProduct(f"weights {w} have a zero dot product with some challenge")
    return ResponseVector.from_table(dots > 0)


def chow(w: WeightVector) -> ChowVector:
    """
    Chow parameters of the PUF with weights ``w``.
    Walks the half-space ``c_1 = +1`` in Gray-code order and uses self-duality,
    ``p = sum_{c_1 = +1} f(c)·c``.

    :param w: weights
    :return: Chow parameters
    :raises ZeroDotProduct: if some challenge has a zero dot product
    """
    dots = _gray_dots(w.value)
    if np.any(dots == 0):
        raise ZeroDotProduct(f"weights {w} have a zero dot product with some challenge")
    return ChowVector(_project(np.sign(dots), w.n))


def chow_naive(w: WeightVector) -> ChowVector:
    """
    Chow parameters by re-evaluating all ``2^n`` challenges and summing those with ``f(c) = +1``.

    :param w: weights
    :return: Chow parameters
    :raises ZeroDotProduct: if some challenge has a zero dot product
    """
    dots = _all_dots(w.value)
    if np.any(dots == 0):
        raise ZeroDotProduct(f"weights {w} have a zero dot product with some challenge")
    positive = challenge_matrix(w.n)[dots > 0]
    return ChowVector(positive.sum(axis=0, dtype=np.int64))


def chow_batch(weights) -> Tuple[np.ndarray, np.ndarray]:
    """
    Chow parameters for a block of weight vectors along the Gray-code path.

    :param weights: array of shape ``(B, n)``
    :return: ``(chow, valid)`` where ``chow`` is an integer array of shape ``(B, n)`` and ``valid`` is a boolean
     array marking rows without a zero dot product (rows that are not valid hold meaningless values)
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2:
        raise ValueError(f"expected an array of shape (B, n), got shape {weights.shape}")
    size, n = weights.shape
    _check_n(n)
    out = np.zeros((size, n), dtype=np.int64)
    valid = np.ones(size, dtype=bool)
    rows = max(1, _CHUNK_ENTRIES >> (n - 1))
    for start in range(0, size, rows):
        stop = min(size, start + rows)
        dots = _gray_dots(weights[start:stop])
        valid[start:stop] = ~np.any(dots == 0, axis=1)
        out[start:stop] = _project(np.sign(dots), n)
    return out, valid


def chow_from_response(rv: ResponseVector) -> ChowVector:
    """
    Chow parameters of a truth table, the componentwise sum of all challenges mapped to ``+1``.

    :param rv: a self-dual truth table
    :return: Chow parameters
    """
    table = rv.table()
    total = int(table.sum())
    p = []
    for i in range(rv.n):
        # entries whose challenge index has bit i set, i.e. c_{i+1} = -1
        minus = int(table.reshape(-1, 2, 2 ** i)[:, 1, :].sum())
        p.append(total - 2 * minus)
    return ChowVector(p)


Converters.register_converter(from_type=WeightVector,
                              to_type=ResponseVector,
                              conv_func=response_vector)
Converters.register_converter(from_type=ResponseVector,
                              to_type=ChowVector,
                              conv_func=chow_from_response,
                              create_implicit_converters=True)
# the Gray-code path replaces the implicit pipeline via the truth table
Converters.register_converter(from_type=WeightVector,
                              to_type=ChowVector,
                              conv_func=chow,
                              overwrite_implicit_converters=True)
