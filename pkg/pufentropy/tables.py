#  Copyright (c) 2024 pufentropy developers
"""
Published constants.

The number of PUFs with ``n`` weights equals the number of self-dual threshold functions of ``n`` variables,
which is the number of threshold functions of ``n - 1`` variables (OEIS A000609). The oracle re-derives ``n <= 5``.
"""

import math

#: total number of PUFs per ``n``
PUF_COUNTS = {
    1: 2,
    2: 4,
    3: 14,
    4: 104,
    5: 1882,
    6: 94572,
    7: 15028134,
    8: 8378070864,
    9: 17561539552946,
    10: 144130531453121108,
}

#: number of equivalence classes (canonical PUFs) per ``n``, where known exactly
CLASS_COUNTS = {
    1: 1,
    2: 1,
    3: 2,
    4: 3,
    5: 7,
    6: 21,
}

#: exact entropies (bits) of gaussian-weight PUFs for small ``n``: (H1, H2, Hinf)
EXACT_ENTROPIES = {
    1: (1.0, 1.0, 1.0),
    2: (2.0, 2.0, 2.0),
    3: (3.6655, 3.5462, 3.2086),
    4: (6.2516, 5.7105, 4.5850),
}


def max_entropy(n):
    """
    The max-entropy ``H0 = log2(#PUFs)`` for ``n`` with a published PUF count.

    :param n: number of weights
    :return: H0 in bits, or ``None`` if no count is known for ``n``
    """
    count = PUF_COUNTS.get(n)
    if count is None:
        return None
    return math.log2(count)
