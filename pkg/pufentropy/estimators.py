#  Copyright (c) 2024 pufentropy developers
"""
Rényi entropy estimates (orders 0, 1, 2 and infinity, in bits) of the PUF distribution from class maps.

All estimators work on classes rather than individual PUFs: every PUF of a class with orbit size ``s`` and
class probability ``q`` has probability ``q / s``.
"""

import enum
import logging
import math
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from pufentropy.basetypes import FrozenValue
from pufentropy.errors import (EmptyMap, EstimatorError, IncompatibleMaps, InsufficientBatches,
                               NonPoissonizedInput, UndefinedEstimate)
from pufentropy.group import dictator_key, orbit_size
from pufentropy.puf import ClassKey
from pufentropy.sampler import ClassMap, merge
from pufentropy.tables import CLASS_COUNTS

logger = logging.getLogger(__name__)

#: default confidence level of all intervals
DEFAULT_CONFIDENCE = 0.95


class EntropyOrder(enum.Enum):
    H0 = "h0"
    H1 = "h1"
    H2 = "h2"
    HINF = "hinf"

    def __str__(self):
        return self.value

    @property
    def label(self):
        return "Hinf" if self is EntropyOrder.HINF else self.name


#: orders from smallest to largest entropy
ASCENDING_ORDERS = (EntropyOrder.HINF, EntropyOrder.H2, EntropyOrder.H1, EntropyOrder.H0)


class EntropyEstimate(FrozenValue):
    """
    A point estimate with confidence interval, all in bits.
    """

    def __init__(self, order, value: float, ci_low: float, ci_high: float, confidence: float,
                 sample_size: int, method: str, bias_bound: Optional[float] = None):
        order = EntropyOrder(order)
        value, ci_low, ci_high = float(value), float(ci_low), float(ci_high)
        if not ci_low <= value <= ci_high:
            raise ValueError(f"estimate {value} is not inside its interval [{ci_low}, {ci_high}]")
        if not 0 < confidence < 1:
            raise ValueError(f"confidence must be in (0, 1), got {confidence}")
        super().__init__(value=value)
        self._freeze(order=order, ci_low=ci_low, ci_high=ci_high, confidence=float(confidence),
                     sample_size=int(sample_size), method=str(method),
                     bias_bound=None if bias_bound is None else float(bias_bound))

    def half_width(self) -> float:
        return (self.ci_high - self.ci_low) / 2

    def as_dict(self) -> dict:
        return dict(order=str(self.order), value=self.value, ci_low=self.ci_low, ci_high=self.ci_high,
                    confidence=self.confidence, sample_size=self.sample_size, method=self.method,
                    bias_bound=self.bias_bound)

    def __eq__(self, other):
        if not isinstance(other, EntropyEstimate):
            return NotImplemented
        return self.as_dict() == other.as_dict()

    def __hash__(self):
        return hash(tuple(self.as_dict().items()))

    def __repr__(self):
        return (f"EntropyEstimate({self.order.label}={self.value:.4f} "
                f"[{self.ci_low:.4f}, {self.ci_high:.4f}] @ {self.confidence}, {self.method})")


def _check_confidence(confidence):
    if not 0 < confidence < 1:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    return float(confidence)


def _check_nonempty(cmap: ClassMap):
    if cmap.rounds == 0:
        raise EmptyMap(f"class map (n={cmap.n}, dist={cmap.distribution}) has no observations")
    return cmap.rounds


def _estimate(order, n, value, low, high, confidence, sample_size, method, bias_bound=None):
    # all entropies lie in [0, n^2]
    bound = float(n * n)
    value = min(max(value, 0.0), bound)
    low = min(max(low, 0.0), value)
    high = max(min(high, bound), value)
    return EntropyEstimate(order, value, low, high, confidence, sample_size, method, bias_bound)


def _census_estimate(order, cmap, confidence):
    # counts of a census are orbit sizes, i.e. the exact uniform distribution over all covered PUFs
    value = exact_entropies(cmap.frequencies())[order]
    return _estimate(order, cmap.n, value, value, value, confidence, cmap.rounds, "exact census")


def power_sum(class_probabilities: Mapping[ClassKey, float]) -> float:
    """
    The power sum ``sum_f P(f)^2`` over all PUFs, given class probabilities.
    """
    return sum(q ** 2 / orbit_size(key) for key, q in class_probabilities.items())


def exact_entropies(class_probabilities: Mapping[ClassKey, float]) -> Dict[EntropyOrder, float]:
    """
    The four entropies of a PUF distribution given exactly by its class probabilities.

    :param class_probabilities: mapping from class keys to probabilities summing to 1
    :return: mapping from entropy order to entropy in bits
    """
    probs = {key: float(q) for key, q in class_probabilities.items() if q > 0}
    sizes = {key: orbit_size(key) for key in probs}
    q = np.array(list(probs.values()))
    log_s = np.log2([sizes[key] for key in probs])
    return {
        EntropyOrder.H0: math.log2(sum(sizes.values())),
        EntropyOrder.H1: float(stats.entropy(q, base=2) + np.dot(q, log_s)),
        EntropyOrder.H2: -math.log2(power_sum(probs)),
        EntropyOrder.HINF: -math.log2(max(p / sizes[key] for key, p in probs.items())),
    }


def h0_lower(cmap: ClassMap, confidence: float = DEFAULT_CONFIDENCE) -> EntropyEstimate:
    """
    Lower bound on the max-entropy: the logarithm of the number of PUFs in the observed classes.
    The interval is ``[value, n^2]``; it collapses to the value for an exact census.
    """
    confidence = _check_confidence(confidence)
    _check_nonempty(cmap)
    value = math.log2(cmap.covered_pufs())
    if cmap.exact:
        return _estimate(EntropyOrder.H0, cmap.n, value, value, value, confidence, cmap.rounds, "exact census")
    return _estimate(EntropyOrder.H0, cmap.n, value, value, cmap.n ** 2, confidence, cmap.rounds,
                     "observed coverage (lower bound)")


def support_size(cmap: ClassMap) -> Tuple[int, bool]:
    """
    The number of classes ``m`` used by the plug-in bias bound.

    :return: ``(m, exact)``; exact class counts are known for ``n <= 6``, otherwise the observed number of classes
     (a lower bound) is used
    """
    if cmap.n in CLASS_COUNTS:
        return CLASS_COUNTS[cmap.n], True
    return len(cmap), False


def h1_bias_bound(cmap: ClassMap, m: Optional[int] = None) -> float:
    """
    Bound ``log2(1 + (m - 1) / N)`` on the (negative) bias of the plug-in class entropy.

    :param cmap: a non-empty class map with ``N`` observations
    :param m: number of classes (default: :func:`support_size`)
    :return: the bound in bits
    """
    n_obs = _check_nonempty(cmap)
    if m is None:
        m, _ = support_size(cmap)
    if m < 1:
        raise ValueError(f"number of classes must be positive, got {m}")
    return math.log2(1 + (m - 1) / n_obs)


def _t_interval(mean, sem, dof, confidence):
    if sem == 0 or not np.isfinite(sem):
        return mean, mean
    return stats.t.interval(confidence, dof, loc=mean, scale=sem)


def h1_plugin(cmap: ClassMap, confidence: float = DEFAULT_CONFIDENCE) -> EntropyEstimate:
    """
    Plug-in Shannon entropy: the entropy of the empirical class distribution plus the expected
    ``log2`` orbit size.
    The interval is a Student-t interval on the per-sample ``log2`` orbit sizes, shifted by the class entropy,
    whose upper end is widened by :func:`h1_bias_bound`.
    """
    confidence = _check_confidence(confidence)
    n_obs = _check_nonempty(cmap)
    if cmap.exact:
        return _census_estimate(EntropyOrder.H1, cmap, confidence)
    if n_obs < 2:
        raise EstimatorError("the plug-in entropy interval needs at least two observations")
    counts = np.array([count for _, count in cmap.items()], dtype=np.float64)
    log_sizes = np.log2([orbit_size(key) for key in cmap.keys()])
    class_entropy = float(stats.entropy(counts, base=2))
    mean = float(np.dot(counts, log_sizes) / n_obs)
    variance = float(np.dot(counts, (log_sizes - mean) ** 2) / (n_obs - 1))
    low, high = _t_interval(mean, math.sqrt(variance / n_obs), n_obs - 1, confidence)
    m, exact_m = support_size(cmap)
    bias = h1_bias_bound(cmap, m)
    method = (f"plug-in; t-interval on log2 orbit sizes shifted by class entropy, upper end widened by "
              f"bias bound (m={m}, {'exact class count' if exact_m else 'observed classes, lower bound'})")
    return _estimate(EntropyOrder.H1, cmap.n, class_entropy + mean, class_entropy + low,
                     class_entropy + high + bias, confidence, n_obs, method, bias_bound=bias)


def power_sum_batch(cmap: ClassMap) -> float:
    """
    Unbiased estimate of the power sum from one Poissonized map with parameter ``N``:
    ``sum_k c_k (c_k - 1) / (s_k N^2)`` over classes with count ``c_k`` and orbit size ``s_k``.

    :raises NonPoissonizedInput: if the map records no Poisson parameter
    :raises EmptyMap: if the Poisson parameter is zero
    """
    if cmap.poisson_n is None:
        raise NonPoissonizedInput(f"class map (n={cmap.n}, seed={cmap.seed}) is not Poissonized")
    if cmap.poisson_n == 0:
        raise EmptyMap("Poissonized map with parameter N=0")
    collisions = sum(c * (c - 1) / orbit_size(key) for key, c in cmap.items())
    return float(collisions / cmap.poisson_n ** 2)


def _power_sum_to_entropy(n, s_mean, s_low, s_high, confidence, sample_size, method):
    if s_mean <= 0:
        raise UndefinedEstimate(f"power-sum estimate {s_mean} is not positive; collision entropy undefined "
                                f"(increase the sample size)")
    # -log2 is decreasing: the endpoints swap, and the lower power-sum end is kept above 2^(-n^2)
    s_low = max(s_low, 2.0 ** -(n * n))
    return _estimate(EntropyOrder.H2, n, -math.log2(s_mean), -math.log2(max(s_high, s_mean)),
                     -math.log2(min(s_low, s_mean)), confidence, sample_size, method)


def h2_unbiased(maps: Sequence[ClassMap], confidence: float = DEFAULT_CONFIDENCE,
                min_batches: int = 1) -> EntropyEstimate:
    """
    Collision entropy from independent Poissonized batches: the mean of the per-batch unbiased power-sum
    estimates, mapped through ``-log2``. The interval is a Student-t interval over batches (``B - 1`` degrees of
    freedom); a single batch gives a degenerate interval.

    :param maps: Poissonized class maps (batches) of the same ``n`` and distribution
    :param confidence: confidence level
    :param min_batches: minimal number of batches required
    """
    confidence = _check_confidence(confidence)
    maps = list(maps)
    if not maps:
        raise EmptyMap("no batches given")
    first = maps[0]
    for other in maps[1:]:
        if other.n != first.n or other.distribution != first.distribution:
            raise IncompatibleMaps(f"batches mix (n={other.n}, dist={other.distribution}) and "
                                   f"(n={first.n}, dist={first.distribution})")
    if len(maps) < min_batches:
        raise InsufficientBatches(f"collision entropy needs at least {min_batches} Poissonized batches, "
                                  f"got {len(maps)}")
    batch_values = np.array([power_sum_batch(m) for m in maps])
    sample_size = sum(m.rounds for m in maps)
    mean = float(batch_values.mean())
    if len(maps) == 1:
        low = high = mean
    else:
        low, high = _t_interval(mean, float(stats.sem(batch_values)), len(maps) - 1, confidence)
    method = f"Poissonized unbiased power sum, {len(maps)} batch(es), t-interval over batches"
    return _power_sum_to_entropy(first.n, mean, low, high, confidence, sample_size, method)


def h2_multinomial(cmap: ClassMap, confidence: float = DEFAULT_CONFIDENCE) -> EntropyEstimate:
    """
    Collision entropy from a fixed-size sample with the unbiased estimator
    ``sum_k c_k (c_k - 1) / (s_k N (N - 1))``. No interval is attached.
    """
    confidence = _check_confidence(confidence)
    n_obs = _check_nonempty(cmap)
    if cmap.exact:
        return _census_estimate(EntropyOrder.H2, cmap, confidence)
    if n_obs < 2:
        raise EstimatorError("the collision estimator needs at least two observations")
    collisions = sum(c * (c - 1) / orbit_size(key) for key, c in cmap.items())
    s = float(collisions / (n_obs * (n_obs - 1)))
    return _power_sum_to_entropy(cmap.n, s, s, s, confidence, n_obs, "fixed-sample unbiased power sum, no interval")


def wilson_interval(k: int, n_obs: int, confidence: float = DEFAULT_CONFIDENCE) -> Tuple[float, float]:
    """
    Wilson score interval for a binomial proportion ``k / N``.
    """
    confidence = _check_confidence(confidence)
    if n_obs <= 0 or not 0 <= k <= n_obs:
        raise ValueError(f"need 0 <= k <= N and N > 0, got k={k}, N={n_obs}")
    z = stats.norm.ppf(1 - (1 - confidence) / 2)
    p = k / n_obs
    denominator = 1 + z ** 2 / n_obs
    centre = p + z ** 2 / (2 * n_obs)
    margin = z * math.sqrt((p * (1 - p) + z ** 2 / (4 * n_obs)) / n_obs)
    return max(0.0, (centre - margin) / denominator), min(1.0, (centre + margin) / denominator)


def hinf_wilson(cmap: ClassMap, confidence: float = DEFAULT_CONFIDENCE) -> EntropyEstimate:
    """
    Min-entropy from the most frequent class: ``-log2(k / N) + log2(s)``, with the Wilson score interval of the
    class frequency mapped the same way.
    """
    confidence = _check_confidence(confidence)
    n_obs = _check_nonempty(cmap)
    if cmap.exact:
        return _census_estimate(EntropyOrder.HINF, cmap, confidence)
    # ties go to the lexicographically largest key
    key, k = max(cmap.items(), key=lambda item: item[1])
    if key != dictator_key(cmap.n):
        logger.warning(f"most frequent class {key.to_tuple()} is not the dictator class "
                       f"{dictator_key(cmap.n).to_tuple()}")
    log_s = math.log2(orbit_size(key))
    p_low, p_high = wilson_interval(k, n_obs, confidence)
    return _estimate(EntropyOrder.HINF, cmap.n, -math.log2(k / n_obs) + log_s, -math.log2(p_high) + log_s,
                     -math.log2(p_low) + log_s, confidence, n_obs, f"Wilson score interval, class {key.to_tuple()}")


def estimate_all(maps: Sequence[ClassMap], orders: Iterable = ASCENDING_ORDERS[::-1],
                 confidence: float = DEFAULT_CONFIDENCE, h2_fallback: bool = False
                 ) -> Dict[EntropyOrder, EntropyEstimate]:
    """
    Estimate several entropy orders from the same data.
    Orders 0, 1 and infinity use the merge of all maps. Order 2 needs at least two Poissonized batches; with
    ``h2_fallback`` it uses :func:`h2_multinomial` on the merged map otherwise.

    :param maps: one map or several batches of the same ``n`` and distribution
    :param orders: entropy orders to estimate
    :param confidence: confidence level
    :param h2_fallback: allow the fixed-sample collision estimator
    :return: mapping from order to estimate, in the requested order
    :raises NonPoissonizedInput: order 2 requested for non-Poissonized input without fallback
    :raises InsufficientBatches: order 2 requested for a single batch without fallback
    """
    maps = list(maps)
    if not maps:
        raise EmptyMap("no class maps given")
    merged = merge(maps)
    estimates = {}
    for order in orders:
        order = EntropyOrder(order)
        if order is EntropyOrder.H0:
            estimates[order] = h0_lower(merged, confidence)
        elif order is EntropyOrder.H1:
            estimates[order] = h1_plugin(merged, confidence)
        elif order is EntropyOrder.HINF:
            estimates[order] = hinf_wilson(merged, confidence)
        else:
            poissonized = all(m.poisson_n is not None for m in maps)
            if poissonized and len(maps) >= 2:
                estimates[order] = h2_unbiased(maps, confidence, min_batches=2)
            elif merged.exact or h2_fallback:
                if not merged.exact:
                    logger.info("no Poissonized batches, using the fixed-sample collision estimator")
                estimates[order] = h2_multinomial(merged, confidence)
            elif not poissonized:
                raise NonPoissonizedInput("collision entropy needs Poissonized batches (sample with --poisson)")
            else:
                raise InsufficientBatches(f"collision entropy needs at least 2 Poissonized batches, got {len(maps)}")
    return estimates


def check_ordering(estimates: Mapping[EntropyOrder, EntropyEstimate]) -> List[str]:
    """
    Check ``Hinf <= H2 <= H1 <= H0 <= n^2`` on estimates from the same data, allowing the sum of the two
    interval half-widths as slack.

    :return: list of violations (empty if the ordering holds); each is also logged as a warning
    """
    present = [order for order in ASCENDING_ORDERS if order in estimates]
    violations = []
    for lower, upper in zip(present, present[1:]):
        a, b = estimates[lower], estimates[upper]
        if a.value > b.value + a.half_width() + b.half_width():
            violations.append(f"{lower.label}={a.value:.4f} exceeds {upper.label}={b.value:.4f}")
    for violation in violations:
        logger.warning(f"entropy ordering violated: {violation}")
    return violations
