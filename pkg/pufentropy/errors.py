#  Copyright (c) 2024 pufentropy developers


class PufEntropyError(ValueError):
    """Base class of all domain errors raised by the library."""


class ZeroDotProduct(PufEntropyError):
    """
    A challenge has a dot product of exactly zero with the weights, so the weights do not define a PUF.
    Callers are expected to resample or perturb the weights.
    """


class IncompatibleMaps(PufEntropyError):
    """Class maps (or their files) with different ``n`` or distribution cannot be merged."""


class UnsupportedN(PufEntropyError):
    """The requested number of weights is outside the range an operation supports."""


class EstimatorError(PufEntropyError):
    """A precondition of an entropy estimator is violated."""


class EmptyMap(EstimatorError):
    pass


class NonPoissonizedInput(EstimatorError):
    pass


class InsufficientBatches(EstimatorError):
    pass


class UndefinedEstimate(EstimatorError):
    """The estimate has no finite value (e.g. a non-positive power-sum estimate at tiny sample sizes)."""


class StoreError(PufEntropyError):
    """Base class for errors when reading class map files."""


class FormatError(StoreError):
    pass


class IntegrityError(StoreError):
    pass


class VersionError(StoreError):
    pass
