#  Copyright (c) 2024 pufentropy developers
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np


class FrozenValue:
    """
    This is the base class for all value types of the library (weight vectors, challenges, truth tables,
    Chow parameters, group elements, configurations, estimates).
    Values are immutable: attributes are frozen after initialisation and numpy payloads are made read-only,
    so that values can be hashed, used as dictionary keys and shared between threads.
    """

    def __init__(self, value, **kwargs):
        # call __init__ on super to be cooperative in multi-inheritance,
        # otherwise this should just call object.__init__ and **kwargs should be empty
        super().__init__(**kwargs)
        # to set __isfrozen__ for the first time, we need to bypass __setattr__ via super
        super().__setattr__('__isfrozen__', False)
        if isinstance(value, np.ndarray):
            value.flags.writeable = False
        self.value = value
        self.__isfrozen__ = True

    def __setattr__(self, key, value):
        if self.__isfrozen__:
            raise AttributeError("Class is frozen, attributes cannot be set")
        else:
            super().__setattr__(key, value)

    def _freeze(self, **attributes):
        """
        Set additional attributes on an already frozen value. Only meant to be used from ``__init__`` of
        sub-classes that compute derived attributes after calling ``super().__init__``.

        :meta private:
        """
        for key, value in attributes.items():
            if isinstance(value, np.ndarray):
                value.flags.writeable = False
            super().__setattr__(key, value)

    def __repr__(self):
        return f"{self.__class__.__name__}({self.value})"

    def __eq__(self, other):
        if type(other) == type(self):
            if isinstance(self.value, np.ndarray) or isinstance(other.value, np.ndarray):
                return np.array_equal(self.value, other.value)
            else:
                return self.value == other.value
        return False

    def __hash__(self):
        if isinstance(self.value, np.ndarray):
            assert self.value.flags.writeable is False
            return hash((self.__class__.__name__, self.value.shape, self.value.data.tobytes()))
        else:
            return hash((self.__class__.__name__, self.value))

    def convert_to(self, other_type):
        return Converters.convert(self, other_type)


class Converters:
    """
    Registry of conversions between value types. Each entry maps a pair of types to a pipeline, a tuple of
    functions applied one after the other. Pipelines of length one are explicit converters, longer ones are
    implicit converters composed from explicit ones.
    """

    _pipelines: Dict[type, Dict[type, Tuple[Callable, ...]]] = {}

    @classmethod
    def convert(cls, obj: Any, to_type: type):
        """
        Convert ``obj`` to ``to_type`` by running the registered pipeline; objects of ``to_type`` are returned
        unchanged.
        """
        if type(obj) is to_type:
            return obj
        result = obj
        for step in cls.get_converter(type(obj), to_type):
            result = step(result)
        if not isinstance(result, to_type):
            raise TypeError(f"conversion to {to_type.__name__} returned {type(result).__name__}")
        return result

    @classmethod
    def get_converter(cls, from_type: type, to_type: Optional[type] = None):
        """
        The pipeline from ``from_type`` to ``to_type``, or all pipelines starting at ``from_type`` if ``to_type``
        is not given.

        :raises NotImplementedError: if no such pipeline is registered
        """
        targets = cls._pipelines.get(from_type)
        if not targets:
            raise NotImplementedError(f"no converters registered for type {from_type.__name__}")
        if to_type is None:
            return dict(targets)
        if to_type not in targets:
            raise NotImplementedError(f"no converter registered from {from_type.__name__} to {to_type.__name__}")
        return targets[to_type]

    @classmethod
    def register_converter(cls, from_type: type, to_type: type, conv_func: Callable,
                           overwrite_explicit_converters: bool = False,
                           overwrite_implicit_converters: bool = False,
                           create_implicit_converters: bool = False):
        """
        Register ``conv_func`` as explicit converter from ``from_type`` to ``to_type``.

        :param from_type: type to convert from
        :param to_type: type to convert to
        :param conv_func: function taking a ``from_type`` object and returning a ``to_type`` object
        :param overwrite_explicit_converters: replace an existing explicit converter instead of raising
        :param overwrite_implicit_converters: replace an existing implicit converter instead of raising
        :param create_implicit_converters: also compose the new converter with all registered pipelines that end
         in ``from_type`` or start at ``to_type``, where no pipeline exists yet
        :raises TypeError: if both types are the same
        :raises ValueError: if a converter exists and overwriting it was not allowed
        """
        if from_type is to_type:
            raise TypeError(f"cannot register a converter from {from_type.__name__} to itself")
        targets = cls._pipelines.setdefault(from_type, {})
        existing = targets.get(to_type)
        if existing is not None:
            explicit = len(existing) == 1
            if explicit and not overwrite_explicit_converters:
                raise ValueError(f"explicit converter {from_type.__name__} -> {to_type.__name__} exists "
                                 f"(use overwrite_explicit_converters=True)")
            if not explicit and not overwrite_implicit_converters:
                raise ValueError(f"implicit converter {from_type.__name__} -> {to_type.__name__} exists "
                                 f"(use overwrite_implicit_converters=True)")
        targets[to_type] = (conv_func,)
        if create_implicit_converters:
            cls._compose(from_type, to_type)

    @classmethod
    def _compose(cls, from_type, to_type):
        targets = cls._pipelines[from_type]
        step = targets[to_type]
        # from_type -> to_type -> X
        for target, pipeline in list(cls._pipelines.get(to_type, {}).items()):
            if target is not from_type:
                targets.setdefault(target, step + pipeline)
        # X -> from_type -> to_type
        for source, pipelines in cls._pipelines.items():
            if source is not to_type and from_type in pipelines:
                pipelines.setdefault(to_type, pipelines[from_type] + step)
