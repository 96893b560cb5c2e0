import types
import warnings
from inspect import signature

import numpy as np
import pandas as pd


def _unsorted_members(instance):
    """yields tuples of member name and method, in order defined in the class.
    Superclasses are ordered before the class instance.
    """
    for component in reversed(type(instance).__mro__):
        for method_name in vars(component):
            if method_name[0] == "_" or not method_name[0].islower():
                continue
            method = getattr(instance, method_name)
            if isinstance(method, types.MethodType):
                yield method_name, method


class _Cache:
    """Memoised projection variable, keyed by its arguments"""

    def __init__(self, func, param_names):
        self.func = func
        self.param_names = param_names
        self.has_one_param = len(param_names) == 1
        self._store = dict()
        self.__name__ = func.__name__

    def __call__(self, *arg):
        if arg in self._store:
            return self._store[arg]
        result = self.func(*arg)
        self._store[arg] = result
        return result

    def __repr__(self):
        return f"<Cache Function: {self.func.__name__} Params: {self.param_names} Size: {len(self._store)}>"

    def __len__(self):
        return len(self._store)

    def sum(self):
        """return the sum of all stored values"""
        return sum(self._store.values())

    @property
    def keys(self):
        return list(self._store.keys())

    @property
    def values(self):
        return list(self._store.values())

    @property
    def array(self):
        """stored values ordered by key, stacked into a numpy array"""
        return np.array([self._store[key] for key in sorted(self._store)])

    @property
    def df(self):
        """return the cache as a pandas dataframe"""
        df = pd.DataFrame(data=self.keys, columns=self.param_names)
        df[self.__name__] = self.values
        return df


class Projection:
    def __init__(self, *, steps: int = 0, **kwargs):
        """Base class for fixed-step solvers.

        Every public lower-case method becomes a cached projection variable. Variables
        taking the single parameter `n` are evaluated for n = 0..steps-1 by `Run`, in
        the order they are defined, so a variable may refer to its own or another
        variable's value at n - 1 without deep recursion.

        Parameters
        ----------
        - steps: number of steps to run on construction, 0 to defer to `Run`

        Keyword arguments are stored as attributes.

        Special methods:
          BeforeRun(self): called before the first step, e.g. to validate inputs or
            preallocate storage.
          AfterRun(self): called after the last step; its return value is returned by `Run`.

        Helpers that take arrays or other unhashable arguments must start with `_`.
        """
        if not isinstance(steps, (int, np.integer)):
            raise ValueError("steps must be an integer")
        if steps < 0:
            raise ValueError("steps must be non-negative")

        self._cached = False
        self._is_run = False
        self.steps = int(steps)

        for k, v in kwargs.items():
            if k in dir(self):
                warnings.warn("Duplicate Item: " + str(k))
            setattr(self, k, v)

        self._cache_funcs()

        if steps > 0:
            self.Run(steps)

    def Run(self, steps: int):
        """Evaluate every step-indexed variable for n = 0..steps-1.

        Parameters
        ----------
        - steps: number of steps"""
        if self._is_run:
            raise ValueError("Run has already been completed.")
        if not isinstance(steps, (int, np.integer)) or steps < 0:
            raise ValueError("steps must be a non-negative integer")
        self.steps = int(steps)

        if hasattr(self, "BeforeRun"):
            self.BeforeRun()

        stepped = [func for func in self._funcs.values() if func.has_one_param and func.param_names[0] == "n"]
        for n in range(self.steps):
            for func in stepped:
                func(n)
        self._is_run = True

        if hasattr(self, "AfterRun"):
            return self.AfterRun()

    def _cache_funcs(self):
        if self._cached:
            raise ValueError("Cache has already been set-up, please create a new instance")

        self._funcs = {}
        for method_name, method in _unsorted_members(self):
            param_names = tuple(signature(method).parameters)
            cached_method = _Cache(method, param_names)
            setattr(self, method_name, cached_method)
            self._funcs[method_name] = cached_method

        self._cached = True

    def CacheSize(self) -> int:
        """number of stored values over all variables"""
        return sum(len(func) for func in self._funcs.values())

    def ToDataFrame(self, param="n"):
        """return a pandas dataframe of all single parameter variables

        Parameters
        ----------
        - param: parameter to filter on.  Default: `n`
        """
        df = pd.DataFrame()
        for name, func in self._funcs.items():
            if func.has_one_param and func.param_names[0] == param:
                df[name] = pd.Series(func.values)

        if "t" in df.columns:
            df.insert(0, "t", df.pop("t"))
        return df

    @property
    def df(self):
        """return a pandas dataframe of all variables parameterised with `n`"""
        return self.ToDataFrame()
