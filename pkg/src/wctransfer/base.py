"""Minimal estimator plumbing: get_params/set_params compatible with sklearn.base.clone.

The transforms here follow the familiar fit/transform shape but the package does
not depend on scikit-learn; this mixin supplies just enough of the parameter
protocol for clone() and grid-search style introspection to work if a user
brings their own sklearn.
"""

from __future__ import annotations

import inspect

from .errors import InvalidArgumentError

__all__ = ["ParamsMixin", "TransformMixin"]


class ParamsMixin:
    """Constructor-argument introspection, sklearn style.

    Subclasses must store every ``__init__`` argument on ``self`` under the
    same name and do no other work in ``__init__``; fitted state uses
    trailing-underscore attributes.
    """

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        skip = (inspect.Parameter.VAR_POSITIONAL, inspect.Parameter.VAR_KEYWORD)
        return sorted(
            p.name
            for p in sig.parameters.values()
            if p.name != "self" and p.kind not in skip
        )

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = self._param_names()
        for key, value in params.items():
            if key not in valid:
                raise InvalidArgumentError(
                    f"invalid parameter {key!r} for {type(self).__name__}; "
                    f"valid parameters: {valid}"
                )
            setattr(self, key, value)
        return self


class TransformMixin:
    """Adds fit_transform() to estimators exposing fit() and transform()."""

    def fit_transform(self, x, y=None, **fit_params):
        return self.fit(x, **fit_params).transform(x)
