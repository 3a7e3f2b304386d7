"""Python access to the spreadscope C++ core."""

from ._core import (
    Dataset,
    Model,
    SpreadscopeError,
    decile_lift,
    fit_forest,
    fit_gbm,
    lift,
    load_dataset,
)

__all__ = [
    "Dataset",
    "Model",
    "SpreadscopeError",
    "decile_lift",
    "fit_forest",
    "fit_gbm",
    "lift",
    "load_dataset",
]
