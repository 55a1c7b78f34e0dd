"""Fair representation learning with balanced-error objectives.

Submodules:

- :mod:`fairrep.engine`: dense nets, weighted cross-entropy, gradient reversal, AdaDelta
- :mod:`fairrep.metrics`: fairness gaps, exact finite distributions, bound checks
- :mod:`fairrep.data`: Adult, COMPAS and synthetic datasets
- :mod:`fairrep.models`: the five training variants and their training loop
- :mod:`fairrep.cli`: the ``fairrep`` command
"""
from . import data, engine, metrics, models

__version__ = "0.1.0"

__all__ = ["data", "engine", "metrics", "models", "__version__"]
