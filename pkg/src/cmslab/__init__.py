"""Desk-scale numerical laboratory for convex monotone one-step operators.

The package provides

* weighted function spaces on uniform 1-d grids (:mod:`cmslab.funcspace`),
* Gamma-convergence calculus for sequences of grid functions (:mod:`cmslab.gamma`),
* a catalog of convex monotone one-step operators with closed-form
  companions (:mod:`cmslab.operators`),
* iteration drivers that build semigroups from one-step operators
  (:mod:`cmslab.chernoff`),
* generator extraction, Lipschitz-class tests and comparison harnesses
  (:mod:`cmslab.generator`),
* a command line front end for reproducible experiments (:mod:`cmslab.cli`).

All operations are pure functions of their arguments; arrays held by the
dataclasses are frozen read-only, so repeated evaluation is bit-identical.
"""

__version__ = "0.1.0"

from . import funcspace, gamma, measures, operators, chernoff, generator

__all__ = [
    "funcspace",
    "gamma",
    "measures",
    "operators",
    "chernoff",
    "generator",
    "__version__",
]
