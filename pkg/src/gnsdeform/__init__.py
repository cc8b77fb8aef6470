"""Exact computer algebra for star products and GNS representations.

The package implements arithmetic in ordered fields of formal
Newton-Puiseux series, star products on polynomial observables, positive
linear functionals and their GNS representations, formal time evolution,
and the evaluation scheme that substitutes a positive rational value of
Planck's constant for the formal parameter.  Everything is computed with
exact rational arithmetic.
"""

from .scalars import (
    CRational,
    FormalScalar,
    IndeterminateError,
    ScalarDomainError,
    as_scalar,
    const,
    lam,
    make_series,
    I_UNIT,
    ONE,
    ZERO,
)

__version__ = "0.1.0"
