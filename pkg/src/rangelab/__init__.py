"""rangelab: slab-cover range reporting for 2D point sets and a numerical
verifier for packed polynomial slab lower-bound constructions."""

__version__ = "0.1.0"

from .poly import (
    MultiPoly,
    Partition,
    evaluate,
    gen_vandermonde_det,
    implicit_derivatives,
    max_sublevel_interval,
    monic_param_count,
    partial_derivative,
    restrict,
    resultant,
    schur,
    vandermonde_det,
)

__all__ = [
    "MultiPoly",
    "Partition",
    "evaluate",
    "partial_derivative",
    "restrict",
    "implicit_derivatives",
    "max_sublevel_interval",
    "resultant",
    "vandermonde_det",
    "schur",
    "gen_vandermonde_det",
    "monic_param_count",
    "__version__",
]
