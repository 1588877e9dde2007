"""Exact calculus for truncated jets, normal-coordinate isomorphisms and
superfield descriptions of supermanifold morphisms, plus a small numeric
companion for exponential-map charts on sample grids."""

from .graded import (
    GeneratorTable,
    GradedError,
    ParityError,
    Scalar,
    SuperPoly,
    TableMismatchError,
    UnknownGeneratorError,
    embed,
    gen_names,
    series_invert,
)
from .expressions import ParseError, parse_poly, print_canonical

__all__ = [
    "GeneratorTable",
    "GradedError",
    "ParityError",
    "ParseError",
    "Scalar",
    "SuperPoly",
    "TableMismatchError",
    "UnknownGeneratorError",
    "embed",
    "gen_names",
    "parse_poly",
    "print_canonical",
    "series_invert",
]
