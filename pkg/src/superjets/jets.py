"""Truncated jets of functions in a single chart.

A jet of order ``k`` is stored as a polynomial in formal displacement
generators (one per chart coordinate, named ``d<coord>``) with coefficients
polynomial in the chart coordinates; total displacement degree above ``k``
is divided out.  Coefficients multiply through the first (pointwise) module
structure; the second module structure acts by multiplying with the jet of
the function, see :func:`module_action`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .graded import GeneratorTable, GradedError, SuperPoly, embed


class ChartError(GradedError):
    """Chart, order or dimension mismatch between jet values."""


@dataclass(frozen=True)
class Chart:
    name: str
    coords: tuple[str, ...]

    def __post_init__(self):
        if not self.coords:
            raise ChartError(f"chart {self.name!r} needs at least one coordinate")
        if len(set(self.coords)) != len(self.coords):
            raise ChartError(f"chart {self.name!r} repeats coordinate names")

    @property
    def dim(self) -> int:
        return len(self.coords)

    def base_table(self) -> GeneratorTable:
        return GeneratorTable(self.coords)


def displacement_names(chart: Chart) -> tuple[str, ...]:
    return tuple("d" + c for c in chart.coords)


def jet_table(chart: Chart, order: int) -> GeneratorTable:
    """Algebra of order-``order`` jets over the chart: coordinates plus
    formal displacements."""
    return GeneratorTable(chart.coords, displacement_names(chart), (), order)


def double_chart(chart: Chart) -> Chart:
    """Two copies of the chart; the second copy's coordinates get a ``p``
    suffix (``x`` and ``xp`` are the two slots of a two-point function)."""
    return Chart(chart.name + "2", chart.coords + tuple(c + "p" for c in chart.coords))


@dataclass(frozen=True)
class JetElement:
    """A truncated jet in a fixed chart.

    ``value`` may live over :func:`jet_table` or over an extension of it by
    bundle fiber generators (see the connection module); equality is value
    equality.
    """

    chart: Chart
    order: int
    value: SuperPoly

    def __post_init__(self):
        if self.order < 0:
            raise ChartError("jet order must be >= 0")
        if self.value.table.order != self.order:
            raise ChartError(
                f"value truncation {self.value.table.order} != jet order {self.order}"
            )

    def _like(self, value: SuperPoly) -> JetElement:
        return JetElement(self.chart, self.order, value)

    def __add__(self, other: JetElement) -> JetElement:
        self._check(other)
        return self._like(self.value + other.value)

    def __sub__(self, other: JetElement) -> JetElement:
        self._check(other)
        return self._like(self.value - other.value)

    def __mul__(self, other):
        if isinstance(other, JetElement):
            self._check(other)
            return self._like(self.value * other.value)
        return self._like(self.value * other)

    __rmul__ = __mul__

    def _check(self, other: JetElement) -> None:
        if self.chart != other.chart:
            raise ChartError(f"charts differ: {self.chart.name} vs {other.chart.name}")
        if self.order != other.order:
            # refuse rather than silently re-truncate
            raise ChartError(f"jet orders differ: {self.order} vs {other.order}")


def jet_of_function(chart: Chart, h: SuperPoly, order: int) -> JetElement:
    """Order-``order`` jet of a coordinate polynomial: shift every
    coordinate by its displacement generator and truncate."""
    if order < 0:
        raise ChartError("jet order must be >= 0")
    table = jet_table(chart, order)
    shift = {
        c: SuperPoly.gen(table, c) + SuperPoly.gen(table, "d" + c) for c in chart.coords
    }
    return JetElement(chart, order, h.substitute(shift, table=table))


def module_action(side: str, g: SuperPoly, j: JetElement) -> JetElement:
    """Multiply a jet by a function through either module structure:
    ``side="first"`` multiplies coefficients pointwise, ``side="second"``
    multiplies by the jet of the function."""
    if side == "first":
        return j * embed(g, j.value.table)
    if side == "second":
        return j * jet_of_function(j.chart, g, j.order)
    raise ChartError(f"side must be 'first' or 'second', got {side!r}")


def jet_change_of_coords(
    j: JetElement, f: tuple[SuperPoly, ...], source_chart: Chart
) -> JetElement:
    """Rewrite a jet under a polynomial coordinate map ``y = f(x)``.

    ``j`` lives on the target chart (coordinates ``y``); the result lives on
    ``source_chart`` (coordinates ``x``).  Displacement generators change by
    the truncated Taylor shift of ``f`` and coefficients compose with ``f``;
    no invertibility of ``f`` is required, the change is formal.
    """
    if len(f) != j.chart.dim:
        raise ChartError(
            f"coordinate map has {len(f)} components for a {j.chart.dim}-dim chart"
        )
    table = jet_table(source_chart, j.order)
    assign: dict[str, SuperPoly] = {}
    for y_name, dy_name, f_i in zip(j.chart.coords, displacement_names(j.chart), f):
        f_i = embed(f_i, table)
        jet_f = jet_of_function(source_chart, f_i, j.order).value
        assign[y_name] = f_i
        assign[dy_name] = jet_f - f_i
    return JetElement(source_chart, j.order, j.value.substitute(assign, table=table))


def diagonal_representative_to_jet(chart: Chart, r: SuperPoly, order: int) -> JetElement:
    """Jet of a two-point function ``r(x, x')``: substitute ``x' = x + dx``
    and truncate.  ``r`` lives over :func:`double_chart`."""
    table = jet_table(chart, order)
    assign: dict[str, SuperPoly] = {}
    for c in chart.coords:
        assign[c + "p"] = SuperPoly.gen(table, c) + SuperPoly.gen(table, "d" + c)
    return JetElement(chart, order, r.substitute(assign, table=table))
