"""Normal-coordinate expansions and connection-fixed jet isomorphisms.

A torsion-free connection on the chart determines, through its geodesic
flow, a formal identification of order-``k`` jets (polynomials in the
displacement generators ``dx``) with truncated symmetric tensors
(polynomials in normal-fiber generators ``xi``).  The identification is the
exponential of the derivation :func:`chi`; on displacement generators it
substitutes the geodesic displacement series :func:`geodesic_jet`, and on
fiber generators of an auxiliary bundle it substitutes the formal parallel
transport matrix :func:`transport_matrix`.

The change-of-connection automorphism :func:`psi_automorphism` is computed
algebraically as the composite of one identification with the inverse of
another; it fixes base coordinates and is unipotent with respect to the
``xi`` filtration.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import factorial

from .graded import (
    GeneratorTable,
    GradedError,
    SuperPoly,
    embed,
    gen_names,
    series_invert,
)
from .jets import Chart, ChartError, JetElement


class ConnectionError_(GradedError):
    """Connection data fails a shape, symmetry or grading constraint."""


@dataclass(frozen=True)
class TorsionFreeConnection:
    """Christoffel data ``gamma[i][j][l]`` with polynomial entries,
    symmetric in the lower pair."""

    chart: Chart
    gamma: tuple[tuple[tuple[SuperPoly, ...], ...], ...]

    def __post_init__(self):
        n = self.chart.dim
        table = self.chart.base_table()
        if len(self.gamma) != n or any(
            len(row) != n or any(len(col) != n for col in row) for row in self.gamma
        ):
            raise ConnectionError_(f"christoffel array must be {n}x{n}x{n}")
        for i in range(n):
            for j in range(n):
                for l in range(n):
                    if self.gamma[i][j][l].table != table:
                        raise ConnectionError_(
                            "christoffel entries must be base-coordinate polynomials"
                        )
                    if j < l and self.gamma[i][j][l] != self.gamma[i][l][j]:
                        raise ConnectionError_(
                            f"torsion-free symmetry violated: "
                            f"Gamma^{i + 1}_{{{j + 1}{l + 1}}} != "
                            f"Gamma^{i + 1}_{{{l + 1}{j + 1}}}"
                        )

    @classmethod
    def flat(cls, chart: Chart) -> TorsionFreeConnection:
        zero = SuperPoly.zero(chart.base_table())
        n = chart.dim
        return cls(chart, tuple(tuple((zero,) * n for _ in range(n)) for _ in range(n)))


@dataclass(frozen=True)
class BundleConnection:
    """Connection coefficients ``coeffs[alpha][i][beta]`` acting on the dual
    frame of a graded bundle: the covariant derivative of the generator
    ``v^alpha`` along ``x^i`` is ``-coeffs[alpha][i][beta] v^beta``.

    ``fiber_degrees`` are integer degree tags; the connection must preserve
    them.  Fiber generators enter the algebra with parity = degree mod 2.
    """

    base_chart: Chart
    rank: int
    fiber_degrees: tuple[int, ...]
    coeffs: tuple[tuple[tuple[SuperPoly, ...], ...], ...]
    fiber_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.rank < 1:
            raise ConnectionError_("bundle rank must be >= 1")
        if len(self.fiber_degrees) != self.rank:
            raise ConnectionError_("fiber_degrees length must equal rank")
        if not self.fiber_names:
            object.__setattr__(self, "fiber_names", gen_names("v", self.rank))
        if len(self.fiber_names) != self.rank:
            raise ConnectionError_("fiber_names length must equal rank")
        n = self.base_chart.dim
        table = self.base_chart.base_table()
        if len(self.coeffs) != self.rank or any(
            len(rows) != n or any(len(row) != self.rank for row in rows)
            for rows in self.coeffs
        ):
            raise ConnectionError_(
                f"coefficient array must be rank x dim x rank = "
                f"{self.rank}x{n}x{self.rank}"
            )
        for a in range(self.rank):
            for i in range(n):
                for b in range(self.rank):
                    entry = self.coeffs[a][i][b]
                    if entry.table != table:
                        raise ConnectionError_(
                            "connection coefficients must be base polynomials"
                        )
                    if self.fiber_degrees[a] != self.fiber_degrees[b] and not entry.is_zero():
                        raise ConnectionError_(
                            f"connection mixes degrees: coefficient "
                            f"({a + 1},{i + 1},{b + 1}) joins degree "
                            f"{self.fiber_degrees[b]} to {self.fiber_degrees[a]}"
                        )

    @classmethod
    def flat(cls, chart: Chart, rank: int, degrees=None, names=()) -> BundleConnection:
        degrees = tuple(degrees) if degrees is not None else (1,) * rank
        zero = SuperPoly.zero(chart.base_table())
        n = chart.dim
        coeffs = tuple(
            tuple((zero,) * rank for _ in range(n)) for _ in range(rank)
        )
        return cls(chart, rank, degrees, coeffs, tuple(names))


def _fiber_parities(bundle: BundleConnection) -> None:
    for d in bundle.fiber_degrees:
        if d % 2 == 0:
            raise ConnectionError_(
                "fiber generators of even degree are not supported: the "
                "function algebra realizes fibers as anticommuting generators"
            )


def xi_names(chart: Chart) -> tuple[str, ...]:
    return gen_names("xi", chart.dim)


def normal_table(chart: Chart, order: int, bundle: BundleConnection | None = None) -> GeneratorTable:
    """Truncated symmetric algebra on normal-fiber generators, optionally
    extended by bundle fiber generators."""
    odd: tuple[str, ...] = ()
    degrees: tuple[int, ...] = ()
    if bundle is not None:
        _fiber_parities(bundle)
        odd = bundle.fiber_names
        degrees = bundle.fiber_degrees
    return GeneratorTable(chart.coords, xi_names(chart), odd, order, degrees)


def jet_algebra_table(chart: Chart, order: int, bundle: BundleConnection | None = None) -> GeneratorTable:
    """Jet-side algebra: displacement generators, plus jets of fiber
    generators (named ``j<name>``) when a bundle is present."""
    odd: tuple[str, ...] = ()
    degrees: tuple[int, ...] = ()
    if bundle is not None:
        _fiber_parities(bundle)
        odd = tuple("j" + v for v in bundle.fiber_names)
        degrees = bundle.fiber_degrees
    return GeneratorTable(
        chart.coords, tuple("d" + c for c in chart.coords), odd, order, degrees
    )


class Derivation:
    """Derivation of a graded algebra given by its generator images.

    Images must raise any filtration consistently with truncation; the
    application rule is ``D(p) = sum_g D(g) * (left d/dg p)``, which is the
    correct extension for an even derivation with left odd derivatives.
    """

    def __init__(self, table: GeneratorTable, images: dict[str, SuperPoly]):
        self.table = table
        self.images = {n: v for n, v in images.items() if not v.is_zero()}

    def apply(self, p: SuperPoly) -> SuperPoly:
        if p.table != self.table:
            raise ChartError("value does not live over the derivation's algebra")
        out = SuperPoly.zero(self.table)
        for name, image in self.images.items():
            out = out + image * p.derive(name)
        return out

    __call__ = apply

    def commutator(self, other: Derivation) -> Derivation:
        names = set(self.images) | set(other.images)
        images = {}
        for name in names:
            g = SuperPoly.gen(self.table, name)
            images[name] = self.apply(other.apply(g)) - other.apply(self.apply(g))
        return Derivation(self.table, images)


@dataclass(frozen=True)
class ChiDerivation:
    """The degree-raising derivation whose exponential realizes the
    connection-fixed jet identification."""

    tm_connection: TorsionFreeConnection
    bundle: BundleConnection | None
    order: int
    derivation: Derivation

    @property
    def table(self) -> GeneratorTable:
        return self.derivation.table

    def apply(self, p: SuperPoly) -> SuperPoly:
        return self.derivation.apply(p)

    __call__ = apply


def chi(
    connection: TorsionFreeConnection,
    bundle: BundleConnection | None = None,
    order: int = 1,
) -> ChiDerivation:
    """Build the derivation: coordinates move by their normal generator,
    normal generators by the quadratic christoffel term, fiber generators by
    the linear connection term."""
    if bundle is not None and bundle.base_chart != connection.chart:
        raise ChartError("bundle and connection live over different charts")
    chart = connection.chart
    table = normal_table(chart, order, bundle)
    xi = [SuperPoly.gen(table, n) for n in xi_names(chart)]
    images: dict[str, SuperPoly] = {}
    for s, coord in enumerate(chart.coords):
        images[coord] = xi[s]
    for s, name in enumerate(xi_names(chart)):
        acc = SuperPoly.zero(table)
        for j in range(chart.dim):
            for l in range(chart.dim):
                g = embed(connection.gamma[s][j][l], table)
                if not g.is_zero():
                    acc = acc - g * xi[j] * xi[l]
        images[name] = acc
    if bundle is not None:
        for a, vname in enumerate(bundle.fiber_names):
            acc = SuperPoly.zero(table)
            for i in range(chart.dim):
                for b, wname in enumerate(bundle.fiber_names):
                    coeff = embed(bundle.coeffs[a][i][b], table)
                    if not coeff.is_zero():
                        acc = acc - xi[i] * coeff * SuperPoly.gen(table, wname)
            images[vname] = acc
    return ChiDerivation(connection, bundle, order, Derivation(table, images))


def exp_chi(derivation: ChiDerivation, p: SuperPoly) -> SuperPoly:
    """Finite exponential sum; terminates because every application raises
    the even-formal degree by one."""
    total = SuperPoly.zero(derivation.table)
    cur = p
    m = 0
    while not cur.is_zero():
        total = total + cur * Fraction(1, factorial(m))
        cur = derivation.apply(cur)
        m += 1
        if m > derivation.order + 1:
            break
    return total


def geodesic_jet(connection: TorsionFreeConnection, order: int) -> tuple[SuperPoly, ...]:
    """Displacement of the time-1 geodesic from ``(x, xi)`` as a truncated
    series in the normal generators.

    Computed by the total-derivative recursion on the prolonged geodesic
    equation: with ``F_1 = xi`` and ``F_{m+1} = D F_m`` for the vector field
    ``D`` sending ``x -> xi`` and ``xi -> -Gamma(x) xi xi``, the
    displacement is ``sum_m F_m / m!``.
    """
    if order < 1:
        raise ConnectionError_("geodesic expansion needs order >= 1")
    ch = chi(connection, None, order)
    table = ch.table
    out = []
    for name in xi_names(connection.chart):
        cur = SuperPoly.gen(table, name)
        total = SuperPoly.zero(table)
        m = 1
        while not cur.is_zero() and m <= order + 1:
            total = total + cur * Fraction(1, factorial(m))
            cur = ch.apply(cur)
            m += 1
        out.append(total)
    return tuple(out)


def transport_matrix(
    connection: TorsionFreeConnection, bundle: BundleConnection, order: int
) -> tuple[tuple[SuperPoly, ...], ...]:
    """Formal parallel transport of the dual fiber frame along the geodesic
    spray: ``exp(chi)(v^alpha) = M[alpha][beta](x, xi) v^beta``.  Entries
    live over the fiberless normal table and reduce to the identity for a
    flat bundle connection."""
    ch = chi(connection, bundle, order)
    plain = normal_table(connection.chart, order)
    rows = []
    for a, vname in enumerate(bundle.fiber_names):
        image = exp_chi(ch, SuperPoly.gen(ch.table, vname))
        row = []
        for b, wname in enumerate(bundle.fiber_names):
            _, pos = ch.table.index(wname)
            entry = image.coefficient_of_odd((pos,))
            row.append(entry.substitute({}, table=plain))
        rows.append(tuple(row))
    return tuple(rows)


# ----- matrices of polynomials ------------------------------------------


def mat_mul(A, B):
    n, m, l = len(A), len(B[0]), len(B)
    return tuple(
        tuple(sum((A[i][k] * B[k][j] for k in range(l)), start=A[i][0] * 0) for j in range(m))
        for i in range(n)
    )


def mat_identity(table: GeneratorTable, n: int):
    one = SuperPoly.scalar(table, 1)
    zero = SuperPoly.zero(table)
    return tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n))


def mat_subst(A, assignments, table):
    return tuple(tuple(entry.substitute(assignments, table=table) for entry in row) for row in A)


def mat_inv_unipotent(A):
    """Inverse of ``identity + nilpotent`` by a terminating geometric series."""
    table = A[0][0].table
    n = len(A)
    ident = mat_identity(table, n)
    N = tuple(tuple(ident[i][j] - A[i][j] for j in range(n)) for i in range(n))
    total = ident
    power = N
    while any(not e.is_zero() for row in power for e in row):
        total = tuple(tuple(total[i][j] + power[i][j] for j in range(n)) for i in range(n))
        power = mat_mul(power, N)
    return total


# ----- the identification and its inverse --------------------------------


def _displacement_assignments(
    connection: TorsionFreeConnection, order: int, bundle: BundleConnection | None
) -> dict[str, SuperPoly]:
    """Generator images of the identification on the jet side."""
    chart = connection.chart
    target = normal_table(chart, order, bundle)
    delta = geodesic_jet(connection, order) if order >= 1 else ()
    assign: dict[str, SuperPoly] = {}
    for i, coord in enumerate(chart.coords):
        value = embed(delta[i], target) if order >= 1 else SuperPoly.zero(target)
        assign["d" + coord] = value
    if bundle is not None:
        M = transport_matrix(connection, bundle, order)
        for a, vname in enumerate(bundle.fiber_names):
            acc = SuperPoly.zero(target)
            for b, wname in enumerate(bundle.fiber_names):
                acc = acc + embed(M[a][b], target) * SuperPoly.gen(target, wname)
            assign["j" + vname] = acc
    return assign


def phi(
    connection: TorsionFreeConnection,
    j: JetElement,
    bundle: BundleConnection | None = None,
) -> JetElement:
    """Identify a jet with its normal-coordinate form: substitute the
    geodesic displacement for each displacement generator and the transport
    matrix action for each jet-side fiber generator."""
    chart = connection.chart
    if j.chart != chart:
        raise ChartError("jet and connection charts differ")
    expected = jet_algebra_table(chart, j.order, bundle)
    if j.value.table != expected:
        raise ChartError("jet value is not expressed on jet-side generators")
    assign = _displacement_assignments(connection, j.order, bundle)
    target = normal_table(chart, j.order, bundle)
    return JetElement(chart, j.order, j.value.substitute(assign, table=target))


def phi_inverse(
    connection: TorsionFreeConnection,
    j: JetElement,
    bundle: BundleConnection | None = None,
) -> JetElement:
    """Inverse identification, exact by triangularity: normal generators go
    to the reverted displacement series, fiber generators to the inverse
    transport matrix."""
    chart = connection.chart
    order = j.order
    if j.chart != chart:
        raise ChartError("jet and connection charts differ")
    expected = normal_table(chart, order, bundle)
    if j.value.table != expected:
        raise ChartError("value is not expressed on normal-side generators")
    target = jet_algebra_table(chart, order, bundle)
    plain = normal_table(chart, order)
    assign: dict[str, SuperPoly] = {}
    if order >= 1:
        u = series_invert(geodesic_jet(connection, order))
        rename = {n: SuperPoly.gen(target, "d" + c) for n, c in zip(xi_names(chart), chart.coords)}
        for name, u_i in zip(xi_names(chart), u):
            assign[name] = u_i.substitute(rename, table=target)
    else:
        for name in xi_names(chart):
            assign[name] = SuperPoly.zero(target)
    if bundle is not None:
        Minv = mat_inv_unipotent(transport_matrix(connection, bundle, order))
        xi_assign = {n: assign[n] for n in xi_names(chart)}
        N = mat_subst(Minv, xi_assign, target)
        for a, vname in enumerate(bundle.fiber_names):
            acc = SuperPoly.zero(target)
            for b, wname in enumerate(bundle.fiber_names):
                acc = acc + N[a][b] * SuperPoly.gen(target, "j" + wname)
            assign[vname] = acc
    return JetElement(chart, order, j.value.substitute(assign, table=target))


# ----- change of connection ----------------------------------------------


@dataclass(frozen=True)
class AlgebraMap:
    """Algebra endomorphism given on generators; everything else extends
    multiplicatively.  Generators absent from ``images`` are fixed."""

    table: GeneratorTable
    images: tuple[tuple[str, SuperPoly], ...]

    def image_map(self) -> dict[str, SuperPoly]:
        return dict(self.images)

    def apply(self, p: SuperPoly) -> SuperPoly:
        return p.substitute(self.image_map(), table=self.table)

    __call__ = apply

    def after(self, other: AlgebraMap) -> AlgebraMap:
        """``(self.after(other))(p) = self(other(p))``."""
        if self.table != other.table:
            raise ChartError("algebra maps live over different tables")
        other_images = other.image_map()
        names = set(other_images) | {n for n, _ in self.images}
        images = tuple(
            (n, self.apply(other_images.get(n, SuperPoly.gen(self.table, n))))
            for n in sorted(names)
        )
        return AlgebraMap(self.table, images)

    def is_identity(self) -> bool:
        return all(SuperPoly.gen(self.table, n) == v for n, v in self.images)


def psi_automorphism(
    gamma0: TorsionFreeConnection,
    gamma1: TorsionFreeConnection,
    bundle0: BundleConnection | None = None,
    bundle1: BundleConnection | None = None,
    order: int = 1,
) -> AlgebraMap:
    """Unipotent automorphism relating the identifications of two
    connection pairs: the second identification composed with the inverse of
    the first.  Fixes base coordinates; on normal generators it is the
    inverted displacement series of the first connection evaluated on the
    displacement series of the second."""
    if gamma0.chart != gamma1.chart:
        raise ChartError("connections live over different charts")
    if (bundle0 is None) != (bundle1 is None):
        raise ChartError("either both or neither bundle connection must be given")
    if bundle0 is not None and bundle1 is not None:
        if (
            bundle0.base_chart != bundle1.base_chart
            or bundle0.rank != bundle1.rank
            or bundle0.fiber_degrees != bundle1.fiber_degrees
            or bundle0.fiber_names != bundle1.fiber_names
        ):
            raise ChartError("bundle connections describe different bundles")
    chart = gamma0.chart
    table = normal_table(chart, order, bundle0)
    plain = normal_table(chart, order)
    images: list[tuple[str, SuperPoly]] = []
    if order >= 1:
        delta1 = geodesic_jet(gamma1, order)
        u0 = series_invert(geodesic_jet(gamma0, order))
        to_delta1 = dict(zip(xi_names(chart), delta1))
        psi_xi = [w.substitute(to_delta1, table=plain) for w in u0]
    else:
        psi_xi = [SuperPoly.zero(plain) for _ in range(chart.dim)]
    for name, value in zip(xi_names(chart), psi_xi):
        images.append((name, embed(value, table)))
    if bundle0 is not None and bundle1 is not None:
        M1 = transport_matrix(gamma1, bundle1, order)
        M0inv = mat_inv_unipotent(transport_matrix(gamma0, bundle0, order))
        n0_at = mat_subst(M0inv, dict(zip(xi_names(chart), psi_xi)), plain)
        entries = mat_mul(n0_at, M1)
        for a, vname in enumerate(bundle0.fiber_names):
            acc = SuperPoly.zero(table)
            for b, wname in enumerate(bundle0.fiber_names):
                acc = acc + embed(entries[a][b], table) * SuperPoly.gen(table, wname)
            images.append((vname, acc))
    return AlgebraMap(table, tuple(images))


def interpolate_connection(
    gamma0: TorsionFreeConnection, gamma1: TorsionFreeConnection, t: Fraction
) -> TorsionFreeConnection:
    """Affine path between two connections; torsion-freeness is convex."""
    if gamma0.chart != gamma1.chart:
        raise ChartError("connections live over different charts")
    t = Fraction(t)
    n = gamma0.chart.dim
    gamma = tuple(
        tuple(
            tuple(
                gamma0.gamma[i][j][l] * (1 - t) + gamma1.gamma[i][j][l] * t
                for l in range(n)
            )
            for j in range(n)
        )
        for i in range(n)
    )
    return TorsionFreeConnection(gamma0.chart, gamma)
