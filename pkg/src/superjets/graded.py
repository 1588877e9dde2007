"""Exact graded-commutative polynomial arithmetic with nilpotent truncation.

Every symbolic value in the package is a :class:`SuperPoly`: a polynomial in
three kinds of named generators declared by a :class:`GeneratorTable`.

* *base* coordinates -- commuting, never truncated; they play the role of
  coordinate functions and all coefficients are polynomials in them,
* *even* formal generators -- commuting, but the ideal of total degree
  above ``table.order`` is divided out (the truncation ideal),
* *odd* generators -- anticommuting and square-zero, with an integer degree
  tag per generator that is carried as metadata (signs depend on parity
  only).

Coefficients are exact rationals, so all algebraic identities in the test
suites hold with equality, not tolerances.

Monomials are stored as a flat dict mapping
``(base_exponents, even_exponents, odd_index_subset) -> Fraction``
with the odd subset strictly ascending; the sign of sorting an odd word
into this normal form is folded into the coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Scalar = Fraction

#: monomial key: (base exponents, even-formal exponents, odd index subset)
Key = tuple[tuple[int, ...], tuple[int, ...], tuple[int, ...]]


class GradedError(ValueError):
    """Base class for algebra construction and arithmetic errors."""


class TableMismatchError(GradedError):
    """Operands or assignments do not live over compatible generator tables."""


class ParityError(GradedError):
    """A substitution or constructor received a value of the wrong parity."""


class UnknownGeneratorError(GradedError):
    """A generator name does not occur in the table."""


def gen_names(prefix: str, n: int) -> tuple[str, ...]:
    """Family naming convention: a single generator keeps the bare prefix,
    larger families are numbered from 1 (``xi`` vs ``xi1, xi2, ...``)."""
    if n == 1:
        return (prefix,)
    return tuple(f"{prefix}{i + 1}" for i in range(n))


@dataclass(frozen=True)
class GeneratorTable:
    """Declaration of the generators of one graded polynomial algebra.

    ``order`` truncates total degree in the *even* formal generators only;
    base coordinates are never truncated and odd generators are nilpotent on
    their own.  ``odd_degrees`` defaults to degree 1 for every odd generator.
    """

    base: tuple[str, ...]
    even: tuple[str, ...] = ()
    odd: tuple[str, ...] = ()
    order: int = 0
    odd_degrees: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.order < 0:
            raise GradedError(f"truncation order must be >= 0, got {self.order}")
        if not self.odd_degrees:
            object.__setattr__(self, "odd_degrees", (1,) * len(self.odd))
        if len(self.odd_degrees) != len(self.odd):
            raise GradedError("odd_degrees length does not match odd generator count")
        names = self.base + self.even + self.odd
        if len(set(names)) != len(names):
            raise GradedError(f"generator names are not pairwise distinct: {names}")

    def index(self, name: str) -> tuple[str, int]:
        """Return ``(kind, position)`` for a generator name, where kind is
        one of ``"base"``, ``"even"``, ``"odd"``."""
        for kind, family in (("base", self.base), ("even", self.even), ("odd", self.odd)):
            if name in family:
                return kind, family.index(name)
        raise UnknownGeneratorError(f"unknown generator {name!r}")

    def has(self, name: str) -> bool:
        return name in self.base or name in self.even or name in self.odd

    def zero_key(self) -> Key:
        return ((0,) * len(self.base), (0,) * len(self.even), ())


def _merge_sign(s1: tuple[int, ...], s2: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    """Merge two ascending odd index subsets; return (merged, Koszul sign).

    Returns sign 0 when an index repeats (odd generators square to zero).
    The sign counts transpositions needed to interleave s2 into s1.
    """
    merged: list[int] = []
    sign = 1
    i = j = 0
    while i < len(s1) and j < len(s2):
        a, b = s1[i], s2[j]
        if a == b:
            return (), 0
        if a < b:
            merged.append(a)
            i += 1
        else:
            # b jumps over the remaining entries of s1
            if (len(s1) - i) % 2:
                sign = -sign
            merged.append(b)
            j += 1
    merged.extend(s1[i:])
    merged.extend(s2[j:])
    return tuple(merged), sign


def _add_exps(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(x + y for x, y in zip(a, b))


class SuperPoly:
    """Immutable sparse polynomial over a :class:`GeneratorTable`.

    Construct via the factory classmethods (:meth:`zero`, :meth:`scalar`,
    :meth:`gen`, :meth:`from_terms`) or by parsing an expression string with
    :func:`superjets.expressions.parse_poly`.
    """

    __slots__ = ("table", "terms")

    def __init__(self, table: GeneratorTable, terms: dict[Key, Fraction]):
        self.table = table
        self.terms = terms  # treated as frozen after construction

    # ----- constructors -------------------------------------------------

    @classmethod
    def zero(cls, table: GeneratorTable) -> SuperPoly:
        return cls(table, {})

    @classmethod
    def scalar(cls, table: GeneratorTable, c) -> SuperPoly:
        c = Fraction(c)
        if c == 0:
            return cls.zero(table)
        return cls(table, {table.zero_key(): c})

    @classmethod
    def gen(cls, table: GeneratorTable, name: str) -> SuperPoly:
        kind, pos = table.index(name)
        b = [0] * len(table.base)
        e = [0] * len(table.even)
        s: tuple[int, ...] = ()
        if kind == "base":
            b[pos] = 1
        elif kind == "even":
            if table.order < 1:
                return cls.zero(table)
            e[pos] = 1
        else:
            s = (pos,)
        return cls(table, {(tuple(b), tuple(e), s): Fraction(1)})

    @classmethod
    def from_terms(cls, table: GeneratorTable, terms: Mapping[Key, "Fraction | int"]) -> SuperPoly:
        """Build from raw monomial keys; drops zeros and over-truncated terms."""
        out: dict[Key, Fraction] = {}
        for (b, e, s), c in terms.items():
            c = Fraction(c)
            if c == 0 or sum(e) > table.order:
                continue
            if list(s) != sorted(set(s)):
                raise GradedError(f"odd subset {s} is not strictly ascending")
            key = (tuple(b), tuple(e), tuple(s))
            out[key] = out.get(key, Fraction(0)) + c
            if out[key] == 0:
                del out[key]
        return cls(table, out)

    # ----- predicates and structure -------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def parity(self) -> int | None:
        """0 or 1 for homogeneous values, None for mixed, 0 for zero."""
        if not self.terms:
            return 0
        parities = {len(s) % 2 for (_, _, s) in self.terms}
        if len(parities) > 1:
            return None
        return parities.pop()

    def z_degree(self) -> int | None:
        """Total integer degree from odd-generator tags, None if mixed/zero."""
        if not self.terms:
            return None
        degs = {sum(self.table.odd_degrees[i] for i in s) for (_, _, s) in self.terms}
        return degs.pop() if len(degs) == 1 else None

    def even_degrees(self) -> set[int]:
        return {sum(e) for (_, e, _) in self.terms}

    def odd_free_part(self) -> SuperPoly:
        """Terms containing no odd generators."""
        return SuperPoly(self.table, {k: c for k, c in self.terms.items() if not k[2]})

    def parity_part(self, parity: int) -> SuperPoly:
        return SuperPoly(
            self.table, {k: c for k, c in self.terms.items() if len(k[2]) % 2 == parity}
        )

    def split_by_odd(self) -> dict[tuple[int, ...], SuperPoly]:
        """Group terms by their odd subset; values have the odd part stripped."""
        out: dict[tuple[int, ...], dict[Key, Fraction]] = {}
        for (b, e, s), c in self.terms.items():
            out.setdefault(s, {})[(b, e, ())] = c
        return {s: SuperPoly(self.table, d) for s, d in out.items()}

    def coefficient_of_odd(self, subset: tuple[int, ...]) -> SuperPoly:
        got: dict[Key, Fraction] = {}
        for (b, e, s), c in self.terms.items():
            if s == tuple(subset):
                got[(b, e, ())] = c
        return SuperPoly(self.table, got)

    # ----- ring operations ----------------------------------------------

    def _require_same_table(self, other: SuperPoly) -> None:
        if self.table != other.table:
            raise TableMismatchError(
                f"operands live over different generator tables: "
                f"{self.table} vs {other.table}"
            )

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SuperPoly.scalar(self.table, other)
        if not isinstance(other, SuperPoly):
            return NotImplemented
        self._require_same_table(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            acc = out.get(k, Fraction(0)) + c
            if acc == 0:
                out.pop(k, None)
            else:
                out[k] = acc
        return SuperPoly(self.table, out)

    __radd__ = __add__

    def __neg__(self):
        return SuperPoly(self.table, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SuperPoly.scalar(self.table, other)
        if not isinstance(other, SuperPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if c == 0:
                return SuperPoly.zero(self.table)
            return SuperPoly(self.table, {k: v * c for k, v in self.terms.items()})
        if not isinstance(other, SuperPoly):
            return NotImplemented
        self._require_same_table(other)
        order = self.table.order
        out: dict[Key, Fraction] = {}
        for (b1, e1, s1), c1 in self.terms.items():
            for (b2, e2, s2), c2 in other.terms.items():
                e = _add_exps(e1, e2)
                if sum(e) > order:
                    continue
                s, sign = _merge_sign(s1, s2)
                if sign == 0:
                    continue
                key = (_add_exps(b1, b2), e, s)
                acc = out.get(key, Fraction(0)) + sign * c1 * c2
                if acc == 0:
                    out.pop(key, None)
                else:
                    out[key] = acc
        return SuperPoly(self.table, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise GradedError("exponents must be non-negative integers")
        result = SuperPoly.scalar(self.table, 1)
        square = self
        while n:
            if n & 1:
                result = result * square
            n >>= 1
            if n:
                square = square * square
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = SuperPoly.scalar(self.table, other)
        if not isinstance(other, SuperPoly):
            return NotImplemented
        return self.table == other.table and self.terms == other.terms

    def __hash__(self):
        return hash((self.table, frozenset(self.terms.items())))

    def __repr__(self):
        from .expressions import print_canonical  # cycle broken at call time

        return f"SuperPoly({print_canonical(self)!r})"

    def __str__(self):
        from .expressions import print_canonical

        return print_canonical(self)

    # ----- calculus ------------------------------------------------------

    def derive(self, name: str) -> SuperPoly:
        """Partial derivative by a generator.

        For odd generators this is the left derivative: the generator is
        moved to the front of the monomial (collecting Koszul signs) and
        removed.
        """
        kind, pos = self.table.index(name)
        out: dict[Key, Fraction] = {}
        for (b, e, s), c in self.terms.items():
            if kind == "base":
                if b[pos] == 0:
                    continue
                nb = list(b)
                nb[pos] -= 1
                key = (tuple(nb), e, s)
                coeff = c * b[pos]
            elif kind == "even":
                if e[pos] == 0:
                    continue
                ne = list(e)
                ne[pos] -= 1
                key = (b, tuple(ne), s)
                coeff = c * e[pos]
            else:
                if pos not in s:
                    continue
                j = s.index(pos)
                key = (b, e, s[:j] + s[j + 1:])
                coeff = c if j % 2 == 0 else -c
            acc = out.get(key, Fraction(0)) + coeff
            if acc == 0:
                out.pop(key, None)
            else:
                out[key] = acc
        return SuperPoly(self.table, out)

    def substitute(
        self,
        assignments: Mapping[str, "SuperPoly | int | Fraction"],
        table: GeneratorTable | None = None,
    ) -> SuperPoly:
        """Homomorphic substitution into a (possibly different) target table.

        Assigned values must all live over one target table; generators left
        unassigned must exist in the target under the same name and kind.
        Even generators (base or formal) require even-parity values, odd
        generators odd-parity values.  Truncation and nilpotency are applied
        by the target algebra, so substituting nilpotent shifts into base
        coordinates is exact and terminates.
        """
        target = table
        values: dict[str, SuperPoly] = {}
        for name, value in assignments.items():
            self.table.index(name)  # raises UnknownGeneratorError
            if isinstance(value, (int, Fraction)):
                if target is None:
                    raise TableMismatchError(
                        "scalar assignment requires an explicit target table"
                    )
                continue
            if target is None:
                target = value.table
            elif value.table != target:
                raise TableMismatchError(
                    f"assignment for {name!r} lives over a different table"
                )
        if target is None:
            target = self.table
        for name, value in assignments.items():
            if isinstance(value, (int, Fraction)):
                value = SuperPoly.scalar(target, value)
            kind, _ = self.table.index(name)
            want = 1 if kind == "odd" else 0
            got = value.parity()
            if got is not None and got != want and not value.is_zero():
                raise ParityError(
                    f"assignment for {name!r} must have parity {want}, got {got}"
                )
            if got is None:
                raise ParityError(f"assignment for {name!r} has mixed parity")
            values[name] = value

        def value_of(kind: str, family: tuple[str, ...], pos: int) -> SuperPoly:
            name = family[pos]
            if name in values:
                return values[name]
            tkind, _ = target.index(name)  # unassigned: same name must exist
            if tkind != kind:
                raise TableMismatchError(
                    f"generator {name!r} changes kind ({kind} -> {tkind}); "
                    "assign it explicitly"
                )
            return SuperPoly.gen(target, name)

        # cache powers of each substituted generator value
        pow_cache: dict[tuple[str, int], SuperPoly] = {}

        def power(kind: str, family: tuple[str, ...], pos: int, n: int) -> SuperPoly:
            name = family[pos]
            got = pow_cache.get((name, n))
            if got is None:
                got = value_of(kind, family, pos) ** n
                pow_cache[(name, n)] = got
            return got

        total = SuperPoly.zero(target)
        one = SuperPoly.scalar(target, 1)
        for (b, e, s), c in self.terms.items():
            acc = one * c
            for pos, n in enumerate(b):
                if n:
                    acc = acc * power("base", self.table.base, pos, n)
                    if acc.is_zero():
                        break
            else:
                for pos, n in enumerate(e):
                    if n:
                        acc = acc * power("even", self.table.even, pos, n)
                        if acc.is_zero():
                            break
                else:
                    for pos in s:
                        acc = acc * value_of("odd", self.table.odd, pos)
                        if acc.is_zero():
                            break
                    else:
                        total = total + acc
        return total


def embed(p: SuperPoly, table: GeneratorTable) -> SuperPoly:
    """Re-tag a polynomial onto a larger table by generator name."""
    if p.table == table:
        return p
    return p.substitute({}, table=table)


def series_invert(components: Sequence[SuperPoly]) -> tuple[SuperPoly, ...]:
    """Invert a formal change of even generators ``xi -> v(xi)``.

    Each component must be the corresponding generator plus terms of
    even-formal degree >= 2 (base coordinates pass through untouched).  The
    inverse ``w`` satisfies ``v(w) = xi`` and ``w(v) = xi`` modulo the
    truncation ideal.  Computed by the fixed-point iteration
    ``w <- xi - (v(w) - w)``, which stabilizes after at most ``order``
    steps because the defect gains one degree per pass.
    """
    components = tuple(components)
    if not components:
        return ()
    table = components[0].table
    n = len(table.even)
    if len(components) != n:
        raise GradedError(
            f"expected {n} components (one per even generator), got {len(components)}"
        )
    xi = [SuperPoly.gen(table, name) for name in table.even]
    for i, v in enumerate(components):
        if v.table != table:
            raise TableMismatchError("all components must share one table")
        low = {k: c for k, c in v.terms.items() if sum(k[1]) <= 1}
        if low != xi[i].terms:
            raise GradedError(
                f"component {i} must be its generator plus degree >= 2 terms "
                "(linear part is not the identity)"
            )
    w = list(xi)
    for _ in range(table.order):
        names = dict(zip(table.even, w))
        new = [xi[i] - (components[i].substitute(names, table=table) - w[i]) for i in range(n)]
        if new == w:
            break
        w = new
    return tuple(w)
