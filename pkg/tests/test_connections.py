"""Geodesic expansions, the exponential identification and change of connection."""

import random
from fractions import Fraction

import pytest

from superjets import GeneratorTable, SuperPoly, parse_poly, series_invert
from superjets.connections import (
    AlgebraMap,
    BundleConnection,
    ChartError,
    ConnectionError_,
    Derivation,
    TorsionFreeConnection,
    chi,
    exp_chi,
    geodesic_jet,
    interpolate_connection,
    jet_algebra_table,
    mat_identity,
    normal_table,
    phi,
    phi_inverse,
    psi_automorphism,
    transport_matrix,
    xi_names,
)
from superjets.jets import Chart, JetElement, jet_of_function
from tests_util import rand_base_poly

M1 = Chart("M", ("x",))


def conn1(text):
    """Dim-1 connection with a single christoffel entry."""
    g = parse_poly(text, M1.base_table())
    return TorsionFreeConnection(M1, (((g,),),))


def rand_connection(rng, chart, degree=2):
    table = chart.base_table()
    n = chart.dim
    entries = [[[None] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for l in range(j, n):
                p = rand_base_poly(rng, table, degree=degree, terms=2)
                entries[i][j][l] = p
                entries[i][l][j] = p
    return TorsionFreeConnection(
        chart, tuple(tuple(tuple(row) for row in plane) for plane in entries)
    )


def rand_bundle(rng, chart, rank, degree=1, names=()):
    table = chart.base_table()
    degrees = (1,) * rank
    coeffs = tuple(
        tuple(
            tuple(rand_base_poly(rng, table, degree=degree, terms=2) for _ in range(rank))
            for _ in range(chart.dim)
        )
        for _ in range(rank)
    )
    return BundleConnection(chart, rank, degrees, coeffs, tuple(names))


# ---------------------------------------------------------------- shapes

def test_torsion_symmetry_enforced():
    M2 = Chart("M", ("x1", "x2"))
    t = M2.base_table()
    z = SuperPoly.zero(t)
    x1 = parse_poly("x1", t)
    gamma = (
        ((z, x1), (z, z)),
        ((z, z), (z, z)),
    )
    with pytest.raises(ConnectionError_) as err:
        TorsionFreeConnection(M2, gamma)
    assert "Gamma^1_{12}" in str(err.value)


def test_bundle_degree_preservation_enforced():
    t = M1.base_table()
    one = parse_poly("1", t)
    z = SuperPoly.zero(t)
    with pytest.raises(ConnectionError_):
        BundleConnection(M1, 2, (1, 3), (((z, one),), ((z, z),)))


# ---------------------------------------------------------------- geodesic jet

def test_geodesic_flat_is_straight():
    for k in (1, 2, 4):
        (dx,) = geodesic_jet(TorsionFreeConnection.flat(M1), k)
        assert dx == parse_poly("xi", normal_table(M1, k))


def test_geodesic_quadratic_coefficient_random():
    # displayed expansion: the xi^2 part is -(1/2) Gamma^i_{jl} xi^j xi^l
    rng = random.Random(31)
    for dim in (1, 2, 3):
        chart = Chart("M", tuple(f"x{i+1}" for i in range(dim))) if dim > 1 else M1
        conn = rand_connection(rng, chart)
        table = normal_table(chart, 2)
        xi = [SuperPoly.gen(table, n) for n in xi_names(chart)]
        delta = geodesic_jet(conn, 2)
        for i in range(dim):
            expected = xi[i]
            for j in range(dim):
                for l in range(dim):
                    from superjets import embed

                    expected = expected - Fraction(1, 2) * embed(
                        conn.gamma[i][j][l], table
                    ) * xi[j] * xi[l]
            assert delta[i] == expected


def test_geodesic_cubic_example():
    # Taylor-integrating z'' = -z (z')^2 by hand gives
    # xi - x xi^2/2 + (2x^2 - 1) xi^3/6
    (dx,) = geodesic_jet(conn1("x"), 3)
    assert dx == parse_poly(
        "xi - 1/2*x*xi^2 - 1/6*xi^3 + 1/3*x^2*xi^3", normal_table(M1, 3)
    )


def test_geodesic_cubic_coefficient_matches_closed_form_random():
    # (1/6)(-d_s Gamma^i_{jl} + 2 Gamma^i_{ps} Gamma^p_{jl}) xi^s xi^j xi^l
    rng = random.Random(32)
    for dim in (1, 2):
        chart = Chart("M", tuple(f"x{i+1}" for i in range(dim))) if dim > 1 else M1
        conn = rand_connection(rng, chart, degree=2)
        table = normal_table(chart, 3)
        from superjets import embed

        xi = [SuperPoly.gen(table, n) for n in xi_names(chart)]
        delta = geodesic_jet(conn, 3)
        for i in range(dim):
            cubic = SuperPoly.zero(table)
            for s in range(dim):
                for j in range(dim):
                    for l in range(dim):
                        coeff = -embed(
                            conn.gamma[i][j][l].derive(chart.coords[s]), table
                        )
                        for p in range(dim):
                            coeff = coeff + 2 * embed(
                                conn.gamma[i][p][s] * conn.gamma[p][j][l], table
                            )
                        cubic = cubic + Fraction(1, 6) * coeff * xi[s] * xi[j] * xi[l]
            got_cubic = SuperPoly.from_terms(
                table, {k: c for k, c in delta[i].terms.items() if sum(k[1]) == 3}
            )
            assert got_cubic == cubic


def test_geodesic_scaling_equivariance():
    rng = random.Random(33)
    chart = Chart("M", ("x1", "x2"))
    conn = rand_connection(rng, chart)
    k = 4
    table = normal_table(chart, k)
    delta = geodesic_jet(conn, k)
    lam = Fraction(3)
    scale = {n: lam * SuperPoly.gen(table, n) for n in xi_names(chart)}
    for d in delta:
        scaled = d.substitute(scale, table=table)
        expected = SuperPoly.from_terms(
            table, {key: c * lam ** sum(key[1]) for key, c in d.terms.items()}
        )
        assert scaled == expected


# ---------------------------------------------------------------- chi / exp

def test_chi_flat_is_coordinate_shift_generator():
    ch = chi(TorsionFreeConnection.flat(M1), None, 2)
    t = ch.table
    assert ch.apply(parse_poly("x^2", t)) == parse_poly("2*x*xi", t)


def test_chi_curved_examples():
    ch = chi(conn1("x"), None, 2)
    t = ch.table
    assert ch.apply(parse_poly("x^2", t)) == parse_poly("2*x*xi", t)
    assert ch.apply(parse_poly("2*x*xi", t)) == parse_poly("2*xi^2 - 2*x^2*xi^2", t)


def test_chi_bundle_term_sign():
    bundle = BundleConnection(
        M1, 1, (1,), (((parse_poly("x", M1.base_table()),),),)
    )
    ch = chi(conn1("0"), bundle, 2)
    t = ch.table
    assert ch.apply(parse_poly("v", t)) == parse_poly("-x*xi*v", t)


def test_exp_chi_constant():
    ch = chi(conn1("x"), None, 3)
    assert exp_chi(ch, SuperPoly.scalar(ch.table, 7)) == SuperPoly.scalar(ch.table, 7)


def test_exp_chi_flat_is_taylor_jet():
    rng = random.Random(34)
    chart = Chart("M", ("x1", "x2"))
    flat = TorsionFreeConnection.flat(chart)
    for k in (1, 2, 3):
        ch = chi(flat, None, k)
        h = rand_base_poly(rng, chart.base_table(), degree=3)
        got = exp_chi(ch, h.substitute({}, table=ch.table))
        jet = jet_of_function(chart, h, k).value
        rename = {
            "d" + c: SuperPoly.gen(ch.table, n)
            for c, n in zip(chart.coords, xi_names(chart))
        }
        assert got == jet.substitute(rename, table=ch.table)


def test_exp_chi_curved_square_example():
    ch = chi(conn1("x"), None, 2)
    t = ch.table
    got = exp_chi(ch, parse_poly("x^2", t))
    assert got == parse_poly("x^2 + 2*x*xi + xi^2 - x^2*xi^2", t)
    # oracle: substitute the time-1 geodesic into h and truncate
    (dx,) = geodesic_jet(conn1("x"), 2)
    x_moved = parse_poly("x", t) + dx
    assert got == (x_moved * x_moved)


def test_exp_chi_matches_geodesic_substitution_random():
    # main identification: exp(chi)(h) = h(x + dx(x, xi)) for random data
    rng = random.Random(35)
    for _ in range(12):
        dim = rng.randint(1, 3)
        chart = Chart("M", tuple(f"x{i+1}" for i in range(dim))) if dim > 1 else M1
        k = rng.randint(1, 4)
        conn = rand_connection(rng, chart, degree=2)
        h = rand_base_poly(rng, chart.base_table(), degree=3)
        ch = chi(conn, None, k)
        delta = geodesic_jet(conn, k)
        shift = {
            c: SuperPoly.gen(ch.table, c) + d for c, d in zip(chart.coords, delta)
        }
        assert exp_chi(ch, h.substitute({}, table=ch.table)) == h.substitute(
            shift, table=ch.table
        )


# ---------------------------------------------------------------- phi

def test_phi_flat_on_coordinate_jet():
    flat = TorsionFreeConnection.flat(M1)
    j = jet_of_function(M1, parse_poly("x", M1.base_table()), 2)
    got = phi(flat, j)
    assert got.value == parse_poly("x + xi", normal_table(M1, 2))


def test_phi_inverse_round_trip_random():
    rng = random.Random(36)
    chart = Chart("M", ("x1", "x2"))
    for _ in range(8):
        k = rng.randint(1, 3)
        conn = rand_connection(rng, chart)
        jt = jet_algebra_table(chart, k)
        value = SuperPoly.zero(jt)
        for _ in range(4):
            h = rand_base_poly(rng, chart.base_table(), degree=2)
            value = value + jet_of_function(chart, h, k).value * rand_base_poly(
                rng, chart.base_table(), degree=1
            ).substitute({}, table=jt)
        j = JetElement(chart, k, value)
        there = phi(conn, j)
        back = phi_inverse(conn, there)
        assert back == j
        again = phi(conn, back)
        assert again == there


def test_phi_is_multiplicative_random():
    rng = random.Random(37)
    conn = conn1("1 + x")
    k = 3
    jt = jet_algebra_table(M1, k)
    for _ in range(10):
        a = jet_of_function(M1, rand_base_poly(rng, M1.base_table(), degree=2), k)
        b = jet_of_function(M1, rand_base_poly(rng, M1.base_table(), degree=2), k)
        assert phi(conn, a * b).value == phi(conn, a).value * phi(conn, b).value


def test_phi_flat_bundle_is_taylor_with_fixed_frame():
    # flat bundle connection: sections identify with their coordinate Taylor
    # expansion, fiber frame untouched
    bundle = BundleConnection.flat(M1, 2)
    flat = TorsionFreeConnection.flat(M1)
    k = 2
    jt = jet_algebra_table(M1, k, bundle)
    nt = normal_table(M1, k, bundle)
    # section s = x^2 v1 + x v2, jet side: j(s) = j(x^2) jv1 + j(x) jv2
    s_jet = (
        jet_of_function(M1, parse_poly("x^2", M1.base_table()), k).value.substitute(
            {}, table=jt
        )
        * SuperPoly.gen(jt, "jv1")
        + jet_of_function(M1, parse_poly("x", M1.base_table()), k).value.substitute(
            {}, table=jt
        )
        * SuperPoly.gen(jt, "jv2")
    )
    got = phi(flat, JetElement(M1, k, s_jet), bundle)
    expected = (
        parse_poly("x^2 + 2*x*xi + xi^2", nt) * SuperPoly.gen(nt, "v1")
        + parse_poly("x + xi", nt) * SuperPoly.gen(nt, "v2")
    )
    assert got.value == expected


def test_phi_bundle_identity_on_section_jets_random():
    # for sections of the fiber algebra, phi of the section's jet equals the
    # exponential of chi applied to the section
    rng = random.Random(38)
    for _ in range(6):
        k = rng.randint(1, 3)
        conn = conn1("x")
        bundle = rand_bundle(rng, M1, 2)
        jt = jet_algebra_table(M1, k, bundle)
        nt = normal_table(M1, k, bundle)
        ch = chi(conn, bundle, k)
        coeffs = [rand_base_poly(rng, M1.base_table(), degree=2) for _ in range(2)]
        section = sum(
            (
                c.substitute({}, table=nt) * SuperPoly.gen(nt, v)
                for c, v in zip(coeffs, bundle.fiber_names)
            ),
            start=SuperPoly.zero(nt),
        )
        jet_side = sum(
            (
                jet_of_function(M1, c, k).value.substitute({}, table=jt)
                * SuperPoly.gen(jt, "j" + v)
                for c, v in zip(coeffs, bundle.fiber_names)
            ),
            start=SuperPoly.zero(jt),
        )
        assert phi(conn, JetElement(M1, k, jet_side), bundle).value == exp_chi(
            ch, section
        )


# ---------------------------------------------------------------- psi

def test_psi_equal_connections_is_identity():
    conn = conn1("x")
    for k in (1, 2, 3):
        psi = psi_automorphism(conn, conn, order=k)
        assert psi.is_identity()


def test_psi_order_one_is_identity():
    rng = random.Random(39)
    psi = psi_automorphism(
        rand_connection(rng, M1), rand_connection(rng, M1), order=1
    )
    assert psi.is_identity()


def test_psi_dim1_frozen_example():
    psi = psi_automorphism(conn1("0"), conn1("x"), order=2)
    images = psi.image_map()
    assert str(images["xi"]) == "xi - 1/2*x*xi^2"


def test_psi_fixes_base_and_is_multiplicative():
    rng = random.Random(40)
    chart = Chart("M", ("x1", "x2"))
    for _ in range(5):
        k = rng.randint(2, 3)
        g0, g1 = rand_connection(rng, chart), rand_connection(rng, chart)
        b0, b1 = rand_bundle(rng, chart, 2), rand_bundle(rng, chart, 2)
        psi = psi_automorphism(g0, g1, b0, b1, order=k)
        t = psi.table
        for c in chart.coords:
            assert psi.apply(SuperPoly.gen(t, c)) == SuperPoly.gen(t, c)
        for _ in range(4):
            a = rand_base_poly(rng, chart.base_table(), 2).substitute({}, table=t)
            a = a * SuperPoly.gen(t, rng.choice(t.even + t.odd))
            b = rand_base_poly(rng, chart.base_table(), 2).substitute({}, table=t)
            b = b * SuperPoly.gen(t, rng.choice(t.even + t.odd))
            assert psi.apply(a * b) == psi.apply(a) * psi.apply(b)


def test_psi_unipotent_random():
    rng = random.Random(41)
    chart = Chart("M", ("x1", "x2"))
    for _ in range(4):
        k = rng.randint(1, 3)
        psi = psi_automorphism(
            rand_connection(rng, chart),
            rand_connection(rng, chart),
            rand_bundle(rng, chart, 1),
            rand_bundle(rng, chart, 1),
            order=k,
        )
        t = psi.table

        def defect(p):
            return psi.apply(p) - p

        for name in t.even + t.odd:
            g = SuperPoly.gen(t, name)
            d = defect(g)
            min_deg = min(sum(key[1]) for key in g.terms)
            if not d.is_zero():
                assert min(sum(key[1]) for key in d.terms) >= min_deg + 1
            cur = g
            for _ in range(k + 1):
                cur = defect(cur)
            assert cur.is_zero()


def test_psi_cocycle_random():
    rng = random.Random(42)
    for _ in range(5):
        k = rng.randint(2, 3)
        g0, g1, g2 = (rand_connection(rng, M1) for _ in range(3))
        p01 = psi_automorphism(g0, g1, order=k)
        p12 = psi_automorphism(g1, g2, order=k)
        p02 = psi_automorphism(g0, g2, order=k)
        assert p12.after(p01).image_map() == p02.image_map()


def test_psi_intertwines_exponentials_random():
    # defining property: psi applied to exp(chi0)(s) equals exp(chi1)(s)
    rng = random.Random(43)
    for _ in range(5):
        k = rng.randint(1, 3)
        g0, g1 = rand_connection(rng, M1), rand_connection(rng, M1)
        b0, b1 = rand_bundle(rng, M1, 2), rand_bundle(rng, M1, 2)
        psi = psi_automorphism(g0, g1, b0, b1, order=k)
        ch0, ch1 = chi(g0, b0, k), chi(g1, b1, k)
        t = ch0.table
        s = rand_base_poly(rng, M1.base_table(), 2).substitute({}, table=t)
        s = s + rand_base_poly(rng, M1.base_table(), 1).substitute(
            {}, table=t
        ) * SuperPoly.gen(t, "v1")
        assert psi.apply(exp_chi(ch0, s)) == exp_chi(ch1, s)


def test_interpolate_connection():
    g0, g1 = conn1("0"), conn1("x")
    assert interpolate_connection(g0, g1, Fraction(0)) == g0
    assert interpolate_connection(g0, g1, Fraction(1)) == g1
    half = interpolate_connection(g0, g1, Fraction(1, 2))
    assert half.gamma[0][0][0] == parse_poly("1/2*x", M1.base_table())


# ---------------------------------------------------------------- flow cross-check

def _t_integrate(p, table):
    """Integrate a polynomial coefficient-wise in the auxiliary t coordinate."""
    t_pos = table.base.index("t")
    out = {}
    for (b, e, s), c in p.terms.items():
        nb = list(b)
        nb[t_pos] += 1
        out[(tuple(nb), e, s)] = c * Fraction(1, nb[t_pos])
    return SuperPoly.from_terms(table, out)


@pytest.mark.parametrize("order", [1, 2])
def test_duhamel_flow_reproduces_endpoint_identification(order):
    """Integrating the interpolation flow from the first exponential lands on
    the second; checked at low order where the t-integration is exact."""
    base = ("x", "t")
    table = GeneratorTable(base, ("xi",), ("v",), order, (1,))
    g0 = parse_poly("0", GeneratorTable(base))
    g1 = parse_poly("x", GeneratorTable(base))
    a0 = parse_poly("1", GeneratorTable(base))
    a1 = parse_poly("1 + x", GeneratorTable(base))
    from superjets import embed

    xi = SuperPoly.gen(table, "xi")
    v = SuperPoly.gen(table, "v")
    t = SuperPoly.gen(table, "t")

    def interpolated(p0, p1):
        return embed(p0, table) * (1 - t) + embed(p1, table) * t

    chi_t = Derivation(
        table,
        {
            "x": xi,
            "xi": -interpolated(g0, g1) * xi * xi,
            "v": -xi * interpolated(a0, a1) * v,
        },
    )
    delta = Derivation(
        table,
        {
            "xi": -(embed(g1, table) - embed(g0, table)) * xi * xi,
            "v": -xi * (embed(a1, table) - embed(a0, table)) * v,
        },
    )
    # psi_t = sum_m ad(chi_t)^m (delta) / (m+1)!, a finite sum by filtration
    from math import factorial

    psi_images = {n: SuperPoly.zero(table) for n in ("x", "xi", "v")}
    cur = delta
    m = 0
    while any(not img.is_zero() for img in cur.images.values()) and m <= order + 2:
        w = Fraction(1, factorial(m + 1))
        for name in psi_images:
            img = cur.images.get(name)
            if img is not None:
                psi_images[name] = psi_images[name] + img * w
        cur = chi_t.commutator(cur)
        m += 1
    psi_t = Derivation(table, psi_images)

    # initial data: the first connection's exponential on generators
    chart = Chart("M", ("x",))
    conn0 = TorsionFreeConnection(chart, (((parse_poly("0", chart.base_table()),),),))
    conn1_ = TorsionFreeConnection(chart, (((parse_poly("x", chart.base_table()),),),))
    mk = lambda e: BundleConnection(chart, 1, (1,), (((e,),),))
    b0 = mk(parse_poly("1", chart.base_table()))
    b1 = mk(parse_poly("1 + x", chart.base_table()))
    ch0 = chi(conn0, b0, order)
    ch1 = chi(conn1_, b1, order)
    plain = ch0.table

    for gen_name in ("x", "v"):
        start = embed(exp_chi(ch0, SuperPoly.gen(plain, gen_name)), table)
        theta = start
        for _ in range(order + 3):
            theta = start + _t_integrate(psi_t.apply(theta), table)
        at_one = theta.substitute({"t": Fraction(1)}, table=plain)
        assert at_one == exp_chi(ch1, SuperPoly.gen(plain, gen_name))
