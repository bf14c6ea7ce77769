"""Tests for order/ideal arithmetic and the form-ideal-embedding dictionary.

Oracles here avoid the standard-form bookkeeping under test: ideal norms
are recomputed as index ratios through explicit lattice intersections and
Smith normal forms (sympy), properness is recomputed from the multiplier
ring, and split/inert ideal counts are checked against Jacobi symbols.
"""

import random
from fractions import Fraction

import pytest
import sympy
from sympy.matrices.normalforms import smith_normal_form

import geodesic_lab.classgroup as C
from geodesic_lab.classgroup import (
    ClassedIdeal,
    Embedding,
    KElem,
    OIdeal,
    QuadOrder,
    form_to_embedding,
    form_to_ideal,
    ideal_class,
    ideal_classes,
    ideal_norm,
    ideal_to_form,
    ideals_of_norm_up_to,
    invert,
    is_proper,
    multiply,
    picard_group,
    principal_ideal,
    unit_ideal,
)
from geodesic_lab.forms import (
    QuadForm,
    class_number,
    enumerate_classes,
    form_class,
    reduced_forms,
    same_class,
)


# ---------------------------------------------------------------------------
# oracles

def lattice_matrix(I: OIdeal) -> sympy.Matrix:
    """Row basis of I in the (1, w) coordinates, exact rationals."""
    a, b = I.basis()
    return sympy.Matrix([[sympy.Rational(a.p), sympy.Rational(a.q)],
                         [sympy.Rational(b.p), sympy.Rational(b.q)]])


def lattice_index(outer: sympy.Matrix, inner: sympy.Matrix) -> sympy.Rational:
    """(outer : inner) for inner a sublattice of outer, via SNF."""
    T = inner * outer.inv()
    assert all(x.is_integer for x in T), "not a sublattice"
    D = smith_normal_form(sympy.Matrix(2, 2, [sympy.Integer(x) for x in T]))
    return abs(D[0, 0] * D[1, 1])


def hnf_rational(M: sympy.Matrix) -> sympy.Matrix:
    den = 1
    for x in M:
        den = sympy.ilcm(den, sympy.Rational(x).q)
    H = hnf_rows(den * M)
    return H / sympy.Integer(den)


def lattice_dual(B: sympy.Matrix) -> sympy.Matrix:
    # row basis D with D * B^T = identity
    return B.T.inv()


def lattice_intersection(A: sympy.Matrix, B: sympy.Matrix) -> sympy.Matrix:
    """Row basis of the intersection: dual of the sum of the duals."""
    summed = hnf_rational(sympy.Matrix.vstack(lattice_dual(A), lattice_dual(B)))
    return hnf_rational(lattice_dual(summed))


def hnf_rows(M: sympy.Matrix) -> sympy.Matrix:
    """Two-column row HNF by integer row reduction (oracle-side helper)."""
    rows = [(int(M[i, 0]), int(M[i, 1])) for i in range(M.rows)]
    wx = wy = 0
    for x, y in rows:
        if y == 0:
            continue
        if wy == 0:
            wx, wy = x, y
            continue
        while y != 0:
            t = wy // y
            wx, wy, x, y = x, y, wx - t * x, wy - t * y
    if wy < 0:
        wx, wy = -wx, -wy
    a = 0
    for x, y in rows:
        if wy:
            x -= (y // wy) * wx
        a = sympy.igcd(a, abs(x))
    assert a and wy
    return sympy.Matrix([[a, 0], [wx % a, wy]])


def norm_oracle(I: OIdeal) -> Fraction:
    """N(I) as the index ratio (O : O cap I)/(I : O cap I)."""
    O = sympy.eye(2)
    M = lattice_matrix(I)
    inter = lattice_intersection(O, M)
    num = lattice_index(O, inter)
    den = lattice_index(M, inter)
    return Fraction(int(num.p), int(num.q)) / Fraction(int(den.p), int(den.q))


def mult_matrix(x: KElem) -> sympy.Matrix:
    # coords(y*x) = coords(y) @ M for row coordinate vectors in (1, w)
    d = x.d
    e = (d * d - d) // 4
    return sympy.Matrix([
        [sympy.Rational(x.p), sympy.Rational(x.q)],
        [sympy.Rational(-e * x.q), sympy.Rational(x.p + d * x.q)],
    ])


def multiplier_ring_is_order(I: OIdeal) -> bool:
    """Properness via the multiplier ring {x : x*I <= I} == O_d.

    x*alpha in I constrains coords(x) to the lattice with row basis
    (mult_matrix(alpha) * M^-1)^-1; the multiplier ring is the
    intersection of the two basis constraints, and equals O_d exactly
    when that intersection is the standard integer lattice.
    """
    alpha, beta = I.basis()
    Minv = lattice_matrix(I).inv()
    L1 = (mult_matrix(alpha) * Minv).inv()
    L2 = (mult_matrix(beta) * Minv).inv()
    R = lattice_intersection(L1, L2)
    return abs(R.det()) == 1 and all(x.is_integer for x in R)


def jacobi(a: int, n: int) -> int:
    try:
        from sympy.functions.combinatorial.numbers import jacobi_symbol
    except ImportError:
        from sympy.ntheory import jacobi_symbol
    return int(jacobi_symbol(a, n))


# ---------------------------------------------------------------------------
# field elements

def test_kelem_arithmetic():
    d = 13
    O = QuadOrder.of(d)
    w = O.omega
    assert (w * w - d * w + O.e * O.one).is_zero()
    s = O.sqrt_d
    assert s * s == KElem.make(d, d)
    rng = random.Random(7)
    for _ in range(50):
        x = KElem(d, Fraction(rng.randint(-9, 9), rng.randint(1, 4)),
                  Fraction(rng.randint(-9, 9), rng.randint(1, 4)))
        y = KElem(d, Fraction(rng.randint(-9, 9)), Fraction(rng.randint(-9, 9)))
        assert (x + y) * (x - y) == x * x - y * y
        assert (x * y).norm() == x.norm() * y.norm()
        assert (x * y).conjugate() == x.conjugate() * y.conjugate()
        assert x.trace() == (x + x.conjugate()).p
        assert x.norm() == (x * x.conjugate()).p


def test_omega_trace_and_norm():
    for d in (5, 8, 12, 377):
        w = QuadOrder.of(d).omega
        assert w.trace() == d
        assert w.norm() == (d * d - d) // 4


# ---------------------------------------------------------------------------
# ideal construction and normal form

def test_standard_form_rejects_non_ideal():
    with pytest.raises(ValueError):
        OIdeal.standard(13, 5, 1)  # N(1+w) = 53, not divisible by 5
    with pytest.raises(ValueError):
        OIdeal.from_lattice(13, [(1, 0), (0, 2)])  # Z + 2wZ is not w-closed


def test_from_gens_matches_standard():
    # 3 splits in Q(sqrt 13): m^2 + 13m + 39 = 0 mod 3 at m = 0 and 2
    I = OIdeal.from_gens(13, [KElem.make(13, 3), QuadOrder.of(13).omega])
    assert I == OIdeal.standard(13, 3, 0)
    assert ideal_norm(I) == 3
    J = OIdeal.from_gens(13, [KElem.make(13, 3), KElem.make(13, 2, 1)])
    assert J == OIdeal.standard(13, 3, 2)
    assert multiply(I, J) == principal_ideal(KElem.make(13, 3))


def test_contains():
    I = OIdeal.standard(13, 3, 0)
    w = QuadOrder.of(13).omega
    assert I.contains(KElem.make(13, 3))
    assert I.contains(w)
    assert I.contains(w * w)
    assert not I.contains(KElem.make(13, 1))
    assert not I.contains(KElem.make(13, 2))


def test_unit_ideal_and_principal():
    for d in (5, 13, 40):
        O = unit_ideal(d)
        assert ideal_norm(O) == 1
        assert multiply(O, O) == O
        two = principal_ideal(KElem.make(d, 2))
        assert ideal_norm(two) == 4
        assert two == O.scale(2)


def test_principal_norm_is_element_norm():
    rng = random.Random(11)
    for d in (5, 13, 40, 45):
        for _ in range(30):
            x = KElem.make(d, rng.randint(-20, 20), rng.randint(-20, 20))
            if x.is_zero():
                continue
            assert ideal_norm(principal_ideal(x)) == abs(x.norm())


# ---------------------------------------------------------------------------
# norms against the index-ratio oracle

def test_norm_matches_index_ratio_oracle():
    cases = [
        OIdeal.standard(13, 3, 0),
        OIdeal.standard(13, 3, 2).scale(Fraction(1, 2)),
        OIdeal.standard(5, 1, 0).scale(Fraction(3, 2)),
        OIdeal.standard(40, 2, 0),
        OIdeal.standard(40, 3, 0),
        OIdeal.standard(45, 3, 0),
    ]
    for I in cases:
        assert ideal_norm(I) == norm_oracle(I), I


def test_norm_multiplicative_on_proper_ideals():
    rng = random.Random(3)
    for d in (13, 40, 60, 145):
        tagged = ideals_of_norm_up_to(d, 12, primitive_only=True)
        ideals = [t.ideal for t in tagged]
        for _ in range(25):
            I, J = rng.choice(ideals), rng.choice(ideals)
            assert ideal_norm(multiply(I, J)) == ideal_norm(I) * ideal_norm(J)


# ---------------------------------------------------------------------------
# properness and inversion

def test_proper_iff_multiplier_ring_is_order():
    cases = []
    for d in (20, 45, 32):
        for n in range(1, 7):
            for m in range(n):
                e = (d * d - d) // 4
                if (m * m + m * d + e) % n == 0:
                    cases.append(OIdeal.standard(d, n, m))
    assert any(not is_proper(I) for I in cases)
    for I in cases:
        assert is_proper(I) == multiplier_ring_is_order(I), I
        # the fast criterion used by the enumerator
        assert is_proper(I) == ideal_to_form(I).is_primitive(), I


def test_proper_ideals_invert():
    for d in (5, 13, 40, 60, 377):
        for t in ideals_of_norm_up_to(d, 10, primitive_only=True):
            I = t.ideal
            assert is_proper(I)
            assert multiply(I, invert(I)) == unit_ideal(d)


def test_non_proper_ideal_fails_group_law():
    I = OIdeal.standard(45, 3, 0)  # conductor ideal piece, not proper
    assert not is_proper(I)
    assert multiply(I, invert(I)) != unit_ideal(45)


def test_conjugate_product_is_norm():
    for d in (13, 40, 145):
        for t in ideals_of_norm_up_to(d, 8, primitive_only=True):
            I = t.ideal
            NI = multiply(I, I.conjugate())
            assert NI == unit_ideal(d).scale(ideal_norm(I))


# ---------------------------------------------------------------------------
# ideal counting

def test_spec_small_counts():
    # 2 and 3 are inert in Q(sqrt 5)
    tagged = ideals_of_norm_up_to(5, 3)
    assert [t.ideal for t in tagged] == [unit_ideal(5)]
    assert ideals_of_norm_up_to(5, 0.5) == []


def test_prime_norm_counts_follow_jacobi():
    for d in (5, 13, 17, 29, 377):
        for p in (3, 7, 11, 13, 17, 19):
            if d % p == 0:
                continue
            count = sum(
                1 for t in ideals_of_norm_up_to(d, p, primitive_only=True)
                if t.ideal.norm() == p
            )
            assert count == 1 + jacobi(d, p), (d, p)


def test_imprimitive_multiples_listed_only_on_request():
    all_ideals = [t.ideal for t in ideals_of_norm_up_to(5, 4)]
    prim = [t.ideal for t in ideals_of_norm_up_to(5, 4, primitive_only=True)]
    assert unit_ideal(5).scale(2) in all_ideals
    assert unit_ideal(5).scale(2) not in prim
    assert set(prim) <= set(all_ideals)


# ---------------------------------------------------------------------------
# the form/ideal dictionary

def test_round_trip_form_ideal_form():
    for d in (5, 13, 40, 60, 145, 377):
        for q in reduced_forms(d):
            r = ideal_to_form(form_to_ideal(q))
            assert r.disc == d
            assert same_class(q, r), (q, r)


def test_round_trip_ideal_form_ideal():
    for d in (13, 40, 145):
        for t in ideals_of_norm_up_to(d, 10, primitive_only=True):
            I = t.ideal
            assert form_to_ideal(ideal_to_form(I)) == I


def test_equivalent_ideals_share_class():
    # scaling by a principal ideal leaves the class fixed
    rng = random.Random(5)
    for d in (13, 40, 229):
        for t in ideals_of_norm_up_to(d, 6, primitive_only=True):
            I = t.ideal
            for _ in range(5):
                x = KElem.make(d, rng.randint(-6, 6), rng.randint(-6, 6))
                if x.is_zero():
                    continue
                J = multiply(I, principal_ideal(x))
                assert ideal_class(J).canonical == ideal_class(I).canonical


def test_class_count_matches_form_classes():
    for d in (5, 8, 12, 13, 40, 60, 65, 145, 229, 316, 377, 20, 45, 48, 72):
        assert len(ideal_classes(d)) == class_number(d), d


def test_picard_group_pairs():
    for d in (40, 145, 229):
        pairs = picard_group(d)
        assert len(pairs) == class_number(d)
        for cl, I in pairs:
            assert is_proper(I)
            assert ideal_class(I).canonical == cl.canonical


def test_picard_group_axioms():
    for d in (40, 229, 145, 316):
        reps = ideal_classes(d)
        labels = [ideal_class(I).canonical for I in reps]
        index = {lab: i for i, lab in enumerate(labels)}
        h = len(reps)
        table = [[index[ideal_class(multiply(reps[i], reps[j])).canonical]
                  for j in range(h)] for i in range(h)]
        e = index[ideal_class(unit_ideal(d)).canonical]
        for i in range(h):
            assert table[i][e] == i
            assert table[e][i] == i
            assert sorted(table[i]) == list(range(h))  # inverses exist
            for j in range(h):
                assert table[i][j] == table[j][i]
                for k in range(h):
                    ij_k = table[table[i][j]][k]
                    i_jk = table[i][table[j][k]]
                    assert ij_k == i_jk


# ---------------------------------------------------------------------------
# embeddings

def test_embedding_squares_to_d():
    rng = random.Random(17)
    count = 0
    while count < 60:
        a = rng.randint(-9, 9)
        b = rng.randint(-9, 9)
        c = rng.randint(-9, 9)
        q = QuadForm(a, b, c)
        from geodesic_lab.forms import is_discriminant
        if a == 0 or c == 0 or not q.is_primitive() or not is_discriminant(q.disc):
            continue
        m = form_to_embedding(q).matrix
        m2 = ((m[0][0] ** 2 + m[0][1] * m[1][0],
               m[0][0] * m[0][1] + m[0][1] * m[1][1]),
              (m[1][0] * m[0][0] + m[1][1] * m[1][0],
               m[1][0] * m[0][1] + m[1][1] ** 2))
        assert m2 == ((q.disc, 0), (0, q.disc))
        assert m[0][0] + m[1][1] == 0
        count += 1


def test_embedding_examples():
    assert form_to_embedding(QuadForm(1, 1, -1)).matrix == ((1, -2), (-2, -1))
    k = 7
    assert form_to_embedding(QuadForm(1, 0, -k)).matrix == ((0, -2), (-2 * k, 0))
    assert form_to_embedding(QuadForm(1, 1, -94)).is_optimal()
    with pytest.raises(ValueError):
        form_to_embedding(QuadForm(2, 2, -2))


def test_iota_is_a_ring_map():
    d = 40
    q = QuadForm(1, 0, -10)
    emb = form_to_embedding(q)
    O = QuadOrder.of(d)

    def mat_mul(x, y):
        return ((x[0][0] * y[0][0] + x[0][1] * y[1][0],
                 x[0][0] * y[0][1] + x[0][1] * y[1][1]),
                (x[1][0] * y[0][0] + x[1][1] * y[1][0],
                 x[1][0] * y[0][1] + x[1][1] * y[1][1]))

    rng = random.Random(23)
    for _ in range(40):
        x = KElem.make(d, rng.randint(-9, 9), rng.randint(-9, 9))
        y = KElem.make(d, rng.randint(-9, 9), rng.randint(-9, 9))
        assert emb.iota(x * y) == mat_mul(emb.iota(x), emb.iota(y))
        sx, sy = emb.iota(x), emb.iota(y)
        ssum = tuple(tuple(sx[i][j] + sy[i][j] for j in range(2)) for i in range(2))
        assert emb.iota(x + y) == ssum
        # integral elements map to integral matrices
        assert all(v.denominator == 1 for row in sx for v in row)
    # the square root of d maps to the trace-zero matrix itself
    assert emb.iota(O.sqrt_d) == tuple(tuple(Fraction(v) for v in row)
                                       for row in emb.matrix)


def test_optimality_detects_superorders():
    # the scaled form 2x^2+2xy-2y^2 has disc 20 = 5*2^2; its embedding
    # extends to the maximal order of disc 5
    bad = Embedding(20, ((2, -4), (-4, -2)))
    assert not bad.is_optimal()
    good = form_to_embedding(QuadForm(1, 0, -10))
    assert good.is_optimal()
    for d in (13, 229):
        for q in reduced_forms(d)[:4]:
            assert form_to_embedding(q).is_optimal()
