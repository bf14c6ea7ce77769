"""Tests for exact indefinite binary quadratic form arithmetic.

The oracles here are deliberately independent of the reduction theory under
test: class counts come from a union-find closure over a coefficient box
under the elementary SL2 generators, and Pell solutions come from a direct
scan over u.  Reduction, cycles and automorphs are then checked against
those, plus a handful of classical values that can be verified by hand.
"""

import math
from fractions import Fraction
from math import isqrt

import mpmath
import pytest

import geodesic_lab.forms as F
from geodesic_lab.forms import (
    Discriminant,
    QuadForm,
    class_number,
    enumerate_classes,
    endpoints,
    form_class,
    gl2_act,
    is_discriminant,
    is_fundamental,
    is_reduced,
    mat_mul,
    pell_fundamental,
    principal_form,
    reduce_with_transform,
    reduced_forms,
    reduction_cycle,
    rho,
    rho_with_transform,
)

T = ((1, 1), (0, 1))
T_INV = ((1, -1), (0, 1))
S = ((0, -1), (1, 0))


# ---------------------------------------------------------------------------
# oracles

def brute_pell(d, u_bound=200_000):
    """Smallest solutions of t^2 - d u^2 = 4 and of |t^2 - d u^2| = 4.

    Returns (t, u, t_min, u_min, norm) like pell_fundamental, found by a
    plain scan over u.
    """
    plus = minus = None
    for u in range(1, u_bound):
        s = d * u * u + 4
        r = isqrt(s)
        if r * r == s and plus is None:
            plus = (r, u)
        s = d * u * u - 4
        if s > 0:
            r = isqrt(s)
            if r * r == s and minus is None:
                minus = (r, u)
        if plus is not None:
            # a -4 solution, if any, has smaller u than the first +4 one
            break
    if plus is None:
        raise RuntimeError("u_bound too small for d = %d" % d)
    # for d = 5 both solutions have u = 1, so break ties on t
    if minus is not None and (minus[1], minus[0]) < (plus[1], plus[0]):
        return plus[0], plus[1], minus[0], minus[1], -1
    return plus[0], plus[1], plus[0], plus[1], 1


def box_classes(d, bound):
    """Union-find over all disc-d forms with |a|,|c| <= bound, |b| <= 2*bound.

    Forms are joined when an elementary generator (T, T^-1 or S) maps one to
    another inside the box, and when the mirror map does.  Returns the pair
    (sl2_components, gl2_components) counted over components that contain at
    least one reduced form, which is what makes the count box-stable.
    """
    forms = []
    for a in range(-bound, bound + 1):
        if a == 0:
            continue
        for b in range(-2 * bound, 2 * bound + 1):
            num = b * b - d
            if num % (4 * a) != 0:
                continue
            c = num // (4 * a)
            if c == 0 or abs(c) > bound:
                continue
            q = QuadForm(a, b, c)
            if q.is_primitive():
                forms.append(q)
    index = {q: i for i, q in enumerate(forms)}
    parent = list(range(len(forms)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj

    def sweep(gens, extra_mirror):
        for q, i in index.items():
            for g in gens:
                img = gl2_act(g, q)
                j = index.get(img)
                if j is not None:
                    union(i, j)
            if extra_mirror:
                j = index.get(q.mirror())
                if j is not None:
                    union(i, j)

    sweep((T, T_INV, S), extra_mirror=False)
    reduced = [i for i, q in enumerate(forms) if is_reduced(q)]
    sl2 = len({find(i) for i in reduced})
    sweep((), extra_mirror=True)
    gl2 = len({find(i) for i in reduced})
    return sl2, gl2


def oracle_class_number(d):
    """Box-stable GL2 class count: grow the box until two sizes agree."""
    bound = max(isqrt(d) + 2, 8)
    prev = None
    for _ in range(6):
        cur = box_classes(d, bound)
        if cur == prev:
            return cur
        prev = cur
        bound *= 2
    raise RuntimeError("class count did not stabilise for d = %d" % d)


def reduced_oracle(q):
    """Textbook definition |sqrt(d) - 2|a|| < b < sqrt(d), via mpmath."""
    d = q.disc
    with mpmath.workdps(50):
        sd = mpmath.sqrt(d)
        return bool(0 < q.b and q.b < sd and abs(sd - 2 * abs(q.a)) < q.b)


# ---------------------------------------------------------------------------
# discriminants

def test_is_discriminant():
    good = [5, 8, 12, 13, 17, 20, 21, 24, 45, 377, 1000001]
    bad = [0, 1, 4, 9, 16, 25, 7, 10, 11, -3, -4, 6, 14, 15]
    for d in good:
        assert is_discriminant(d), d
    for d in bad:
        assert not is_discriminant(d), d


def test_discriminant_conductor():
    for d, d0, f in [(5, 5, 1), (20, 5, 2), (45, 5, 3), (8, 8, 1),
                     (32, 8, 2), (72, 8, 3), (48, 12, 2), (52, 13, 2),
                     (377, 377, 1), (1000001, 1000001, 1)]:
        disc = Discriminant.of(d)
        assert (disc.fundamental_part, disc.conductor) == (d0, f), d
        assert disc.fundamental_part * disc.conductor ** 2 == d
    assert is_fundamental(5) and is_fundamental(8) and is_fundamental(377)
    assert not is_fundamental(20) and not is_fundamental(45)


def test_squarish_discriminants_rejected():
    for d in (4, 9, 16, 36, 100):
        with pytest.raises(ValueError):
            F.check_disc(d)


# ---------------------------------------------------------------------------
# the GL2 action

def test_action_is_left_action():
    q = QuadForm(3, 11, -5)
    g = ((2, 1), (1, 1))
    h = ((1, -3), (0, 1))
    assert gl2_act(mat_mul(g, h), q) == gl2_act(g, gl2_act(h, q))


def test_action_preserves_disc_and_content():
    q = QuadForm(6, 2, -4)
    for g in (T, S, ((1, 2), (2, 5)), ((0, 1), (1, 0))):
        r = gl2_act(g, q)
        assert r.disc == q.disc
        assert r.content == q.content


def test_mirror_is_det_minus_one_image():
    # (a,b,c) -> (-a,b,-c) is the action of diag(1,-1)
    q = QuadForm(2, 17, -11)
    assert gl2_act(((1, 0), (0, -1)), q) == q.mirror()


def test_form_evaluation_matches_action():
    q = QuadForm(3, -7, 2)
    g = ((2, 3), (1, 2))
    x, y = 5, -4
    gx, gy = x * g[0][0] + y * g[1][0], x * g[0][1] + y * g[1][1]
    assert gl2_act(g, q)(x, y) == q(gx, gy)


# ---------------------------------------------------------------------------
# reduction

def test_is_reduced_matches_inequalities():
    for d in (5, 8, 13, 40, 60, 377):
        for a in range(-12, 13):
            if a == 0:
                continue
            for b in range(-25, 26):
                num = b * b - d
                if num % (4 * a):
                    continue
                c = num // (4 * a)
                if c == 0:
                    continue
                q = QuadForm(a, b, c)
                assert is_reduced(q) == reduced_oracle(q), q


def test_reduce_lands_on_reduced_form():
    import random
    rng = random.Random(20260823)
    for _ in range(300):
        a = rng.randint(-40, 40) or 1
        b = rng.randint(-80, 80)
        c = rng.randint(-40, 40) or -1
        q = QuadForm(a, b, c)
        if not is_discriminant(q.disc):
            continue
        r, g = reduce_with_transform(q)
        assert is_reduced(r)
        assert gl2_act(g, q) == r
        assert g[0][0] * g[1][1] - g[0][1] * g[1][0] == 1


def test_rho_preserves_reduced_set():
    for d in (5, 8, 13, 40, 377, 1000001):
        qs = reduced_forms(d)
        for q in qs:
            r = rho(q)
            assert is_reduced(r), (q, r)
            assert r.disc == d
        # rho permutes the reduced forms
        assert len({rho(q) for q in qs}) == len(qs)


def test_rho_transform_is_exact():
    for d in (13, 40, 377):
        for q in reduced_forms(d):
            r, g = rho_with_transform(q)
            assert r == rho(q)
            assert gl2_act(g, q) == r


def test_cycles_partition_reduced_forms():
    for d in (5, 8, 12, 13, 40, 60, 377):
        qs = set(reduced_forms(d))
        seen = set()
        n_cycles = 0
        while qs - seen:
            start = min(qs - seen, key=lambda q: q.as_tuple())
            cyc = reduction_cycle(start)
            assert seen.isdisjoint(cyc)
            seen.update(cyc)
            n_cycles += 1
            # even length, alternating sign of the leading coefficient
            assert len(cyc) % 2 == 0
            for q, r in zip(cyc, cyc[1:] + cyc[:1]):
                assert q.a * r.a < 0
                assert rho(q) == r
        assert seen == qs


def test_377_cycle_structure():
    # 20 reduced forms in 4 rho-cycles, paired by the mirror into 2 classes
    qs = reduced_forms(377)
    assert len(qs) == 20
    lengths = []
    seen = set()
    for q in qs:
        if q in seen:
            continue
        cyc = reduction_cycle(q)
        seen.update(cyc)
        lengths.append(len(cyc))
    assert sorted(lengths) == [4, 4, 6, 6]
    assert class_number(377) == 2


# ---------------------------------------------------------------------------
# classes

def test_class_number_against_box_oracle():
    for d in (5, 8, 12, 13, 17, 21, 24, 40, 60, 65, 85, 105, 120, 136, 145):
        sl2, gl2 = oracle_class_number(d)
        assert class_number(d) == gl2, d
        classes = enumerate_classes(d)
        assert len(classes) == gl2
        merged = sum(
            1 for cl in classes
            if cl.canonical.mirror() in set(reduction_cycle(cl.canonical))
        )
        # classes whose mirror lands back in the same rho-cycle are single
        # SL2 classes; the others split in two
        assert sl2 == 2 * gl2 - merged


def test_classical_class_numbers():
    table = {5: 1, 8: 1, 12: 1, 13: 1, 17: 1, 21: 1, 24: 1, 28: 1,
             29: 1, 33: 1, 40: 2, 60: 2, 65: 2, 85: 2, 104: 2, 105: 2,
             120: 2, 136: 2, 145: 4, 229: 3, 257: 3, 316: 3, 321: 3,
             469: 3, 20: 1, 45: 1}
    for d, h in table.items():
        assert class_number(d) == h, d


def test_form_class_canonical_is_class_invariant():
    for d in (40, 65, 377):
        for q in reduced_forms(d):
            cl = form_class(q)
            assert form_class(cl.canonical).canonical == cl.canonical
            # acting by any SL2 element leaves the canonical form alone
            moved = gl2_act(((2, 1), (1, 1)), q)
            assert form_class(moved).canonical == cl.canonical
            assert form_class(q.mirror()).canonical == cl.canonical


def test_principal_form():
    for d in (5, 8, 13, 40, 377):
        p = principal_form(d)
        assert p.disc == d
        assert p.a == 1
        cans = {cl.canonical for cl in enumerate_classes(d)}
        assert form_class(p).canonical in cans


def test_imprimitive_forms_excluded_by_default():
    # disc 20 carries the imprimitive form 2x^2 - 2y^2 scaled from disc 5
    qs = reduced_forms(20)
    assert all(q.is_primitive() for q in qs)
    all_qs = reduced_forms(20, primitive_only=False)
    assert any(not q.is_primitive() for q in all_qs)
    assert set(qs) < set(all_qs)


# ---------------------------------------------------------------------------
# Pell / units

@pytest.mark.parametrize("d", [5, 8, 12, 13, 17, 21, 24, 29, 40, 44, 53,
                               61, 76, 92, 124, 136, 152, 377])
def test_pell_against_brute_force(d):
    t, u, t_min, u_min, norm = brute_pell(d)
    p = pell_fundamental(d)
    assert (p.t, p.u) == (t, u)
    assert (p.t_min, p.u_min) == (t_min, u_min)
    assert p.unit_norm == norm


def test_pell_classical_values():
    assert (pell_fundamental(5).t_min, pell_fundamental(5).u_min) == (1, 1)
    assert pell_fundamental(5).unit_norm == -1
    assert (pell_fundamental(8).t_min, pell_fundamental(8).u_min) == (2, 1)
    assert (pell_fundamental(61).t_min, pell_fundamental(61).u_min) == (39, 5)
    assert (pell_fundamental(377).t, pell_fundamental(377).u) == (466, 24)
    assert pell_fundamental(377).unit_norm == 1


def test_pell_identity_and_regulator():
    for d in (5, 13, 61, 377, 1000001):
        p = pell_fundamental(d)
        assert p.t * p.t - d * p.u * p.u == 4
        assert p.t_min ** 2 - d * p.u_min ** 2 == 4 * p.unit_norm
        with mpmath.workdps(40):
            reg = mpmath.log((p.t_min + p.u_min * mpmath.sqrt(d)) / 2)
            assert abs(p.regulator - float(reg)) < 1e-12
        assert abs(p.regulator - p.regulator_cycle) < 1e-9
        # the closed geodesic period is twice the log of the norm-+1 unit
        with mpmath.workdps(40):
            per = 2 * mpmath.log((p.t + p.u * mpmath.sqrt(d)) / 2)
            assert abs(p.period - float(per)) < 1e-12


def test_automorph_fixes_every_reduced_form():
    for d in (5, 13, 40, 377):
        p = pell_fundamental(d)
        for q in reduced_forms(d):
            g = p.automorph(q)
            assert gl2_act(g, q) == q
            assert g[0][0] * g[1][1] - g[0][1] * g[1][0] == 1
            assert abs(g[0][0] + g[1][1]) == p.t


def test_automorph_is_the_full_cycle_word():
    # walking the rho-cycle once accumulates the automorph, up to sign
    for d in (13, 40, 377):
        q0, _ = reduce_with_transform(principal_form(d))
        g = F.MAT_ID
        q = q0
        for _ in range(len(reduction_cycle(q0))):
            q, step = rho_with_transform(q)
            g = mat_mul(step, g)
        assert q == q0
        aut = pell_fundamental(d).automorph(q0)
        assert g in (aut, tuple(tuple(-x for x in row) for row in aut))


# ---------------------------------------------------------------------------
# quadratic irrationals

def test_endpoints_are_roots():
    for d in (5, 13, 377):
        for q in reduced_forms(d)[:6]:
            w_plus, w_minus = endpoints(q)
            for w in (w_plus, w_minus):
                x = float(w)
                assert abs(q.a * x * x + q.b * x + q.c) < 1e-8
            # reduced forms have ac < 0, so the roots straddle zero
            assert float(w_plus) * float(w_minus) < 0


def test_quad_irr_normalisation():
    w = F.QuadIrr.make(2, -4, -6, 5)
    v = F.QuadIrr.make(-1, 2, 3, 5)
    assert math.isclose(float(w), float(v))
    assert w == v
    assert w.conjugate().conjugate() == w


def test_endpoints_transform_with_the_action():
    # a root w' of g.q satisfies q((w',1)g) = 0, so the moebius map
    # w' -> (g00 w' + g10)/(g01 w' + g11) carries roots of g.q to roots of q
    q = QuadForm(3, 11, -5)
    g = ((2, 1), (1, 1))
    r = gl2_act(g, q)
    roots_q = sorted(float(w) for w in endpoints(q))
    roots_r = (float(w) for w in endpoints(r))
    (g00, g01), (g10, g11) = g
    moved = sorted((g00 * x + g10) / (g01 * x + g11) for x in roots_r)
    for x, y in zip(moved, roots_q):
        assert math.isclose(x, y, abs_tol=1e-9)
