"""Integral binary quadratic forms with positive nonsquare discriminant.

Everything here is exact integer arithmetic.  A form (a, b, c) stands for
a x^2 + b x y + c y^2 with discriminant d = b^2 - 4ac > 0 and d not a
square, the indefinite case.  GL2(Z) acts by

    (g . q)(x, y) = q((x, y) g) / det g ,

which preserves the discriminant and the content gcd(a, b, c).

The classical right-neighbor step rho maps a form to an equivalent one and
eventually enters a cycle of *reduced* forms (0 < b < sqrt d and
sqrt d - b < 2|a| < sqrt d + b).  Cycles are SL2(Z)-classes; merging each
cycle with its image under (a, b, c) -> (-a, b, -c) gives GL2(Z)-classes,
which is the notion of class used throughout this package (one class per
closed geodesic).

Fundamental units of the order of discriminant d are computed two
independent ways and cross-checked exactly:

* walking the principal cycle once and accumulating the step matrices,
  which yields the fundamental automorph and hence the minimal norm-+1
  solution of t^2 - d u^2 = 4;
* the continued fraction of ((d mod 2) + sqrt d)/2 with exact (P, Q)
  recurrences, whose period matrix gives the minimal unit > 1 of either
  norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt

import mpmath
import sympy


def is_square(n: int) -> bool:
    if n < 0:
        return False
    r = isqrt(n)
    return r * r == n


def is_discriminant(d: int) -> bool:
    """True when d is a positive nonsquare integer that is 0 or 1 mod 4."""
    return d > 0 and d % 4 in (0, 1) and not is_square(d)


def check_disc(d: int) -> None:
    """Reject d unless it is a positive nonsquare discriminant."""
    if d % 4 not in (0, 1):
        raise ValueError(f"d={d} is not 0 or 1 mod 4")
    if d <= 0:
        raise ValueError(f"d={d} is not positive")
    if is_square(d):
        raise ValueError(f"d={d} is a square")


@dataclass(frozen=True)
class QuadForm:
    a: int
    b: int
    c: int

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def content(self) -> int:
        return gcd(gcd(abs(self.a), abs(self.b)), abs(self.c))

    def is_primitive(self) -> bool:
        return self.content == 1

    def mirror(self) -> "QuadForm":
        # image under conjugation by diag(1, -1), det = -1
        return QuadForm(-self.a, self.b, -self.c)

    def neg(self) -> "QuadForm":
        return QuadForm(-self.a, -self.b, -self.c)

    def __call__(self, x: int, y: int) -> int:
        return self.a * x * x + self.b * x * y + self.c * y * y

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def __repr__(self):
        return f"QuadForm({self.a}, {self.b}, {self.c})"


def gl2_act(g, q: QuadForm) -> QuadForm:
    """Apply g in GL2(Z) (nested pairs or 2x2 array) to q, row-vector action."""
    (g00, g01), (g10, g11) = (int(g[0][0]), int(g[0][1])), (int(g[1][0]), int(g[1][1]))
    det = g00 * g11 - g01 * g10
    if det not in (1, -1):
        raise ValueError("matrix not in GL2(Z)")
    a2 = q(g00, g01)
    c2 = q(g10, g11)
    b2 = 2 * q.a * g00 * g10 + q.b * (g00 * g11 + g01 * g10) + 2 * q.c * g01 * g11
    return QuadForm(a2 // det, b2 // det, c2 // det)


def mat_mul(m, n):
    return (
        (m[0][0] * n[0][0] + m[0][1] * n[1][0], m[0][0] * n[0][1] + m[0][1] * n[1][1]),
        (m[1][0] * n[0][0] + m[1][1] * n[1][0], m[1][0] * n[0][1] + m[1][1] * n[1][1]),
    )


MAT_ID = ((1, 0), (0, 1))


@dataclass(frozen=True)
class Discriminant:
    """A discriminant d > 0 together with its conductor factorization d = d0 f^2."""

    d: int
    conductor: int
    fundamental_part: int

    @staticmethod
    def of(d: int) -> "Discriminant":
        check_disc(d)
        f = 1
        # largest f with f^2 | d and d/f^2 still a discriminant
        sq = 1
        for p, e in sympy.factorint(d).items():
            sq *= p ** (e // 2)
        for g in sorted(sympy.divisors(sq), reverse=True):
            if (d // (g * g)) % 4 in (0, 1):
                f = g
                break
        return Discriminant(d=d, conductor=f, fundamental_part=d // (f * f))

    @property
    def is_fundamental(self) -> bool:
        return self.conductor == 1


def is_fundamental(d: int) -> bool:
    return Discriminant.of(d).is_fundamental


def is_reduced(q: QuadForm) -> bool:
    """0 < b < sqrt d and sqrt d - b < 2|a| < sqrt d + b, tested exactly."""
    d = q.disc
    check_disc(d)
    b = q.b
    if b <= 0 or b * b >= d:
        return False
    ta = 2 * abs(q.a)
    if d >= (ta + b) * (ta + b):  # fails sqrt d < 2|a| + b
        return False
    if ta > b and (ta - b) * (ta - b) >= d:  # fails 2|a| - b < sqrt d
        return False
    return True


def _rho_r(b: int, c: int, d: int) -> int:
    """Target middle coefficient for the right-neighbor step at (., b, c)."""
    ac = abs(c)
    s = isqrt(d)
    if ac > s:
        r = (-b) % (2 * ac)
        if r > ac:
            r -= 2 * ac
    else:
        r = s - ((s + b) % (2 * ac))
    return r


def rho(q: QuadForm) -> QuadForm:
    """Right-neighbor reduction step; a bijection on reduced forms."""
    d = q.disc
    r = _rho_r(q.b, q.c, d)
    return QuadForm(q.c, r, (r * r - d) // (4 * q.c))


def rho_with_transform(q: QuadForm) -> tuple[QuadForm, tuple]:
    """rho(q) together with the SL2(Z) step matrix g, rho(q) = g . q."""
    d = q.disc
    r = _rho_r(q.b, q.c, d)
    s = -(q.b + r) // (2 * q.c)
    g = ((0, -1), (1, s))
    return QuadForm(q.c, r, (r * r - d) // (4 * q.c)), g


def reduce_with_transform(q: QuadForm) -> tuple[QuadForm, tuple]:
    """Some reduced form in the SL2-class of q, with the transform achieving it."""
    check_disc(q.disc)
    if q.c == 0:
        # disc would be a square; guarded by check_disc
        raise ValueError("degenerate form")
    g = MAT_ID
    cur = q
    # |c| strictly decreases until the cycle regime is reached, so this stops
    for _ in range(10 * (cur.disc.bit_length() + abs(cur.a).bit_length() + 4)):
        if is_reduced(cur):
            return cur, g
        cur, step = rho_with_transform(cur)
        g = mat_mul(step, g)
    raise RuntimeError(f"reduction did not terminate for {q}")


def reduction_cycle(q: QuadForm) -> list[QuadForm]:
    """The full cycle of reduced forms in the SL2-class of q."""
    start, _ = reduce_with_transform(q)
    cycle = [start]
    cur = rho(start)
    while cur != start:
        cycle.append(cur)
        cur = rho(cur)
    return cycle


@dataclass(frozen=True)
class FormClass:
    """A GL2(Z)-class: one reduction cycle plus its mirror.

    `canonical` is the lexicographically least (a, b, c) over the cycle and
    the mirrored cycle, so GL2-equivalent forms share it.
    """

    d: int
    canonical: QuadForm
    cycle: tuple[QuadForm, ...]

    @property
    def cycle_length(self) -> int:
        return len(self.cycle)


def form_class(q: QuadForm) -> FormClass:
    cyc = reduction_cycle(q)
    reps = [f.as_tuple() for f in cyc] + [f.mirror().as_tuple() for f in cyc]
    return FormClass(d=q.disc, canonical=QuadForm(*min(reps)), cycle=tuple(cyc))


def canonical_form(q: QuadForm) -> QuadForm:
    return form_class(q).canonical


def same_class(q1: QuadForm, q2: QuadForm) -> bool:
    return canonical_form(q1) == canonical_form(q2)


def reduced_forms(d: int, primitive_only: bool = True) -> list[QuadForm]:
    """All reduced forms of discriminant d, by direct enumeration."""
    check_disc(d)
    out = []
    b = 2 - (d % 2)
    while b * b < d:
        m4 = d - b * b
        if m4 % 4 == 0:
            m = m4 // 4
            for a1 in sympy.divisors(m):
                c1 = m // a1
                ta = 2 * a1
                if d >= (ta + b) * (ta + b):
                    continue
                if ta > b and (ta - b) * (ta - b) >= d:
                    continue
                for f in (QuadForm(a1, b, -c1), QuadForm(-a1, b, c1)):
                    if not primitive_only or f.is_primitive():
                        out.append(f)
        b += 2
    return out


def enumerate_classes(d: int) -> list[FormClass]:
    """GL2(Z)-classes of primitive forms of discriminant d, sorted by canonical rep."""
    forms = reduced_forms(d, primitive_only=True)
    seen: set[tuple[int, int, int]] = set()
    classes = []
    for f in forms:
        if f.as_tuple() in seen:
            continue
        cyc = reduction_cycle(f)
        for g in cyc:
            seen.add(g.as_tuple())
            seen.add(g.mirror().as_tuple())
        reps = [x.as_tuple() for x in cyc] + [x.mirror().as_tuple() for x in cyc]
        classes.append(FormClass(d=d, canonical=QuadForm(*min(reps)), cycle=tuple(cyc)))
    classes.sort(key=lambda c: c.canonical.as_tuple())
    return classes


def class_number(d: int) -> int:
    return len(enumerate_classes(d))


def principal_form(d: int) -> QuadForm:
    check_disc(d)
    s = d % 2
    return QuadForm(1, s, (s * s - d) // 4)


# ---------------------------------------------------------------------------
# fundamental units


def _cycle_automorph(d: int) -> tuple[int, int, bool]:
    """Walk the principal cycle once; return (t, u) with t^2 - d u^2 = 4 minimal
    positive, plus whether the negated principal form lies in its own cycle
    (equivalent to the fundamental unit having norm -1)."""
    q0, _ = reduce_with_transform(principal_form(d))
    g = MAT_ID
    cur = q0
    cycle_keys = {q0.as_tuple()}
    while True:
        cur, step = rho_with_transform(cur)
        g = mat_mul(step, g)
        if cur == q0:
            break
        cycle_keys.add(cur.as_tuple())
    if gl2_act(g, q0) != q0:
        raise RuntimeError("cycle walk did not produce an automorph")
    # with the row-vector action the stabilizer of (a, b, c) is
    # +-[[(t-bu)/2, au], [-cu, (t+bu)/2]] for t^2 - d u^2 = 4
    t = abs(g[0][0] + g[1][1])
    u01 = g[0][1]
    if u01 % q0.a != 0:
        raise RuntimeError("automorph shape unexpected")
    u = abs(u01 // q0.a)
    if t * t - d * u * u != 4:
        raise RuntimeError("automorph does not solve the norm-+1 equation")
    neg_red, _ = reduce_with_transform(q0.neg())
    return t, u, neg_red.as_tuple() in cycle_keys


def _cf_unit(d: int) -> tuple[int, int, int]:
    """Minimal unit > 1 of the order of discriminant d via the continued
    fraction of ((d mod 2) + sqrt d)/2.  Returns (t0, u0, norm) for the unit
    (t0 + u0 sqrt d)/2 with t0^2 - d u0^2 = 4 * norm, norm in {+1, -1}."""
    check_disc(d)
    sd = isqrt(d)
    P, Q = d % 2, 2
    seen: dict[tuple[int, int], int] = {}
    partial: list[int] = []
    states: list[tuple[int, int]] = []
    while (P, Q) not in seen:
        seen[(P, Q)] = len(partial)
        states.append((P, Q))
        a = (P + sd) // Q
        partial.append(a)
        P = a * Q - P
        Q = (d - P * P) // Q
        if Q <= 0:
            raise RuntimeError(f"continued fraction left the positive regime for d={d}")
    k = seen[(P, Q)]
    # product of [[a,1],[1,0]] over one period, starting at the first recurrent state
    m = MAT_ID
    for a in partial[k:]:
        m = mat_mul(m, ((a, 1), (1, 0)))
    qn, qn1 = m[1][0], m[1][1]
    Pk, Qk = states[k]
    # unit = qn * alpha_k + qn1 with alpha_k = (Pk + sqrt d)/Qk
    x = Fraction(qn * Pk + qn1 * Qk, Qk)  # rational part
    y = Fraction(qn, Qk)  # sqrt d part
    t0, u0 = 2 * x, 2 * y
    if t0.denominator != 1 or u0.denominator != 1:
        raise RuntimeError("period unit is not in the order")
    t0, u0 = int(t0), int(u0)
    nrm = t0 * t0 - d * u0 * u0
    if nrm not in (4, -4):
        raise RuntimeError("period element is not a unit")
    period = len(partial) - k
    if (nrm // 4) != (-1) ** period:
        raise RuntimeError("unit norm disagrees with period parity")
    return t0, u0, nrm // 4


def _log_unit(t: int, u: int, d: int) -> float:
    """log((t + u sqrt d)/2) at high precision, safe for huge t, u."""
    with mpmath.workdps(60):
        val = mpmath.log((mpmath.mpf(t) + mpmath.mpf(u) * mpmath.sqrt(d)) / 2)
        return float(val)


@dataclass(frozen=True)
class PellData:
    """Fundamental unit data for the order of discriminant d.

    (t, u): minimal positive solution of t^2 - d u^2 = 4 (norm +1).
    (t_min, u_min): minimal unit > 1 of either norm; unit_norm is its norm.
    regulator: log of the minimal unit (continued-fraction route).
    regulator_cycle: same quantity, computed from the principal-cycle walk.
    """

    d: int
    t: int
    u: int
    t_min: int
    u_min: int
    unit_norm: int
    regulator: float
    regulator_cycle: float

    @property
    def period(self) -> float:
        """Length of each closed geodesic of discriminant d, time-one-map units."""
        return 2.0 * _log_unit(self.t, self.u, self.d)

    def eps_plus_float(self) -> float:
        return math.exp(self.period / 2)

    def automorph(self, q: QuadForm) -> tuple:
        """Generator of the proper automorphism group of q (up to sign)."""
        if q.disc != self.d:
            raise ValueError("discriminant mismatch")
        t, u, b = self.t, self.u, q.b
        if (t - b * u) % 2 != 0:
            raise RuntimeError("parity violation in automorph")
        return ((t - b * u) // 2, q.a * u), (-q.c * u, (t + b * u) // 2)


@lru_cache(maxsize=None)
def pell_fundamental(d: int) -> PellData:
    """Fundamental unit of O_d by two independent routes, cross-checked exactly."""
    check_disc(d)
    t, u, neg_norm = _cycle_automorph(d)
    t0, u0, unit_norm = _cf_unit(d)
    # exact agreement between the two routes
    if unit_norm == 1:
        ok = (t0, u0) == (t, u)
    else:
        ok = t == (t0 * t0 + d * u0 * u0) // 2 and u == t0 * u0
    if not ok:
        raise RuntimeError(f"unit routes disagree for d={d}")
    if neg_norm != (unit_norm == -1):
        raise RuntimeError(f"norm detection routes disagree for d={d}")
    if unit_norm == -1:
        tc = isqrt(t - 2)
        uc = u // tc if tc else 0
        if tc * tc != t - 2 or uc * tc != u or tc * tc - d * uc * uc != -4:
            raise RuntimeError("cycle route cannot recover the norm -1 unit")
        reg_cycle = _log_unit(tc, uc, d)
    else:
        reg_cycle = _log_unit(t, u, d)
    return PellData(
        d=d,
        t=t,
        u=u,
        t_min=t0,
        u_min=u0,
        unit_norm=unit_norm,
        regulator=_log_unit(t0, u0, d),
        regulator_cycle=reg_cycle,
    )


# ---------------------------------------------------------------------------
# exact quadratic irrationals (geodesic endpoints)


@dataclass(frozen=True)
class QuadIrr:
    """(p + q sqrt d)/r with integer p, q, r, r > 0, gcd(p, q, r) = 1."""

    p: int
    q: int
    r: int
    d: int

    @staticmethod
    def make(p: int, q: int, r: int, d: int) -> "QuadIrr":
        if r == 0:
            raise ValueError("zero denominator")
        check_disc(d)
        if r < 0:
            p, q, r = -p, -q, -r
        g = gcd(gcd(abs(p), abs(q)), r)
        return QuadIrr(p // g, q // g, r // g, d)

    def conjugate(self) -> "QuadIrr":
        return QuadIrr(self.p, -self.q, self.r, self.d)

    def __float__(self) -> float:
        return (self.p + self.q * math.sqrt(self.d)) / self.r


def endpoints(q: QuadForm) -> tuple[QuadIrr, QuadIrr]:
    """Fixed points (-b +- sqrt d)/(2a) of the geodesic attached to q,
    attracting first (the expanding eigendirection of the automorph)."""
    d = q.disc
    check_disc(d)
    if q.a == 0:
        raise ValueError("a = 0 never happens for nonsquare discriminants")
    return (
        QuadIrr.make(-q.b, 1, 2 * q.a, d),
        QuadIrr.make(-q.b, -1, 2 * q.a, d),
    )
