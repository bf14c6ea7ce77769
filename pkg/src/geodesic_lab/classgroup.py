"""Ideals of real quadratic orders and the form/ideal/embedding dictionary.

The order of discriminant d is O_d = Z[w] with w = (d + sqrt d)/2, so
w^2 = d*w - e where e = (d^2 - d)/4.  Every fractional O_d-ideal (a rank-2
lattice in K = Q(sqrt d) closed under multiplication by w) can be written
uniquely as s*(Z*n + Z*(m + w)) with s a positive rational, n >= 1,
0 <= m < n and n | N(m + w); ideals are stored in that standard form, so
equality of ideals is equality of the triple (s, n, m).

The dictionary with binary quadratic forms sends Z*n + Z*(m + w) to the
form (n, 2m + d, N(m + w)/n) and a primitive form (a, b, c) with a > 0 to
n = a, m = (b - d)/2 mod a.  These are mutually inverse on standard data,
and on classes they identify GL2(Z)-classes of primitive forms with the
Picard group of O_d (ideals modulo scaling by K^x).  Properness (the
multiplier ring being exactly O_d) is decided through I * conj(I) = N(I)*O.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import gcd, isqrt
from typing import Iterable, NamedTuple

import sympy

from .forms import (
    Discriminant,
    FormClass,
    QuadForm,
    check_disc,
    form_class,
    pell_fundamental,
)


def _e(d: int) -> int:
    # w^2 = d*w - e
    return (d * d - d) // 4


@dataclass(frozen=True)
class KElem:
    """Element p + q*w of Q(sqrt d), coordinates in the basis (1, w)."""

    d: int
    p: Fraction
    q: Fraction

    @staticmethod
    def make(d: int, p, q=0) -> "KElem":
        check_disc(d)
        return KElem(d, Fraction(p), Fraction(q))

    def __add__(self, other: "KElem") -> "KElem":
        self._match(other)
        return KElem(self.d, self.p + other.p, self.q + other.q)

    def __sub__(self, other: "KElem") -> "KElem":
        self._match(other)
        return KElem(self.d, self.p - other.p, self.q - other.q)

    def __neg__(self) -> "KElem":
        return KElem(self.d, -self.p, -self.q)

    def __mul__(self, other):
        if isinstance(other, KElem):
            self._match(other)
            p1, q1, p2, q2 = self.p, self.q, other.p, other.q
            return KElem(
                self.d,
                p1 * p2 - _e(self.d) * q1 * q2,
                p1 * q2 + p2 * q1 + self.d * q1 * q2,
            )
        return KElem(self.d, self.p * Fraction(other), self.q * Fraction(other))

    __rmul__ = __mul__

    def conjugate(self) -> "KElem":
        # w + conj(w) = d
        return KElem(self.d, self.p + self.q * self.d, -self.q)

    def norm(self) -> Fraction:
        return self.p * self.p + self.p * self.q * self.d + self.q * self.q * _e(self.d)

    def trace(self) -> Fraction:
        return 2 * self.p + self.q * self.d

    def is_integral(self) -> bool:
        return self.p.denominator == 1 and self.q.denominator == 1

    def is_zero(self) -> bool:
        return self.p == 0 and self.q == 0

    def __float__(self) -> float:
        import math
        return float(self.p) + float(self.q) * (self.d + math.sqrt(self.d)) / 2

    def _match(self, other: "KElem") -> None:
        if self.d != other.d:
            raise ValueError("elements of different fields")


@dataclass(frozen=True)
class QuadOrder:
    """The order Z[w] of discriminant d."""

    d: int

    @staticmethod
    def of(d: int) -> "QuadOrder":
        check_disc(d)
        return QuadOrder(d)

    @property
    def e(self) -> int:
        return _e(self.d)

    @property
    def one(self) -> KElem:
        return KElem(self.d, Fraction(1), Fraction(0))

    @property
    def omega(self) -> KElem:
        return KElem(self.d, Fraction(0), Fraction(1))

    @property
    def sqrt_d(self) -> KElem:
        # sqrt d = 2w - d
        return KElem(self.d, Fraction(-self.d), Fraction(2))

    def contains(self, x: KElem) -> bool:
        return x.d == self.d and x.is_integral()

    def unit_ideal(self) -> "OIdeal":
        return OIdeal(self.d, Fraction(1), 1, 0)


def _hnf_two_cols(rows: list[tuple[int, int]]) -> tuple[int, int, int]:
    """Hermite form of the lattice spanned by integer rows (x, y).

    Returns (a, b, c) with basis (a, 0), (b, c): a, c > 0, 0 <= b < a.
    Raises on rank < 2.
    """
    # gcd of the y-coordinates with a Bezout witness row
    wx, wy = 0, 0
    for x, y in rows:
        if y == 0:
            continue
        if wy == 0:
            wx, wy = x, y
        else:
            # reduce (wx, wy), (x, y) by Euclid on the y column
            while y != 0:
                t = wy // y
                wx, wy, x, y = x, y, wx - t * x, wy - t * y
    if wy == 0:
        raise ValueError("rank < 2 lattice")
    if wy < 0:
        wx, wy = -wx, -wy
    a = 0
    for x, y in rows:
        # clear the y-coordinate against the witness
        if y % wy != 0:
            raise AssertionError("hnf witness does not divide")
        x -= (y // wy) * wx
        a = gcd(a, abs(x))
    if a == 0:
        raise ValueError("rank < 2 lattice")
    return a, wx % a, wy


class OIdeal(NamedTuple):
    """Fractional O_d-ideal s*(Z*n + Z*(m + w)) in standard form."""

    d: int
    s: Fraction
    n: int
    m: int

    @staticmethod
    def standard(d: int, n: int, m: int, s=1) -> "OIdeal":
        check_disc(d)
        s = Fraction(s)
        if s <= 0 or n < 1:
            raise ValueError("need s > 0 and n >= 1")
        m %= n
        if (m * m + m * d + _e(d)) % n != 0:
            raise ValueError(f"Z*{n} + Z*({m}+w) is not closed under w")
        return OIdeal(d, s, n, m)

    @staticmethod
    def from_lattice(d: int, rows: Iterable[tuple[Fraction, Fraction]]) -> "OIdeal":
        """The lattice spanned by rows (coordinates in (1, w)); must be an ideal."""
        check_disc(d)
        rows = [(Fraction(x), Fraction(y)) for x, y in rows]
        den = 1
        for x, y in rows:
            den = den * x.denominator // gcd(den, x.denominator)
            den = den * y.denominator // gcd(den, y.denominator)
        int_rows = [(int(x * den), int(y * den)) for x, y in rows]
        a, b, c = _hnf_two_cols(int_rows)
        # closure under w forces c | a, c | b and the norm condition
        if a % c != 0 or b % c != 0:
            raise ValueError("lattice is not an O_d-ideal (w-closure fails)")
        n, m = a // c, (b // c) % (a // c)
        if (m * m + m * d + _e(d)) % n != 0:
            raise ValueError("lattice is not an O_d-ideal (w-closure fails)")
        return OIdeal(d, Fraction(c, den), n, m)

    @staticmethod
    def from_gens(d: int, gens: Iterable[KElem]) -> "OIdeal":
        """The O_d-module generated by gens."""
        w = QuadOrder.of(d).omega
        rows = []
        for g in gens:
            if g.d != d:
                raise ValueError("generator from a different field")
            if g.is_zero():
                continue
            gw = g * w
            rows.append((g.p, g.q))
            rows.append((gw.p, gw.q))
        return OIdeal.from_lattice(d, rows)

    def basis(self) -> tuple[KElem, KElem]:
        return (
            KElem(self.d, self.s * self.n, Fraction(0)),
            KElem(self.d, self.s * self.m, self.s),
        )

    def norm(self) -> Fraction:
        return self.s * self.s * self.n

    def is_integral(self) -> bool:
        return self.s.denominator == 1

    def is_primitive(self) -> bool:
        return self.s == 1

    def primitive_part(self) -> "OIdeal":
        return OIdeal(self.d, Fraction(1), self.n, self.m)

    def conjugate(self) -> "OIdeal":
        return OIdeal(self.d, self.s, self.n, (-self.m - self.d) % self.n)

    def scale(self, r) -> "OIdeal":
        r = Fraction(r)
        if r <= 0:
            raise ValueError("scale by a positive rational")
        return OIdeal(self.d, self.s * r, self.n, self.m)

    def contains(self, x: KElem) -> bool:
        if x.d != self.d:
            return False
        # x = u*(s n) + v*(s(m + w)) with integer u, v
        v = x.q / self.s
        if v.denominator != 1:
            return False
        u = (x.p - v * self.s * self.m) / (self.s * self.n)
        return u.denominator == 1

    def __repr__(self) -> str:
        return f"OIdeal({self.d}, {self.s}*({self.n}, {self.m}+w))"


def unit_ideal(d: int) -> OIdeal:
    return QuadOrder.of(d).unit_ideal()


def principal_ideal(x: KElem) -> OIdeal:
    if x.is_zero():
        raise ValueError("zero generator")
    return OIdeal.from_gens(x.d, [x])


def multiply(I: OIdeal, J: OIdeal) -> OIdeal:
    """Product ideal, generated by the pairwise basis products."""
    if I.d != J.d:
        raise ValueError("ideals of different orders")
    a1, b1 = I.basis()
    a2, b2 = J.basis()
    prods = [a1 * a2, a1 * b2, b1 * a2, b1 * b2]
    return OIdeal.from_lattice(I.d, [(x.p, x.q) for x in prods])


def invert(I: OIdeal) -> OIdeal:
    """conj(I)/N(I); a two-sided inverse exactly when I is proper."""
    return I.conjugate().scale(1 / I.norm())


def ideal_norm(I: OIdeal) -> Fraction:
    return I.norm()


def is_proper(I: OIdeal) -> bool:
    """Whether the multiplier ring of I is exactly O_d."""
    return multiply(I, invert(I)) == unit_ideal(I.d)


def form_to_ideal(q: QuadForm) -> OIdeal:
    """The ideal Z|a| + Z((b-d)/2 mod |a| + w) attached to a primitive form."""
    d = q.disc
    check_disc(d)
    if not q.is_primitive():
        raise ValueError("imprimitive form; strip the content first")
    n = abs(q.a)
    m = ((q.b - d) // 2) % n
    return OIdeal(d, Fraction(1), n, m)


def ideal_to_form(I: OIdeal) -> QuadForm:
    """Norm form (n, 2m+d, N(m+w)/n) of the primitive part; disc is d."""
    d, n, m = I.d, I.n, I.m
    return QuadForm(n, 2 * m + d, (m * m + m * d + _e(d)) // n)


def ideal_class(I: OIdeal) -> FormClass:
    """GL2(Z) form class of I; classes of proper ideals classify Pic(O_d)."""
    q = ideal_to_form(I)
    if not q.is_primitive():
        raise ValueError("ideal is not proper; its class is not invertible")
    return form_class(q)


class ClassedIdeal(NamedTuple):
    ideal: OIdeal
    class_rep: QuadForm


def ideals_of_norm_up_to(d: int, B, primitive_only: bool = False) -> list[ClassedIdeal]:
    """All proper integral ideals of norm <= B, tagged with their class.

    With primitive_only the list keeps one ideal per primitive lattice,
    dropping integer multiples g*I (norm g^2 N(I)); those multiples drive
    no cusp excursion of their own.
    """
    check_disc(d)
    out = []
    e = _e(d)
    B = float(B)
    for n in range(1, int(B) + 1):
        for m in range(n):
            if (m * m + m * d + e) % n != 0:
                continue
            I = OIdeal(d, Fraction(1), n, m)
            # primitivity of the norm form is equivalent to properness;
            # the tests cross-check this against is_proper
            if not ideal_to_form(I).is_primitive():
                continue
            out.append(ClassedIdeal(I, ideal_class(I).canonical))
            if not primitive_only:
                g = 2
                while g * g * n <= B:
                    J = I.scale(g)
                    out.append(ClassedIdeal(J, ideal_class(J).canonical))
                    g += 1
    out.sort(key=lambda t: (t.ideal.norm(), t.ideal.n, t.ideal.m))
    return out


def ideal_classes(d: int) -> list[OIdeal]:
    """One proper ideal per Picard class, by norm-bounded enumeration."""
    bound = isqrt(d) // 2 + 1
    seen: dict[tuple[int, int, int], OIdeal] = {}
    for tagged in ideals_of_norm_up_to(d, bound, primitive_only=True):
        key = tagged.class_rep.as_tuple()
        if key not in seen:
            seen[key] = tagged.ideal
    return [seen[k] for k in sorted(seen)]


def picard_group(d: int) -> list[tuple[FormClass, OIdeal]]:
    """Each GL2 form class paired with a representative proper ideal."""
    from .forms import enumerate_classes

    pairs = []
    for cl in enumerate_classes(d):
        # pick a cycle member with positive a (signs alternate, so one exists)
        rep = next(f for f in form_class(cl.canonical).cycle if f.a > 0)
        pairs.append((cl, form_to_ideal(rep)))
    return pairs


@dataclass(frozen=True)
class Embedding:
    """Trace-zero matrix m with m^2 = d*Id and the ring map it induces."""

    d: int
    matrix: tuple[tuple[int, int], tuple[int, int]]

    @staticmethod
    def from_form(q: QuadForm) -> "Embedding":
        d = q.disc
        check_disc(d)
        if not q.is_primitive():
            raise ValueError("imprimitive form; strip the content first")
        return Embedding(d, ((q.b, -2 * q.a), (2 * q.c, -q.b)))

    def iota(self, x: KElem) -> tuple:
        """Image of x = p + q*w; entries are exact rationals."""
        if x.d != self.d:
            raise ValueError("element of a different field")
        (m00, m01), (m10, m11) = self.matrix
        # w maps to (d*Id + matrix)/2
        p, q = x.p, x.q
        half = Fraction(1, 2)
        return (
            (p + q * (self.d + m00) * half, q * m01 * half),
            (q * m10 * half, p + q * (self.d + m11) * half),
        )

    def is_optimal(self) -> bool:
        """No order strictly between O_d and K maps into M2(Z).

        A superorder of index p exists for primes p of the conductor; it
        maps integrally iff p divides both off-diagonal entries of iota(w).
        """
        (m00, m01), (m10, m11) = self.matrix
        f = Discriminant.of(self.d).conductor
        for p in sympy.factorint(f):
            if m01 % (2 * p) == 0 and m10 % (2 * p) == 0:
                return False
        return True


def form_to_embedding(q: QuadForm) -> Embedding:
    return Embedding.from_form(q)
