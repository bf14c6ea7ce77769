"""Representations of binary quadratic forms by ternary quadratic forms.

An embedding of (Z^2, q) into (Z^3, Q) is an integer linear map iota with
Q(iota(x)) = q(x) for every x.  Writing q = a1 x^2 + a2 xy + a3 y^2, such a
map is the same thing as a pair of integer vectors (v1, v2) satisfying the
three Gram conditions

    Q(v1) = a1,   <v1, v2>_Q = a2,   Q(v2) = a3,

where <u, v>_Q = Q(u+v) - Q(u) - Q(v) is the polarized bilinear form.  For
positive definite Q the conditions confine v1 and v2 to finite shells, so
the raw embedding count is an exhaustive search.  The integral isometry
group SO_Q(Z) is then finite and acts on embeddings; the orbit count N(q)
is the quantity the representation bound speaks about: it grows at most
like f times a subpolynomial factor, where f^2 is the largest square
dividing gcd(a1, a2, a3).

The binary discriminant is itself a ternary form on coefficient triples,
disc(a, b, c) = b^2 - 4ac, and pairs of disc-d binary forms with a given
polarization value ell correspond to embeddings of d x^2 + ell xy + d y^2
into disc.  That ternary form is indefinite and its integral isometry
group is infinite, so the orbit count is computed in the form language
instead: SL2(Z) acts diagonally on pairs by substitution, the first form
is pinned down by its reduction cycle, and the leftover stabilizer is the
cyclic automorph group of the pinned form.  The degenerate polarization
values ell = +-2d (proportional pairs) are excluded; for every other ell
each automorph orbit of partner forms escapes to large coefficients in
both directions, which is what makes the valley-of-the-orbit
canonicalization below terminate.

Local invariants (a_p, b_p) of a binary form over Z_p record its diagonal
shape u p^a x^2 + v p^b y^2 (for p = 2 there is a second, xy-type shape);
they control the local representation counts and satisfy
a_p + b_p = v_p(disc q) for odd p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
import sympy

from .forms import (
    QuadForm,
    check_disc,
    gl2_act,
    is_square,
    pell_fundamental,
    reduction_cycle,
    reduced_forms,
)


def polarization(r, s) -> int:
    """<r, s> = disc(r + s) - disc(r) - disc(s) = 2bb' - 4ac' - 4a'c.

    Bilinear in each slot, symmetric, and <r, r> = 2 disc(r)."""
    a, b, c = r
    a2, b2, c2 = s
    return 2 * b * b2 - 4 * a * c2 - 4 * a2 * c


# ---------------------------------------------------------------------------
# ternary forms


@dataclass(frozen=True)
class TernaryForm:
    """Integer-valued ternary quadratic form

        Q = xx X^2 + yy Y^2 + zz Z^2 + xy XY + xz XZ + yz YZ.

    The Gram matrix has the coefficients xx, yy, zz on the diagonal and
    half-integral off-diagonal entries xy/2, xz/2, yz/2; the doubled Gram
    matrix is integral and represents the polarized bilinear form."""

    xx: int
    yy: int
    zz: int
    xy: int = 0
    xz: int = 0
    yz: int = 0

    def __post_init__(self):
        for v in (self.xx, self.yy, self.zz, self.xy, self.xz, self.yz):
            if not isinstance(v, int):
                raise TypeError("integer coefficients required")
        if self.disc == 0:
            raise ValueError("degenerate ternary form")

    def __call__(self, v) -> int:
        x, y, z = v
        return (
            self.xx * x * x + self.yy * y * y + self.zz * z * z
            + self.xy * x * y + self.xz * x * z + self.yz * y * z
        )

    def two_gram(self) -> tuple:
        """Matrix of the bilinear form <u, v> = Q(u+v) - Q(u) - Q(v)."""
        return (
            (2 * self.xx, self.xy, self.xz),
            (self.xy, 2 * self.yy, self.yz),
            (self.xz, self.yz, 2 * self.zz),
        )

    def bilinear(self, u, v) -> int:
        m = self.two_gram()
        return sum(u[i] * m[i][j] * v[j] for i in range(3) for j in range(3))

    @property
    def disc(self) -> int:
        # determinant of the doubled Gram matrix
        (a, b, c), (_, d, e), (_, _, f) = self.two_gram()
        return a * (d * f - e * e) - b * (b * f - c * e) + c * (b * e - c * d)

    @property
    def definiteness(self) -> str:
        m = self.two_gram()
        d1 = m[0][0]
        d2 = m[0][0] * m[1][1] - m[0][1] * m[0][1]
        d3 = self.disc
        if d1 > 0 and d2 > 0 and d3 > 0:
            return "positive definite"
        if d1 < 0 and d2 > 0 and d3 < 0:
            return "negative definite"
        return "indefinite"

    def neg(self) -> "TernaryForm":
        return TernaryForm(-self.xx, -self.yy, -self.zz, -self.xy, -self.xz, -self.yz)

    def gram(self) -> np.ndarray:
        return np.array(self.two_gram(), dtype=float) / 2.0

    def min_abs_eigenvalue(self) -> float:
        return float(min(abs(w) for w in np.linalg.eigvalsh(self.gram())))

    @staticmethod
    def from_gram(rows) -> "TernaryForm":
        """Build from a symmetric 3x3 Gram matrix; off-diagonal entries may
        be half-integers, the diagonal must be integral."""
        g = [[Fraction(rows[i][j]).limit_denominator(2) for j in range(3)] for i in range(3)]
        for i in range(3):
            for j in range(3):
                if Fraction(rows[i][j]) != g[i][j]:
                    raise ValueError("Gram entries must be integers or half-integers")
                if g[i][j] != g[j][i]:
                    raise ValueError("Gram matrix must be symmetric")
        diag = [g[i][i] for i in range(3)]
        off = [2 * g[0][1], 2 * g[0][2], 2 * g[1][2]]
        if any(v.denominator != 1 for v in diag + off):
            raise ValueError("form is not integer-valued on Z^3")
        return TernaryForm(
            int(diag[0]), int(diag[1]), int(diag[2]),
            xy=int(off[0]), xz=int(off[1]), yz=int(off[2]),
        )


SUM_OF_THREE_SQUARES = TernaryForm(1, 1, 1)

#: disc(a, b, c) = b^2 - 4ac as a ternary form on coefficient triples
DISC_FORM = TernaryForm(0, 1, 0, xz=-4)


# ---------------------------------------------------------------------------
# vector shells and embeddings


def _eval_grid(Q: TernaryForm, radius: int) -> tuple[np.ndarray, np.ndarray]:
    r = np.arange(-radius, radius + 1, dtype=np.int64)
    X, Y, Z = np.meshgrid(r, r, r, indexing="ij")
    vals = (
        Q.xx * X * X + Q.yy * Y * Y + Q.zz * Z * Z
        + Q.xy * X * Y + Q.xz * X * Z + Q.yz * Y * Z
    )
    vecs = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)
    return vecs, vals.ravel()


@lru_cache(maxsize=None)
def _definite_shell(Q: TernaryForm, value: int) -> tuple:
    """All integer v with Q(v) = value, for positive definite Q.

    The search radius comes from the smallest Gram eigenvalue with a 10%
    margin; afterwards every solution is checked against the unpadded
    bound, so an eigenvalue underestimate cannot silently truncate."""
    if value < 0:
        return ()
    if value == 0:
        return ((0, 0, 0),)
    lam = Q.min_abs_eigenvalue()
    norm_cap = value / lam
    radius = int(math.floor(math.sqrt(1.1 * norm_cap))) + 1
    vecs, vals = _eval_grid(Q, radius)
    hit = vecs[vals == value]
    if hit.size and float(np.max((hit * hit).sum(axis=1))) > norm_cap * (1 + 1e-9):
        raise RuntimeError("shell search bound violated a posteriori")
    out = sorted(map(tuple, hit.tolist()))
    return tuple(out)


def shell(Q: TernaryForm, value: int, box: Optional[int] = None) -> list:
    """Integer vectors v with Q(v) = value.

    Exhaustive for definite Q; for indefinite Q the shell is infinite and a
    coordinate box must be given, the result then being boxed and partial."""
    kind = Q.definiteness
    if kind == "positive definite":
        return list(_definite_shell(Q, value))
    if kind == "negative definite":
        return [tuple(v) for v in _definite_shell(Q.neg(), -value)]
    if box is None:
        raise ValueError("indefinite ternary form: supply a coordinate box")
    vecs, vals = _eval_grid(Q, box)
    return sorted(map(tuple, vecs[vals == value].tolist()))


@dataclass(frozen=True)
class EmbeddingPair:
    """An embedding of a binary lattice, recorded by the images of the two
    basis vectors."""

    v1: tuple
    v2: tuple

    def as_matrix(self) -> tuple:
        return (self.v1, self.v2)


def is_embedding(q: QuadForm, Q: TernaryForm, pair: EmbeddingPair) -> bool:
    """The three Gram conditions, checked exactly."""
    return (
        Q(pair.v1) == q.a
        and Q.bilinear(pair.v1, pair.v2) == q.b
        and Q(pair.v2) == q.c
    )


@dataclass(frozen=True)
class EmbeddingCount:
    count: int
    complete: bool
    pairs: tuple


def count_embeddings(q: QuadForm, Q: TernaryForm, box: Optional[int] = None) -> EmbeddingCount:
    """Raw embeddings of (Z^2, q) into (Z^3, Q).

    Definite Q gives a complete count through shell enumeration.  Indefinite
    Q needs an explicit coordinate box and the count is flagged partial."""
    kind = Q.definiteness
    complete = kind != "indefinite"
    s1 = shell(Q, q.a, box=box)
    s2 = shell(Q, q.c, box=box)
    if not s1 or not s2:
        return EmbeddingCount(0, complete, ())
    a1 = np.asarray(s1, dtype=np.int64)
    a2 = np.asarray(s2, dtype=np.int64)
    m = np.asarray(Q.two_gram(), dtype=np.int64)
    bil = a1 @ m @ a2.T
    i, j = np.nonzero(bil == q.b)
    pairs = tuple(
        EmbeddingPair(tuple(a1[k].tolist()), tuple(a2[l].tolist()))
        for k, l in zip(i.tolist(), j.tolist())
    )
    return EmbeddingCount(len(pairs), complete, pairs)


# ---------------------------------------------------------------------------
# the integral isometry group of a definite form


def _mat3_mul(g, h) -> tuple:
    return tuple(
        tuple(sum(g[i][k] * h[k][j] for k in range(3)) for j in range(3))
        for i in range(3)
    )


def _det3(g) -> int:
    return (
        g[0][0] * (g[1][1] * g[2][2] - g[1][2] * g[2][1])
        - g[0][1] * (g[1][0] * g[2][2] - g[1][2] * g[2][0])
        + g[0][2] * (g[1][0] * g[2][1] - g[1][1] * g[2][0])
    )


@lru_cache(maxsize=None)
def integral_isometries(Q: TernaryForm) -> tuple:
    """The finite group SO_Q(Z) of a definite form, by exhaustive search.

    Columns of an isometry are preimages of the basis vectors, so they lie
    on the shells of the diagonal coefficients and must reproduce the
    bilinear products; determinant +1 selects the proper half.  The result
    is verified to be closed under multiplication.  Indefinite forms are
    rejected: their isometry groups are infinite, and the one indefinite
    case this library needs (the discriminant form) is handled in the
    binary-form language by pair_orbit_count."""
    kind = Q.definiteness
    if kind == "indefinite":
        raise ValueError("indefinite ternary form has an infinite isometry group")
    if kind == "negative definite":
        return integral_isometries(Q.neg())
    m = Q.two_gram()
    shells = [np.asarray(_definite_shell(Q, v), dtype=np.int64)
              for v in (Q.xx, Q.yy, Q.zz)]
    if any(s.size == 0 for s in shells):
        raise RuntimeError("a diagonal value is not represented; no isometries?")
    g = np.asarray(m, dtype=np.int64)
    out = []
    b12 = shells[0] @ g @ shells[1].T
    for i1, c1 in enumerate(shells[0]):
        ok2 = np.nonzero(b12[i1] == m[0][1])[0]
        if ok2.size == 0:
            continue
        b13 = c1 @ g @ shells[2].T
        for i2 in ok2:
            c2 = shells[1][i2]
            ok3 = np.nonzero((b13 == m[0][2]) & (c2 @ g @ shells[2].T == m[1][2]))[0]
            for i3 in ok3:
                c3 = shells[2][i3]
                mat = tuple(
                    (int(c1[r]), int(c2[r]), int(c3[r])) for r in range(3)
                )
                if _det3(mat) == 1:
                    out.append(mat)
    group = tuple(sorted(out))
    members = set(group)
    ident = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    if ident not in members:
        raise RuntimeError("identity missing from isometry search")
    for a in group:
        for b in group:
            if _mat3_mul(a, b) not in members:
                raise RuntimeError("isometry search not closed under multiplication")
    return group


def _apply3(g, v) -> tuple:
    return tuple(sum(g[i][k] * v[k] for k in range(3)) for i in range(3))


def _canonical_embedding(group, pair: EmbeddingPair) -> tuple:
    return min(
        (_apply3(g, pair.v1), _apply3(g, pair.v2)) for g in group
    )


def orbit_count(q: QuadForm, Q: TernaryForm) -> int:
    """Number of SO_Q(Z)-orbits on embeddings of q, for definite Q."""
    group = integral_isometries(Q)
    emb = count_embeddings(q, Q)
    if emb.count == 0:
        return 0
    return len({_canonical_embedding(group, p) for p in emb.pairs})


def orbit_representatives(q: QuadForm, Q: TernaryForm) -> list[EmbeddingPair]:
    group = integral_isometries(Q)
    emb = count_embeddings(q, Q)
    reps = sorted({_canonical_embedding(group, p) for p in emb.pairs})
    return [EmbeddingPair(v1, v2) for v1, v2 in reps]


def square_divisor_root(n: int) -> int:
    """Largest f with f^2 | n (f = 0 when n = 0)."""
    n = abs(n)
    if n == 0:
        return 0
    f = 1
    for p, e in sympy.factorint(n).items():
        f *= p ** (e // 2)
    return f


@dataclass(frozen=True)
class SweepRow:
    """One represented form in a coefficient sweep: raw and orbit counts
    plus the square-divisor root f of gcd(a, b, c)."""

    a: int
    b: int
    c: int
    raw: int
    orbits: int
    f: int


def orbit_sweep(Q: TernaryForm, coef_max: int) -> list[SweepRow]:
    """Counts for every q = (a, b, c) with max(|a|,|b|,|c|) <= coef_max that
    is represented by Q at all; all omitted triples have raw count 0.

    Batched by the (a, c) shell pair: the bilinear products of all vector
    pairs give the raw counts for every middle coefficient b at once, and a
    canonical-key table gives the orbit counts, consistent with
    orbit_count on each row."""
    if Q.definiteness != "positive definite":
        raise ValueError("coefficient sweep expects a positive definite form")
    group = integral_isometries(Q)
    garr = [np.asarray(g, dtype=np.int64) for g in group]
    m = np.asarray(Q.two_gram(), dtype=np.int64)
    shells = {v: np.asarray(_definite_shell(Q, v), dtype=np.int64)
              for v in range(coef_max + 1)}
    values = [v for v, s in shells.items() if s.size]
    radius = max(int(np.abs(shells[v]).max()) for v in values if shells[v].size) if values else 0
    base = 2 * radius + 2
    if base ** 6 >= 2 ** 62:
        raise RuntimeError("sweep encoding overflow; reduce coef_max")

    def encode(vecs: np.ndarray) -> np.ndarray:
        e = np.zeros(len(vecs), dtype=np.int64)
        for k in range(3):
            e = e * base + (vecs[:, k] + radius)
        return e

    rows = []
    for a in values:
        s1 = shells[a]
        g1 = [s1 @ g.T for g in garr]
        e1 = [encode(x) for x in g1]
        for c in values:
            s2 = shells[c]
            bil = s1 @ m @ s2.T
            key = None
            for gi, g in enumerate(garr):
                e2 = encode(s2 @ g.T)
                cand = e1[gi][:, None] * (base ** 3) + e2[None, :]
                key = cand if key is None else np.minimum(key, cand)
            bflat = bil.ravel()
            kflat = key.ravel()
            order = np.lexsort((kflat, bflat))
            bs = bflat[order]
            ks = kflat[order]
            newb = np.empty(len(bs), dtype=bool)
            newb[:1] = True
            np.not_equal(bs[1:], bs[:-1], out=newb[1:])
            newk = np.empty(len(ks), dtype=bool)
            newk[:1] = True
            newk[1:] = (ks[1:] != ks[:-1]) | newb[1:]
            starts = np.nonzero(newb)[0]
            ends = np.append(starts[1:], len(bs))
            orb_cum = np.cumsum(newk)
            for s0, s1i in zip(starts.tolist(), ends.tolist()):
                b = int(bs[s0])
                if abs(b) > coef_max:
                    continue
                raw = s1i - s0
                orbs = int(orb_cum[s1i - 1] - (orb_cum[s0 - 1] if s0 else 0))
                rows.append(SweepRow(a, b, c, raw, orbs,
                                     square_divisor_root(math.gcd(math.gcd(a, b), c))))
    rows.sort(key=lambda r: (r.a, r.b, r.c))
    return rows


# ---------------------------------------------------------------------------
# local invariants


def _vp(n: int, p: int) -> int:
    if n == 0:
        raise ValueError("valuation of zero")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class LocalInvariants:
    """Invariants (a_p, b_p) of a binary form over Z_p.

    For odd p the form diagonalizes as u p^a x^2 + v p^b y^2 with units
    u, v, and a_p = v_p(gcd of coefficients), a_p + b_p = v_p(disc).  At
    p = 2 the diagonal shape may fail; the xy-type shape
    u 2^b x^2 + w 2^a xy + v 2^b y^2 is the fallback, recorded in `case`,
    and there v_2(disc) = 2 a_2 exactly.  `vector` is the substitution
    vector that realized the minimal valuation."""

    p: int
    a: int
    b: int
    case: Optional[str]
    vector: tuple

    def __post_init__(self):
        if not (0 <= self.a <= self.b):
            raise ValueError("invariants must satisfy 0 <= a <= b")

    @property
    def pair(self) -> tuple[int, int]:
        return (self.a, self.b)


def _min_valuation_vector(q: QuadForm, p: int, m: int) -> tuple[int, int]:
    # lexicographically first primitive vector realizing valuation m; one of
    # the vectors with coordinates in [0, p) works because the unit part of
    # q is a nonzero quadratic on the projective line over F_p
    for x in range(p):
        for y in range(p):
            if (x, y) == (0, 0) or math.gcd(x, y) != 1:
                continue
            value = q(x, y)
            if value != 0 and _vp(value, p) == m:
                return (x, y)
    raise RuntimeError("no minimal-valuation vector below p; not reachable")


def local_invariants(q: QuadForm, p: int) -> LocalInvariants:
    """Diagonal invariants of q over Z_p, e.g. x^2 + 5y^2 at p = 5 -> (0, 1)."""
    if q.disc == 0:
        raise ValueError("degenerate binary form")
    if not sympy.isprime(p):
        raise ValueError(f"p={p} is not prime")
    m = min(_vp(v, p) for v in q.as_tuple() if v != 0)
    big_v = _vp(q.disc, p)
    vec = _min_valuation_vector(q, p, m)
    if p > 2:
        return LocalInvariants(p, m, big_v - m, None, vec)
    # p = 2: move the minimal vector to the first basis slot, then try to
    # complete the square; that needs the off-diagonal valuation to exceed
    # the corner valuation, otherwise the form is of xy type
    x, y = vec
    alpha, beta, gg = sympy.gcdex(x, y)
    if gg != 1:
        raise RuntimeError("minimal vector not primitive")
    basis = ((x, y), (-int(beta), int(alpha)))
    q2 = gl2_act(basis, q)
    if _vp(q2.a, 2) != m:
        raise RuntimeError("basis change lost the minimal valuation")
    if q2.b == 0 or _vp(q2.b, 2) > m:
        a2, b2 = m, big_v - 2 - m
        if b2 < a2:
            raise RuntimeError("diagonal 2-adic invariants out of order")
        return LocalInvariants(2, a2, b2, "diagonal", vec)
    if big_v != 2 * m:
        raise RuntimeError("xy-type form with odd-valuation mismatch")
    return LocalInvariants(2, m, m, "xy", vec)


# ---------------------------------------------------------------------------
# pairs of binary forms modulo SL2(Z)


def _height(t: tuple) -> int:
    return max(abs(t[0]), abs(t[1]), abs(t[2]))


def _adj2(g) -> tuple:
    (a, b), (c, d) = g
    return ((d, -b), (-c, a))


@lru_cache(maxsize=None)
def _sl2_primitive_reps(d: int) -> tuple:
    """Lexicographically least cycle member of each SL2(Z)-class of
    primitive forms of discriminant d.  A GL class splits into two SL
    classes exactly when the mirrored cycle is disjoint from the cycle."""
    seen: set = set()
    reps = []
    for f in reduced_forms(d, primitive_only=True):
        if f.as_tuple() in seen:
            continue
        cyc = reduction_cycle(f)
        for g in cyc:
            seen.add(g.as_tuple())
        reps.append(QuadForm(*min(g.as_tuple() for g in cyc)))
    return tuple(sorted(reps, key=QuadForm.as_tuple))


@lru_cache(maxsize=None)
def _first_form_reps(d: int) -> tuple:
    """SL2-class representatives of all disc-d forms, primitive or not,
    each with the generator of its automorph stabilizer."""
    out = []
    g = 1
    while g * g <= d:
        if d % (g * g) == 0:
            rem = d // (g * g)
            if rem % 4 in (0, 1) and not is_square(rem):
                pell = pell_fundamental(rem)
                for r in _sl2_primitive_reps(rem):
                    aut = pell.automorph(r)
                    out.append((QuadForm(g * r.a, g * r.b, g * r.c), aut))
        g += 1
    return tuple(out)


def _valley_canonical(s: QuadForm, aut, aut_inv) -> tuple:
    """Lexicographic least among the minimal-height forms of the automorph
    orbit of s.  Coefficients along the orbit are combinations of
    eps^(+-2k), so heights grow strictly once past the valley; a sustained
    rise certifies that the whole valley has been swept."""
    h = _height(s.as_tuple())
    improved = True
    while improved:
        improved = False
        for step in (aut, aut_inv):
            nxt = gl2_act(step, s)
            hn = _height(nxt.as_tuple())
            if hn < h:
                s, h = nxt, hn
                improved = True
                break
    best, hmin = s.as_tuple(), h
    for step in (aut, aut_inv):
        cur = s
        prev = h
        rise = 0
        while rise < 6:
            cur = gl2_act(step, cur)
            hc = _height(cur.as_tuple())
            if hc < hmin or (hc == hmin and cur.as_tuple() < best):
                hmin, best = hc, cur.as_tuple()
            rise = rise + 1 if hc > prev else 0
            prev = hc
    return best


def _orbit_escape_bound(r0: QuadForm, aut, d: int, ell: int) -> float:
    """Height below which every automorph orbit of partner forms has a
    representative.

    The automorph acts on coefficient triples with one fixed direction
    (spanned by r0) and two reciprocal eigendirections; the r0-component
    of any partner form is pinned to ell/(2d) and the product of the other
    two eigencoordinates is pinned by disc = d, so sliding along the orbit
    balances them below eps * sqrt(|product|)."""
    m0 = np.array(
        [gl2_act(aut, QuadForm(*e)).as_tuple() for e in ((1, 0, 0), (0, 1, 0), (0, 0, 1))],
        dtype=float,
    ).T
    w, vecs = np.linalg.eig(m0)
    w = np.real(w)
    vecs = np.real(vecs)
    order = np.argsort(np.abs(w))
    small, unit, large = order
    if not math.isclose(w[unit], 1.0, rel_tol=1e-6):
        raise RuntimeError("automorph action should fix the r0 line")
    eps2 = abs(w[large])
    ep = vecs[:, large] / np.max(np.abs(vecs[:, large]))
    em = vecs[:, small] / np.max(np.abs(vecs[:, small]))
    tau = float(2 * ep[1] * em[1] - 4 * ep[0] * em[2] - 4 * em[0] * ep[2])
    if abs(tau) < 1e-9:
        raise RuntimeError("degenerate eigenpairing in escape bound")
    t = ell / (2.0 * d)
    prod = d * (1.0 - t * t) / tau
    wcap = math.sqrt(eps2 * abs(prod))
    r0v = np.array(r0.as_tuple(), dtype=float)
    bound = np.max(np.abs(t * r0v) + (np.abs(ep) + np.abs(em)) * wcap)
    return float(bound) * 1.05


@dataclass(frozen=True)
class PairOrbitCount:
    """SL2(Z)-orbit count of pairs of disc-d forms with polarization ell.

    `complete` certifies that the coefficient box exceeded the escape
    bound of every automorph orbit, so no orbit lies wholly outside."""

    d: int
    ell: int
    box: int
    count: int
    complete: bool
    bound: float


def pair_orbit_count(d: int, ell: int, box: int) -> PairOrbitCount:
    """Count SL2(Z)-orbits of pairs (r, s) with disc r = disc s = d and
    <r, s> = ell, enumerated inside max coefficient `box`.

    The first form is canonicalized to an SL2-class representative; the
    leftover stabilizer is its automorph group, deduplicated by the valley
    representative of each automorph orbit of partner forms."""
    check_disc(d)
    if ell == 2 * d or ell == -2 * d:
        raise ValueError("ell = +-2d makes the pair form degenerate")
    if box <= 0:
        raise ValueError("box must be positive")
    total = 0
    worst = 0.0
    rng = np.arange(-box, box + 1, dtype=np.int64)
    for r0, aut in _first_form_reps(d):
        a0, b0, c0 = r0.as_tuple()
        if a0 == 0:
            raise RuntimeError("cycle representative with vanishing lead coefficient")
        worst = max(worst, _orbit_escape_bound(r0, aut, d, ell))
        # <r0, s> = ell is linear in s: solve for c' over an (a', b') grid
        A, B = np.meshgrid(rng, rng, indexing="ij")
        num = 2 * b0 * B - 4 * c0 * A - ell
        den = 4 * a0
        ok = num % den == 0
        C = np.where(ok, num // den, 0)
        good = ok & (np.abs(C) <= box) & (B * B - 4 * A * C == d)
        aut_inv = _adj2(aut)
        valleys = set()
        for ai, bi in zip(*np.nonzero(good)):
            s = QuadForm(int(A[ai, bi]), int(B[ai, bi]), int(C[ai, bi]))
            valleys.add(_valley_canonical(s, aut, aut_inv))
        total += len(valleys)
    return PairOrbitCount(d, ell, box, total, box >= worst, worst)
