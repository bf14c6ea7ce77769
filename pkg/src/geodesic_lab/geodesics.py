"""Points and closed geodesics on the modular surface.

The unit tangent bundle of the modular surface is X = PSL2(Z)\\PSL2(R).
A matrix g encodes the unimodular lattice Z^2 g spanned by the rows of g,
and left multiplication by gamma in SL2(Z) changes the basis without moving
the lattice, so points of X are the same thing as covolume-one lattices in
the plane.  The base point z = g.i in the upper half plane (Moebius action,
column convention) and the direction theta of the forward geodesic flow
determine g up to sign, and we store the representative with z in the strip
S = {|Re z| <= 1/2, |z| >= 1}.

The height of a lattice is ht(L) = (min |x| / vol(L)^(1/2))^(-1), a proper
function on X that measures how far a point sits up the cusp; for the
S-representative it satisfies Im z = ht^2.

A form (a, b, c) of discriminant d > 0 gives the matrix

    h = [[b + sqrt(d), b - sqrt(d)], [2c, 2c]],    det h = 4c sqrt(d),

whose rows diagonalise q0(x, y) = xy against the form: in the row basis of
Z^2 h the form q0 takes the value vol * (a u^2 + b uv + c v^2) / sqrt(d).
The diagonal flow a_t = diag(e^(t/2), e^(-t/2)) stabilises q0, so the orbit
Z^2 h a_t is the closed geodesic of the class of (a, b, c); it closes at
the period 2 log eps, eps = (t + u sqrt(d))/2 the fundamental automorph
scale, because the automorph M of the form satisfies M h = h diag(1/eps, eps).
Mirror forms (-a, b, -c) give the basis diag(1, -1) h of the same lattice,
so each GL2(Z) class traces a single closed geodesic; we base the orbit at
the canonical cycle representative, which always has a < 0 < c.
"""

from __future__ import annotations

import cmath
import math
from bisect import bisect_right
from dataclasses import dataclass
from functools import lru_cache

from .forms import (
    FormClass,
    PellData,
    QuadForm,
    QuadIrr,
    endpoints,
    form_class,
    is_discriminant,
    pell_fundamental,
)

SQRT3_2 = math.sqrt(3.0) / 2.0
_MAX_REDUCE = 4000


def _fmul(a, b):
    return (
        (a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]),
        (a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]),
    )


def _fdet(g):
    return g[0][0] * g[1][1] - g[0][1] * g[1][0]


def _mobius_i(g) -> complex:
    """g.i for the column-convention Moebius action."""
    num = complex(g[0][1], g[0][0])
    den = complex(g[1][1], g[1][0])
    return num / den


def _diag_flow(t: float):
    e = math.exp(t / 2.0)
    return ((e, 0.0), (0.0, 1.0 / e))


@dataclass(frozen=True)
class SurfacePoint:
    """A point of X stored through its strip representative.

    x, y are the coordinates of the representative z = x + iy in S, theta in
    [0, 2pi) is the direction of the forward flow at z, and height caches
    sqrt(y) = ht of the underlying lattice.
    """

    x: float
    y: float
    theta: float
    height: float

    def __post_init__(self):
        if self.y < SQRT3_2 - 1e-9 or abs(self.x) > 0.5 + 1e-9:
            raise ValueError("representative outside the fundamental strip")
        if abs(self.height * self.height - self.y) > 1e-9 * max(1.0, self.y):
            raise ValueError("cached height disagrees with Im z")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    def frame(self):
        """An SL2(R) matrix g with g.i = z and flow direction theta.

        Well defined up to sign: theta = pi/2 + 2*phi fixes the SO(2) part
        only in PSL2(R), which is the group the surface lives over anyway.
        """
        sy = math.sqrt(self.y)
        phi = 0.5 * (self.theta - 0.5 * math.pi)
        c, s = math.cos(phi), math.sin(phi)
        return (
            (sy * c - self.x * s / sy, sy * s + self.x * c / sy),
            (-s / sy, c / sy),
        )


def _frame_point(g) -> SurfacePoint:
    """SurfacePoint data read off an already reduced frame."""
    z = _mobius_i(g)
    den = complex(g[1][1], g[1][0])
    theta = cmath.phase(1j / (den * den)) % (2.0 * math.pi)
    y = z.imag
    return SurfacePoint(z.real, y, theta, math.sqrt(y))


def _reduce_z(z: complex):
    """T/S-walk z into the strip; returns (z, gamma) with z = gamma.z_in."""
    g00, g01, g10, g11 = 1, 0, 0, 1
    for _ in range(_MAX_REDUCE):
        n = round(z.real)
        if n:
            z = complex(z.real - n, z.imag)
            g00, g01 = g00 - n * g10, g01 - n * g11
        r2 = z.real * z.real + z.imag * z.imag
        if r2 < 1.0 - 1e-15:
            z = complex(-z.real / r2, z.imag / r2)
            g00, g01, g10, g11 = -g10, -g11, g00, g01
        else:
            break
    else:
        raise RuntimeError("fundamental domain reduction did not terminate")
    # boundary conventions: Re z = -1/2 wins, and on |z| = 1 the arc Re z <= 0
    if z.real >= 0.5 - 1e-13:
        z = complex(z.real - 1.0, z.imag)
        g00, g01 = g00 - g10, g01 - g11
    r2 = z.real * z.real + z.imag * z.imag
    if abs(r2 - 1.0) <= 1e-13 and z.real > 1e-13:
        z = complex(-z.real / r2, z.imag / r2)
        g00, g01, g10, g11 = -g10, -g11, g00, g01
    return z, ((g00, g01), (g10, g11))


def reduce_to_fundamental_domain(g):
    """Reduce a frame to its strip representative.

    Returns (SurfacePoint, gamma) with gamma in SL2(Z) and gamma g the
    reduced frame; feeding the reduced frame back in returns gamma = id.
    """
    det = _fdet(g)
    if abs(det - 1.0) > 1e-12:
        raise ValueError("frame must have determinant 1 (got %r)" % (det,))
    z0 = _mobius_i(g)
    _, gamma = _reduce_z(z0)
    gf = _fmul(gamma, g)
    return _frame_point(gf), gamma


def from_frame(g) -> SurfacePoint:
    return reduce_to_fundamental_domain(g)[0]


def shortest_vector(basis):
    """Gauss-reduced shortest nonzero vector of the row lattice."""
    u = (float(basis[0][0]), float(basis[0][1]))
    v = (float(basis[1][0]), float(basis[1][1]))
    nu = u[0] * u[0] + u[1] * u[1]
    nv = v[0] * v[0] + v[1] * v[1]
    if nu < nv:
        u, v, nu, nv = v, u, nv, nu
    for _ in range(_MAX_REDUCE):
        m = round((u[0] * v[0] + u[1] * v[1]) / nv)
        u = (u[0] - m * v[0], u[1] - m * v[1])
        nu = u[0] * u[0] + u[1] * u[1]
        if nu >= nv:
            break
        u, v, nu, nv = v, u, nv, nu
    return v


def height(x) -> float:
    """ht of a SurfacePoint or of a 2x2 row basis of a plane lattice.

    Scaling invariant: ht(L) = vol(L)^(1/2) / min |x|.
    """
    if isinstance(x, SurfacePoint):
        return x.height
    det = abs(_fdet(x))
    if det < 1e-300:
        raise ValueError("degenerate lattice basis")
    v = shortest_vector(x)
    return math.sqrt(det) / math.hypot(v[0], v[1])


@dataclass(frozen=True)
class GeodesicOrbit:
    """The closed geodesic of a form class, with exact closing data.

    base_form is the canonical cycle representative (a < 0 < c so that the
    base matrix has positive determinant), x_minus/x_plus its endpoints,
    h_exact the integral matrix [[b+sqrt(d), b-sqrt(d)], [2c, 2c]] and frame0
    the same matrix scaled into SL2(R).  period = 2 log eps is the flow time
    at which the orbit closes, witnessed by automorph @ h = h @ diag(1/eps, eps).
    """

    form_class: FormClass
    base_form: QuadForm
    x_minus: QuadIrr
    x_plus: QuadIrr
    h_exact: tuple
    frame0: tuple
    period: float
    automorph: tuple
    pell: PellData

    @property
    def disc(self) -> int:
        return self.base_form.disc


def geodesic_orbit(q) -> GeodesicOrbit:
    """Build the closed geodesic orbit of a form or form class."""
    fc = q if isinstance(q, FormClass) else form_class(q)
    base = fc.canonical
    if base.c <= 0:
        raise RuntimeError("canonical reduced form should have a < 0 < c")
    d = base.disc
    x_plus, x_minus = endpoints(base)
    b, c = base.b, base.c
    h_exact = (
        (QuadIrr.make(b, 1, 1, d), QuadIrr.make(b, -1, 1, d)),
        (QuadIrr.make(2 * c, 0, 1, d), QuadIrr.make(2 * c, 0, 1, d)),
    )
    sd = math.sqrt(d)
    scale = 1.0 / math.sqrt(4.0 * c * sd)
    frame0 = (
        ((b + sd) * scale, (b - sd) * scale),
        (2.0 * c * scale, 2.0 * c * scale),
    )
    pell = pell_fundamental(d)
    return GeodesicOrbit(
        form_class=fc,
        base_form=base,
        x_minus=x_minus,
        x_plus=x_plus,
        h_exact=h_exact,
        frame0=frame0,
        period=pell.period,
        automorph=pell.automorph(base),
        pell=pell,
    )


def orbits_of_disc(d: int) -> list:
    from .forms import enumerate_classes

    return [geodesic_orbit(fc) for fc in enumerate_classes(d)]


def orbit_point(orbit: GeodesicOrbit, t: float) -> SurfacePoint:
    """The point at flow time t from the base frame, reduced to the strip.

    Direct evaluation: fine for moderate |t|, while sample_orbit walks the
    orbit incrementally and should be preferred for long stretches.
    """
    if abs(t) > 1200.0:
        raise ValueError("flow time too large for direct evaluation")
    return from_frame(_fmul(orbit.frame0, _diag_flow(t)))


def _renormalize(g):
    det = _fdet(g)
    s = 1.0 / math.sqrt(abs(det))
    return ((g[0][0] * s, g[0][1] * s), (g[1][0] * s, g[1][1] * s))


def _cycle_frames(orbit: GeodesicOrbit):
    """Exact restart frames along the orbit and their cumulative flow times.

    Each reduced form f = (a, b, c) in the cycle of the base form marks the
    apex of its axis with the frame [v+ | sign(c) v-] built from the integer
    endpoint vectors v+- = (b +- sqrt(d), 2c); the column sign keeps det = 1
    with the attracting endpoint first.  Consecutive frames satisfy
    g_k F_k = +- F_{k+1} a_{-t_k} with g_k the integral rho step, which
    yields the step times t_k, and their sum must close to the period.
    """
    from .forms import reduction_cycle, rho_with_transform

    d = orbit.disc
    sd = math.sqrt(d)

    def apex(f):
        sg = 1.0 if f.c > 0 else -1.0
        s = 1.0 / math.sqrt(abs(4.0 * f.c) * sd)
        return (
            ((f.b + sd) * s, sg * (f.b - sd) * s),
            (2.0 * f.c * s, sg * 2.0 * f.c * s),
        )

    cycle = reduction_cycle(orbit.base_form)
    frames = [apex(f) for f in cycle]
    cum = [0.0]
    for k, f in enumerate(cycle):
        _, g = rho_with_transform(f)
        nxt = frames[(k + 1) % len(cycle)]
        inv_nxt = ((nxt[1][1], -nxt[0][1]), (-nxt[1][0], nxt[0][0]))
        gf = ((float(g[0][0]), float(g[0][1])), (float(g[1][0]), float(g[1][1])))
        m = _fmul(inv_nxt, _fmul(gf, frames[k]))
        cum.append(cum[-1] + 2.0 * math.log(abs(m[1][1])))
    if abs(cum[-1] - orbit.period) > 1e-9 * max(1.0, orbit.period):
        raise RuntimeError(
            f"cycle times close to {cum[-1]}, period is {orbit.period}"
        )
    return frames, cum


def sample_orbit(orbit: GeodesicOrbit, n: int, offset: float = 0.0) -> list:
    """n points at flow times offset + k*period/n, k = 0..n-1.

    Every point is produced by a short flow from the nearest integer cycle
    frame, so the error stays at fixed float precision no matter how long
    the period is.  (An incremental walk, or direct evaluation of
    frame0 . a_t, loses roughly a digit per unit of flow time to the e^t
    instability of the flow and turns into noise past t about 35.)
    """
    if n < 1:
        raise ValueError("need at least one sample")
    frames, cum = _cycle_frames(orbit)
    period = orbit.period
    step = period / n
    points = []
    k = 0
    last = len(cum) - 2
    for j in range(n):
        t = (offset + j * step) % period
        if t < cum[k] or t >= cum[k + 1]:
            k = min(max(bisect_right(cum, t) - 1, 0), last)
        points.append(from_frame(_fmul(frames[k], _diag_flow(t - cum[k]))))
    return points


def flow(p: SurfacePoint, t: float) -> SurfacePoint:
    """Geodesic flow for time t applied to a surface point."""
    return from_frame(_fmul(p.frame(), _diag_flow(t)))


# --- distance ---------------------------------------------------------------
#
# Left-invariant metric d(g1, g2) = ||log(g1^-1 g2)||_F, minimised over the
# candidate identifications gamma of word length <= 4 in T, T^-1, S; both
# points are stored reduced, so the minimiser for nearby points is a short
# word.  Any two left-invariant metrics are bi-Lipschitz, so constants in
# the statements we test do not depend on this choice.


@lru_cache(maxsize=None)
def _gamma_candidates(maxlen: int = 4):
    gens = (((1, 1), (0, 1)), ((1, -1), (0, 1)), ((0, -1), (1, 0)))

    def norm(m):
        flat = (m[0][0], m[0][1], m[1][0], m[1][1])
        for v in flat:
            if v:
                return m if v > 0 else ((-m[0][0], -m[0][1]), (-m[1][0], -m[1][1]))
        raise ValueError

    seen = {norm(((1, 0), (0, 1)))}
    layer = list(seen)
    for _ in range(maxlen):
        nxt = []
        for m in layer:
            for g in gens:
                w = norm(
                    (
                        (
                            g[0][0] * m[0][0] + g[0][1] * m[1][0],
                            g[0][0] * m[0][1] + g[0][1] * m[1][1],
                        ),
                        (
                            g[1][0] * m[0][0] + g[1][1] * m[1][0],
                            g[1][0] * m[0][1] + g[1][1] * m[1][1],
                        ),
                    )
                )
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        layer = nxt
    return tuple(seen)


def log_norm(m) -> float:
    """||log m||_F for m in SL2(R), sign-fixed into the image of exp.

    With a = |tr m| / 2 and B the traceless part, log m = c(a) B where
    c = arccosh(a)/sinh(arccosh(a)) in the hyperbolic case, the arccos
    analogue in the elliptic case, and 1 at the parabolic boundary.
    """
    m00, m01, m10, m11 = m[0][0], m[0][1], m[1][0], m[1][1]
    if m00 + m11 < 0.0:
        m00, m01, m10, m11 = -m00, -m01, -m10, -m11
    a = 0.5 * (m00 + m11)
    h = 0.5 * (m00 - m11)
    nb = math.sqrt(2.0 * h * h + m01 * m01 + m10 * m10)
    if nb == 0.0:
        return 0.0
    if a > 1.0 + 1e-12:
        coef = math.acosh(a) / math.sqrt(a * a - 1.0)
    elif a < 1.0 - 1e-12:
        coef = math.acos(a) / math.sqrt(1.0 - a * a)
    else:
        coef = 1.0
    return coef * nb


def distance(p: SurfacePoint, q: SurfacePoint) -> float:
    """min over gamma of ||log(frame(p)^-1 gamma frame(q))||_F."""
    g1 = p.frame()
    g1inv = ((g1[1][1], -g1[0][1]), (-g1[1][0], g1[0][0]))
    g2 = q.frame()
    best = math.inf
    for gamma in _gamma_candidates():
        m = _fmul(g1inv, _fmul(gamma, g2))
        val = log_norm(m)
        if val < best:
            best = val
    return best


# --- lattices back to forms -------------------------------------------------


def theta0_basis(ideal):
    """Row basis of theta0(I) in the plane, theta0(u + v sqrt d) = (u+v sqrt d, u-v sqrt d).

    The rows are the images of the standard basis of the ideal; covolume is
    sqrt(d) N(I), and q0 restricted to this lattice is N(lambda)/N(I) in the
    same basis, an integral form of discriminant d when I is proper.
    """
    ideal = getattr(ideal, "ideal", ideal)
    d = ideal.d
    sd = math.sqrt(d)
    rows = []
    for beta in ideal.basis():
        # beta = p + q*omega with omega = (d + sqrt d)/2
        u = float(beta.p + beta.q * d / 2)
        v = float(beta.q / 2)
        rows.append((u + v * sd, u - v * sd))
    return (rows[0], rows[1])


def _real_gcd(a: float, b: float, tol: float) -> float:
    a, b = abs(a), abs(b)
    if a < b:
        a, b = b, a
    while b > tol:
        a, b = b, abs(a - b * round(a / b))
    return a


def form_from_lattice(basis, d=None) -> QuadForm:
    """Recover the form class of a lattice lying on some closed geodesic.

    Reads off the coefficients of q0(x, y) = xy in a Gauss-reduced row basis
    and rescales them to a primitive integer triple: by the diagonalisation
    identity the triple is sqrt(d)/vol times an integer form of discriminant
    d.  If d is omitted the scale is inferred from near-commensurability of
    the three coefficients.  Raises with the residual when the lattice is
    not of the expected shape.
    """
    u = (float(basis[0][0]), float(basis[0][1]))
    v = (float(basis[1][0]), float(basis[1][1]))
    vol = abs(u[0] * v[1] - u[1] * v[0])
    if vol < 1e-300:
        raise ValueError("degenerate lattice basis")
    # Gauss-reduce so the q0 coefficients are computed on short vectors
    nu = u[0] * u[0] + u[1] * u[1]
    nv = v[0] * v[0] + v[1] * v[1]
    if nu < nv:
        u, v, nu, nv = v, u, nv, nu
    for _ in range(_MAX_REDUCE):
        m = round((u[0] * v[0] + u[1] * v[1]) / nv)
        u = (u[0] - m * v[0], u[1] - m * v[1])
        nu = u[0] * u[0] + u[1] * u[1]
        if nu >= nv:
            break
        u, v, nu, nv = v, u, nv, nu
    qa = u[0] * u[1]
    qc = v[0] * v[1]
    qb = u[0] * v[1] + u[1] * v[0]
    if d is not None:
        scale = math.sqrt(d) / vol
    else:
        g = 0.0
        tol = 1e-8 * max(abs(qa), abs(qb), abs(qc), 1.0)
        for coeff in (qa, qb, qc):
            if abs(coeff) > tol:
                g = _real_gcd(g, coeff, tol) if g else abs(coeff)
        if not g:
            raise ValueError("lattice does not carry an integral multiple of q0")
        scale = 1.0 / g
    a, b, c = (round(scale * qa), round(scale * qb), round(scale * qc))
    residual = max(
        abs(scale * qa - a), abs(scale * qb - b), abs(scale * qc - c)
    )
    if residual > 1e-6:
        raise ValueError(
            "lattice is not on a closed geodesic (residual %.3g)" % residual
        )
    disc = b * b - 4 * a * c
    if d is not None and disc != d:
        raise ValueError("recovered form has discriminant %d, expected %d" % (disc, d))
    if not is_discriminant(disc):
        raise ValueError(
            "recovered coefficients %r are not a nondegenerate indefinite form"
            % ((a, b, c),)
        )
    return QuadForm(a, b, c)
