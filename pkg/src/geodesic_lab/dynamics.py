"""Time-one dynamics on the modular surface: excursions, Bowen covers, entropy.

The time-one map T sends x to x.a with a = diag(e^(1/2), e^(-1/2)), the
geodesic flow sampled at unit time.  Against the height function two facts
drive everything here.  First, one step changes log ht by at most 1/2 (a
vector (v1, v2) is stretched by at most e^(1/2) in either coordinate), so a
point of height M needs at least floor(2 log M) steps to fall below height
1.  Second, while an orbit is above height 1 its height is unimodal (the
cusp excursion is a single rise and fall), so the times in [-N, N] spent
above a cut M decompose into well separated stretches: two stretches must
bracket a dip below height 1 and are therefore at least 2 floor(2 log M)
apart.  The excursion pattern of a trajectory is the bitset V of its
above-M times; the number of realizable patterns grows like
e^(2 log log M / log M * N), sub-exponentially in N once M is large.

A Bowen (N, eta)-ball around x is the set of y whose displacement
g = frame(x)^(-1) gamma frame(y) stays eta-small when conjugated by a^n for
all |n| <= N.  Conjugation scales the off-diagonal entries by e^(-n) and
e^(n), so the ball is a tube: width eta e^(-N) across the flow, length eta
along it.  Membership minimises over the deck candidates gamma used by the
distance operation, extended with cusp translations T^k when samples sit
high enough that a ball wraps the neck (the neck at height ht has length
ht^(-2), so only bounded eta ht^2 is supported).  The minimal number of
such tubes needed to cover a sample of an invariant measure grows like
e^(2Nh) with the entropy h, and log(cover)/2N is the covering estimate of
entropy: near 1 for samples spread like the uniform measure, small for a
sample concentrated on a single short closed geodesic, whose cover is a
one-dimensional chain of about length/eta tubes at every N.  Greedy
first-fit covers stand in for minimal ones; they are upper bounds, which is
the safe direction for every inequality tested here.  Note the ceiling this
implies for the arc-length measure on G_d: its support has total length
2h(d) * period, so no cover of it can exceed that length divided by the
tube length, and the covering estimate saturates at log(length/eta)/2N no
matter how many samples are drawn.

The entropy-vs-cusp-mass inequality ties the two halves together: an
invariant measure with mass mu(X_{>=M}) high in the cusp satisfies
h <= 1 + log log M / log M - mu(X_{>=M})/2 for large M, because above-M
stretches admit only about e^(|V|/2) many distinguishable continuations
instead of e^(|V|).  entropy_report evaluates both sides per M with the
covering estimate standing in for h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from .geodesics import (
    SurfacePoint,
    _diag_flow,
    _fmul,
    _gamma_candidates,
    from_frame,
    log_norm,
)
from .stats import SampleSet, _frames_from_coords, _log_norm_batch, close_pairs

DEFAULT_N_CAP = 12
DEFAULT_ETA_CAP = 0.05
_WRAP_BUDGET = 8.0


# --- the time-one map --------------------------------------------------------


def time_one(p: SurfacePoint) -> SurfacePoint:
    """T(x) = x.a reduced back to the strip."""
    return from_frame(_fmul(p.frame(), _diag_flow(1.0)))


def time_one_inverse(p: SurfacePoint) -> SurfacePoint:
    """T^(-1) by multiplying a^(-1); no reduction history is inverted."""
    return from_frame(_fmul(p.frame(), _diag_flow(-1.0)))


def iterate(p: SurfacePoint, n: int) -> SurfacePoint:
    """T^n by chaining unit steps, so each step re-reduces."""
    step = time_one if n >= 0 else time_one_inverse
    for _ in range(abs(int(n))):
        p = step(p)
    return p


def perturb_stable(p: SurfacePoint, t: float) -> SurfacePoint:
    """Push p along the stable horocycle: frame times [[1, t], [0, 1]].

    Forward flow conjugates the parameter to t e^(-n), so the perturbed
    orbit tracks the original at distance about |t| e^(-n).
    """
    return from_frame(_fmul(p.frame(), ((1.0, t), (0.0, 1.0))))


def perturb_unstable(p: SurfacePoint, t: float) -> SurfacePoint:
    """Push p along the unstable horocycle [[1, 0], [t, 1]]."""
    return from_frame(_fmul(p.frame(), ((1.0, 0.0), (t, 1.0))))


def _check_window(N: int, n_cap: int) -> None:
    if N < 0 or N > n_cap:
        raise ValueError(
            f"window N={N} outside [0, {n_cap}]; beyond the cap the e^N "
            "sensitivity of the flow eats double precision (pass n_cap= to "
            "override)"
        )


@dataclass(frozen=True, eq=False)
class Trajectory:
    """T-iterates of a base point for n in [-N, N] with their heights."""

    base: SurfacePoint
    N: int
    points: tuple
    heights: np.ndarray

    def point(self, n: int) -> SurfacePoint:
        if abs(n) > self.N:
            raise IndexError(f"time {n} outside [-{self.N}, {self.N}]")
        return self.points[n + self.N]

    def height(self, n: int) -> float:
        if abs(n) > self.N:
            raise IndexError(f"time {n} outside [-{self.N}, {self.N}]")
        return float(self.heights[n + self.N])

    def __len__(self) -> int:
        return 2 * self.N + 1


def trajectory(p: SurfacePoint, N: int, *, n_cap: int = DEFAULT_N_CAP) -> Trajectory:
    """Walk N unit steps each way from p, reducing after every step.

    Heights are read off the stored strip representatives.  Every step is
    reduced, so only the base entry depends on the representative handed
    in; library constructors always produce reduced points.
    """
    _check_window(N, n_cap)
    fwd = [p]
    for _ in range(N):
        fwd.append(time_one(fwd[-1]))
    bwd = []
    q = p
    for _ in range(N):
        q = time_one_inverse(q)
        bwd.append(q)
    points = tuple(reversed(bwd)) + tuple(fwd)
    heights = np.array([q.height for q in points])
    return Trajectory(base=p, N=N, points=points, heights=heights)


def _heights_row(p: SurfacePoint, N: int, out: np.ndarray) -> None:
    out[N] = p.height
    q = p
    for k in range(1, N + 1):
        q = time_one(q)
        out[N + k] = q.height
    q = p
    for k in range(1, N + 1):
        q = time_one_inverse(q)
        out[N - k] = q.height


def _as_points(samples) -> list:
    if isinstance(samples, SampleSet):
        return [
            SurfacePoint(
                float(samples.x[i]),
                float(samples.y[i]),
                float(samples.theta[i]),
                float(samples.height[i]),
            )
            for i in range(samples.size)
        ]
    return list(samples)


def _heights_matrix(samples, N: int) -> np.ndarray:
    pts = _as_points(samples)
    out = np.empty((len(pts), 2 * N + 1))
    for k, p in enumerate(pts):
        _heights_row(p, N, out[k])
    return out


# --- excursion patterns ------------------------------------------------------


@dataclass(frozen=True)
class ExcursionPattern:
    """The above-M times V of a trajectory window, stored as a bitset.

    Bit k of bits stands for time n = k - N.  start_below/end_below record
    whether the window endpoints sit below M, the bracketing hypothesis
    under which the pattern matches a set Z(V).
    """

    M: float
    N: int
    bits: int
    start_below: bool
    end_below: bool

    @staticmethod
    def from_heights(heights: Sequence[float], M: float) -> "ExcursionPattern":
        hts = np.asarray(heights, dtype=float)
        if hts.ndim != 1 or hts.size % 2 != 1:
            raise ValueError("need an odd-length height window centred at time 0")
        if M < 1.0:
            raise ValueError("height cuts start at M = 1")
        N = (hts.size - 1) // 2
        bits = 0
        for k in range(hts.size):
            if hts[k] >= M:
                bits |= 1 << k
        return ExcursionPattern(
            M=M,
            N=N,
            bits=bits,
            start_below=bool(hts[0] < M),
            end_below=bool(hts[-1] < M),
        )

    @property
    def size(self) -> int:
        return bin(self.bits).count("1")

    @property
    def is_empty(self) -> bool:
        return self.bits == 0

    @property
    def times(self) -> tuple:
        return tuple(
            k - self.N for k in range(2 * self.N + 1) if self.bits >> k & 1
        )

    def stretches(self) -> list:
        """Maximal runs of V as inclusive (start, end) time pairs."""
        out = []
        run = None
        for k in range(2 * self.N + 1):
            if self.bits >> k & 1:
                n = k - self.N
                if run is None:
                    run = [n, n]
                else:
                    run[1] = n
            elif run is not None:
                out.append((run[0], run[1]))
                run = None
        if run is not None:
            out.append((run[0], run[1]))
        return out

    @property
    def separation_required(self) -> int:
        """2 floor(2 log M): the minimal spacing between distinct stretches."""
        return 2 * int(math.floor(2.0 * math.log(self.M))) if self.M > 1.0 else 0

    @property
    def min_gap(self) -> Optional[int]:
        runs = self.stretches()
        if len(runs) < 2:
            return None
        return min(b[0] - a[1] for a, b in zip(runs, runs[1:]))

    @property
    def separation_ok(self) -> bool:
        gap = self.min_gap
        return gap is None or gap >= self.separation_required


def excursion_pattern(
    p: Union[SurfacePoint, Trajectory], N: int, M: float, *, n_cap: int = DEFAULT_N_CAP
) -> ExcursionPattern:
    """Pattern of above-M times of the trajectory of p on [-N, N]."""
    if isinstance(p, Trajectory):
        if N > p.N:
            raise ValueError(f"trajectory only reaches +-{p.N}, asked for {N}")
        hts = p.heights[p.N - N : p.N + N + 1]
    else:
        _check_window(N, n_cap)
        hts = np.empty(2 * N + 1)
        _heights_row(p, N, hts)
    return ExcursionPattern.from_heights(hts, M)


# --- pattern census ----------------------------------------------------------


@dataclass(frozen=True)
class PatternCensus:
    M: float
    N: int
    total: int
    distinct: int
    counts: dict
    separation_violations: int


def _census_from_heights(hmat: np.ndarray, M: float, N: int) -> PatternCensus:
    half = (hmat.shape[1] - 1) // 2
    window = hmat[:, half - N : half + N + 1]
    counts: dict = {}
    violations = 0
    for row in window:
        pat = ExcursionPattern.from_heights(row, M)
        counts[pat.bits] = counts.get(pat.bits, 0) + 1
        if not pat.separation_ok:
            violations += 1
    return PatternCensus(
        M=M,
        N=N,
        total=int(window.shape[0]),
        distinct=len(counts),
        counts=counts,
        separation_violations=violations,
    )


def pattern_census(samples, N: int, M: float, *, n_cap: int = DEFAULT_N_CAP) -> PatternCensus:
    """Distinct excursion patterns over a sample set, with a histogram."""
    _check_window(N, n_cap)
    return _census_from_heights(_heights_matrix(samples, N), M, N)


def merge_censuses(a: PatternCensus, b: PatternCensus) -> PatternCensus:
    """Associative merge of censuses taken with the same (M, N)."""
    if (a.M, a.N) != (b.M, b.N):
        raise ValueError("can only merge censuses with matching M and N")
    counts = dict(a.counts)
    for bits, c in b.counts.items():
        counts[bits] = counts.get(bits, 0) + c
    return PatternCensus(
        M=a.M,
        N=a.N,
        total=a.total + b.total,
        distinct=len(counts),
        counts=counts,
        separation_violations=a.separation_violations + b.separation_violations,
    )


def pattern_growth_rate(M: float) -> float:
    """2 log log M / log M, the per-step exponent of the pattern count.

    An asymptotic-in-M rate: below M = e it is negative and the envelope is
    not meaningful; the separation constraint only beats naive counting
    once floor(2 log M) clears a few steps.
    """
    if M <= 1.0:
        raise ValueError("pattern growth rate needs M > 1")
    return 2.0 * math.log(math.log(M)) / math.log(M)


def predicted_pattern_bound(M: float, N: int, C: float = 1.0) -> float:
    """C e^(rate(M) N), the envelope for the number of realizable patterns."""
    return C * math.exp(pattern_growth_rate(M) * N)


@dataclass(frozen=True)
class CensusSeries:
    """Censuses across a window ladder with the fitted envelope.

    C is calibrated so the envelope meets the census at the smallest
    window, then held fixed while N grows.
    """

    M: float
    n_values: tuple
    censuses: tuple
    rate: float
    C: float
    predicted: tuple

    @property
    def within_envelope(self) -> bool:
        return all(
            c.distinct <= p + 1e-9 for c, p in zip(self.censuses, self.predicted)
        )


def census_series(
    samples, M: float, n_values: Sequence[int], *, n_cap: int = DEFAULT_N_CAP
) -> CensusSeries:
    """Pattern censuses for several window sizes from one set of walks."""
    ns = sorted(set(int(n) for n in n_values))
    if not ns:
        raise ValueError("need at least one window size")
    _check_window(ns[-1], n_cap)
    hmat = _heights_matrix(samples, ns[-1])
    censuses = tuple(_census_from_heights(hmat, M, n) for n in ns)
    rate = pattern_growth_rate(M)
    C = censuses[0].distinct / math.exp(rate * ns[0])
    predicted = tuple(predicted_pattern_bound(M, n, C) for n in ns)
    return CensusSeries(
        M=M,
        n_values=tuple(ns),
        censuses=censuses,
        rate=rate,
        C=C,
        predicted=predicted,
    )


# --- Bowen balls and covers --------------------------------------------------


@lru_cache(maxsize=None)
def _wrap_gammas(wrap: int) -> tuple:
    """Deck candidates: the distance operation's short words plus cusp
    translations out to T^(+-wrap)."""
    gams = list(_gamma_candidates())
    for k in range(5, wrap + 1):
        gams.append(((1, k), (0, 1)))
        gams.append(((1, -k), (0, 1)))
    return tuple(gams)


def bowen_displacement(
    p: SurfacePoint, q: SurfacePoint, N: int, *, wrap: int = 4
) -> float:
    """min over gamma of max over |n| <= N of the conjugated displacement.

    q lies in the Bowen (N, eta)-ball of p exactly when this is <= eta.
    Conjugating g by a^n scales the corners: ((g00, g01 e^(-n)),
    (g10 e^n, g11)).
    """
    g1 = p.frame()
    g1inv = ((g1[1][1], -g1[0][1]), (-g1[1][0], g1[0][0]))
    g2 = q.frame()
    best = math.inf
    for gamma in _wrap_gammas(max(4, wrap)):
        m = _fmul(g1inv, _fmul(gamma, g2))
        if log_norm(m) >= best:
            continue
        worst = 0.0
        for n in range(-N, N + 1):
            en = math.exp(float(n))
            worst = max(
                worst,
                log_norm(((m[0][0], m[0][1] / en), (m[1][0] * en, m[1][1]))),
            )
            if worst >= best:
                break
        best = min(best, worst)
    return best


@dataclass(frozen=True)
class BowenBall:
    """The tube x B_{N, eta}: length eta along the flow, eta e^(-N) across."""

    center: SurfacePoint
    N: int
    eta: float

    def contains(self, q: SurfacePoint) -> bool:
        wrap = int(math.ceil(self.eta * max(self.center.y, q.y))) + 1
        return bowen_displacement(self.center, q, self.N, wrap=wrap) <= self.eta


@dataclass(frozen=True)
class BowenCover:
    """Greedy first-fit cover of a sample set by Bowen (N, eta)-balls.

    size is an upper bound for the minimal cover; center_indices lists the
    samples opened as ball centers, in sweep order.
    """

    N: int
    eta: float
    sample_count: int
    size: int
    center_indices: tuple

    @property
    def entropy_estimate(self) -> float:
        """log(size) / 2N, the covering estimate of entropy."""
        return math.log(self.size) / (2.0 * self.N)


def _sample_arrays(samples):
    if isinstance(samples, SampleSet):
        return samples.x, samples.y, samples.theta
    pts = list(samples)
    x = np.array([p.x for p in pts])
    y = np.array([p.y for p in pts])
    th = np.array([p.theta for p in pts])
    return x, y, th


def _check_injectivity(eta: float, y: np.ndarray) -> int:
    max_y = float(y.max())
    if eta * max_y > _WRAP_BUDGET:
        raise ValueError(
            f"eta={eta:g} too large for samples reaching height "
            f"{math.sqrt(max_y):.3f}: the cusp neck there has injectivity "
            f"radius ~{0.5 / max_y:.2e} and a Bowen ball would wrap it beyond "
            f"the supported identification budget; need eta <= "
            f"{_WRAP_BUDGET / max_y:.4g}"
        )
    return int(math.ceil(eta * max_y)) + 1


def _bowen_pair_rows(x, y, th, eta: float, wrap: int):
    """Candidate near pairs with every displacement that passes at n = 0.

    Returns (pair_i, pair_j, rows) where rows = (pair_index, m00, m01, m10,
    m11) stacks, one entry per (pair, gamma) whose time-zero norm is within
    eta; the per-window sweep then only has to scale corners.
    """
    i, j, _ = close_pairs(x, y, th, np.arange(x.size), eta)
    f00, f01, f10, f11 = _frames_from_coords(x, y, th)
    idx_list, m_list = [], []
    for gamma in _wrap_gammas(wrap):
        g = np.asarray(gamma, dtype=float)
        a00 = g[0, 0] * f00[j] + g[0, 1] * f10[j]
        a01 = g[0, 0] * f01[j] + g[0, 1] * f11[j]
        a10 = g[1, 0] * f00[j] + g[1, 1] * f10[j]
        a11 = g[1, 0] * f01[j] + g[1, 1] * f11[j]
        m00 = f11[i] * a00 - f01[i] * a10
        m01 = f11[i] * a01 - f01[i] * a11
        m10 = -f10[i] * a00 + f00[i] * a10
        m11 = -f10[i] * a01 + f00[i] * a11
        hit = np.where(_log_norm_batch(m00, m01, m10, m11) <= eta)[0]
        if hit.size:
            idx_list.append(hit)
            m_list.append((m00[hit], m01[hit], m10[hit], m11[hit]))
    if not idx_list:
        return i, j, None
    rows_idx = np.concatenate(idx_list)
    rows = tuple(np.concatenate([m[k] for m in m_list]) for k in range(4))
    return i, j, (rows_idx, rows)


def _connected_at_window(pair_count: int, pair_rows, N: int, eta: float) -> np.ndarray:
    ok = np.zeros(pair_count, dtype=bool)
    if pair_rows is None:
        return ok
    rows_idx, (m00, m01, m10, m11) = pair_rows
    good = np.ones(rows_idx.size, dtype=bool)
    for n in range(-N, N + 1):
        if n == 0:
            continue
        en = math.exp(float(n))
        good &= _log_norm_batch(m00, m01 / en, m10 * en, m11) <= eta
        if not good.any():
            break
    ok[rows_idx[good]] = True
    return ok


def _greedy_sweep(size: int, pi, pj) -> list:
    adj: list = [[] for _ in range(size)]
    for a, b in zip(pi, pj):
        adj[int(a)].append(int(b))
        adj[int(b)].append(int(a))
    covered = np.zeros(size, dtype=bool)
    centers = []
    for k in range(size):
        if not covered[k]:
            centers.append(k)
            covered[k] = True
            for nb in adj[k]:
                covered[nb] = True
    return centers


def bowen_covers(
    samples,
    n_values: Sequence[int],
    eta: float,
    *,
    n_cap: int = DEFAULT_N_CAP,
    eta_cap: float = DEFAULT_ETA_CAP,
) -> list:
    """Greedy covers at several window sizes, sharing the near-pair search.

    The candidate pairs depend only on eta; only the corner-scaling sweep
    depends on N, so a ladder of windows costs one spatial hash.
    """
    x, y, th = _sample_arrays(samples)
    if x.size == 0:
        raise ValueError("need at least one sample to cover")
    if not 0.0 < eta <= eta_cap:
        raise ValueError(
            f"eta={eta:g} outside (0, {eta_cap}]; above the cap the tube "
            "geometry degrades (pass eta_cap= to override)"
        )
    ns = [int(n) for n in n_values]
    for n in ns:
        if n < 1 or n > n_cap:
            raise ValueError(
                f"window N={n} outside [1, {n_cap}] (pass n_cap= to override)"
            )
    wrap = _check_injectivity(eta, y)
    pi, pj, pair_rows = _bowen_pair_rows(x, y, th, eta, wrap)
    out = []
    for n in ns:
        ok = _connected_at_window(pi.size, pair_rows, n, eta)
        centers = _greedy_sweep(x.size, pi[ok], pj[ok])
        out.append(
            BowenCover(
                N=n,
                eta=eta,
                sample_count=int(x.size),
                size=len(centers),
                center_indices=tuple(centers),
            )
        )
    return out


def bowen_cover(
    samples,
    N: int,
    eta: float,
    *,
    n_cap: int = DEFAULT_N_CAP,
    eta_cap: float = DEFAULT_ETA_CAP,
) -> BowenCover:
    """Greedy Bowen-ball cover of a sample set; deterministic in sample order."""
    return bowen_covers(samples, [N], eta, n_cap=n_cap, eta_cap=eta_cap)[0]


# --- entropy against cusp mass ----------------------------------------------


@dataclass(frozen=True)
class EntropyRow:
    M: float
    cusp_mass: float
    bound: float
    margin: float


@dataclass(frozen=True)
class EntropyReport:
    """Covering entropy estimates against the cusp-mass entropy bound.

    estimate is taken at the largest window; each row compares it with
    1 + log log M / log M - mass/2 at one height cut.
    """

    d: int
    eta: float
    n_values: tuple
    cover_sizes: tuple
    estimates: tuple
    estimate: float
    rows: tuple
    sample_count: int
    max_height: float
    seed: Optional[int]

    def as_dict(self) -> dict:
        return {
            "d": self.d,
            "eta": self.eta,
            "n_values": list(self.n_values),
            "cover_sizes": list(self.cover_sizes),
            "estimates": list(self.estimates),
            "estimate": self.estimate,
            "sample_count": self.sample_count,
            "max_height": self.max_height,
            "seed": self.seed,
            "rows": [
                {
                    "M": r.M,
                    "cusp_mass": r.cusp_mass,
                    "bound": r.bound,
                    "margin": r.margin,
                }
                for r in self.rows
            ],
        }


def entropy_bound(M: float, cusp_mass: float) -> float:
    """1 + log log M / log M - mass/2; asymptotic in M, needs M > 1."""
    if M <= 1.0:
        raise ValueError("the entropy bound needs M > 1")
    return 1.0 + math.log(math.log(M)) / math.log(M) - 0.5 * cusp_mass


def entropy_report(
    d: int,
    n_values: Sequence[int] = (4, 8),
    eta: float = 0.02,
    m_values: Sequence[float] = (3.0, 4.0, 5.0, 8.0),
    *,
    per_class: int = 1500,
    seed: int = 0,
    samples=None,
    n_cap: int = DEFAULT_N_CAP,
    eta_cap: float = DEFAULT_ETA_CAP,
) -> EntropyReport:
    """Per-M cusp mass, covering entropy estimate, and inequality margin.

    samples overrides the default mu_d sample set (pass a synthetic set to
    probe a single orbit); the estimate always comes from the deepest
    window in n_values.
    """
    from .stats import sample_set

    if samples is None:
        samples = sample_set(d, per_class, seed)
        seed_used: Optional[int] = seed
    else:
        seed_used = seed if isinstance(samples, SampleSet) else None
    ns = sorted(set(int(n) for n in n_values))
    covers = bowen_covers(samples, ns, eta, n_cap=n_cap, eta_cap=eta_cap)
    estimates = tuple(c.entropy_estimate for c in covers)
    if isinstance(samples, SampleSet):
        heights = samples.height
    else:
        heights = np.array([p.height for p in samples])
    rows = []
    for M in m_values:
        mass = float(np.mean(heights >= M))
        bound = entropy_bound(float(M), mass)
        rows.append(
            EntropyRow(
                M=float(M),
                cusp_mass=mass,
                bound=bound,
                margin=bound - estimates[-1],
            )
        )
    return EntropyReport(
        d=d,
        eta=eta,
        n_values=tuple(ns),
        cover_sizes=tuple(c.size for c in covers),
        estimates=estimates,
        estimate=estimates[-1],
        rows=tuple(rows),
        sample_count=covers[0].sample_count,
        max_height=float(np.max(heights)),
        seed=seed_used,
    )
