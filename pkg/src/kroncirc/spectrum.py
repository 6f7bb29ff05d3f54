"""Alpha-volume profiles and the rebalancing trees built from them.

A profile is the multiset of gate shapes (nnz U_i, nnz V_i) of a
decomposition of M^{(x)n_t}.  The skew size of a rebalancing tree obeys

    F_0(lam) = 1 + lam,
    F_k(lam) = min_t sum_i a_i F_{k-n_t}(b_i / a_i * lam),

and any tree's skew size is at least min_t rhoB_t(alpha)^{k/n_t} lam^alpha
where rhoB_t(alpha) = sum a^(1-alpha) b^alpha = rho_t(1-alpha).
"""
from __future__ import annotations

import math
import sys
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np
from scipy.optimize import brentq

from . import interval
from .core import Circuit, SparseVector, circuit_kron, vkron
from .semiring import PAR


@dataclass(frozen=True)
class AlphaProfile:
    label: str
    n_t: int
    terms: tuple  # sorted ((a, b), count)
    circuit: Circuit | None = field(default=None, compare=False, repr=False)

    @classmethod
    def from_counts(cls, label, n_t, counts, circuit=None) -> "AlphaProfile":
        terms = tuple(sorted((k, v) for k, v in Counter(counts).items() if v))
        if not terms:
            raise ValueError("empty profile")
        return cls(label, n_t, terms, circuit)

    @classmethod
    def from_circuit(cls, c: Circuit, n_t: int = 1, label: str = "") -> "AlphaProfile":
        return cls.from_counts(label, n_t, c.nnz_pairs(), c)

    def rho(self, alpha):
        """Certified enclosure of sum a^alpha b^(1-alpha)."""
        return interval.alpha_volume(self.terms, alpha)

    def rho_float(self, alpha: float) -> float:
        return float(sum(k * a ** alpha * b ** (1 - alpha) for (a, b), k in self.terms))

    def log_norm(self, alpha: float) -> float:
        """ln rho(alpha) / n_t in floating point."""
        return math.log(self.rho_float(alpha)) / self.n_t

    def transpose(self) -> "AlphaProfile":
        c = self.circuit.transpose() if self.circuit is not None else None
        return AlphaProfile.from_counts(self.label + "^T", self.n_t, {(b, a): k for (a, b), k in self.terms}, c)

    def kron(self, other: "AlphaProfile") -> "AlphaProfile":
        cnt = Counter()
        for (a, b), k in self.terms:
            for (c, d), m in other.terms:
                cnt[(a * c, b * d)] += k * m
        circ = None
        if self.circuit is not None and other.circuit is not None:
            circ = circuit_kron(self.circuit, other.circuit)
        return AlphaProfile.from_counts(f"{self.label}*{other.label}", self.n_t + other.n_t, cnt, circ)

    @property
    def n_gates(self) -> int:
        return sum(k for _, k in self.terms)

    def ratios(self) -> set:
        return {Fraction(b, a) for (a, b), _ in self.terms}


def mixed_profile(s: AlphaProfile, t: AlphaProfile, a: int, m: int) -> "AlphaProfile":
    """Profile of I_s^{(x)a} (x) I_t^{(x)(m-a)}."""
    out = None
    for p in [s] * a + [t] * (m - a):
        out = p if out is None else out.kron(p)
    return AlphaProfile(f"{s.label}^{a}*{t.label}^{m - a}", out.n_t, out.terms, out.circuit)


def row_profile(rows, label="row") -> AlphaProfile:
    """One-sided decomposition: one gate per nonzero row with the given row supports."""
    return AlphaProfile.from_counts(label, 1, Counter((1, r) for r in rows if r))


# ------------------------------------------------------------------- envelope


@dataclass
class Envelope:
    profiles: list

    def eval(self, alpha):
        """Certified enclosure of min_t rho_t(alpha)^(1/n_t)."""
        vals = [interval.root(p.rho(alpha), p.n_t) for p in self.profiles]
        return interval.imin(vals)

    def eval_float(self, alpha: float) -> float:
        return min(math.exp(p.log_norm(alpha)) for p in self.profiles)

    def argmin_profile(self, alpha: float) -> int:
        return int(np.argmin([p.log_norm(alpha) for p in self.profiles]))

    def division_points(self, grid: int = 1024) -> list[tuple[float, float, int]]:
        """Pieces (alpha_lo, alpha_hi, t) on which profile t attains the minimum."""
        xs = np.linspace(0.0, 1.0, grid + 1)
        who = [self.argmin_profile(x) for x in xs]
        pieces = []
        lo = 0.0
        for k in range(1, len(xs)):
            if who[k] != who[k - 1]:
                s, t = self.profiles[who[k - 1]], self.profiles[who[k]]
                g = lambda x: s.log_norm(x) - t.log_norm(x)
                try:
                    cut = brentq(g, xs[k - 1], xs[k], xtol=1e-15)
                except ValueError:
                    cut = xs[k]
                pieces.append((lo, cut, who[k - 1]))
                lo = cut
        pieces.append((lo, 1.0, who[-1]))
        return pieces


def envelope_eval(env: Envelope, alpha):
    return env.eval(alpha)


def _dyadic(k: int, level: int) -> Fraction:
    return Fraction(k, 1 << level)


def envelope_argmax(env: Envelope, grid_size: int = 64, width_bits: int = 20):
    """Branch-and-bound for sup_alpha min_t rho_t(alpha)^(1/n_t).

    On a cell [x0, x1] each log-convex rho_t is at most max(rho_t(x0), rho_t(x1)),
    so min_t of these endpoint maxima bounds the envelope on the cell.
    Returns ((alpha_lo, alpha_hi), enclosure) where the enclosure contains the
    supremum and the alpha cell contains the best point found.
    """
    level = max(1, int(math.ceil(math.log2(grid_size))))
    cache = {}

    def vals(x: Fraction):
        if x not in cache:
            cache[x] = [interval.root(p.rho(interval.exact(x)), p.n_t) for p in env.profiles]
        return cache[x]

    def lower(x):
        return min(interval.bounds(v)[0] for v in vals(x))

    def upper_cell(x0, x1):
        return min(max(interval.bounds(a)[1], interval.bounds(b)[1]) for a, b in zip(vals(x0), vals(x1)))

    cells = [(_dyadic(k, level), _dyadic(k + 1, level)) for k in range(1 << level)]
    best_x = max((c[0] for c in cells), key=lower)
    best_x = max([best_x, Fraction(1)], key=lower)
    best = lower(best_x)
    slack = Fraction(1, 1 << 60)
    while True:
        for x0, x1 in cells:
            for x in (x0, x1):
                if lower(x) > best:
                    best, best_x = lower(x), x
        scored = [(upper_cell(x0, x1), x0, x1) for x0, x1 in cells]
        keep = [(u, x0, x1) for u, x0, x1 in scored if u > best + slack or x0 <= best_x <= x1]
        if max(x1 - x0 for _, x0, x1 in keep) <= Fraction(1, 1 << width_bits):
            hi = max(u for u, _, _ in keep)
            break
        nxt = []
        for _, x0, x1 in keep:
            if x1 - x0 <= Fraction(1, 1 << width_bits):
                nxt.append((x0, x1))
                continue
            mid = (x0 + x1) / 2
            nxt += [(x0, mid), (mid, x1)]
        if len(nxt) > 1 << 14:
            nxt.sort(key=lambda c: -upper_cell(*c))
            nxt = nxt[: 1 << 14]
        cells = nxt
    lo_cell = max(best_x - Fraction(1, 1 << width_bits), Fraction(0))
    hi_cell = min(best_x + Fraction(1, 1 << width_bits), Fraction(1))
    enclosure = interval.iv.mpf([interval.exact(best).a, interval.exact(max(hi, best)).b])
    return (lo_cell, hi_cell), enclosure


# ------------------------------------------------------------ skew-size bounds


def weak_duality_bound(env: Envelope, alpha, n: int, lam):
    """Certified lower bound C(1-alpha)^n lam^alpha on any tree's skew size."""
    alpha = interval.as_interval(alpha)
    c = env.eval(1 - alpha)
    lam_i = interval.as_interval(Fraction(lam) if not isinstance(lam, float) else lam)
    return c ** n * interval.iv.exp(alpha * interval.iv.log(lam_i))


class StateCapExceeded(RuntimeError):
    pass


def _levels_check(profiles, n):
    if not profiles:
        raise ValueError("at least one profile required")
    if n < 0:
        raise ValueError("n must be nonnegative")


def f_exact(profiles, n: int, lam, state_cap: int = 10 ** 6, return_choices: bool = False):
    """Optimal skew size over all rebalancing trees, as an exact Fraction."""
    _levels_check(profiles, n)
    lam = Fraction(lam)
    memo = {}
    choice = {}
    shapes = [[(Fraction(b, a), a, k) for (a, b), k in p.terms] for p in profiles]
    levels = [p.n_t for p in profiles]
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 10 * n + 1000))

    def F(k, x):
        if k == 0:
            return 1 + x
        key = (k, x)
        if key in memo:
            return memo[key]
        best, bt = None, None
        for t, sh in enumerate(shapes):
            if levels[t] > k:
                continue
            s = Fraction(0)
            for ratio, a, cnt in sh:
                sub = F(k - levels[t], x * ratio)
                if sub is None:
                    s = None
                    break
                s += cnt * a * sub
            if s is not None and (best is None or s < best):
                best, bt = s, t
        memo[key] = best
        choice[key] = bt
        if len(memo) > state_cap:
            raise StateCapExceeded(f"more than {state_cap} lambda-states; use the asymptotic schedule "
                                   "and the weak-duality bracket instead")
        return best

    try:
        val = F(n, lam)
    finally:
        sys.setrecursionlimit(old)
    if val is None:
        raise ValueError(f"no combination of profile levels sums to {n}")
    return (val, choice) if return_choices else val


def multinomial_mass(counts) -> Fraction:
    """multinomial(N; i) * prod (i_j/N)^{i_j}, exactly."""
    counts = [int(c) for c in counts]
    N = sum(counts)
    if N == 0:
        return Fraction(1)
    coef = factorial(N)
    for c in counts:
        coef //= factorial(c)
    out = Fraction(coef)
    for c in counts:
        out *= Fraction(c, N) ** c
    return out


def log_convexity_defect(p: AlphaProfile, grid: int = 64) -> float:
    """Most negative second difference of ln rho on a uniform grid (>= 0 up to rounding)."""
    xs = np.linspace(0, 1, grid + 1)
    ys = np.array([math.log(p.rho_float(x)) for x in xs])
    return float((ys[2:] - 2 * ys[1:-1] + ys[:-2]).min(initial=0.0))


# ----------------------------------------------------------------- schedules


@dataclass
class RebalanceSchedule:
    n: int
    lam: Fraction
    profiles: list
    choices: dict  # (remaining levels, lambda) -> profile index
    strategy: str = "exact"
    info: dict = field(default_factory=dict)

    def skew_size(self, k: int | None = None, lam=None) -> Fraction:
        k = self.n if k is None else k
        lam = self.lam if lam is None else Fraction(lam)
        memo = {}

        def S(kk, x):
            if kk == 0:
                return 1 + x
            if (kk, x) in memo:
                return memo[(kk, x)]
            p = self.profiles[self.choices[(kk, x)]]
            v = sum(cnt * a * S(kk - p.n_t, x * Fraction(b, a)) for (a, b), cnt in p.terms)
            memo[(kk, x)] = v
            return v

        return S(k, lam)

    def leaf_count(self) -> int:
        memo = {}

        def L(kk, x):
            if kk == 0:
                return 1
            if (kk, x) not in memo:
                p = self.profiles[self.choices[(kk, x)]]
                memo[(kk, x)] = sum(cnt * L(kk - p.n_t, x * Fraction(b, a)) for (a, b), cnt in p.terms)
            return memo[(kk, x)]

        return L(self.n, self.lam)


def _reachable(profiles, n, lam, rule):
    choices = {}
    stack = [(n, Fraction(lam))]
    while stack:
        k, x = stack.pop()
        if k == 0 or (k, x) in choices:
            continue
        t = rule(k, x)
        choices[(k, x)] = t
        p = profiles[t]
        for (a, b), _ in p.terms:
            stack.append((k - p.n_t, x * Fraction(b, a)))
    return choices


def _hull_segments(env: Envelope):
    """Upper-hull vertices of ln C_B and the profile pieces between them."""
    # C_B(alpha) = C(1 - alpha); work with pieces of C mapped through alpha -> 1 - alpha
    pieces = [(1 - hi, 1 - lo, t) for lo, hi, t in reversed(env.division_points())]
    pts = [pieces[0][0]] + [hi for _, hi, _ in pieces]
    vals = [math.log(env.eval_float(1 - x)) for x in pts]
    hull = []
    for i in range(len(pts)):
        while len(hull) >= 2:
            i0, i1 = hull[-2], hull[-1]
            cross = (pts[i1] - pts[i0]) * (vals[i] - vals[i0]) - (vals[i1] - vals[i0]) * (pts[i] - pts[i0])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return pieces, pts, vals, hull


def asymptotic_profiles(env: Envelope, m: int = 8):
    """Per hull segment, a profile that is near-minimal at both segment ends.

    Where a hull segment spans several pieces, the outer pieces' profiles s, t are
    mixed as s^a (x) t^(m-a); a is chosen to balance the excess of the mixed
    curve over C_B at the two hull vertices.
    """
    pieces, pts, vals, hull = _hull_segments(env)
    out = []
    for j in range(1, len(hull)):
        i0, i1 = hull[j - 1], hull[j]
        x0, x1 = pts[i0], pts[i1]
        s = env.profiles[pieces[i0][2]]
        t = env.profiles[pieces[i1 - 1][2]]
        if i1 - i0 == 1 or s is t:
            out.append((x0, x1, s, vals[i0], vals[i1]))
            continue
        sB = lambda x, p: p.log_norm(1 - x)

        def excess(a):
            ws, wt = a * s.n_t, (m - a) * t.n_t
            e0 = (ws * sB(x0, s) + wt * sB(x0, t)) / (ws + wt) - vals[i0]
            e1 = (ws * sB(x1, s) + wt * sB(x1, t)) / (ws + wt) - vals[i1]
            return e0, e1

        lo, hi = 0, m
        while hi - lo > 1:
            mid = (lo + hi) // 2
            e0, e1 = excess(mid)
            if e0 > e1:
                lo = mid
            else:
                hi = mid
        a = min((lo, hi), key=lambda z: max(excess(z)))
        out.append((x0, x1, mixed_profile(s, t, a, m), vals[i0], vals[i1]))
    return out


def build_schedule(profiles, n: int, lam=1, strategy: str = "exact", state_cap: int = 10 ** 6,
                   mix_levels: int = 8) -> RebalanceSchedule:
    profiles = list(profiles)
    lam = Fraction(lam)
    if strategy == "exact":
        _, choice = f_exact(profiles, n, lam, state_cap, return_choices=True)
        choices = _reachable(profiles, n, lam, lambda k, x: choice[(k, x)])
        return RebalanceSchedule(n, lam, profiles, choices, "exact")
    if strategy != "asymptotic":
        raise ValueError("strategy is 'exact' or 'asymptotic'")
    env = Envelope(profiles)
    segs = asymptotic_profiles(env, mix_levels)
    seg_profiles = [p for _, _, p, _, _ in segs]
    all_profiles = profiles + [p for p in seg_profiles if p not in profiles]
    seg_index = [all_profiles.index(p) for p in seg_profiles]
    theta = [(v1 - v0) / (x1 - x0) for x0, x1, _, v0, v1 in segs]

    def rule(k, x):
        lx = math.log(float(x))
        j = 0
        while j + 1 < len(theta) and lx >= -(theta[j] + theta[j + 1]) / 2 * k:
            j += 1
        t = seg_index[j]
        if all_profiles[t].n_t <= k:
            return t
        # not enough levels left for the mixed profile: best base profile that fits
        alpha_j = (segs[j][0] + segs[j][1]) / 2
        fits = [i for i, p in enumerate(profiles) if p.n_t <= k]
        if not fits:
            raise ValueError(f"no profile fits the remaining {k} levels")
        return min(fits, key=lambda i: profiles[i].log_norm(1 - alpha_j))

    choices = _reachable(all_profiles, n, lam, rule)
    sched = RebalanceSchedule(n, lam, all_profiles, choices, "asymptotic",
                              {"thetas": theta, "segments": [(x0, x1) for x0, x1, *_ in segs]})
    return sched


def measured_overhead(sched: RebalanceSchedule, grid: int = 256) -> float:
    """(S / sup_alpha C_B(alpha)^n lam^alpha)^(1/n) with float arithmetic."""
    base = [p for p in sched.profiles if "*" not in p.label] or sched.profiles
    env = Envelope(base)
    lam = float(sched.lam)
    best = max(sched.n * math.log(env.eval_float(1 - a)) + a * math.log(lam) for a in np.linspace(0, 1, grid + 1))
    s = math.log(float(sched.skew_size()))
    return math.exp((s - best) / sched.n)


def iter_schedule_gates(sched: RebalanceSchedule):
    """Leaf gates (A_y, B_y) streamed depth-first; the root edge is the leading Kronecker factor."""
    for p in sched.profiles:
        if p.circuit is None:
            raise ValueError(f"profile {p.label!r} has no backing circuit")
    one = (SparseVector(1, (0,), (1,)), SparseVector(1, (0,), (1,)))
    stack = [(sched.n, sched.lam, one[0], one[1])]
    while stack:
        k, x, u, v = stack.pop()
        if k == 0:
            yield u, v
            continue
        p = sched.profiles[sched.choices[(k, x)]]
        sr = p.circuit.semiring
        for gu, gv in reversed(p.circuit.gates):
            stack.append((k - p.n_t, x * Fraction(gv.nnz, gu.nnz), vkron(u, gu, sr), vkron(v, gv, sr)))


def expand_schedule(sched: RebalanceSchedule) -> Circuit:
    gates = tuple(iter_schedule_gates(sched))
    base = next(p.circuit for p in sched.profiles if p.circuit is not None)
    rows = _power_dim(sched, "rows")
    cols = _power_dim(sched, "cols")
    return Circuit(rows, cols, gates, base.semiring)


def _power_dim(sched, which):
    for p in sched.profiles:
        per = (p.circuit.n_rows if which == "rows" else p.circuit.n_cols)
        base = round(per ** (1 / p.n_t))
        if base ** p.n_t == per:
            return base ** sched.n
    raise ValueError("cannot infer base dimension")


# ------------------------------------------------------------ small families


def r1_row_circuit() -> Circuit:
    # R_1 = [[1,1],[1,0]], one gate per row
    g = [(SparseVector(2, (0,), (1,)), SparseVector(2, (0, 1), (1, 1))),
         (SparseVector(2, (1,), (1,)), SparseVector(2, (0,), (1,)))]
    return Circuit(2, 2, tuple(g), PAR)


def r1_profiles():
    row = AlphaProfile.from_circuit(r1_row_circuit(), 1, "row")
    col = AlphaProfile.from_circuit(r1_row_circuit().transpose(), 1, "col")
    return [row, col]


def word_profile(d: int, w, a=None, label=None) -> AlphaProfile:
    from .partitions import merged_terms, parse_word
    letters = parse_word(w)
    a = tuple(a) if a is not None else ()
    return AlphaProfile.from_counts(label or "".join(letters), d, merged_terms(d, letters, a))
