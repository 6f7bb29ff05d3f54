"""Degree-oriented constructions.

Density functions over orbit types, randomized rectangle coverings of the
weight classes of R^{(x)d}, the entropy optimizations behind the covering
exponents, typical-degree pruning and hole fixing with a symmetry group.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np
import sympy
from scipy.optimize import minimize

from . import interval
from .core import Circuit, SparseVector
from .semiring import PAR


# ------------------------------------------------------------------ densities


def _poly_add(a: dict, b: dict, scale=1) -> dict:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + scale * v
        if out[k] == 0:
            del out[k]
    return out


def _poly_mul(a: dict, b: dict) -> dict:
    out = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0) + va * vb
    return {k: v for k, v in out.items() if v != 0}


def _poly_pow(a: dict, n: int, nvars: int) -> dict:
    out = {(0,) * nvars: Fraction(1)}
    for _ in range(n):
        out = _poly_mul(out, a)
    return out


@dataclass(frozen=True)
class LogPoly:
    """sum over primes P of log2(P) * poly_P(p_1..p_{k-1}), with p_k = 1 - sum of the others.

    Polynomials are dicts from exponent tuples to Fractions, so equality is exact.
    """

    k: int
    parts: tuple  # sorted (prime, ((exps, coef), ...))

    @classmethod
    def build(cls, k: int, parts: dict) -> "LogPoly":
        clean = []
        for prime in sorted(parts):
            poly = {e: Fraction(c) for e, c in parts[prime].items() if c != 0}
            if poly:
                clean.append((prime, tuple(sorted(poly.items()))))
        return cls(k, tuple(clean))

    @classmethod
    def from_homogeneous(cls, k: int, terms: dict) -> "LogPoly":
        """terms: {exps over all k variables: {prime: coef}}; dehomogenizes the last variable."""
        nv = k - 1
        one_minus = {(0,) * nv: Fraction(1)}
        for j in range(nv):
            e = [0] * nv
            e[j] = 1
            one_minus[tuple(e)] = Fraction(-1)
        parts = defaultdict(dict)
        cache = {}
        for exps, coefs in terms.items():
            head, last = tuple(exps[:-1]), exps[-1]
            if last not in cache:
                cache[last] = _poly_pow(one_minus, last, nv)
            mono = _poly_mul({head: Fraction(1)}, cache[last])
            for prime, c in coefs.items():
                parts[prime] = _poly_add(parts[prime], mono, Fraction(c))
        return cls.build(k, parts)

    @classmethod
    def rational(cls, k: int, terms: dict) -> "LogPoly":
        """Homogeneous polynomial with rational coefficients (i.e. multiples of log2 2)."""
        return cls.from_homogeneous(k, {e: {2: c} for e, c in terms.items()})

    def __add__(self, other: "LogPoly") -> "LogPoly":
        if self.k != other.k:
            raise ValueError("different numbers of orbits")
        parts = {p: dict(poly) for p, poly in self.parts}
        for p, poly in other.parts:
            parts[p] = _poly_add(parts.get(p, {}), dict(poly))
        return LogPoly.build(self.k, parts)

    def __call__(self, point) -> float:
        point = list(point)
        if len(point) == self.k:
            point = point[:-1]
        tot = 0.0
        for prime, poly in self.parts:
            v = sum(float(c) * math.prod(x ** e for x, e in zip(point, exps)) for exps, c in poly)
            tot += math.log2(prime) * v
        return tot

    def exact(self, point):
        """Exact value at a rational point as a sympy expression."""
        point = [sympy.Rational(Fraction(x).numerator, Fraction(x).denominator) for x in point]
        if len(point) == self.k:
            point = point[:-1]
        tot = sympy.Integer(0)
        for prime, poly in self.parts:
            v = sum(sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*[x ** e for x, e in zip(point, exps)])
                    for exps, c in poly)
            tot += (sympy.log(prime, 2) if prime != 2 else 1) * v
        return sympy.nsimplify(tot) if prime == 2 else tot

    def is_rational(self) -> bool:
        return all(p == 2 for p, _ in self.parts)

    def rational_poly(self) -> dict:
        if not self.is_rational():
            raise ValueError("density involves logarithms of odd primes")
        return dict(self.parts[0][1]) if self.parts else {}


def _factor(n: int) -> dict:
    return {int(p): int(e) for p, e in sympy.factorint(int(n)).items()}


@dataclass
class DensitySpec:
    """Degrees of a circuit for M^{(x)d0} plus the orbit structure of M's rows/columns."""

    circuit: Circuit
    d0: int
    row_orbits: tuple  # base row index -> orbit id
    col_orbits: tuple

    @classmethod
    def for_disjointness(cls, circuit: Circuit, d0: int) -> "DensitySpec":
        # R_1 is fixed only by the trivial permutation pair: orbits {0} and {1}
        return cls(circuit, d0, (0, 1), (0, 1))


def _density(degrees, d0, orbits) -> LogPoly:
    n0 = len(orbits)
    k = max(orbits) + 1
    size = Counter(orbits)
    terms = defaultdict(lambda: defaultdict(Fraction))
    for x, deg in enumerate(degrees):
        deg = int(deg)
        if deg <= 0:
            raise ValueError(f"index {x} has degree {deg}; log undefined")
        digits = []
        y = x
        for _ in range(d0):
            digits.append(y % n0)
            y //= n0
        typ = [0] * k
        w = Fraction(1)
        for dgt in digits:
            o = orbits[dgt]
            typ[o] += 1
            w /= size[o]
        if deg > 1:
            for prime, e in _factor(deg).items():
                terms[tuple(typ)][prime] += w * e
        else:
            terms[tuple(typ)]
    return LogPoly.from_homogeneous(k, {t: dict(v) for t, v in terms.items()})


def density_row(spec: DensitySpec) -> LogPoly:
    return _density(spec.circuit.row_degrees(), spec.d0, spec.row_orbits)


def density_col(spec: DensitySpec) -> LogPoly:
    return _density(spec.circuit.col_degrees(), spec.d0, spec.col_orbits)


def density_eval(spec: DensitySpec, p, side: str = "row") -> float:
    p = [float(x) for x in p]
    if any(x < -1e-12 for x in p) or abs(sum(p) - 1) > 1e-9:
        raise ValueError("point must lie on the simplex")
    poly = density_row(spec) if side == "row" else density_col(spec)
    return poly(p)


def density_sup(spec_or_poly, side: str = "row", step: int = 256, polish: int = 50):
    """Best point found by a simplex grid of the given step plus Nelder-Mead polish."""
    poly = spec_or_poly if isinstance(spec_or_poly, LogPoly) else (
        density_row(spec_or_poly) if side == "row" else density_col(spec_or_poly))
    k = poly.k
    best, best_p = -math.inf, None
    for comp in _compositions(step, k):
        p = [c / step for c in comp]
        v = poly(p)
        if v > best:
            best, best_p = v, p

    def neg(z):
        q = np.abs(z)
        s = q.sum()
        if s == 0:
            return 0.0
        return -poly(list(q / s))

    res = minimize(neg, np.array(best_p), method="Nelder-Mead",
                   options={"maxiter": polish, "xatol": 1e-12, "fatol": 1e-14})
    if -res.fun > best:
        q = np.abs(res.x)
        best, best_p = -res.fun, list(q / q.sum())
    return best_p, best


def _compositions(n, k):
    if k == 1:
        yield (n,)
        return
    for i in range(n + 1):
        for rest in _compositions(n - i, k - 1):
            yield (i,) + rest


def density_sup_exact(poly: LogPoly):
    """Exact maximum over the simplex for two orbits and rational coefficients."""
    if poly.k != 2:
        raise ValueError("exact maximization implemented for two orbits")
    coeffs = poly.rational_poly()
    x = sympy.Symbol("x")
    f = sum(sympy.Rational(c.numerator, c.denominator) * x ** e[0] for e, c in coeffs.items())
    f = sympy.expand(f)
    cands = [sympy.Integer(0), sympy.Integer(1)]
    df = sympy.diff(f, x)
    if df != 0:
        cands += [r for r in sympy.Poly(df, x).real_roots() if 0 <= r <= 1]
    best = max(cands, key=lambda r: f.subs(x, r))
    return (best, 1 - best), sympy.nsimplify(f.subs(x, best))


# ---------------------------------------------------------- the 4-gate circuit


def r2_partition_circuit(semiring=PAR) -> Circuit:
    """Four rectangles partitioning R^{(x)2}: column 0, row 0 minus column 0, and two single entries."""
    n = 4
    gates = [
        (SparseVector(n, (0, 1, 2, 3), (1, 1, 1, 1)), SparseVector(n, (0,), (1,))),
        (SparseVector(n, (0,), (1,)), SparseVector(n, (1, 2, 3), (1, 1, 1))),
        (SparseVector(n, (1,), (1,)), SparseVector(n, (2,), (1,))),
        (SparseVector(n, (2,), (1,)), SparseVector(n, (1,), (1,))),
    ]
    return Circuit(n, n, tuple(gates), semiring)


# ------------------------------------------------------------------- coverings


def entropy(x: float) -> float:
    """Binary entropy in bits with 0 log 0 = 0."""
    if x <= 0 or x >= 1:
        return 0.0
    return -(x * math.log(x) + (1 - x) * math.log(1 - x)) / math.log(2)


@dataclass
class CoveringPlan:
    d: int
    pd: int
    qd: int
    mud: int
    t: int
    seed: int
    U: list  # the t sampled mu*d-subsets (masks), with repetition
    verified: bool = False
    max_row_cover: int | None = None
    max_col_cover: int | None = None
    expected_row_cover: Fraction | None = None
    attempts: int = 1

    def distinct(self):
        """(distinct U masks, multiplicities)."""
        u, c = np.unique(np.array(self.U, dtype=np.int64), return_counts=True)
        return u, c

    @property
    def rect_shape(self) -> tuple[int, int]:
        return comb(self.mud, self.pd), comb(self.d - self.mud, self.qd)


class CoverFailure(RuntimeError):
    pass


def cover_probability(d, pd, qd, mud) -> Fraction:
    return Fraction(comb(d - pd - qd, mud - pd), comb(d, mud))


def cover_count(d, pd, qd, mud) -> int:
    P = cover_probability(d, pd, qd, mud)
    return math.ceil(Fraction(10 * d) / P)


def _masks_of_weight(d, w) -> np.ndarray:
    return np.array([sum(1 << b for b in s) for s in itertools.combinations(range(d), w)], dtype=np.int64)


def _random_subsets(rng, d, k, t) -> np.ndarray:
    if t == 0:
        return np.zeros(0, dtype=np.int64)
    keys = rng.random((t, d))
    idx = np.argsort(keys, axis=1)[:, :k]
    return ((1 << idx).sum(axis=1) if k else np.zeros(t, dtype=np.int64)).astype(np.int64)


def check_cover(plan: CoveringPlan):
    """Exhaustive coverage check; returns (ok, row multiplicities, col multiplicities)."""
    rows = _masks_of_weight(plan.d, plan.pd)
    cols = _masks_of_weight(plan.d, plan.qd)
    u, cnt = plan.distinct()
    A = ((rows[:, None] & u[None, :]) == rows[:, None]).astype(np.int64)  # S inside U
    B = ((cols[:, None] & u[None, :]) == 0).astype(np.int64)  # T outside U
    cover = (A * cnt[None, :]) @ B.T
    disjoint = (rows[:, None] & cols[None, :]) == 0
    ok = bool((cover[disjoint] > 0).all()) and not (cover[~disjoint] > 0).any()
    return ok, A @ cnt, B @ cnt


def random_cover(d: int, pd: int, qd: int, mud: int, seed: int = 0, verify: bool = True,
                 max_retries: int = 8) -> CoveringPlan:
    if not (0 <= pd <= mud <= d - qd):
        raise ValueError("need p <= mu <= 1 - q")
    t = cover_count(d, pd, qd, mud)
    expected = Fraction(t * comb(d - pd, mud - pd), comb(d, mud))
    for attempt in range(max_retries + 1):
        rng = np.random.default_rng([seed, attempt])
        U = _random_subsets(rng, d, mud, t).tolist()
        plan = CoveringPlan(d, pd, qd, mud, t, seed, U, expected_row_cover=expected, attempts=attempt + 1)
        if not verify:
            return plan
        ok, rmult, cmult = check_cover(plan)
        plan.max_row_cover = int(rmult.max(initial=0))
        plan.max_col_cover = int(cmult.max(initial=0))
        if ok:
            plan.verified = True
            return plan
    raise CoverFailure(f"no covering after {max_retries + 1} attempts (d={d}, p*d={pd}, q*d={qd}, mu*d={mud})")


def cover_circuit(plan: CoveringPlan, semiring=PAR) -> Circuit:
    """OR circuit over the full 2^d index space: one gate per sampled U."""
    n = 1 << plan.d
    gates = []
    for U in plan.U:
        inside = [b for b in range(plan.d) if U >> b & 1]
        outside = [b for b in range(plan.d) if not U >> b & 1]
        rows = sorted(sum(1 << b for b in s) for s in itertools.combinations(inside, plan.pd))
        cols = sorted(sum(1 << b for b in s) for s in itertools.combinations(outside, plan.qd))
        if rows and cols:
            gates.append((SparseVector(n, tuple(rows), (1,) * len(rows)), SparseVector(n, tuple(cols), (1,) * len(cols))))
    return Circuit(n, n, tuple(gates), semiring)


def f_size(p: float, q: float, mu: float) -> float:
    r = 1 - p - q
    mid = r * entropy((mu - p) / r) if r > 0 else 0.0
    side = max(mu * entropy(p / mu) if mu > 0 else 0.0, (1 - mu) * entropy(q / (1 - mu)) if mu < 1 else 0.0)
    return entropy(mu) - mid + side


def f_degree(p: float, q: float, mu: float) -> float:
    r = 1 - p - q
    mid = r * entropy((mu - p) / r) if r > 0 else 0.0
    a = (1 - p) * entropy((mu - p) / (1 - p)) if p < 1 else 0.0
    b = (1 - q) * entropy((1 - mu - q) / (1 - q)) if q < 1 else 0.0
    return max(a, b) - mid


def _inner_inf(f, p, q, grid: int = 64):
    """inf over mu in [p, 1-q]: coarse grid to bracket, then golden section.

    The integrand is a max of two smooth branches, so derivative-based steps
    stall at the kink; golden section does not care.
    """
    lo, hi = p, 1 - q
    if hi - lo < 1e-15:
        return f(p, q, lo), lo
    xs = np.linspace(lo, hi, grid + 1)
    vals = [f(p, q, x) for x in xs]
    i = int(np.argmin(vals))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, grid)]
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(p, q, c), f(p, q, d)
    while b - a > 1e-14:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(p, q, c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(p, q, d)
    return min((fc, c), (fd, d), (vals[i], xs[i]))


def _sup_inf(f, start):
    def neg(z):
        p, q = z
        if p < 0 or q < 0 or p + q > 1:
            return 10.0
        return -_inner_inf(f, p, q)[0]

    x, scale = np.array(start, dtype=float), 0.05
    for _ in range(3):
        simplex = np.array([x, x + [scale, 0], x + [0, scale]])
        res = minimize(neg, x, method="Nelder-Mead",
                       options={"initial_simplex": simplex, "xatol": 1e-12, "fatol": 1e-16, "maxiter": 4000})
        x, scale = res.x, scale / 20
    p, q = res.x
    val, mu = _inner_inf(f, p, q)
    return (float(p), float(q), float(mu)), 2.0 ** val


def cover_exponents() -> dict:
    """sup_{p,q} inf_mu of the size and degree covering exponents (as 2^f values)."""
    sp, sv = _sup_inf(f_size, (0.35, 0.45))
    dp, dv = _sup_inf(f_degree, (0.3, 0.36))
    return {"sigma_or_opt": {"point": sp, "value": sv}, "delta_or_opt": {"point": dp, "value": dv}}


# ------------------------------------------------------------------ symmetries


class CoordinateSymmetry:
    """Coordinate permutations of [d] acting on d-bit masks on both sides, coefficients 1."""

    def __init__(self, d: int):
        self.d = d

    def sample(self, rng):
        return tuple(int(x) for x in rng.permutation(self.d))

    def _apply(self, perm, x: int) -> int:
        y = 0
        for b in range(self.d):
            if x >> b & 1:
                y |= 1 << perm[b]
        return y

    def row(self, g, i):
        return self._apply(g, i), 1

    def col(self, g, j):
        return self._apply(g, j), 1


class HadamardSymmetry:
    """Translations (s, t) fixing H_d: e_x -> (-1)^{x.t} e_{x^s}, e_y -> (-1)^{y.s + s.t} e_{y^t}."""

    def __init__(self, d: int):
        self.d = d

    def sample(self, rng):
        return int(rng.integers(1 << self.d)), int(rng.integers(1 << self.d))

    def row(self, g, i):
        s, t = g
        return i ^ s, -1 if bin(i & t).count("1") & 1 else 1

    def col(self, g, j):
        s, t = g
        return j ^ t, -1 if (bin(j & s).count("1") + bin(s & t).count("1")) & 1 else 1


def max_copies(x: int, y: int, eps) -> int:
    """floor of 2^{log(xy)/log(1/(3 eps)) + 1} - 1, certified."""
    eps = interval.as_interval(Fraction(eps))
    v = interval.iv.mpf(2) ** (interval.iv.log(interval.iv.mpf(x * y)) / interval.iv.log(1 / (3 * eps)) + 1) - 1
    return math.floor(interval.bounds(v)[1])


class HoleFixFailure(RuntimeError):
    pass


@dataclass
class HoleFixResult:
    circuit: Circuit
    copies: list = field(repr=False)  # (g, rows kept, cols kept)
    bound: int = 0

    @property
    def n_copies(self) -> int:
        return len(self.copies)


def _move(c: Circuit, sym, g, rows: set, cols: set) -> list:
    sr = c.semiring
    out = []
    for u, v in c.gates:
        uu = {}
        for i, a in u.items():
            j, s = sym.row(g, i)
            if j in rows:
                uu[j] = sr.mul(sr.coerce(s), a) if s != 1 else a
        if not uu:
            continue
        vv = {}
        for i, a in v.items():
            j, s = sym.col(g, i)
            if j in cols:
                vv[j] = sr.mul(sr.coerce(s), a) if s != 1 else a
        if vv:
            out.append((SparseVector.from_dict(c.n_rows, uu), SparseVector.from_dict(c.n_cols, vv)))
    return out


def hole_fix(broken: Circuit, rows, cols, holes_rows, holes_cols, symmetry, eps, seed: int = 0,
             retry_limit: int = 64) -> HoleFixResult:
    """Circuit for M restricted to rows x cols from a circuit missing the hole rows/cols.

    ``symmetry`` must fix M and act transitively on ``rows`` and on ``cols``.
    """
    rows, cols = set(rows), set(cols)
    S0, T0 = set(holes_rows), set(holes_cols)
    bound = max_copies(len(rows), len(cols), eps)
    if not S0 and not T0:
        return HoleFixResult(broken, [(None, frozenset(rows), frozenset(cols))], bound)
    eps = Fraction(eps)
    if eps > Fraction(1, 4):
        raise ValueError("eps must be at most 1/4")
    rng = np.random.default_rng(seed)
    copies = []
    stack = [(frozenset(rows), frozenset(cols))]
    while stack:
        S, T = stack.pop()
        if not S or not T:
            continue
        for _ in range(retry_limit):
            g = symmetry.sample(rng)
            gS = {symmetry.row(g, i)[0] for i in S0}
            gT = {symmetry.col(g, j)[0] for j in T0}
            bad_s, bad_t = len(gS & S), len(gT & T)
            if bad_s < 3 * eps * len(S) and bad_t < 3 * eps * len(T):
                break
        else:
            raise HoleFixFailure(f"no group element found in {retry_limit} draws; eps too large for the instance")
        S1, T1 = S - gS, T - gT
        copies.append((g, S1, T1))
        stack.append((S1, T - T1))
        stack.append((S - S1, T))
    gates = []
    for g, S1, T1 in copies:
        gates += _move(broken, symmetry, g, set(S1), set(T1))
    return HoleFixResult(Circuit(broken.n_rows, broken.n_cols, tuple(gates), broken.semiring), copies, bound)


def restrict(c: Circuit, rows, cols) -> Circuit:
    """Zero out every row outside ``rows`` and column outside ``cols``."""
    rows, cols = set(rows), set(cols)
    gates = []
    for u, v in c.gates:
        uu = {i: a for i, a in u.items() if i in rows}
        vv = {j: b for j, b in v.items() if j in cols}
        if uu and vv:
            gates.append((SparseVector.from_dict(c.n_rows, uu), SparseVector.from_dict(c.n_cols, vv)))
    return Circuit(c.n_rows, c.n_cols, tuple(gates), c.semiring)


# ------------------------------------------------------------ typical degrees


@dataclass
class PruneResult:
    threshold: dict  # weight -> log2 degree threshold
    row_holes: dict  # weight -> list of pruned row masks
    col_holes: dict
    row_fraction: dict
    col_fraction: dict
    circuit: Circuit | None = None


def _power_degrees(base: np.ndarray, k: int) -> np.ndarray:
    out = np.ones(1, dtype=np.int64)
    for _ in range(k):
        out = np.outer(out, base).ravel()
    return out


def prune_atypical(base: Circuit, d0: int, k: int, eps: float, build_circuit: bool = False) -> PruneResult:
    """Holes of C^{(x)k} for R^{(x)N}, N = k*d0: per weight class, indices with
    log2 degree above (N/d0) * (density at the class type + eps)."""
    N = k * d0
    spec = DensitySpec.for_disjointness(base, d0)
    dens = {"row": density_row(spec), "col": density_col(spec)}
    degs = {"row": _power_degrees(base.row_degrees(), k), "col": _power_degrees(base.col_degrees(), k)}
    idx = np.arange(1 << N, dtype=np.int64)
    pc = np.zeros(1 << N, dtype=np.int64)
    for b in range(N):
        pc += (idx >> b) & 1
    thr, holes, frac = {}, {"row": {}, "col": {}}, {"row": {}, "col": {}}
    for w in range(N + 1):
        p = w / N
        for side in ("row", "col"):
            t = (N / d0) * (dens[side]([1 - p, p]) + eps)
            if side == "row":
                thr[w] = t
            sel = idx[pc == w]
            bad = sel[np.log2(degs[side][sel]) > t + 1e-12]
            holes[side][w] = bad.tolist()
            frac[side][w] = len(bad) / len(sel)
    circ = None
    if build_circuit:
        from .core import circuit_power
        full = circuit_power(base, k)
        drop_r = {x for v in holes["row"].values() for x in v}
        drop_c = {x for v in holes["col"].values() for x in v}
        circ = restrict(full, set(range(1 << N)) - drop_r, set(range(1 << N)) - drop_c)
    return PruneResult(thr, holes["row"], holes["col"], frac["row"], frac["col"], circ)
