"""Solvers built on Kronecker circuits.

Sparse vector-matrix-vector products x^T M^{(x)d} y by wire enumeration,
orthogonal-vector counting/decision/counting mod m, layered circuits for
R^{(x)n} and the OR-circulant matrices M_f.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sps

from . import degree
from .core import (DFT, Circuit, Disjointness, SparseMatrix, SparseVector, circuit_kron, circuit_layers, generate, identity, kron,
                   matmul, one_sided_circuit)
from .partitions import as_circuit, alternating_word, simple_partition
from .semiring import RATIONAL, Cyc, reduce_mod_phi


class Answer(NamedTuple):
    value: object
    work: int
    info: dict = {}


# ------------------------------------------------------------------ point sets


@dataclass
class PointSet:
    """Multiset of length-d vectors over Z_m (m = 2 for binary)."""

    points: np.ndarray
    m: int = 2

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        if pts.ndim != 2:
            pts = pts.reshape(len(pts), -1)
        if pts.size and (pts.min() < 0 or pts.max() >= self.m):
            raise ValueError(f"digits must lie in [0, {self.m})")
        self.points = pts

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def indices(self, scale: int = 1) -> np.ndarray:
        """Index sum_b (scale * digit_b mod m) * m^b of every point."""
        place = self.m ** np.arange(self.d, dtype=np.int64)
        return ((self.points * scale) % self.m) @ place

    def weights(self) -> np.ndarray:
        return (self.points != 0).sum(axis=1)


def _multiset(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.unique(idx, return_counts=True)


# ------------------------------------------------------------- plans and vmv


@dataclass
class _Side:
    ptr: np.ndarray
    gate: np.ndarray
    coef: np.ndarray
    expo: np.ndarray


def _monomial(v, m):
    """(c, e) with v = c * w^e."""
    if not isinstance(v, Cyc):
        return int(v), 0
    for e in range(m):
        r = v * Cyc.root(m, -e)
        if r.is_rational():
            fr = r.to_fraction()
            if fr.denominator != 1:
                break
            return int(fr), e
    raise ValueError(f"{v!r} is not an integer multiple of a root of unity")


def _side_table(c: Circuit, side: str, m: int) -> _Side:
    n = c.n_rows if side == "row" else c.n_cols
    lists = [[] for _ in range(n)]
    for k, (u, v) in enumerate(c.gates):
        vec = u if side == "row" else v
        for i, a in vec.items():
            lists[i].append((k,) + _monomial(a, m))
    ptr = np.zeros(n + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(x) for x in lists])
    flat = [t for x in lists for t in x]
    arr = np.array(flat, dtype=np.int64).reshape(-1, 3)
    return _Side(ptr, arr[:, 0].copy(), arr[:, 1].copy(), arr[:, 2].copy())


@dataclass
class VmvPlan:
    """Product circuit of a list of factor circuits (first factor = most significant digit).

    ``kind`` selects the value arithmetic: "int", "or", or "cyclo" (with order m).
    """

    factors: list
    kind: str = "int"
    m: int = 1
    rows: list = field(init=False, repr=False)
    cols: list = field(init=False, repr=False)

    def __post_init__(self):
        if self.kind not in ("int", "or", "cyclo"):
            raise ValueError(f"unknown value kind {self.kind!r}")
        mm = self.m if self.kind == "cyclo" else 1
        self.rows = [_side_table(c, "row", mm) for c in self.factors]
        self.cols = [_side_table(c, "col", mm) for c in self.factors]
        if math.prod(c.n_gates for c in self.factors) >= 1 << 62:
            raise OverflowError("gate index space does not fit in 63 bits")

    @classmethod
    def power(cls, base: Circuit, l: int, rest: Circuit | None = None, r: int = 0, **kw) -> "VmvPlan":
        return cls([base] * l + [rest] * r, **kw)

    @property
    def n_rows(self) -> int:
        return math.prod(c.n_rows for c in self.factors)

    @property
    def n_cols(self) -> int:
        return math.prod(c.n_cols for c in self.factors)


def _expand(plan: VmvPlan, side: str, idx: np.ndarray, cnt: np.ndarray):
    """Middle-gate vector (keys, values) from a sparse input; also returns the work."""
    tables = plan.rows if side == "row" else plan.cols
    sizes = [c.n_rows if side == "row" else c.n_cols for c in plan.factors]
    idx = np.asarray(idx, dtype=np.int64)
    key = np.zeros(len(idx), dtype=np.int64)
    if plan.kind == "cyclo":
        val = np.zeros((len(idx), plan.m), dtype=np.int64)
        val[:, 0] = cnt
    elif plan.kind == "or":
        val = np.asarray(cnt) != 0
    else:
        val = np.asarray(cnt, dtype=np.int64)
    stride = math.prod(sizes)
    for f, (tab, n) in enumerate(zip(tables, sizes)):
        stride //= n
        digit = (idx // stride) % n
        start = tab.ptr[digit]
        deg = tab.ptr[digit + 1] - start
        rep = np.repeat(np.arange(len(idx)), deg)
        ent = np.repeat(start - np.cumsum(deg) + deg, deg) + np.arange(int(deg.sum()))
        idx, key = idx[rep], key[rep] * plan.factors[f].n_gates + tab.gate[ent]
        coef, expo = tab.coef[ent], tab.expo[ent]
        if plan.kind == "cyclo":
            m = plan.m
            cols = (np.arange(m)[None, :] - expo[:, None]) % m
            val = val[rep[:, None], cols] * coef[:, None]
        elif plan.kind == "or":
            val = val[rep] & (coef != 0)
        else:
            val = val[rep] * coef
    work = len(key)
    order = np.argsort(key, kind="stable")
    key, val = key[order], val[order]
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]]) if len(key) else np.zeros(0, dtype=np.int64)
    uk = key[starts]
    if plan.kind == "or":
        acc = np.logical_or.reduceat(val, starts) if len(key) else val
    else:
        acc = np.add.reduceat(val, starts, axis=0) if len(key) else val
    return uk, acc, work


def _inner(plan: VmvPlan, a, b):
    ka, va = a
    kb, vb = b
    _, ia, ib = np.intersect1d(ka, kb, assume_unique=True, return_indices=True)
    if plan.kind == "or":
        return bool((va[ia] & vb[ib]).any())
    if plan.kind == "int":
        return int((va[ia] * vb[ib]).sum())
    m = plan.m
    A, B = va[ia], vb[ib]
    out = [0] * m
    for i in range(m):
        out_i = (A[:, i][:, None] * np.roll(B, i, axis=1)).sum(axis=0)
        for s in range(m):
            out[s] += int(out_i[s])
    return Cyc(m, reduce_mod_phi(tuple(out), m))


def sparse_vmv(plan: VmvPlan, x: SparseVector, y: SparseVector) -> Answer:
    """x^T M y for the product circuit of ``plan``; work = sum of the support degrees."""
    a = _expand(plan, "row", np.array(x.idx, dtype=np.int64), np.array(x.val, dtype=np.int64))
    b = _expand(plan, "col", np.array(y.idx, dtype=np.int64), np.array(y.val, dtype=np.int64))
    return Answer(_inner(plan, a[:2], b[:2]), a[2] + b[2])


# ------------------------------------------------------------------ OV solvers


def r1_one_sided() -> Circuit:
    return one_sided_circuit(generate(Disjointness(1)), by="col")


def default_ov_plan(d: int, kind: str = "int") -> VmvPlan:
    """C^{(x) d//2} for the four-rectangle partition of R^{(x)2}, times R_1 one-sided if d is odd."""
    base = degree.r2_partition_circuit()
    factors = [base] * (d // 2) + ([r1_one_sided()] if d % 2 else [])
    return VmvPlan(factors, kind=kind)


def _by_weight(ps: PointSet) -> dict:
    idx, w = ps.indices(), ps.weights()
    return {int(k): _multiset(idx[w == k]) for k in np.unique(w)}


def ov_count(pts_u: PointSet, pts_v: PointSet, plan: VmvPlan | None = None) -> Answer:
    """Number of pairs (i, j) with <u_i, v_j> = 0, counted with multiplicity."""
    d = pts_u.d
    if pts_v.d != d:
        raise ValueError("dimension mismatch")
    if d == 0:
        return Answer(pts_u.n * pts_v.n, 0)
    plan = plan or default_ov_plan(d)
    gu = {w: _expand(plan, "row", *s) for w, s in _by_weight(pts_u).items()}
    gv = {w: _expand(plan, "col", *s) for w, s in _by_weight(pts_v).items()}
    work = sum(g[2] for g in gu.values()) + sum(g[2] for g in gv.values())
    total = 0
    for wu, a in gu.items():
        for wv, b in gv.items():
            if wu + wv <= d:
                total += _inner(plan, a[:2], b[:2])
    return Answer(total, work)


def ov_count_classwise(pts_u: PointSet, pts_v: PointSet, circuits: dict) -> Answer:
    """#OV with a separate circuit per weight class (wu, wv), each over the full 2^d index space."""
    d = pts_u.d
    bu, bv = _by_weight(pts_u), _by_weight(pts_v)
    total = work = 0
    for wu, su in bu.items():
        for wv, sv in bv.items():
            if wu + wv > d:
                continue
            plan = VmvPlan([circuits[(wu, wv)]])
            a, b = _expand(plan, "row", *su), _expand(plan, "col", *sv)
            work += a[2] + b[2]
            total += _inner(plan, a[:2], b[:2])
    return Answer(total, work)


def _contained(x: np.ndarray, U: np.ndarray, chunk: int = 1 << 16) -> np.ndarray:
    """Boolean matrix: x_i is a subset of U_k."""
    out = np.zeros((len(x), len(U)), dtype=bool)
    for s in range(0, len(U), chunk):
        blk = U[s:s + chunk]
        out[:, s:s + chunk] = (x[:, None] & blk[None, :]) == x[:, None]
    return out


def ov_decide(pts_u: PointSet, pts_v: PointSet, seed: int = 0, early_exit: bool = True,
              verify_budget: int = 20_000_000) -> Answer:
    """Is there an orthogonal pair?  OR-mode products over a random rectangle covering per weight class.

    A class (wu, wv) is covered by rectangles {S inside U} x {T outside U} for
    random U of size clip(d//2, wu, d-wv).  Coverings are verified exhaustively
    when the check fits in ``verify_budget``; larger ones rely on the covering
    failure probability.
    """
    d = pts_u.d
    bu, bv = _by_weight(pts_u), _by_weight(pts_v)
    work = 0
    info = {"classes": 0, "unverified": 0}
    found = False
    for wu, (xu, _) in sorted(bu.items()):
        for wv, (xv, _) in sorted(bv.items()):
            if wu + wv > d:
                continue
            mud = min(max(d // 2, wu), d - wv)
            cost = (math.comb(d, wu) + math.comb(d, wv)) * degree.cover_count(d, wu, wv, mud)
            plan = degree.random_cover(d, wu, wv, mud, seed=seed * 1009 + wu * 31 + wv,
                                       verify=cost <= verify_budget)
            info["classes"] += 1
            info["unverified"] += not plan.verified
            U, mult = plan.distinct()
            A = _contained(xu, U)
            B = (xv[:, None] & U[None, :]) == 0
            work += int((A * mult).sum() + (B * mult).sum())
            if (A.any(axis=0) & B.any(axis=0)).any():
                found = True
                if early_exit:
                    return Answer(True, work, info)
    return Answer(found, work, info)


# -------------------------------------------------------------- counting mod m


def dft_pair_circuit(m: int) -> Circuit:
    """DFT_m (x) DFT_m as one-sided-by-column (x) one-sided-by-row: m^2 gates, degree m on both sides."""
    F = generate(DFT(m, 1))
    return circuit_kron(one_sided_circuit(F, by="col"), one_sided_circuit(F, by="row"))


def default_mod_plan(d: int, m: int) -> VmvPlan:
    F = generate(DFT(m, 1))
    factors = [dft_pair_circuit(m)] * (d // 2) + ([one_sided_circuit(F, by="col")] if d % 2 else [])
    return VmvPlan(factors, kind="cyclo", m=m)


def ov_count_mod(pts_u: PointSet, pts_v: PointSet, m: int, plan: VmvPlan | None = None) -> Answer:
    """Number of pairs with <u_i, v_j> = 0 mod m, from (1/m) sum_k x^(k)T DFT^{(x)d} y."""
    if pts_u.m != m or pts_v.m != m:
        raise ValueError("point alphabets must be Z_m")
    if m == 1 or pts_u.d == 0:
        return Answer(pts_u.n * pts_v.n, 0)
    plan = plan or default_mod_plan(pts_u.d, m)
    xs = np.concatenate([pts_u.indices(scale=k) for k in range(m)])
    xi, xc = _multiset(xs)
    yi, yc = _multiset(pts_v.indices())
    res = sparse_vmv(plan, SparseVector(plan.n_rows, tuple(xi.tolist()), tuple(xc.tolist())),
                     SparseVector(plan.n_cols, tuple(yi.tolist()), tuple(yc.tolist())))
    val = res.value
    if not val.is_rational():
        raise ArithmeticError(f"sum of characters is not rational: {val!r}")
    total = val.to_fraction() / m
    if total.denominator != 1:
        raise ArithmeticError(f"non-integral count {total}")
    return Answer(int(total), res.work)


# ------------------------------------------------------------- layered circuits


def _base_for(k: int) -> Circuit:
    if k == 2:
        return degree.r2_partition_circuit()
    return as_circuit(simple_partition(k, alternating_word(k)))


def _blocks(n: int, halves: int, pad: bool) -> list[int]:
    if n % halves:
        if not pad:
            raise ValueError(f"depth/2 = {halves} does not divide n = {n}; pass pad=True")
        q, r = divmod(n, halves)
        return [q + 1] * r + [q] * (halves - r)
    return [n // halves] * halves


def depth_d_stack(d_target: int, n: int, base: Circuit | None = None, pad: bool = False) -> list:
    """d_target sparse layers whose product is R^{(x)n}.

    Block j applies (I (x) U_j (x) I) then (I (x) V_j^T (x) I) where U_j V_j^T
    is a depth-2 circuit for R^{(x)k_j}.  ``base`` (for R^{(x)2n/d_target})
    overrides the default circuit when the blocks are equal.
    """
    if d_target < 2 or d_target % 2:
        raise ValueError("depth must be even and positive")
    sizes = _blocks(n, d_target // 2, pad)
    layers = []
    before = 0
    for k in sizes:
        c = base if base is not None and base.n_rows == 1 << k else _base_for(k)
        U, Vt = circuit_layers(c.with_semiring(RATIONAL))
        after = n - before - k
        for L in (U, Vt):
            layers.append(kron(kron(identity(1 << before), L), identity(1 << after)))
        before += k
    return layers


def _to_scipy(m: SparseMatrix):
    ents = m.entries()
    if not ents:
        return sps.csr_matrix(m.shape, dtype=np.int64)
    r, c, v = zip(*((i, j, int(x)) for i, j, x in ents))
    return sps.csr_matrix((np.array(v, dtype=np.int64), (r, c)), shape=m.shape)


def layers_product(layers: list) -> SparseMatrix:
    """Exact product of layer matrices (int64 sparse when integral, rationals otherwise)."""
    integral = all(float(x).is_integer() for L in layers for _, _, x in L.entries())
    if not integral:
        out = layers[0]
        for L in layers[1:]:
            out = matmul(out, L)
        return out
    P = _to_scipy(layers[0])
    for L in layers[1:]:
        P = (P @ _to_scipy(L)).tocsr()
    P = P.tocoo()
    return SparseMatrix.from_entries(P.shape[0], P.shape[1],
                                     [(int(i), int(j), int(v)) for i, j, v in zip(P.row, P.col, P.data) if v])


def moebius_superset(f) -> list:
    """g with f(x) = sum_{z >= x} g(z), i.e. g(z) = sum_{x >= z} (-1)^{|x|-|z|} f(x)."""
    g = list(f)
    N = len(g)
    n = N.bit_length() - 1
    if 1 << n != N:
        raise ValueError("table length must be a power of two")
    for b in range(n):
        bit = 1 << b
        for x in range(N):
            if not x & bit:
                g[x] -= g[x | bit]
    return g


@dataclass
class MfCircuit:
    g: list
    layers: list

    @property
    def size(self) -> int:
        return sum(L.nnz for L in self.layers)


def mf_pipeline(f, depth: int = 2, base: Circuit | None = None, pad: bool = True) -> MfCircuit:
    """2*depth layers computing M_f[x, y] = f(x OR y).

    M_f = L diag(g) L^T with L[x, z] = [x <= z].  L is R^{(x)n} with its columns
    complemented, so M_f = R diag(g(~z)) R and the diagonal is folded into the
    last layer of the first R stack.
    """
    f = list(f)
    g = moebius_superset(f)
    N = len(f)
    n = N.bit_length() - 1
    if n == 0:
        return MfCircuit(g, [SparseMatrix.from_entries(1, 1, [(0, 0, g[0])])])
    stack = depth_d_stack(depth, n, base=base, pad=pad)
    gc = [g[(N - 1) ^ z] for z in range(N)]
    last = stack[-1]
    scaled = SparseMatrix.from_entries(last.n_rows, last.n_cols,
                                       [(i, j, v * gc[j]) for i, j, v in last.entries()])
    layers = stack[:-1] + [scaled] + [L.transpose() for L in reversed(stack)]
    return MfCircuit(g, layers)


def mf_direct(f) -> SparseMatrix:
    """M_f by a double loop (oracle)."""
    N = len(f)
    return SparseMatrix.from_entries(N, N, [(x, y, f[x | y]) for x in range(N) for y in range(N)])
