"""Sparse matrices, depth-2 circuits and their measures.

Indices of Kronecker powers are mixed-radix integers with the first Kronecker
factor in the most significant position: entry (i_a, i_b) of A (x) B lives at
row i_a * n_b + i_b.  For the disjointness matrix R^{(x)d}, a row index is a
d-bit mask and bit b records membership of element b.
"""
from __future__ import annotations

import os
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import interval
from .semiring import OR, PAR, RATIONAL, Cyc, Semiring, cyclotomic

DEFAULT_MAX_ENTRIES = 1 << 26


def max_entries() -> int:
    """Materialization cap, overridable through KRONCIRC_MAX_ENTRIES."""
    env = os.environ.get("KRONCIRC_MAX_ENTRIES")
    return int(env) if env else DEFAULT_MAX_ENTRIES


class CapExceeded(RuntimeError):
    """Raised instead of allocating something larger than the materialization cap."""


def _check_cap(n_rows: int, n_cols: int, what: str, cap: int | None = None) -> None:
    cap = max_entries() if cap is None else cap
    if n_rows * n_cols > cap:
        raise CapExceeded(
            f"{what} would need {n_rows}x{n_cols} entries (cap {cap}); "
            "use the schedule/streaming path or raise KRONCIRC_MAX_ENTRIES"
        )


@dataclass(frozen=True)
class SparseVector:
    length: int
    idx: tuple
    val: tuple

    def __post_init__(self):
        if len(self.idx) != len(self.val):
            raise ValueError("index/value length mismatch")
        prev = -1
        for i, v in zip(self.idx, self.val):
            if i <= prev:
                raise ValueError("indices must be sorted and unique")
            if i >= self.length:
                raise ValueError(f"index {i} out of range {self.length}")
            if v == 0:
                raise ValueError("explicit zero stored in sparse vector")
            prev = i

    @classmethod
    def from_dict(cls, length: int, items) -> "SparseVector":
        pairs = sorted((int(i), v) for i, v in dict(items).items() if v != 0)
        return cls(length, tuple(i for i, _ in pairs), tuple(v for _, v in pairs))

    @classmethod
    def indicator(cls, length: int, indices: Iterable[int]) -> "SparseVector":
        ix = tuple(sorted(set(int(i) for i in indices)))
        return cls(length, ix, (1,) * len(ix))

    @property
    def nnz(self) -> int:
        return len(self.idx)

    def items(self):
        return zip(self.idx, self.val)

    def get(self, i: int):
        lo, hi = 0, len(self.idx)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.idx[mid] < i:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(self.idx) and self.idx[lo] == i:
            return self.val[lo]
        return 0


def vkron(a: SparseVector, b: SparseVector, sr: Semiring = RATIONAL) -> SparseVector:
    idx = tuple(i * b.length + j for i in a.idx for j in b.idx)
    val = tuple(sr.mul(x, y) for x in a.val for y in b.val)
    if sr.kind == "modp" and any(v == 0 for v in val):
        keep = [k for k, v in enumerate(val) if v != 0]
        idx, val = tuple(idx[k] for k in keep), tuple(val[k] for k in keep)
    return SparseVector(a.length * b.length, idx, val)


@dataclass(frozen=True, eq=False)
class SparseMatrix:
    n_rows: int
    n_cols: int
    data: dict = field(repr=False)
    semiring: Semiring = RATIONAL

    def __post_init__(self):
        for (i, j), v in self.data.items():
            if not (0 <= i < self.n_rows and 0 <= j < self.n_cols):
                raise ValueError(f"entry ({i},{j}) out of shape")
            if v == 0:
                raise ValueError("explicit zero stored in sparse matrix")

    @classmethod
    def from_entries(cls, n_rows, n_cols, entries, semiring: Semiring = RATIONAL) -> "SparseMatrix":
        data = {}
        for i, j, v in entries:
            if (i, j) in data:
                raise ValueError(f"duplicate entry ({i},{j})")
            v = semiring.coerce(v)
            if v != 0:
                data[(i, j)] = v
        return cls(n_rows, n_cols, data, semiring)

    @classmethod
    def from_dense(cls, rows, semiring: Semiring = RATIONAL) -> "SparseMatrix":
        rows = [list(r) for r in rows]
        n_cols = len(rows[0]) if rows else 0
        ent = [(i, j, v) for i, r in enumerate(rows) for j, v in enumerate(r) if v != 0]
        return cls.from_entries(len(rows), n_cols, ent, semiring)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    @property
    def nnz(self) -> int:
        return len(self.data)

    def entries(self) -> list:
        return sorted((i, j, v) for (i, j), v in self.data.items())

    def get(self, i: int, j: int):
        return self.data.get((i, j), 0)

    def dense(self) -> list:
        out = [[0] * self.n_cols for _ in range(self.n_rows)]
        for (i, j), v in self.data.items():
            out[i][j] = v
        return out

    def to_numpy(self, dtype=np.int64) -> np.ndarray:
        _check_cap(self.n_rows, self.n_cols, "dense copy")
        out = np.zeros((self.n_rows, self.n_cols), dtype=dtype)
        for (i, j), v in self.data.items():
            out[i, j] = v
        return out

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self.n_cols, self.n_rows, {(j, i): v for (i, j), v in self.data.items()}, self.semiring)

    def __eq__(self, other):
        if not isinstance(other, SparseMatrix):
            return NotImplemented
        return self.shape == other.shape and self.data == other.data

    def __hash__(self):
        return hash((self.shape, frozenset(self.data.items())))


# ---------------------------------------------------------------- matrix specs


@dataclass(frozen=True)
class Disjointness:
    d: int

    @property
    def shape(self):
        return 1 << self.d, 1 << self.d

    semiring = RATIONAL

    def entry(self, i, j):
        return 1 if i & j == 0 else 0


@dataclass(frozen=True)
class Hadamard:
    d: int

    @property
    def shape(self):
        return 1 << self.d, 1 << self.d

    semiring = RATIONAL

    def entry(self, i, j):
        return -1 if bin(i & j).count("1") & 1 else 1


@dataclass(frozen=True)
class DFT:
    m: int
    d: int

    @property
    def shape(self):
        return self.m ** self.d, self.m ** self.d

    @property
    def semiring(self):
        return cyclotomic(self.m)

    def entry(self, i, j):
        e = 0
        for _ in range(self.d):
            e += (i % self.m) * (j % self.m)
            i //= self.m
            j //= self.m
        return Cyc.root(self.m, e)


@dataclass(frozen=True)
class OrCirculant:
    """M_f[x, y] = f(x | y) for a table f over {0,1}^n."""

    table: tuple

    def __post_init__(self):
        n = len(self.table).bit_length() - 1
        if len(self.table) != 1 << n:
            raise ValueError("table length must be a power of two")

    @property
    def n(self) -> int:
        return len(self.table).bit_length() - 1

    @property
    def shape(self):
        return len(self.table), len(self.table)

    semiring = RATIONAL

    def entry(self, i, j):
        return self.table[i | j]


@dataclass(frozen=True)
class Identity:
    n: int

    @property
    def shape(self):
        return self.n, self.n

    semiring = RATIONAL

    def entry(self, i, j):
        return 1 if i == j else 0


@dataclass(frozen=True)
class Literal:
    matrix: SparseMatrix

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def semiring(self):
        return self.matrix.semiring

    def entry(self, i, j):
        return self.matrix.get(i, j)


MatrixSpec = Disjointness | Hadamard | DFT | OrCirculant | Identity | Literal


def generate(spec, cap: int | None = None) -> SparseMatrix:
    """Materialize a matrix spec exactly."""
    if isinstance(spec, Literal):
        return spec.matrix
    n_rows, n_cols = spec.shape
    _check_cap(n_rows, n_cols, f"generate({spec!r})", cap)
    sr = spec.semiring
    data = {}
    if isinstance(spec, Disjointness):
        full = n_rows - 1
        for s in range(n_rows):
            comp = full ^ s
            t = comp
            while True:
                data[(s, t)] = 1
                if t == 0:
                    break
                t = (t - 1) & comp
    elif isinstance(spec, Identity):
        data = {(i, i): 1 for i in range(n_rows)}
    else:
        for i in range(n_rows):
            for j in range(n_cols):
                v = spec.entry(i, j)
                if v != 0:
                    data[(i, j)] = sr.coerce(v)
    return SparseMatrix(n_rows, n_cols, data, sr)


def identity(n: int, semiring: Semiring = RATIONAL) -> SparseMatrix:
    return SparseMatrix(n, n, {(i, i): semiring.one for i in range(n)}, semiring)


def kron(a: SparseMatrix, b: SparseMatrix, cap: int | None = None) -> SparseMatrix:
    if a.semiring != b.semiring:
        raise ValueError(f"semiring mismatch {a.semiring} vs {b.semiring}")
    n_rows, n_cols = a.n_rows * b.n_rows, a.n_cols * b.n_cols
    _check_cap(1, a.nnz * b.nnz, "kron", cap)
    sr = a.semiring
    data = {}
    for (ia, ja), va in a.data.items():
        for (ib, jb), vb in b.data.items():
            v = sr.mul(va, vb)
            if v != 0:
                data[(ia * b.n_rows + ib, ja * b.n_cols + jb)] = v
    return SparseMatrix(n_rows, n_cols, data, sr)


def matmul(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    if a.n_cols != b.n_rows:
        raise ValueError(f"shape mismatch {a.shape} x {b.shape}")
    sr = a.semiring
    brows = defaultdict(list)
    for (i, j), v in b.data.items():
        brows[i].append((j, v))
    acc = defaultdict(lambda: sr.zero)
    for (i, k), va in a.data.items():
        for j, vb in brows.get(k, ()):
            acc[(i, j)] = sr.add(acc[(i, j)], sr.mul(va, vb))
    return SparseMatrix(a.n_rows, b.n_cols, {k: v for k, v in acc.items() if v != 0}, sr)


# ------------------------------------------------------------------- circuits


@dataclass(frozen=True, eq=False)
class Circuit:
    """M = sum_i u_i v_i^T; one gate per rank-one term."""

    n_rows: int
    n_cols: int
    gates: tuple
    semiring: Semiring = RATIONAL

    def __post_init__(self):
        for u, v in self.gates:
            if u.length != self.n_rows or v.length != self.n_cols:
                raise ValueError("gate vector length does not match circuit shape")

    @classmethod
    def from_gates(cls, n_rows, n_cols, gates, semiring: Semiring = RATIONAL) -> "Circuit":
        return cls(n_rows, n_cols, tuple(gates), semiring)

    @classmethod
    def from_rectangles(cls, n_rows, n_cols, rects, semiring: Semiring = PAR) -> "Circuit":
        gates = [(SparseVector.indicator(n_rows, r), SparseVector.indicator(n_cols, c)) for r, c in rects]
        return cls(n_rows, n_cols, tuple(gates), semiring)

    @property
    def n_gates(self) -> int:
        return len(self.gates)

    @property
    def size(self) -> int:
        return sum(u.nnz + v.nnz for u, v in self.gates)

    def row_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_rows, dtype=np.int64)
        for u, _ in self.gates:
            deg[list(u.idx)] += 1
        return deg

    def col_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_cols, dtype=np.int64)
        for _, v in self.gates:
            deg[list(v.idx)] += 1
        return deg

    @property
    def degree(self) -> int:
        r, c = self.row_degrees(), self.col_degrees()
        return int(max(r.max(initial=0), c.max(initial=0)))

    def nnz_pairs(self) -> Counter:
        return Counter((u.nnz, v.nnz) for u, v in self.gates)

    def transpose(self) -> "Circuit":
        return Circuit(self.n_cols, self.n_rows, tuple((v, u) for u, v in self.gates), self.semiring)

    def with_semiring(self, semiring: Semiring) -> "Circuit":
        gates = []
        for u, v in self.gates:
            uu = SparseVector.from_dict(u.length, {i: semiring.coerce(x) for i, x in u.items()})
            vv = SparseVector.from_dict(v.length, {i: semiring.coerce(x) for i, x in v.items()})
            if uu.nnz and vv.nnz:
                gates.append((uu, vv))
        return Circuit(self.n_rows, self.n_cols, tuple(gates), semiring)

    def __eq__(self, other):
        if not isinstance(other, Circuit):
            return NotImplemented
        return (self.n_rows, self.n_cols, self.gates, self.semiring) == (
            other.n_rows, other.n_cols, other.gates, other.semiring)

    def __hash__(self):
        return hash((self.n_rows, self.n_cols, self.gates))


def circuit_kron(c1: Circuit, c2: Circuit) -> Circuit:
    if c1.semiring != c2.semiring:
        raise ValueError("semiring mismatch")
    sr = c1.semiring
    gates = tuple((vkron(u1, u2, sr), vkron(v1, v2, sr)) for u1, v1 in c1.gates for u2, v2 in c2.gates)
    gates = tuple(g for g in gates if g[0].nnz and g[1].nnz)
    return Circuit(c1.n_rows * c2.n_rows, c1.n_cols * c2.n_cols, gates, sr)


def circuit_power(c: Circuit, k: int) -> Circuit:
    out = identity_circuit(1, c.semiring)
    for _ in range(k):
        out = circuit_kron(out, c)
    return out


def circuit_sum(c1: Circuit, c2: Circuit) -> Circuit:
    if (c1.n_rows, c1.n_cols) != (c2.n_rows, c2.n_cols):
        raise ValueError(f"shape mismatch {(c1.n_rows, c1.n_cols)} vs {(c2.n_rows, c2.n_cols)}")
    if c1.semiring != c2.semiring:
        raise ValueError("semiring mismatch")
    return Circuit(c1.n_rows, c1.n_cols, c1.gates + c2.gates, c1.semiring)


def identity_circuit(n: int, semiring: Semiring = RATIONAL) -> Circuit:
    one = semiring.one
    gates = tuple((SparseVector(n, (i,), (one,)), SparseVector(n, (i,), (one,))) for i in range(n))
    return Circuit(n, n, gates, semiring)


def one_sided_circuit(m: SparseMatrix, by: str = "col") -> Circuit:
    """Trivial decomposition: one gate per column (U = column, V = e_j) or per row."""
    sr = m.semiring
    if by == "row":
        return one_sided_circuit(m.transpose(), "col").transpose()
    cols = defaultdict(dict)
    for (i, j), v in m.data.items():
        cols[j][i] = v
    gates = []
    for j in sorted(cols):
        gates.append((SparseVector.from_dict(m.n_rows, cols[j]), SparseVector(m.n_cols, (j,), (sr.one,))))
    return Circuit(m.n_rows, m.n_cols, tuple(gates), sr)


def apply(c: Circuit, x: Sequence) -> list:
    """y = U (V^T x) in the circuit's semiring."""
    if len(x) != c.n_cols:
        raise ValueError(f"vector length {len(x)} != n_cols {c.n_cols}")
    sr = c.semiring
    y = [sr.zero] * c.n_rows
    for u, v in c.gates:
        s = sr.zero
        for j, vj in v.items():
            xj = x[j]
            if xj != 0:
                s = sr.add(s, sr.mul(vj, xj))
        if s != 0:
            for i, ui in u.items():
                y[i] = sr.add(y[i], sr.mul(ui, s))
    return y


def materialize(c: Circuit, cap: int | None = None) -> SparseMatrix:
    _check_cap(c.n_rows, c.n_cols, "materialize", cap)
    sr = c.semiring
    acc = {}
    zero = sr.zero
    for u, v in c.gates:
        for i, ui in u.items():
            for j, vj in v.items():
                acc[(i, j)] = sr.add(acc.get((i, j), zero), sr.mul(ui, vj))
    return SparseMatrix(c.n_rows, c.n_cols, {k: v for k, v in acc.items() if v != 0}, sr)


@dataclass(frozen=True)
class Measure:
    size: int
    max_row_degree: int
    max_col_degree: int
    alpha_volume: object  # mpmath interval

    @property
    def degree(self) -> int:
        return max(self.max_row_degree, self.max_col_degree)


def measure(c: Circuit, alpha) -> Measure:
    r, cd = c.row_degrees(), c.col_degrees()
    vol = interval.alpha_volume(sorted(c.nnz_pairs().items()), alpha)
    return Measure(c.size, int(r.max(initial=0)), int(cd.max(initial=0)), vol)


# --------------------------------------------------------------- verification


@dataclass
class VerifyReport:
    ok: bool
    mode: str
    exhaustive: bool
    checked: int
    counterexample: tuple | None = None
    message: str = ""

    def __bool__(self):
        return self.ok


def _target_entry_fn(target):
    if isinstance(target, SparseMatrix):
        return target.shape, target.get, target
    return target.shape, target.entry, None


def _mode_kind(mode: Semiring) -> str:
    return mode.kind if mode.kind in ("or", "par") else "field"


def verify(c: Circuit, target, mode: Semiring | None = None, *, samples: int | None = None,
           seed: int = 0, cap: int | None = None) -> VerifyReport:
    """Check a circuit against a target matrix.

    Field modes compare entries exactly, OR compares supports, and PAR demands
    multiplicity exactly one on every 1-entry and zero elsewhere.
    """
    mode = c.semiring if mode is None else mode
    (n_rows, n_cols), entry, mat = _target_entry_fn(target)
    if (n_rows, n_cols) != (c.n_rows, c.n_cols):
        return VerifyReport(False, mode.token(), True, 0, None,
                            f"shape mismatch: circuit {(c.n_rows, c.n_cols)} vs target {(n_rows, n_cols)}")
    cap = max_entries() if cap is None else cap
    if samples is None and n_rows * n_cols <= cap:
        return _verify_exhaustive(c, target, mode)
    return _verify_sampled(c, entry, mode, samples or 10_000, seed, n_rows, n_cols)


def _verify_exhaustive(c: Circuit, target, mode: Semiring) -> VerifyReport:
    kind = _mode_kind(mode)
    tmat = target if isinstance(target, SparseMatrix) else generate(target)
    checked = c.n_rows * c.n_cols
    if kind in ("or", "par"):
        cov = np.zeros((c.n_rows, c.n_cols), dtype=np.int64)
        for u, v in c.gates:
            uu = np.array([int(x) for x in u.val], dtype=np.int64) if kind == "par" else np.ones(u.nnz, np.int64)
            vv = np.array([int(x) for x in v.val], dtype=np.int64) if kind == "par" else np.ones(v.nnz, np.int64)
            cov[np.ix_(list(u.idx), list(v.idx))] += np.outer(uu, vv)
        want = np.zeros((c.n_rows, c.n_cols), dtype=np.int64)
        for (i, j), v in tmat.data.items():
            if kind == "par" and v != 1:
                return VerifyReport(False, mode.token(), True, 0, (i, j), f"PAR target must be 0/1, found {v} at ({i},{j})")
            want[i, j] = 1
        got = cov if kind == "par" else (cov > 0).astype(np.int64)
        bad = np.argwhere(got != want)
        if len(bad):
            i, j = (int(x) for x in bad[0])
            what = "multiplicity" if kind == "par" else "coverage"
            return VerifyReport(False, mode.token(), True, checked, (i, j),
                                f"entry ({i},{j}): expected {want[i, j]}, {what} {got[i, j]}")
        return VerifyReport(True, mode.token(), True, checked)
    circ = c.with_semiring(mode) if c.semiring != mode else c
    got = materialize(circ)
    want = {k: mode.coerce(v) for k, v in tmat.data.items()}
    want = {k: v for k, v in want.items() if v != 0}
    if got.data != want:
        keys = sorted(set(got.data) | set(want))
        for k in keys:
            if got.data.get(k, 0) != want.get(k, 0):
                return VerifyReport(False, mode.token(), True, checked, k,
                                    f"entry {k}: expected {want.get(k, 0)}, got {got.data.get(k, 0)}")
    return VerifyReport(True, mode.token(), True, checked)


def _verify_sampled(c, entry, mode, samples, seed, n_rows, n_cols) -> VerifyReport:
    kind = _mode_kind(mode)
    rows = defaultdict(list)
    cols = defaultdict(dict)
    for g, (u, v) in enumerate(c.gates):
        for i, x in u.items():
            rows[i].append((g, x))
        for j, y in v.items():
            cols[j][g] = y
    rng = np.random.default_rng(seed)
    sr = mode
    for k in range(samples):
        i = int(rng.integers(n_rows))
        j = int(rng.integers(n_cols))
        acc = sr.zero
        mult = 0
        colg = cols.get(j, {})
        for g, x in rows.get(i, ()):
            y = colg.get(g)
            if y is not None:
                mult += 1
                acc = sr.add(acc, sr.mul(sr.coerce(x), sr.coerce(y)))
        want = sr.coerce(entry(i, j))
        if kind == "par":
            ok = mult == (1 if want else 0)
            got = mult
        elif kind == "or":
            ok = (mult > 0) == bool(want)
            got = int(mult > 0)
        else:
            ok = acc == want
            got = acc
        if not ok:
            return VerifyReport(False, mode.token(), False, k + 1, (i, j), f"entry ({i},{j}): expected {want}, got {got}")
    return VerifyReport(True, mode.token(), False, samples)


def iter_rows(m: SparseMatrix) -> Iterator[tuple[int, dict]]:
    rows = defaultdict(dict)
    for (i, j), v in m.data.items():
        rows[i][j] = v
    for i in sorted(rows):
        yield i, rows[i]


def circuit_layers(c: Circuit) -> tuple[SparseMatrix, SparseMatrix]:
    """The two layers (U, V^T) of a depth-2 circuit."""
    g = c.n_gates
    U = {}
    VT = {}
    for k, (u, v) in enumerate(c.gates):
        for i, x in u.items():
            U[(i, k)] = x
        for j, y in v.items():
            VT[(k, j)] = y
    return SparseMatrix(c.n_rows, g, U, c.semiring), SparseMatrix(g, c.n_cols, VT, c.semiring)


def as_fraction(v) -> Fraction:
    return v.to_fraction() if isinstance(v, Cyc) else Fraction(v)


__all__ = [
    "CapExceeded", "SparseVector", "SparseMatrix", "Circuit", "Measure", "VerifyReport",
    "Disjointness", "Hadamard", "DFT", "OrCirculant", "Identity", "Literal",
    "generate", "identity", "kron", "matmul", "circuit_kron", "circuit_power", "circuit_sum",
    "identity_circuit", "one_sided_circuit", "apply", "materialize", "measure", "verify",
    "circuit_layers", "vkron", "max_entries", "OR", "PAR", "RATIONAL",
]
