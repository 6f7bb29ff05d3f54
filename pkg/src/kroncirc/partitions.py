"""Rectangle partitions of the disjointness matrix R^{(x)d}.

Rows and columns are d-bit masks.  A rectangle side is either an explicit
list of masks or a weight-range predicate {T : T & forbid == 0,
T & require == require, minw <= |T| <= maxw}; the predicate form keeps the
d=18 families small.
"""
from __future__ import annotations

import itertools
import re
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache
from math import comb
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import interval
from .core import Circuit, SparseVector, _check_cap
from .semiring import PAR

DATA_DIR = Path(__file__).parent / "data"

W1 = "RCRCRCRCRCRCRCRCRCR"
W2 = "RRCRCCRCRCRCRRCRCRR"
W3 = "RRRRRRRRRRRRRRRRRRR"
MERGED_WORD = "RCR+C+R+C+R+C+RCRCR"
MERGED_A = (9, 9, 198, 198, 1260, 1260)


def popcount(x: int) -> int:
    return bin(x).count("1")


@lru_cache(maxsize=32)
def _popcounts(d: int) -> np.ndarray:
    x = np.arange(1 << d, dtype=np.int64)
    out = np.zeros(1 << d, dtype=np.int64)
    for b in range(d):
        out += (x >> b) & 1
    return out


def binom_geq(n: int, k: int) -> int:
    """Number of subsets of an n-set with at least k elements."""
    k = max(k, 0)
    return sum(comb(n, j) for j in range(k, n + 1))


# ----------------------------------------------------------------- rectangles


class Explicit(NamedTuple):
    items: tuple

    def count(self, d: int) -> int:
        return len(self.items)

    def contains(self, x: int) -> bool:
        return x in self.items

    def masks(self, d: int) -> np.ndarray:
        return np.array(self.items, dtype=np.int64)


class Pred(NamedTuple):
    minw: int
    maxw: int
    forbid: int
    require: int = 0

    def count(self, d: int) -> int:
        free = d - popcount(self.forbid | self.require)
        k = popcount(self.require)
        if self.forbid & self.require:
            return 0
        return sum(comb(free, w - k) for w in range(max(self.minw, k), min(self.maxw, free + k) + 1))

    def contains(self, x: int) -> bool:
        return (x & self.forbid) == 0 and (x & self.require) == self.require and self.minw <= popcount(x) <= self.maxw

    def masks(self, d: int) -> np.ndarray:
        x = np.arange(1 << d, dtype=np.int64)
        pc = _popcounts(d)
        keep = ((x & self.forbid) == 0) & ((x & self.require) == self.require) & (pc >= self.minw) & (pc <= self.maxw)
        return x[keep]


@dataclass
class RectangleFamily:
    d: int
    rects: list

    def __len__(self):
        return len(self.rects)

    def nnz_pairs(self) -> Counter:
        return Counter((r.count(self.d), c.count(self.d)) for r, c in self.rects)

    def covered(self) -> int:
        return sum(a * b * k for (a, b), k in self.nnz_pairs().items())

    def explicit(self) -> list:
        """(rows, cols) as lists of masks; expands predicate sides."""
        out = []
        for r, c in self.rects:
            out.append((r.masks(self.d).tolist(), c.masks(self.d).tolist()))
        return out

    def canonical(self) -> frozenset:
        return frozenset((frozenset(r), frozenset(c)) for r, c in self.explicit())

    def transpose(self) -> "RectangleFamily":
        return RectangleFamily(self.d, [(c, r) for r, c in self.rects])


def as_circuit(fam: RectangleFamily, semiring=PAR) -> Circuit:
    n = 1 << fam.d
    _check_cap(1, sum(a * k + b * k for (a, b), k in fam.nnz_pairs().items()), "family expansion")
    gates = []
    for r, c in fam.rects:
        rr, cc = r.masks(fam.d), c.masks(fam.d)
        if len(rr) and len(cc):
            gates.append((SparseVector(n, tuple(rr.tolist()), (1,) * len(rr)),
                          SparseVector(n, tuple(cc.tolist()), (1,) * len(cc))))
    return Circuit(n, n, tuple(gates), semiring)


def _subsets_of_size(d: int, k: int) -> list[int]:
    return [sum(1 << b for b in s) for s in itertools.combinations(range(d), k)] if 0 <= k <= d else []


# ------------------------------------------------------------- procedure one


def parse_word(w) -> list[str]:
    """Split 'RCR+C+...' into letters R, C, R+, C+."""
    if not isinstance(w, str):
        return list(w)
    letters = re.findall(r"[RC]\+?", w)
    if "".join(letters) != w:
        raise ValueError(f"bad word {w!r}: letters must be R, C, R+ or C+")
    return letters


def word_weight(letters) -> int:
    return sum(2 if x.endswith("+") else 1 for x in letters)


def simple_partition(d: int, w: str) -> RectangleFamily:
    letters = parse_word(w)
    if any(x not in ("R", "C") for x in letters):
        raise ValueError("simple words use only R and C")
    if len(letters) != d + 1:
        raise ValueError(f"word length {len(letters)} != d+1 = {d + 1}")
    return _run(d, letters, None, None)


def _row_step(d, r, c, transpose):
    out = []
    for S in _subsets_of_size(d, r):
        cols = Pred(c, d, S, 0)
        if cols.count(d):
            out.append((Explicit((S,)), cols))
    return [(b, a) for a, b in out] if transpose else out


def _merge_step(d, r, c, sets, transpose):
    out = []
    in_block = {}
    for Sj in sets:
        subs = [Sj ^ (1 << b) for b in range(d) if Sj >> b & 1]
        for S in subs:
            if S in in_block:
                raise ValueError("merge sets overlap in too many elements")
            in_block[S] = Sj
        rows = Explicit(tuple(sorted([Sj] + subs)))
        cols = Pred(c, d, Sj, 0)
        if cols.count(d):
            out.append((rows, cols))
    for S in _subsets_of_size(d, r):
        Sj = in_block.get(S)
        if Sj is None:
            cols = Pred(c, d, S, 0)
        else:
            cols = Pred(c, d, S, Sj ^ S)
        if cols.count(d):
            out.append((Explicit((S,)), cols))
    merged = set(sets)
    for S in _subsets_of_size(d, r + 1):
        if S in merged:
            continue
        cols = Pred(c, d, S, 0)
        if cols.count(d):
            out.append((Explicit((S,)), cols))
    return [(b, a) for a, b in out] if transpose else out


def _run(d, letters, a, code_provider):
    r = c = 0
    rects = []
    slot = 0
    for x in letters:
        if x == "R":
            rects += _row_step(d, r, c, False)
            r += 1
        elif x == "C":
            rects += _row_step(d, c, r, True)
            c += 1
        else:
            k = r if x == "R+" else c
            other = c if x == "R+" else r
            want = a[slot]
            sets = code_provider(d, k + 1, want, slot) if want else []
            rects += _merge_step(d, k, other, sets, x == "C+")
            slot += 1
            if x == "R+":
                r += 2
            else:
                c += 2
    return RectangleFamily(d, rects)


# -------------------------------------------------------------- procedure two


class CodeUnavailable(RuntimeError):
    """Not enough codewords; ``achieved`` is the best count found."""

    def __init__(self, msg, achieved):
        super().__init__(msg)
        self.achieved = achieved


class MergeFailure(CodeUnavailable):
    def __init__(self, msg, achieved, slot):
        super().__init__(msg, achieved)
        self.slot = slot


@dataclass(frozen=True)
class CodeTable:
    n: int
    weight: int
    distance: int
    codewords: tuple

    @property
    def size(self) -> int:
        return len(self.codewords)


def check_code(n, weight, distance, words) -> None:
    """Raise ValueError unless every word has the weight and pairwise distance holds."""
    arr = np.array(words, dtype=np.int64)
    if len(arr) == 0:
        return
    if arr.max() >= 1 << n:
        raise ValueError("codeword outside length")
    pc = _pc64(arr)
    if (pc != weight).any():
        raise ValueError("codeword with wrong weight")
    for i in range(len(arr)):
        x = _pc64(arr[i] ^ arr[i + 1:])
        if (x < distance).any():
            raise ValueError(f"codewords {i} and {i + 1 + int(np.argmax(x < distance))} are too close")


def _pc64(a: np.ndarray) -> np.ndarray:
    a = a.astype(np.uint64)
    out = np.zeros(a.shape, dtype=np.int64)
    while a.any():
        out += (a & np.uint64(1)).astype(np.int64)
        a = a >> np.uint64(1)
    return out


def load_code_file(path) -> CodeTable:
    header = None
    words = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                header = dict(kv.split("=") for kv in line[1:].split() if "=" in kv)
                continue
            if line:
                words.append(sum(1 << int(p) for p in line.split()))
    if header is None:
        raise ValueError(f"{path}: missing header")
    n, dist, wt = int(header["n"]), int(header["distance"]), int(header["weight"])
    check_code(n, wt, dist, words)
    if "size" in header and int(header["size"]) != len(words):
        raise ValueError(f"{path}: header size {header['size']} but {len(words)} words")
    return CodeTable(n, wt, dist, tuple(words))


def greedy_code(n, distance, weight, want=None) -> list[int]:
    """Lexicographic greedy packing; stops early once ``want`` words are found."""
    max_common = weight - (distance + 1) // 2
    chosen = []
    for s in itertools.combinations(range(n), weight):
        m = sum(1 << b for b in s)
        if all(popcount(m & x) <= max_common for x in chosen):
            chosen.append(m)
            if want is not None and len(chosen) >= want:
                break
    return chosen


def code_lookup(n, distance, weight, want, data_dir=None) -> CodeTable:
    candidates = []
    if distance == 4 and weight == 2:
        candidates.append([(1 << (2 * i)) | (1 << (2 * i + 1)) for i in range(n // 2)])
    ddir = Path(data_dir) if data_dir else DATA_DIR
    f = ddir / f"cw_{n}_{distance}_{weight}.txt"
    if f.exists():
        candidates.append(list(load_code_file(f).codewords))
    best = max(candidates, key=len) if candidates else []
    if len(best) < want:
        g = greedy_code(n, distance, weight, want)
        if len(g) > len(best):
            best = g
    if len(best) < want:
        raise CodeUnavailable(f"only {len(best)} codewords of length {n}, weight {weight}, "
                              f"distance {distance} available; {want} requested", len(best))
    words = tuple(best[:want])
    check_code(n, weight, distance, words)
    return CodeTable(n, weight, distance, words)


def merged_partition(d: int, w, a, data_dir=None) -> RectangleFamily:
    letters = parse_word(w)
    if word_weight(letters) != d + 1:
        raise ValueError(f"word weight {word_weight(letters)} != d+1 = {d + 1}")
    n_merge = sum(x.endswith("+") for x in letters)
    a = tuple(a)
    if len(a) != n_merge:
        raise ValueError(f"{len(a)} merge counts given for {n_merge} merge letters")
    if any(x < 0 for x in a):
        raise ValueError("merge counts must be nonnegative")

    def provider(dd, size, want, slot):
        try:
            return list(code_lookup(dd, 4, size, want, data_dir).codewords)
        except CodeUnavailable as e:
            raise MergeFailure(f"merge slot {slot}: {e}", e.achieved, slot) from None

    return _run(d, letters, a, provider)


# ---------------------------------------------------------------- closed forms


def _counters(letters):
    r = c = 0
    out = []
    for x in letters:
        out.append((x, r, c))
        if x == "R":
            r += 1
        elif x == "C":
            c += 1
        elif x == "R+":
            r += 2
        else:
            c += 2
    return out, r, c


def simple_terms(d: int, w) -> Counter:
    """(nnz U, nnz V) -> multiplicity, by the closed form for a plain word."""
    letters = parse_word(w)
    if len(letters) != d + 1 or any(x.endswith("+") for x in letters):
        raise ValueError("simple word of length d+1 required")
    return merged_terms(d, letters, ())


def merged_terms(d: int, w, a) -> Counter:
    letters = parse_word(w)
    steps, _, _ = _counters(letters)
    terms = Counter()
    slot = 0

    def add(x, y, k, flip):
        if k and x and y:
            terms[(y, x) if flip else (x, y)] += k

    for x, r, c in steps:
        if x in ("R", "C"):
            k, o, flip = (r, c, False) if x == "R" else (c, r, True)
            add(1, binom_geq(d - k, o), comb(d, k), flip)
        else:
            k, o, flip = (r, c, False) if x == "R+" else (c, r, True)
            ai = a[slot]
            slot += 1
            add(k + 2, binom_geq(d - k - 1, o), ai, flip)
            add(1, binom_geq(d - k - 1, o - 1), ai * (k + 1), flip)
            add(1, binom_geq(d - k, o), comb(d, k) - (k + 1) * ai, flip)
            add(1, binom_geq(d - k - 1, o), comb(d, k + 1) - ai, flip)
    return terms


def simple_alpha_volume(d: int, w, alpha):
    """Certified enclosure of rho_w(alpha) for a plain word."""
    return interval.alpha_volume(sorted(simple_terms(d, w).items()), alpha)


def merged_alpha_volume(d: int, w, a, alpha):
    return interval.alpha_volume(sorted(merged_terms(d, w, a).items()), alpha)


def alternating_word(d: int) -> str:
    return ("CR" * (d + 1))[: d + 1]


# ------------------------------------------------------------------ validation


@dataclass
class PartitionReport:
    ok: bool
    mode: str
    checked: int
    message: str = ""
    counterexample: tuple | None = None

    def __bool__(self):
        return self.ok


def _side_disjoint(d, r, c) -> bool:
    """True when no (S, T) in the rectangle intersects."""
    if isinstance(r, Explicit) and isinstance(c, Pred):
        return all((S & ~c.forbid) == 0 or c.count(d) == 0 for S in r.items)
    if isinstance(r, Pred) and isinstance(c, Explicit):
        return all((T & ~r.forbid) == 0 or r.count(d) == 0 for T in c.items)
    rr, cc = r.masks(d), c.masks(d)
    return not ((rr[:, None] & cc[None, :]) != 0).any()


def validate_partition(fam: RectangleFamily, mode: str = "exhaustive", samples: int = 10 ** 6,
                       seed: int = 0) -> PartitionReport:
    d = fam.d
    if mode == "exhaustive":
        _check_cap(1, 4 ** d, "exhaustive partition check")
        keys = []
        for k, (r, c) in enumerate(fam.rects):
            rr, cc = r.masks(d), c.masks(d)
            bad = (rr[:, None] & cc[None, :]) != 0
            if bad.any():
                i, j = np.argwhere(bad)[0]
                return PartitionReport(False, mode, 0, f"rectangle {k} contains intersecting pair",
                                       (int(rr[i]), int(cc[j])))
            keys.append(((rr[:, None] << d) | cc[None, :]).ravel())
        keys = np.concatenate(keys) if keys else np.zeros(0, dtype=np.int64)
        cov = np.bincount(keys, minlength=4 ** d)
        idx = np.arange(4 ** d, dtype=np.int64)
        S, T = idx >> d, idx & ((1 << d) - 1)
        want = ((S & T) == 0).astype(np.int64)
        bad = np.flatnonzero(cov != want)
        if len(bad):
            x = int(bad[0])
            return PartitionReport(False, mode, int(want.sum()),
                                   f"pair ({x >> d},{x & ((1 << d) - 1)}) has multiplicity {cov[x]}",
                                   (x >> d, x & ((1 << d) - 1)))
        return PartitionReport(True, mode, int(want.sum()))
    if mode != "sample":
        raise ValueError("mode must be 'exhaustive' or 'sample'")
    total = fam.covered()
    if total != 3 ** d:
        return PartitionReport(False, mode, 0, f"counting identity fails: sum |rows||cols| = {total} != 3^{d}")
    for k, (r, c) in enumerate(fam.rects):
        if not _side_disjoint(d, r, c):
            return PartitionReport(False, mode, 0, f"rectangle {k} contains intersecting pairs")
    by_row = defaultdict(list)
    by_col = defaultdict(list)
    loose = []
    for k, (r, c) in enumerate(fam.rects):
        if isinstance(r, Explicit):
            for S in r.items:
                by_row[S].append(k)
        elif isinstance(c, Explicit):
            for T in c.items:
                by_col[T].append(k)
        else:
            loose.append(k)
    rng = np.random.default_rng(seed)
    weights = 1 << np.arange(d, dtype=np.int64)
    rects = fam.rects
    done = 0
    chunk = 1 << 16
    while done < samples:
        m = min(chunk, samples - done)
        st = rng.integers(0, 3, size=(m, d))
        Ss = ((st == 1) * weights).sum(axis=1).tolist()
        Ts = ((st == 2) * weights).sum(axis=1).tolist()
        for S, T in zip(Ss, Ts):
            mult = 0
            for k in by_row.get(S, ()):
                if rects[k][1].contains(T):
                    mult += 1
            for k in by_col.get(T, ()):
                if rects[k][0].contains(S):
                    mult += 1
            for k in loose:
                if rects[k][0].contains(S) and rects[k][1].contains(T):
                    mult += 1
            if mult != 1:
                return PartitionReport(False, mode, done, f"pair ({S},{T}) has multiplicity {mult}", (S, T))
            done += 1
    return PartitionReport(True, mode, done)
