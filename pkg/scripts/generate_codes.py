"""Rebuild the bundled constant-weight code tables (length 18, distance 4).

weight 4: an integer program over orbits of the cyclic shift on Z_18, asking
that no 3-subset lies in two codewords.  Reaches 198 codewords.

weight 6: split the 18 points into two halves of 9.  A codeword meets the
halves in (3,3), (1,5) or (5,1) points.  The (3,3) part pairs two blocks of
the same Steiner triple system, taken from a large set of 7 pairwise disjoint
STS(9); the (1,5) and (5,1) parts pair the singleton {k} with the 5-subsets of
the other half whose element sum is k mod 9.  This yields 7*144 + 2*126 = 1260.

Usage: python3 scripts/generate_codes.py [outdir]
"""
import itertools
import sys
from pathlib import Path

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, milp

N = 18


def cyclic_code(w, time_limit=120.0):
    def orbit(s):
        return {tuple(sorted((x + k) % N for x in s)) for k in range(N)}

    def canon(s):
        return min(orbit(s))

    blocks = sorted({canon(s) for s in itertools.combinations(range(N), w)})
    subs = {}
    for s in itertools.combinations(range(N), w - 1):
        c = canon(s)
        if c not in subs:
            subs[c] = (len(subs), len(orbit(c)))
    A = np.zeros((len(subs), len(blocks)))
    for j, b in enumerate(blocks):
        for bb in orbit(b):
            for t in itertools.combinations(bb, w - 1):
                A[subs[canon(t)][0], j] += 1
    osz = np.zeros(len(subs))
    for i, sz in subs.values():
        osz[i] = sz
    A /= osz[:, None]
    ub = np.where((A > 1).any(axis=0), 0.0, 1.0)
    cost = -np.array([len(orbit(b)) for b in blocks], float)
    res = milp(cost, constraints=LinearConstraint(A, -np.inf, 1), integrality=np.ones(len(blocks)),
               bounds=Bounds(0, ub), options={"time_limit": time_limit})
    x = np.round(res.x).astype(int)
    return sorted(bb for j, b in enumerate(blocks) if x[j] for bb in orbit(b))


def large_set_sts9():
    pts = [(x, y) for x in range(3) for y in range(3)]
    idx = {p: i for i, p in enumerate(pts)}
    lines = set()
    for a, b in itertools.combinations(pts, 2):
        c = ((-a[0] - b[0]) % 3, (-a[1] - b[1]) % 3)
        lines.add(frozenset((idx[a], idx[b], idx[c])))
    systems = list({frozenset(frozenset(p[i] for i in ln) for ln in lines)
                    for p in itertools.permutations(range(9))})
    triples = [frozenset(t) for t in itertools.combinations(range(9), 3)]
    by = {t: [s for s in systems if t in s] for t in triples}

    def search(used, chosen):
        if len(chosen) == 7:
            return chosen
        t = next(t for t in triples if t not in used)
        for s in by[t]:
            if not (s & used):
                r = search(used | s, chosen + [s])
                if r:
                    return r
        return None

    return [[sorted(b) for b in s] for s in search(frozenset(), [])]


def weight6_code():
    code = set()
    for sts in large_set_sts9():
        for a in sts:
            for b in sts:
                code.add(tuple(sorted([x + 9 for x in a] + list(b))))
    for k in range(9):
        for f in itertools.combinations(range(9), 5):
            if sum(f) % 9 == k:
                code.add(tuple(sorted([k + 9] + list(f))))
                code.add(tuple(sorted([k] + [x + 9 for x in f])))
    return sorted(code)


def check(code, w):
    seen = set()
    for c in code:
        assert len(set(c)) == w
        for s in itertools.combinations(c, w - 1):
            assert s not in seen, "two codewords share a (w-1)-subset"
            seen.add(s)


def write(path, code, w):
    with open(path, "w") as out:
        out.write(f"# constant-weight code n=18 distance=4 weight={w} size={len(code)}\n")
        for c in code:
            out.write(" ".join(map(str, c)) + "\n")


if __name__ == "__main__":
    outdir = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parents[1] / "src/kroncirc/data")
    c4 = cyclic_code(4)
    check(c4, 4)
    write(outdir / "cw_18_4_4.txt", c4, 4)
    c6 = weight6_code()
    check(c6, 6)
    write(outdir / "cw_18_4_6.txt", c6, 6)
    print(len(c4), len(c6))
