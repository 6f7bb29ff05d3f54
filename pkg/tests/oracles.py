"""Independent brute-force references used by the tests.

Nothing here imports the package's algorithms; only plain loops and numpy.
"""
import cmath
import itertools

import numpy as np


def disjointness(d):
    n = 1 << d
    i = np.arange(n)
    return ((i[:, None] & i[None, :]) == 0).astype(np.int64)


def hadamard(d):
    n = 1 << d
    out = np.empty((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            out[i, j] = -1 if bin(i & j).count("1") % 2 else 1
    return out


def dft_complex(m, d):
    """Complex DFT_{Z_m}^{(x)d} with digits of index i at place m^b."""
    n = m ** d
    w = cmath.exp(2j * cmath.pi / m)
    out = np.empty((n, n), dtype=complex)
    for i in range(n):
        di = [(i // m ** b) % m for b in range(d)]
        for j in range(n):
            dj = [(j // m ** b) % m for b in range(d)]
            out[i, j] = w ** (sum(a * b for a, b in zip(di, dj)) % m)
    return out


def multiplicity(d, rects):
    """Coverage count of every (row, col) pair by explicit rectangles."""
    n = 1 << d
    cnt = np.zeros((n, n), dtype=np.int64)
    for rows, cols in rects:
        for r in rows:
            for c in cols:
                cnt[r, c] += 1
    return cnt


def alternating_partition(d):
    """Reference for the word CRCR...: pair (S, T) is taken by the column T when
    |T| <= |S| and by the row S otherwise."""
    rows, cols = {}, {}
    for S in range(1 << d):
        for T in range(1 << d):
            if S & T:
                continue
            if bin(T).count("1") <= bin(S).count("1"):
                cols.setdefault(T, set()).add(S)
            else:
                rows.setdefault(S, set()).add(T)
    fam = {(frozenset([S]), frozenset(ts)) for S, ts in rows.items()}
    fam |= {(frozenset(ss), frozenset([T])) for T, ss in cols.items()}
    return fam


def ov_pairs(U, V):
    return sum(1 for u in U for v in V if all(a * b == 0 for a, b in zip(u, v)))


def ov_pairs_mod(U, V, m):
    return sum(1 for u in U for v in V if sum(a * b for a, b in zip(u, v)) % m == 0)


def superset_moebius(f):
    g = []
    for z in range(len(f)):
        s = 0
        for x in range(len(f)):
            if x & z == z:
                s += (-1) ** (bin(x).count("1") - bin(z).count("1")) * f[x]
        g.append(s)
    return g


def subsets(d, k):
    return [sum(1 << b for b in s) for s in itertools.combinations(range(d), k)]


def f_table(profiles_terms, n, lam):
    """F_n(lam) by plain recursion over the term lists (a, b, count), n_t = 1."""
    from fractions import Fraction

    def F(k, x):
        if k == 0:
            return 1 + x
        return min(sum(c * a * F(k - 1, x * Fraction(b, a)) for (a, b), c in terms) for terms in profiles_terms)

    return F(n, Fraction(lam))


def ov_pairs_matrix(U, V, m=2):
    """Vectorized quadratic count of pairs with <u, v> = 0 mod m (m = 0 means over Z)."""
    G = np.asarray(U, dtype=np.int64) @ np.asarray(V, dtype=np.int64).T
    return int(((G % m) == 0).sum()) if m else int((G == 0).sum())
