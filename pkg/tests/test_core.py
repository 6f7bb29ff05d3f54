import cmath
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from kroncirc import interval
from kroncirc.core import (DFT, CapExceeded, Circuit, Disjointness, Hadamard, Identity, SparseMatrix, SparseVector,
                           apply, circuit_kron, circuit_layers, circuit_power, generate, identity_circuit, kron,
                           materialize, matmul, measure, one_sided_circuit, verify)
from kroncirc.semiring import OR, PAR, RATIONAL, Cyc, cyclotomic, modp


def cyc_to_complex(v):
    w = cmath.exp(2j * cmath.pi / v.m)
    return sum(c * w ** k for k, c in enumerate(v.coeffs)) / v.den


# ------------------------------------------------------------------ semiring


@given(st.lists(st.integers(-5, 5), min_size=1, max_size=6), st.lists(st.integers(-5, 5), min_size=1, max_size=6),
       st.sampled_from([2, 3, 4, 5, 6, 8]))
def test_cyclotomic_arithmetic_matches_complex(a, b, m):
    x, y = Cyc(m, tuple(a)), Cyc(m, tuple(b))
    assert abs(cyc_to_complex(x + y) - (cyc_to_complex(x) + cyc_to_complex(y))) < 1e-9
    assert abs(cyc_to_complex(x * y) - cyc_to_complex(x) * cyc_to_complex(y)) < 1e-9


def test_roots_of_unity_sum_to_zero():
    for m in (2, 3, 5, 6, 12):
        assert sum((Cyc.root(m, k) for k in range(m)), Cyc.const(m, 0)) == Cyc.const(m, 0)


def test_semiring_tokens_round_trip():
    for sr in (RATIONAL, OR, PAR, modp(7), cyclotomic(5)):
        assert type(sr).from_token(sr.token()) == sr


def test_or_semiring_saturates():
    assert OR.add(1, 1) == 1
    assert PAR.add(1, 1) == 2


# ------------------------------------------------------------------ interval


@given(st.fractions(min_value=0, max_value=1, max_denominator=1000), st.integers(1, 10 ** 6))
def test_power_encloses_float(alpha, a):
    lo, hi = interval.bounds(interval.power(a, alpha))
    f = float(a) ** float(alpha)
    assert float(lo) <= f * (1 + 1e-12) and f * (1 - 1e-12) <= float(hi)
    assert hi - lo < Fraction(f) * Fraction(1, 2 ** 100) + Fraction(1, 2 ** 100)


def test_square_root_of_square_is_enclosed():
    lo, hi = interval.bounds(interval.power(9, Fraction(1, 2)))
    assert lo <= 3 <= hi


def test_upper_decimal_rounds_up():
    x = interval.log2(interval.exact(3))
    assert interval.upper_decimal(x, 4) == "1.5850"
    assert interval.lower_decimal(x, 4) == "1.5849"


# -------------------------------------------------------------- generation


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_disjointness_generation(d):
    assert (generate(Disjointness(d)).to_numpy() == oracles.disjointness(d)).all()
    assert generate(Disjointness(d)).nnz == 3 ** d


@pytest.mark.parametrize("d", [1, 2, 3])
def test_hadamard_generation(d):
    assert (generate(Hadamard(d)).to_numpy() == oracles.hadamard(d)).all()


@pytest.mark.parametrize("m,d", [(2, 2), (3, 2), (5, 1), (4, 2)])
def test_dft_generation(m, d):
    M = generate(DFT(m, d))
    ref = oracles.dft_complex(m, d)
    for i in range(m ** d):
        for j in range(m ** d):
            assert abs(cyc_to_complex(M.get(i, j)) - ref[i, j]) < 1e-9


def test_cap_exceeded_is_raised(monkeypatch):
    monkeypatch.setenv("KRONCIRC_MAX_ENTRIES", "100")
    with pytest.raises(CapExceeded):
        generate(Disjointness(4))


def small_matrices(max_dim=4):
    return st.integers(1, max_dim).flatmap(lambda r: st.integers(1, max_dim).flatmap(
        lambda c: st.lists(st.lists(st.integers(-3, 3), min_size=c, max_size=c), min_size=r, max_size=r)))


@settings(max_examples=40)
@given(small_matrices(), small_matrices())
def test_kron_matches_numpy(a, b):
    A, B = SparseMatrix.from_dense(a), SparseMatrix.from_dense(b)
    assert (kron(A, B).to_numpy() == np.kron(np.array(a), np.array(b))).all()


@settings(max_examples=40)
@given(small_matrices(3), st.data())
def test_matmul_matches_numpy(a, data):
    k = len(a[0])
    b = data.draw(st.lists(st.lists(st.integers(-3, 3), min_size=2, max_size=2), min_size=k, max_size=k))
    assert (matmul(SparseMatrix.from_dense(a), SparseMatrix.from_dense(b)).to_numpy() == np.array(a) @ np.array(b)).all()


# ---------------------------------------------------------------- circuits


def random_circuit(draw, rows, cols, gates):
    out = []
    for _ in range(gates):
        coef = st.sampled_from([-2, -1, 1, 2])
        u = {i: draw(coef) for i in draw(st.sets(st.integers(0, rows - 1), min_size=1, max_size=rows))}
        v = {j: draw(coef) for j in draw(st.sets(st.integers(0, cols - 1), min_size=1, max_size=cols))}
        out.append((SparseVector.from_dict(rows, u), SparseVector.from_dict(cols, v)))
    return Circuit(rows, cols, tuple(out), RATIONAL)


@st.composite
def circuits(draw):
    return random_circuit(draw, draw(st.integers(1, 3)), draw(st.integers(1, 3)), draw(st.integers(1, 3)))


@settings(max_examples=40)
@given(circuits(), circuits())
def test_circuit_kron_computes_kron_of_matrices(c1, c2):
    assert materialize(circuit_kron(c1, c2)) == kron(materialize(c1), materialize(c2))


@settings(max_examples=40)
@given(circuits(), circuits())
def test_degrees_multiply_under_kron(c1, c2):
    k = circuit_kron(c1, c2)
    assert (k.row_degrees() == np.outer(c1.row_degrees(), c2.row_degrees()).ravel()).all()
    assert (k.col_degrees() == np.outer(c1.col_degrees(), c2.col_degrees()).ravel()).all()


@settings(max_examples=40)
@given(circuits(), st.fractions(0, 1, max_denominator=16))
def test_alpha_volume_multiplies_under_kron(c, alpha):
    v1 = measure(c, alpha).alpha_volume
    v2 = measure(circuit_kron(c, c), alpha).alpha_volume
    assert interval.overlaps(v1 * v1, v2)


@settings(max_examples=30)
@given(circuits(), st.data())
def test_apply_matches_materialized_product(c, data):
    x = data.draw(st.lists(st.integers(-4, 4), min_size=c.n_cols, max_size=c.n_cols))
    M = materialize(c).to_numpy()
    assert [int(v) for v in apply(c, x)] == (M @ np.array(x)).tolist()


def test_one_sided_circuits_verify():
    R2 = generate(Disjointness(2))
    for by in ("row", "col"):
        c = one_sided_circuit(R2, by=by)
        assert verify(c, Disjointness(2), PAR).ok
    H = generate(Hadamard(2))
    assert verify(one_sided_circuit(H), Hadamard(2)).ok


def test_verify_reports_first_counterexample():
    R1 = generate(Disjointness(1))
    c = one_sided_circuit(R1, by="col")
    bad = Circuit(2, 2, c.gates + c.gates[:1], PAR)
    rep = verify(bad, Disjointness(1), PAR)
    assert not rep.ok and rep.counterexample is not None
    assert verify(bad, Disjointness(1), OR).ok


def test_sampled_verification_agrees_with_exhaustive():
    c = circuit_power(one_sided_circuit(generate(Disjointness(1)), by="col"), 5)
    assert verify(c, Disjointness(5), PAR, samples=500, seed=3).ok
    assert not verify(identity_circuit(32, PAR), Disjointness(5), PAR, samples=500, seed=3).ok


def test_layers_multiply_back():
    c = circuit_power(one_sided_circuit(generate(Disjointness(1)), by="row"), 3)
    U, Vt = circuit_layers(c.with_semiring(RATIONAL))
    assert matmul(U, Vt) == generate(Disjointness(3))


def test_identity_measure():
    m = measure(identity_circuit(8), Fraction(1, 2))
    assert m.size == 16 and m.degree == 1
    assert interval.bounds(m.alpha_volume) == (8, 8)


def test_identity_spec():
    assert generate(Identity(3)).to_numpy().tolist() == np.eye(3, dtype=int).tolist()
