import cmath
import itertools

import numpy as np
import pytest

import oracles
from kroncirc.core import Disjointness, SparseMatrix, SparseVector, generate
from kroncirc.degree import r2_partition_circuit
from kroncirc.solvers import (PointSet, VmvPlan, default_mod_plan, default_ov_plan, depth_d_stack, layers_product,
                              mf_direct, mf_pipeline, moebius_superset, ov_count, ov_count_mod, ov_decide,
                              sparse_vmv)


def random_support(rng, n, size, values=(1, 2, 3)):
    idx = np.unique(rng.integers(0, n, size))
    return SparseVector(n, tuple(idx.tolist()), tuple(int(x) for x in rng.choice(values, len(idx))))


def dense(v):
    out = np.zeros(v.length, dtype=np.int64)
    out[list(v.idx)] = v.val
    return out


# ------------------------------------------------------------ sparse products


def test_empty_set_pair_gives_one():
    for d in (1, 4, 7):
        e = SparseVector(1 << d, (0,), (1,))
        assert sparse_vmv(default_ov_plan(d), e, e).value == 1


@pytest.mark.parametrize("d,seed", [(6, 0), (9, 1), (10, 2)])
def test_sparse_vmv_integer_matches_dense(d, seed):
    rng = np.random.default_rng(seed)
    n = 1 << d
    x, y = random_support(rng, n, 100), random_support(rng, n, 100)
    R = oracles.disjointness(d)
    assert sparse_vmv(default_ov_plan(d), x, y).value == dense(x) @ R @ dense(y)


@pytest.mark.parametrize("d,seed", [(5, 3), (8, 4)])
def test_sparse_vmv_or_matches_support(d, seed):
    rng = np.random.default_rng(seed)
    n = 1 << d
    R = oracles.disjointness(d)
    for size in (1, 3, 40):
        x, y = random_support(rng, n, size), random_support(rng, n, size)
        got = sparse_vmv(default_ov_plan(d, kind="or"), x, y).value
        assert bool(got) == bool(dense(x) @ R @ dense(y))


@pytest.mark.parametrize("m,d", [(3, 2), (3, 3), (5, 2), (4, 3)])
def test_sparse_vmv_cyclotomic_matches_complex(m, d):
    rng = np.random.default_rng(m * 10 + d)
    n = m ** d
    x, y = random_support(rng, n, 6, (-2, -1, 1, 2)), random_support(rng, n, 6, (-2, -1, 1, 2))
    got = sparse_vmv(default_mod_plan(d, m), x, y).value
    w = cmath.exp(2j * cmath.pi / m)
    val = sum(c * w ** k for k, c in enumerate(got.coeffs)) / got.den
    ref = dense(x) @ oracles.dft_complex(m, d) @ dense(y)
    assert abs(val - ref) < 1e-8


def test_work_counts_support_degrees():
    d = 6
    plan = default_ov_plan(d)
    c = r2_partition_circuit()
    x = SparseVector(1 << d, (0, 5), (1, 1))
    res = sparse_vmv(plan, x, SparseVector(1 << d, (), ()))
    rd = c.row_degrees()
    deg = [int(np.prod([rd[(i >> (2 * k)) & 3] for k in range(3)])) for i in (0, 5)]
    assert res.value == 0 and res.work == sum(deg)


# --------------------------------------------------------------------- OV


def random_points(rng, n, d, p=0.5, m=2):
    if m == 2:
        return (rng.random((n, d)) < p).astype(np.int64)
    return rng.integers(0, m, (n, d))


def test_zero_vector_pairs_with_everything():
    d = 7
    u = PointSet(np.zeros((1, d), dtype=np.int64))
    v = PointSet(np.ones((1, d), dtype=np.int64))
    assert ov_count(u, v).value == 1
    assert ov_decide(u, v).value


def test_all_ones_has_no_orthogonal_pairs():
    for d in (1, 5, 12):
        u = PointSet(np.ones((4, d), dtype=np.int64))
        assert ov_count(u, u).value == 0
        assert not ov_decide(u, u).value


@pytest.mark.parametrize("seed", range(6))
def test_ov_count_and_decide_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 15))
    n = int(rng.integers(1, 60))
    U, V = random_points(rng, n, d, 0.6), random_points(rng, n, d, 0.6)
    ref = oracles.ov_pairs(U.tolist(), V.tolist())
    got = ov_count(PointSet(U), PointSet(V))
    assert got.value == ref
    assert ov_decide(PointSet(U), PointSet(V), seed=seed).value == (ref > 0)


def test_duplicates_count_with_multiplicity():
    U = np.array([[0, 1, 0], [0, 1, 0], [1, 0, 0]])
    V = np.array([[1, 0, 1], [1, 0, 1]])
    assert ov_count(PointSet(U), PointSet(V)).value == oracles.ov_pairs(U.tolist(), V.tolist()) == 4


def test_adversarial_single_pair():
    d, n = 12, 60
    rng = np.random.default_rng(11)
    k = d // 3
    u0 = np.zeros(d, dtype=np.int64)
    u0[:k] = 1
    v0 = np.zeros(d, dtype=np.int64)
    v0[k:2 * k] = 1
    U = random_points(rng, n, d, 0.5)
    V = random_points(rng, n, d, 0.5)
    U[0], V[0] = u0, v0
    # coordinate 0 blocks u0 and every other pair, coordinate k blocks v0
    U[1:, 0] = 1
    V[1:, 0] = 1
    U[1:, k] = 1
    assert oracles.ov_pairs(U.tolist(), V.tolist()) == 1
    assert ov_count(PointSet(U), PointSet(V)).value == 1
    assert ov_decide(PointSet(U), PointSet(V), seed=3).value


def test_ov_decide_reports_classes():
    rng = np.random.default_rng(0)
    U = PointSet(random_points(rng, 20, 10))
    res = ov_decide(U, U, early_exit=False)
    assert res.info["classes"] > 0 and res.info["unverified"] == 0


# ----------------------------------------------------------------- mod m


def test_mod3_single_coordinate():
    pts = PointSet(np.array([[0], [1], [2]]), m=3)
    ref = oracles.ov_pairs_mod([[0], [1], [2]], [[0], [1], [2]], 3)
    assert ref == 5
    assert ov_count_mod(pts, pts, 3).value == ref


def test_mod1_counts_all_pairs():
    pts = PointSet(np.zeros((7, 4), dtype=np.int64), m=1)
    assert ov_count_mod(pts, pts, 1).value == 49


def test_zero_pair_mod_any_m():
    for m in (2, 3, 5):
        z = PointSet(np.zeros((1, 4), dtype=np.int64), m=m)
        assert ov_count_mod(z, z, m).value == 1


@pytest.mark.parametrize("m,d,seed", [(2, 8, 0), (2, 11, 1), (3, 6, 2), (5, 4, 3), (4, 4, 4)])
def test_ov_count_mod_matches_brute_force(m, d, seed):
    rng = np.random.default_rng(seed)
    U, V = random_points(rng, 40, d, m=m), random_points(rng, 40, d, m=m)
    assert ov_count_mod(PointSet(U, m), PointSet(V, m), m).value == oracles.ov_pairs_mod(U.tolist(), V.tolist(), m)


def test_mod_requires_matching_alphabet():
    with pytest.raises(ValueError):
        ov_count_mod(PointSet(np.zeros((1, 2), dtype=np.int64)), PointSet(np.zeros((1, 2), dtype=np.int64)), 3)
    with pytest.raises(ValueError):
        PointSet(np.array([[0, 3]]), m=3)


# --------------------------------------------------------- layered circuits


def test_depth_two_is_the_base_circuit():
    layers = depth_d_stack(2, 2)
    assert len(layers) == 2
    assert layers_product(layers) == generate(Disjointness(2))
    assert sum(L.nnz for L in layers) == r2_partition_circuit().size


def test_depth_four_product_and_sparsity():
    layers = depth_d_stack(4, 4)
    assert len(layers) == 4
    assert (layers_product(layers).to_numpy() == oracles.disjointness(4)).all()
    c = r2_partition_circuit()
    nnz_u = sum(len(u.idx) for u, _ in c.gates)
    # each layer is I (x) base layer (x) I with identity blocks on the other two coordinates
    assert layers[0].nnz == nnz_u * 4 and layers[2].nnz == nnz_u * 4


@pytest.mark.parametrize("depth,n", [(4, 6), (6, 6), (4, 5), (6, 7)])
def test_depth_stack_products(depth, n):
    layers = depth_d_stack(depth, n, pad=True)
    assert len(layers) == depth
    assert (layers_product(layers).to_numpy() == oracles.disjointness(n)).all()


def test_depth_stack_requires_padding_flag():
    with pytest.raises(ValueError):
        depth_d_stack(4, 5)
    with pytest.raises(ValueError):
        depth_d_stack(3, 6)


def test_moebius_n1_fixture():
    assert moebius_superset([0, 1]) == [-1, 1]
    mf = mf_pipeline([0, 1], depth=2)
    assert layers_product(mf.layers).to_numpy().tolist() == [[0, 1], [1, 1]]


def test_moebius_matches_oracle():
    rng = np.random.default_rng(0)
    f = rng.integers(-3, 4, 32).tolist()
    g = moebius_superset(f)
    assert g == oracles.superset_moebius(f)
    for x in range(32):
        assert sum(g[z] for z in range(32) if z & x == x) == f[x]


def test_constant_function_gives_top_indicator():
    g = moebius_superset([1] * 16)
    assert g == [0] * 15 + [1]


@pytest.mark.parametrize("n,depth", [(3, 2), (4, 4), (6, 4), (5, 6)])
def test_mf_pipeline_random(n, depth):
    rng = np.random.default_rng(n)
    f = rng.integers(-2, 3, 1 << n).tolist()
    mf = mf_pipeline(f, depth=depth)
    assert len(mf.layers) == 2 * depth
    assert layers_product(mf.layers) == mf_direct(f)


def test_mf_pipeline_majority():
    n = 8
    f = [int(bin(x).count("1") > n // 2) for x in range(1 << n)]
    mf = mf_pipeline(f, depth=4)
    ref = np.array([[f[x | y] for y in range(1 << n)] for x in range(1 << n)])
    assert (layers_product(mf.layers).to_numpy() == ref).all()


def test_mf_direct_is_or_lookup():
    f = list(range(8))
    M = mf_direct(f)
    for x, y in itertools.product(range(8), repeat=2):
        assert M.get(x, y) == f[x | y]


def test_vmv_plan_rejects_unknown_kind():
    with pytest.raises(ValueError):
        VmvPlan([r2_partition_circuit()], kind="float")
    assert isinstance(layers_product([SparseMatrix.from_entries(1, 1, [(0, 0, 2)])]), SparseMatrix)
