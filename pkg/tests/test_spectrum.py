import itertools
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from kroncirc import interval
from kroncirc.core import Disjointness, verify
from kroncirc.degree import r2_partition_circuit
from kroncirc.partitions import W1, W2, W3, simple_alpha_volume
from kroncirc.semiring import PAR
from kroncirc.spectrum import (AlphaProfile, Envelope, StateCapExceeded, build_schedule, envelope_argmax,
                               expand_schedule, f_exact, log_convexity_defect, mixed_profile, multinomial_mass,
                               r1_profiles, weak_duality_bound, word_profile)

terms = st.lists(st.tuples(st.integers(1, 6), st.integers(1, 6)), min_size=1, max_size=3)


def profile(label, pairs):
    return AlphaProfile.from_counts(label, 1, {(a, b): 1 for a, b in pairs})


def test_r1_small_values():
    assert f_exact(r1_profiles(), 1, 1) == 5
    assert f_exact(r1_profiles(), 1, Fraction(1, 3)) == 3


@settings(max_examples=30, deadline=None)
@given(st.lists(terms, min_size=1, max_size=3), st.integers(1, 4), st.integers(-2, 2))
def test_f_exact_matches_plain_recursion(fams, n, e):
    profs = [profile(f"p{i}", t) for i, t in enumerate(fams)]
    ref = oracles.f_table([[((a, b), 1) for a, b in set(t)] for t in fams], n, Fraction(2) ** e)
    assert f_exact(profs, n, Fraction(2) ** e) == ref


@settings(max_examples=30, deadline=None)
@given(st.lists(terms, min_size=1, max_size=3), st.integers(1, 5), st.integers(-3, 3),
       st.fractions(0, 1, max_denominator=64))
def test_weak_duality_bound_holds(fams, n, e, alpha):
    profs = [profile(f"p{i}", t) for i, t in enumerate(fams)]
    lam = Fraction(2) ** e
    bound = weak_duality_bound(Envelope(profs), alpha, n, lam)
    assert interval.bounds(bound)[0] <= f_exact(profs, n, lam)


def test_literal_orientation_fails_at_alpha_zero():
    # with the row profile alone F_1 = 2 + 3 lam, and C(alpha) lam^alpha at alpha = 0 gives 3
    row = r1_profiles()[0]
    lam = Fraction(1, 8)
    f1 = f_exact([row], 1, lam)
    assert f1 == 2 + 3 * lam
    literal = interval.bounds(Envelope([row]).eval(interval.exact(0)))[0]
    assert literal > f1
    assert interval.bounds(weak_duality_bound(Envelope([row]), 0, 1, lam))[0] <= f1


@settings(max_examples=30, deadline=None)
@given(terms)
def test_profiles_are_log_convex(pairs):
    assert log_convexity_defect(profile("p", pairs)) >= -1e-9


def test_r1_envelope_peaks_at_one_plus_sqrt2():
    (lo, hi), peak = envelope_argmax(Envelope(r1_profiles()))
    assert lo <= Fraction(1, 2) <= hi
    a, b = interval.bounds(peak)
    assert a <= 1 + math.sqrt(2) + 1e-12 and 1 + math.sqrt(2) - 1e-12 <= b


def test_profile_endpoints():
    row, col = r1_profiles()
    # alpha = 0 counts right sizes, alpha = 1 counts left sizes
    assert interval.bounds(row.rho(interval.exact(0))) == (3, 3)
    assert interval.bounds(row.rho(interval.exact(1))) == (2, 2)
    assert interval.bounds(col.rho(interval.exact(1))) == (3, 3)


def test_transpose_swaps_alpha():
    p = word_profile(6, "RRCRCCR")
    for a in (0.1, 0.3, 0.5):
        assert abs(p.log_norm(a) - p.transpose().log_norm(1 - a)) < 1e-12


def test_word_profile_matches_closed_form():
    alpha = Fraction(3, 7)
    p = word_profile(9, "RCRCRRCRCC")
    assert interval.overlaps(p.rho(interval.exact(alpha)), simple_alpha_volume(9, "RCRCRRCRCC", alpha))


def test_kron_of_profiles_multiplies_rho():
    row, col = r1_profiles()
    both = row.kron(col)
    a = interval.exact(Fraction(1, 3))
    assert interval.overlaps(both.rho(a), row.rho(a) * col.rho(a))
    assert both.n_t == 2


def test_mixed_profile_levels():
    row, col = r1_profiles()
    assert mixed_profile(row, col, 2, 5).n_t == 5


def test_multinomial_mass_values():
    for counts in ([2, 1], [3, 3], [4, 0], [1, 2, 3]):
        n = sum(counts)
        # count sequences with these letter counts, weight each by its empirical probability
        ways = sum(1 for s in itertools.product(range(len(counts)), repeat=n)
                   if all(s.count(i) == c for i, c in enumerate(counts)))
        ref = ways * math.prod(Fraction(c, n) ** c for c in counts)
        assert multinomial_mass(counts) == ref


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_exact_schedule_expands_to_a_partition(n):
    sched = build_schedule(r1_profiles(), n)
    c = expand_schedule(sched)
    assert verify(c, Disjointness(n), PAR).ok
    assert c.size == sched.skew_size() == f_exact(r1_profiles(), n, 1)


def test_two_level_profiles_schedule():
    c = r2_partition_circuit()
    profs = [AlphaProfile.from_circuit(c, 2, "c"), AlphaProfile.from_circuit(c.transpose(), 2, "ct")]
    sched = build_schedule(profs, 6)
    assert verify(expand_schedule(sched), Disjointness(6), PAR).ok
    with pytest.raises(ValueError):
        f_exact(profs, 5, 1)


def test_asymptotic_schedule_matches_exact_for_r1():
    for n in (4, 7):
        a = build_schedule(r1_profiles(), n, strategy="asymptotic")
        assert a.skew_size() == f_exact(r1_profiles(), n, 1)
        assert verify(expand_schedule(a), Disjointness(n), PAR).ok


def test_state_cap():
    fams = [profile("a", [(1, 2), (3, 1)]), profile("b", [(2, 3), (1, 5)])]
    with pytest.raises(StateCapExceeded):
        f_exact(fams, 12, 1, state_cap=50)


def test_d18_envelope_needs_transposes():
    half = interval.exact(Fraction(1, 2))
    profs = [word_profile(18, w) for w in (W1, W2, W3)]
    both = Envelope(profs + [p.transpose() for p in profs])
    assert interval.certainly_less(interval.log2(both.eval(half)), Fraction(125026, 100000))
    (lo, hi), _ = envelope_argmax(both, grid_size=32, width_bits=12)
    assert lo <= Fraction(1, 2) <= hi
