import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from bqc.errors import NotStabilized, SingularForm
from bqc.forms import BiquadraticForm, QuadraticForm
from bqc.padic import (count_mod, is_good_prime, joint_singular_series, local_density,
                       singular_series)

import oracles
from conftest import random_biquadratic, random_form


@given(st.integers(0, 10**6), st.sampled_from([2, 3, 5]), st.integers(1, 3))
def test_count_mod_methods_agree_with_loops(seed, p, r):
    rng = random.Random(seed)
    n = rng.choice([2, 3])
    F = random_form(rng, n, 6, nonsingular=False)
    if p**(r * n) > 20000:
        r = 1
    ref = oracles.count_mod(F.gram, p**r)
    assert count_mod(F, p, r, "brute").count == ref
    assert count_mod(F, p, r).count == ref
    if F.discriminant:
        assert count_mod(F, p, r, "tree").count == ref
    if p != 2:
        assert count_mod(F, p, r, "gauss").count == ref
    if is_good_prime(F, p):
        assert count_mod(F, p, r, "recursion").count == ref


@given(st.integers(0, 10**6), st.sampled_from([3, 5, 7]))
def test_gauss_and_tree_agree_at_bad_primes(seed, p):
    rng = random.Random(seed)
    F = random_form(rng, 4, 3)
    for r in (1, 2, 3):
        assert count_mod(F, p, r, "gauss").count == count_mod(F, p, r, "tree").count


def test_recursion_refuses_bad_prime():
    F = QuadraticForm.diagonal([1, 1, 3])
    with pytest.raises(ValueError):
        count_mod(F, 3, 2, "recursion")
    with pytest.raises(ValueError):
        count_mod(F, 4, 1)


def test_known_local_densities(diag5):
    assert local_density(diag5, 2, None).exact == Fraction(5, 7)
    assert local_density(diag5, 3, None).exact == Fraction(40, 39)


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13])
def test_good_prime_closed_form(diag5, p):
    # rank 5: N_1 = p^4, so sigma_p = (1 - p^-4) / (1 - p^-3)
    expect = (1 - Fraction(1, p**4)) / (1 - Fraction(1, p**3))
    assert local_density(diag5, p).exact == expect


@given(st.integers(0, 10**6), st.sampled_from([2, 3, 5]))
def test_density_is_limit_of_normalised_counts(seed, p):
    rng = random.Random(seed)
    F = random_form(rng, 4, 3)
    sigma = local_density(F, p, None).exact
    # the normalised count approaches sigma_p geometrically, with ratio p^{2-n} every two levels
    r = 14 if p == 2 else 10
    method = "tree" if p == 2 else ("recursion" if is_good_prime(F, p) else "gauss")
    approx = Fraction(count_mod(F, p, r, method).count, p ** (r * 3))
    assert abs(approx - sigma) <= 2 * Fraction(p ** 3, p ** (r))


def test_not_stabilized_when_level_too_small():
    F = QuadraticForm.diagonal([1, 1, 1, 1, -27])
    with pytest.raises(NotStabilized):
        local_density(F, 3, r_max=1)


def test_density_rejects_singular():
    with pytest.raises(SingularForm):
        local_density(QuadraticForm.diagonal([1, 1, 0]), 3)


def test_singular_series_routes(diag5):
    est = singular_series(diag5, q_max=30, p_max=50)
    alt = est.alternatives[0]
    assert est.route == "euler_product" and alt.route == "q_series"
    assert abs(est.value - 0.74042) < 5e-4
    assert abs(est.value - alt.value) <= est.tail_bound + alt.tail_bound
    assert est.exact == math.prod(local_density(diag5, p, None).exact
                                  for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47))


def test_singular_series_needs_five_variables():
    with pytest.raises(ValueError):
        singular_series(QuadraticForm.diagonal([1, 1, 1, -1]), 10, 10)


def test_q_series_terms_are_exact():
    F = QuadraticForm.diagonal([1, 1, 1, 1, -1])
    ref = sum(Fraction(round(oracles.expsum(F.gram, q, (0,) * 5).real), q**5)
              for q in range(1, 4))
    assert singular_series(F, q_max=3, p_max=3).alternatives[0].exact == ref


@pytest.mark.parametrize("seed", range(3))
def test_joint_series_matches_loops(seed):
    Bq = random_biquadratic(random.Random(seed), 2, 3, 5)
    est = joint_singular_series(Bq, 4)
    ref = 1 + sum(oracles.joint_series_term(Bq.coeffs, 2, q) for q in range(2, 5))
    assert abs(est.value - ref) < 1e-9
    assert est.tail_bound == math.inf
    assert est.params["last_term"] == pytest.approx(abs(oracles.joint_series_term(Bq.coeffs, 2, 4)))


def test_joint_series_diagonal():
    Bq = BiquadraticForm.diagonal([1, 1, 1])
    est = joint_singular_series(Bq, 3)
    ref = 1 + sum(oracles.joint_series_term(Bq.coeffs, 3, q) for q in (2, 3))
    assert abs(est.value - ref) < 1e-9


def test_joint_series_trivial_and_real():
    Bq = BiquadraticForm.diagonal([1, 1, -1])
    assert joint_singular_series(Bq, 1).exact == 1
    # every partial sum is rational, so its imaginary part is exactly zero
    assert isinstance(joint_singular_series(Bq, 4).exact, Fraction)


def test_joint_series_indefinite_five_terms():
    Bq = BiquadraticForm.diagonal([1, 1, -1])
    ref = 1 + sum(oracles.joint_series_term(Bq.coeffs, 3, q) for q in range(2, 6))
    assert abs(joint_singular_series(Bq, 5).value - ref) < 1e-9


def test_small_counts_and_base_case():
    F = QuadraticForm.diagonal([1, 1])
    assert count_mod(F, 3, 1).count == 1
    assert count_mod(F, 5, 1).count == 9
    assert count_mod(F, 7, 0).count == 1


@pytest.mark.parametrize("p", [3, 5, 7])
def test_good_prime_recursion_identity(p):
    rng = random.Random(p)
    for n in (3, 4, 5):
        while True:
            F = random_form(rng, n, 3)
            if is_good_prime(F, p):
                break
        N = [1] + [count_mod(F, p, r, "brute", budget=1e9).count for r in (1, 2, 3)
                   if p ** (r * n) <= 2e7]
        for r in range(2, len(N)):
            assert N[r] == p ** ((r - 1) * (n - 1)) * (N[1] - 1) + p**n * N[r - 2]


def test_series_invariant_under_relabelling(diag5):
    perm = diag5.permuted([4, 0, 3, 1, 2])
    a, b = singular_series(diag5, 10, 30), singular_series(perm, 10, 30)
    assert a.exact == b.exact and a.alternatives[0].exact == b.alternatives[0].exact
    assert a.value > 0


def test_joint_series_terms_within_trivial_bound():
    Bq = BiquadraticForm.diagonal([1, 2, -1])
    prev = joint_singular_series(Bq, 1).value
    for q in range(2, 6):
        cur = joint_singular_series(Bq, q).value
        phi = sum(1 for a in range(1, q) if math.gcd(a, q) == 1)
        assert abs(cur - prev) <= phi + 1e-9
        prev = cur
