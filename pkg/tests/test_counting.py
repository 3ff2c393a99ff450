import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import zeta

from bqc.archimedean import WeightFunction
from bqc.counting import (HeightParams, count_A, count_exceptional, count_Nx, count_NU,
                          count_quadric_box, count_quadric_weighted, count_tilde,
                          dyadic_cell_counts, mobius_M, peyre_constant, quadric_shell_counts,
                          thin_set_count, zeta_series)
from bqc.errors import BudgetExceeded
from bqc.fitting import loglog_plane, loglog_slope
from bqc.forms import BiquadraticForm, QuadraticForm, slice_x, slice_y

import oracles
from conftest import random_biquadratic, random_biquadratic_open, random_form


def test_small_box_count(diag5):
    assert count_quadric_box(diag5, 1).count == 17
    assert count_quadric_box(diag5, 0).count == 1


@given(st.integers(0, 10**6), st.integers(3, 4), st.integers(0, 5))
def test_naive_and_slice_agree(seed, n, B):
    rng = random.Random(seed)
    F = random_form(rng, n, 4, nonsingular=False)
    assert count_quadric_box(F, B, "slice").count == count_quadric_box(F, B, "naive").count


@pytest.mark.parametrize("seed", range(4))
def test_slice_matches_loops(seed):
    rng = random.Random(seed)
    F = random_form(rng, 3, 5, nonsingular=False)
    assert count_quadric_box(F, 6).count == oracles.count_box(F.gram, 6)


def test_shells_sum_to_counts(diag5):
    h = quadric_shell_counts(diag5, 12)
    for B in (3, 7, 12):
        assert int(h[:B + 1].sum()) == count_quadric_box(diag5, B, "naive").count
    with pytest.raises(ValueError):
        h[0] = 0


def test_count_budget(diag5):
    with pytest.raises(BudgetExceeded):
        count_quadric_box(diag5, 100, budget=1e6)


@pytest.mark.parametrize("eta", [0.05, 0.1])
@pytest.mark.parametrize("B", [20, 40])
def test_weighted_sandwich(diag5, eta, B):
    n0 = count_quadric_weighted(diag5, WeightFunction.box(), B).count
    n1 = count_quadric_weighted(diag5, WeightFunction.annular1(eta), B).count
    n2 = count_quadric_weighted(diag5, WeightFunction.annular2(eta), B).count
    small = count_quadric_weighted(diag5, WeightFunction.box(2 * eta), B).count
    assert n1 <= n0 <= n2 + small


def test_weighted_box_uses_exact_cutoff(diag5):
    assert count_quadric_weighted(diag5, WeightFunction.box(0.3), 10).count == \
        count_quadric_box(diag5, 3).count


def brute_pairs(Bq, X, Y, need_y_det):
    n = Bq.n
    total = 0
    from itertools import product
    for x in product(range(-X, X + 1), repeat=n):
        if slice_x(Bq, x).det == 0:
            continue
        for y in product(range(-Y, Y + 1), repeat=n):
            if Bq(x, y) == 0 and (not need_y_det or slice_y(Bq, y).det != 0):
                total += 1
    return total


@pytest.mark.parametrize("seed", range(3))
def test_box_pair_counts_match_loops(seed):
    Bq = random_biquadratic_open(random.Random(seed), 3, 2, 3)
    X, Y = 1, 3
    assert count_tilde(Bq, X, Y).count == brute_pairs(Bq, X, Y, False)
    assert count_A(Bq, X, Y).count == brute_pairs(Bq, X, Y, True)


def test_exceptional_diagonal_route():
    Bq = BiquadraticForm.diagonal([1, 1, -1])
    ex = count_exceptional(Bq, 4, 12)
    assert ex.method == "diagonal"
    assert ex.count == count_tilde(Bq, 4, 12).count - count_A(Bq, 4, 12).count == 26112


def test_count_nx_matches_loops():
    Bq = BiquadraticForm.diagonal([1, 2, -3])
    x = (1, 1, 1)
    ref = sum(1 for y in np.ndindex(9, 9, 9) if Bq(x, [t - 4 for t in y]) == 0)
    assert count_Nx(Bq, x, 4).count == ref


@pytest.mark.parametrize("seed", range(3))
def test_count_a_symmetry(seed):
    Bq = random_biquadratic_open(random.Random(seed + 10), 3, 2, 3)
    assert count_A(Bq, 2, 3).count > 0
    assert count_A(Bq, 2, 3).count == count_A(Bq.transpose(), 3, 2).count


@pytest.mark.parametrize("seed", range(4))
def test_nu_routes_match_loops(seed):
    rng = random.Random(seed)
    Bq = random_biquadratic_open(rng, 3, 2, 3) if seed % 2 else random_biquadratic(rng, 3, 2, 5)
    for B in (4, 7):
        ref = oracles.nu_count(Bq.coeffs, 3, B)
        assert count_NU(Bq, B).count == ref
        assert count_NU(Bq, B, route="mobius").count == ref
        assert count_NU(Bq, B, canonical=False).count == 4 * ref


@pytest.mark.parametrize("R", [5, 10, 20])
def test_diagonal_fast_path_matches_scan(R):
    Bq = BiquadraticForm.diagonal([1, 1, -1])
    for route in ("direct", "mobius"):
        fast = count_NU(Bq, R, route=route, method="diagonal").count
        slow = count_NU(Bq, R, route=route, method="scan").count
        assert fast == slow
    assert mobius_M(Bq, R, "diagonal").count == mobius_M(Bq, R, "scan").count


def test_nu_known_values():
    Bq = BiquadraticForm.diagonal([1, 1, -1])
    assert [count_NU(Bq, R).count for R in (5, 10, 20, 30)] == [64, 128, 1152, 1792]


def test_height_params():
    hp = HeightParams(4, 100)
    assert hp.radius == 10 and hp.exponent == 2
    assert hp.admits(2, 5) and not hp.admits(3, 4)
    assert HeightParams(5, 26).radius == 2
    assert HeightParams.u(100, 10) == pytest.approx(2.0)


def test_dyadic_cells_partition():
    Bq = BiquadraticForm.diagonal([1, 1, -1])
    cells = dyadic_cell_counts(Bq, 12)
    assert sum(cells.values()) == mobius_M(Bq, 12).count == 1280
    assert all(i >= 0 and j >= 0 for i, j in cells)


def test_thin_set_routes():
    assert thin_set_count(3, 100).count == thin_set_count(3, 100, "enumerate").count == 12176
    assert thin_set_count(3, 10**4).count == 121589944
    with pytest.raises(ValueError):
        thin_set_count(3, 100, "guess")


@given(st.floats(1.1, 8))
def test_zeta_series(s):
    assert zeta_series(s) == pytest.approx(float(zeta(s)), rel=1e-10)


def test_peyre_constant():
    assert peyre_constant(2.0, 3.0, 3) == 0.0
    assert peyre_constant(2.0, 3.0, 4) == pytest.approx(6.0 / (4 * (math.pi**2 / 6) ** 2))
    with pytest.raises(ValueError):
        zeta_series(1.0)


@pytest.mark.parametrize("coeffs,Xs,Ys", [
    ([1, 1, 1, -1], (2, 4, 8), (16, 32, 64)),
    ([1, 2, 3, -5], (2, 4, 8), (16, 32, 64)),
    ([1, 2, -1, 1, -3], (1, 2, 4), (8, 16, 32)),
])
def test_exceptional_growth_exponents(coeffs, Xs, Ys):
    # pairs with x in A1 but det F_y = 0 grow no faster than X^n Y^(n-3+0.3)
    Bq = BiquadraticForm.diagonal(coeffs)
    n = Bq.n
    pts = [(X, Y, count_exceptional(Bq, X, Y).count) for X in Xs for Y in Ys]
    ex, ey = loglog_plane(*zip(*pts))
    assert ex <= n
    assert ey <= n - 3 + 0.3


def test_exceptional_lines_at_three_variables():
    # at n = 3 the locus F_x = det F_y = 0 is finitely many projective points,
    # so each x contributes whole lines and the growth in Y is linear
    Bq = BiquadraticForm.diagonal([1, 1, -1])
    Ys = (8, 16, 32, 64)
    slope = loglog_slope(Ys, [count_exceptional(Bq, 2, Y).count for Y in Ys])
    assert abs(slope - 1) < 0.05
