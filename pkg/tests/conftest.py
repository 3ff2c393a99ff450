import os
import random
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from bqc.forms import BiquadraticForm, QuadraticForm

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=300, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
FORMS = CONFIGS / "forms"


def random_gram(rng, n, h):
    M = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            M[i][j] = M[j][i] = rng.randint(-h, h)
    return tuple(tuple(r) for r in M)


def random_form(rng, n, h, nonsingular=True):
    while True:
        F = QuadraticForm(random_gram(rng, n, h))
        if not nonsingular or F.discriminant:
            return F


def random_biquadratic(rng, n, h, terms):
    idx = [(i, j, k, l) for i in range(n) for j in range(i, n)
           for k in range(n) for l in range(k, n)]
    coeffs = {}
    for key in rng.sample(idx, terms):
        c = rng.randint(-h, h)
        if c:
            coeffs[key] = c
    return BiquadraticForm.from_dict(n, coeffs)


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def diag5():
    return QuadraticForm.diagonal([1, 1, 1, 1, -1])


def random_biquadratic_open(rng, n, h, extra):
    """Diagonal part with nonzero mixed-sign entries plus a few random cross terms."""
    coeffs = {}
    signs = [1] * (n - 1) + [-1]
    for i in range(n):
        coeffs[(i, i, i, i)] = signs[i] * rng.randint(1, h)
    idx = [(i, j, k, l) for i in range(n) for j in range(i, n)
           for k in range(n) for l in range(k, n)]
    for key in rng.sample(idx, extra):
        coeffs[key] = coeffs.get(key, 0) + rng.randint(-h, h)
    return BiquadraticForm.from_dict(n, coeffs)
