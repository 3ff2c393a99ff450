"""Complete quadratic exponential sums and the classical sums they reduce to.

``S_q(c) = sum_{a mod q, (a,q)=1} sum_{b mod q} e_q(a F(b) + b.c)``.

The public :func:`expsum` factors q into prime powers and evaluates each factor
from the joint residue histogram of ``(F(b), b.c)``; :func:`expsum_brute` is the
literal double sum and serves as the reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from math import gcd

import numpy as np

from . import _kernels
from .arith import factorint, is_prime, legendre_table, mobius
from .errors import BudgetExceeded
from .forms import QuadraticForm, dual_form

__all__ = ["ExpSumValue", "DyadicAverage", "ramanujan", "gauss_sum", "expsum_brute",
           "expsum", "sigma_n_sum", "exact_prime_power_magnitude", "standard_bound",
           "DEFAULT_BUDGET"]

DEFAULT_BUDGET = 10**8


@dataclass(frozen=True)
class ExpSumValue:
    re: float
    im: float
    q: int
    method: str

    @property
    def value(self) -> complex:
        return complex(self.re, self.im)

    def __abs__(self):
        return abs(self.value)


@dataclass(frozen=True)
class DyadicAverage:
    """``total = sum_{x/2 < q <= x} |S_q(c)|``."""

    x: float
    c: tuple
    total: float
    moduli: tuple = field(default=(), repr=False)


def _divisors(n):
    out = [1]
    for p, e in factorint(n):
        out = [d * p**k for d in out for k in range(e + 1)]
    return sorted(out)


def ramanujan(q: int, m: int) -> int:
    """Exact Ramanujan sum ``c_q(m) = sum_{d | (q, m)} mu(q/d) d``."""
    if q < 1:
        raise ValueError("q must be positive")
    g = gcd(q, int(m))
    return sum(mobius(q // d) * d for d in _divisors(g))


@lru_cache(maxsize=512)
def _ramanujan_row(q):
    """``c_q(v)`` for v = 0..q-1 as an int64 array."""
    by_gcd = {}
    row = np.empty(q, dtype=np.int64)
    for v in range(q):
        g = gcd(q, v)
        if g not in by_gcd:
            by_gcd[g] = ramanujan(q, g)
        row[v] = by_gcd[g]
    row.setflags(write=False)
    return row


def _phases(q):
    return np.exp(2j * np.pi * np.arange(q) / q)


def gauss_sum(p: int, r: int, m: int) -> ExpSumValue:
    """``g_{p^r}(m) = sum_{a mod p^r, p∤a} (a/p)^r e_{p^r}(a m)`` for an odd prime p."""
    if p == 2 or not is_prime(p):
        raise ValueError(f"gauss_sum needs an odd prime, got {p}")
    if r < 1:
        raise ValueError("r must be positive")
    q = p**r
    a = np.arange(q)
    if r % 2:
        chi = legendre_table(p)[a % p]
    else:
        chi = (a % p != 0).astype(np.int64)
    s = np.sum(chi * _phases(q)[(a * (m % q)) % q])
    return ExpSumValue(float(s.real), float(s.imag), q, "brute")


def _check_vector(F, c):
    c = tuple(int(t) for t in c)
    if len(c) != F.n:
        raise ValueError(f"c must have length {F.n}")
    return c


def expsum_brute(F: QuadraticForm, q: int, c, budget: float = DEFAULT_BUDGET) -> ExpSumValue:
    """Literal double sum over a coprime to q and b mod q (reference implementation)."""
    c = _check_vector(F, c)
    if q < 1:
        raise ValueError("q must be positive")
    n = F.n
    work = float(q) ** (n + 1)
    if work > budget:
        raise BudgetExceeded(work, budget, f"expsum_brute q={q}")
    E = _phases(q)
    M = F.matrix
    cv = np.array(c, dtype=np.int64)
    units = [a for a in range(1, q + 1) if gcd(a, q) == 1]
    total = 0j
    chunk = max(1, 2**20 // max(q, 1))
    n_b = q**n
    for start in range(0, n_b, chunk):
        idx = np.arange(start, min(n_b, start + chunk), dtype=np.int64)
        b = np.stack([(idx // q**k) % q for k in range(n)], axis=1)
        Fb = np.einsum("ij,jk,ik->i", b, M, b) % q
        bc = (b @ cv) % q
        for a in units:
            total += E[(a * Fb + bc) % q].sum()
    return ExpSumValue(total.real, total.imag, q, "brute")


@lru_cache(maxsize=4096)
def _prime_power_sum(gram, pr, c_mod):
    # valid for any modulus; the CRT path only calls it on prime powers
    M = np.array(gram, dtype=np.int64)
    H = _kernels.joint_hist(M, np.array(c_mod, dtype=np.int64), pr)
    # sum_a e(a v / q) = c_q(v), so S = sum_{v,w} H[v,w] c_q(v) e_q(w)
    per_v = H @ _phases(pr)
    return complex(np.dot(_ramanujan_row(pr).astype(float), per_v))


def expsum(F: QuadraticForm, q: int, c, budget: float = DEFAULT_BUDGET,
           method: str = "crt") -> ExpSumValue:
    """``S_q(c)``.

    ``crt`` multiplies the sums over the prime-power factors of q; ``direct``
    builds one residue histogram modulo q itself.  Both are exact up to
    floating-point rounding of the final phase sum.
    """
    c = _check_vector(F, c)
    if q < 1:
        raise ValueError("q must be positive")
    if method not in ("crt", "direct"):
        raise ValueError(f"unknown method {method!r}")
    if q == 1:
        return ExpSumValue(1.0, 0.0, 1, method)
    if method == "direct":
        work = float(q) ** F.n
        if work > budget:
            raise BudgetExceeded(work, budget, f"expsum q={q}")
        val = _prime_power_sum(F.gram, q, tuple(t % q for t in c))
        return ExpSumValue(val.real, val.imag, q, "direct")
    factors = [p**e for p, e in factorint(q)]
    for pr in factors:
        work = float(pr) ** F.n
        if work > budget:
            raise BudgetExceeded(work, budget, f"expsum factor {pr}")
    val = 1 + 0j
    for pr in factors:
        val *= _prime_power_sum(F.gram, pr, tuple(t % pr for t in c))
    return ExpSumValue(val.real, val.imag, q, "crt")


@lru_cache(maxsize=1024)
def _s_q_zero_exact(gram, pr):
    M = np.array(gram, dtype=np.int64)
    H = _kernels.quad_hist(M, pr)
    return int(np.dot(H, _ramanujan_row(pr)))


def expsum_zero_exact(F: QuadraticForm, q: int, budget: float = DEFAULT_BUDGET) -> int:
    """``S_q(0)`` exactly; it is a rational integer because c_q(v) is."""
    if q == 1:
        return 1
    out = 1
    for p, e in factorint(q):
        pr = p**e
        work = float(pr) ** F.n
        if work > budget:
            raise BudgetExceeded(work, budget, f"S_q(0) factor {pr}")
        out *= _s_q_zero_exact(F.gram, pr)
    return out


def sigma_n_sum(F: QuadraticForm, x: float, c, budget: float = DEFAULT_BUDGET) -> DyadicAverage:
    """``sum_{x/2 < q <= x} |S_q(c)|``."""
    if x < 2:
        raise ValueError("x must be at least 2")
    c = _check_vector(F, c)
    qs = tuple(range(int(math.floor(x / 2)) + 1, int(math.floor(x)) + 1))
    total = math.fsum(abs(expsum(F, q, c, budget).value) for q in qs)
    return DyadicAverage(float(x), c, total, qs)


def _inverse(a, m):
    return pow(a, -1, m)


def exact_prime_power_magnitude(F: QuadraticForm, p: int, r: int, c) -> float:
    """``|S_{p^r}(c)|`` predicted in closed form for an odd prime p not dividing Δ_F.

    With ``m = -(4^{-1}) F*(c) mod p^r`` the magnitude is ``p^{nr/2} |c_{p^r}(m)|``
    when nr is even and ``p^{nr/2} |g_{p^r}(m)|`` otherwise.
    """
    n = F.n
    if p == 2 or F.discriminant % p == 0:
        raise ValueError(f"p={p} divides 2*disc")
    q = p**r
    c = _check_vector(F, c)
    m = (-_inverse(4, q) * dual_form(F)(c)) % q
    scale = p ** (n * r / 2)
    if (n * r) % 2 == 0:
        return scale * abs(ramanujan(q, m))
    return scale * abs(gauss_sum(p, r, m).value)


def standard_bound(F: QuadraticForm, q: int, C: float = 4.0, eps: float = 0.25) -> float:
    """Envelope ``C q^{n/2+1+eps} gcd(q^n, Δ_F)^{1/2}``."""
    g = gcd(q**F.n, abs(F.discriminant))
    return C * q ** (F.n / 2 + 1 + eps) * math.sqrt(g)

