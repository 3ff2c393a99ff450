"""Small number-theoretic helpers shared by the analytic modules."""
from functools import lru_cache
from math import gcd

import numpy as np
from sympy import factorint as _factorint, integer_nthroot

__all__ = ["factorint", "prime_powers", "is_prime", "primes_upto", "mobius_table",
           "mobius", "totient", "valuation", "iroot", "vec_gcd", "legendre_table",
           "kappa"]


@lru_cache(maxsize=4096)
def _factor_cached(n):
    return tuple(sorted(_factorint(n).items()))


def factorint(n):
    """Return ``[(p, e), ...]`` with ``n = prod p**e``, primes ascending."""
    if n < 1:
        raise ValueError("factorint needs a positive integer")
    return list(_factor_cached(n))


def prime_powers(n):
    return [p**e for p, e in factorint(n)]


def is_prime(n):
    return n >= 2 and factorint(n) == [(n, 1)]


def primes_upto(n):
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, int(n**0.5) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return [int(p) for p in np.flatnonzero(sieve)]


@lru_cache(maxsize=32)
def _mobius_table(n):
    mu = np.ones(n + 1, dtype=np.int64)
    mu[0] = 0
    for p in primes_upto(n):
        mu[p::p] *= -1
        mu[p * p::p * p] = 0
    mu.setflags(write=False)
    return mu


def mobius_table(n):
    """Array ``mu`` with ``mu[k]`` the Möbius function for ``0 <= k <= n``."""
    return _mobius_table(max(int(n), 1))


def mobius(n):
    f = factorint(n)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def totient(n):
    out = n
    for p, _ in factorint(n):
        out = out // p * (p - 1)
    return out


def valuation(a, p):
    """p-adic valuation of a nonzero integer (``None`` for zero)."""
    if a == 0:
        return None
    v = 0
    while a % p == 0:
        a //= p
        v += 1
    return v


def iroot(x, k):
    """Largest integer r >= 0 with r**k <= x."""
    if x < 0:
        raise ValueError("iroot of a negative number")
    return int(integer_nthroot(int(x), int(k))[0])


def vec_gcd(v):
    g = 0
    for t in v:
        g = gcd(g, int(t))
    return g


@lru_cache(maxsize=256)
def legendre_table(p):
    """``tab[a]`` is the Legendre symbol (a/p) for an odd prime p."""
    tab = np.full(p, -1, dtype=np.int64)
    tab[0] = 0
    tab[(np.arange(1, p, dtype=np.int64) ** 2) % p] = 1
    tab.setflags(write=False)
    return tab


def kappa(n):
    """Parity indicator: 0 for even n, 1 for odd n."""
    return n % 2
