"""Slow, obviously-correct reference computations used only by the tests."""
import cmath
import math
from fractions import Fraction
from itertools import product


def laplace_det(A):
    n = len(A)
    if n == 0:
        return 1
    if n == 1:
        return A[0][0]
    return sum((-1) ** j * A[0][j] * laplace_det([row[:j] + row[j + 1:] for row in A[1:]])
               for j in range(n) if A[0][j])


def qf(M, x):
    n = len(M)
    return sum(M[i][j] * x[i] * x[j] for i in range(n) for j in range(n))


def count_box(M, B):
    n = len(M)
    return sum(1 for x in product(range(-B, B + 1), repeat=n) if qf(M, x) == 0)


def count_mod(M, q):
    n = len(M)
    return sum(1 for x in product(range(q), repeat=n) if qf(M, x) % q == 0)


def e(x):
    return cmath.exp(2j * math.pi * x)


def expsum(M, q, c):
    n = len(M)
    total = 0j
    for a in range(1, q + 1):
        if math.gcd(a, q) != 1:
            continue
        for b in product(range(q), repeat=n):
            total += e(Fraction(a * qf(M, b) + sum(bi * ci for bi, ci in zip(b, c)), q) % 1)
    return total


def ramanujan(q, m):
    return sum(e(Fraction(a * m, q) % 1) for a in range(1, q + 1) if math.gcd(a, q) == 1)


def biq(coeffs, x, y):
    return sum(c * x[i] * x[j] * y[k] * y[l] for (i, j, k, l), c in coeffs)


def joint_series_term(coeffs, n, q):
    """``q^{-2n} sum_{(a,q)=1} sum_{x,y mod q} e(a F(x;y) / q)`` by direct loops."""
    hist = [0] * q
    for x in product(range(q), repeat=n):
        for y in product(range(q), repeat=n):
            hist[biq(coeffs, x, y) % q] += 1
    total = sum(h * ramanujan(q, v) for v, h in enumerate(hist))
    return total.real / q ** (2 * n)


def slice_gram(coeffs, n, v, side):
    """Rational Gram matrix of y -> F(v; y) (side 0) or x -> F(x; v) (side 1)."""
    G = [[Fraction(0)] * n for _ in range(n)]
    for (i, j, k, l), c in coeffs:
        if side == 0:
            w, (r, s) = c * v[i] * v[j], (k, l)
        else:
            w, (r, s) = c * v[k] * v[l], (i, j)
        if r == s:
            G[r][r] += w
        else:
            G[r][s] += Fraction(w, 2)
            G[s][r] += Fraction(w, 2)
    return G


def frac_det(A):
    n = len(A)
    if n == 0:
        return Fraction(1)
    return sum((-1) ** j * A[0][j] * frac_det([row[:j] + row[j + 1:] for row in A[1:]])
               for j in range(n) if A[0][j])


def sup(v):
    return max((abs(t) for t in v), default=0)


def canonical(v):
    nz = [t for t in v if t]
    return bool(nz) and nz[0] > 0


def open_pairs(coeffs, n, R):
    """All (x, y) with |x||y| <= R, F = 0 and both slice determinants nonzero."""
    out = []
    dets = {}

    def det(v, side):
        key = (tuple(v), side)
        if key not in dets:
            dets[key] = frac_det(slice_gram(coeffs, n, v, side))
        return dets[key]

    for x in product(range(-R, R + 1), repeat=n):
        hx = sup(x)
        if hx == 0 or det(x, 0) == 0:
            continue
        Y = R // hx
        for y in product(range(-Y, Y + 1), repeat=n):
            if sup(y) and biq(coeffs, x, y) == 0 and det(y, 1) != 0:
                out.append((x, y))
    return out


def nu_count(coeffs, n, R, canonical_only=True):
    total = 0
    for x, y in open_pairs(coeffs, n, R):
        if math.gcd(*x) != 1 or math.gcd(*y) != 1:
            continue
        if canonical_only and not (canonical(x) and canonical(y)):
            continue
        total += 1
    return total
