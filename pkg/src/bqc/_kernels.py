"""Compiled inner loops (numba).  All arithmetic is int64; callers guard ranges."""
import math

import numba as nb
import numpy as np

INT64_SAFE = 2**62


@nb.njit(cache=True)
def isqrt64(d):
    s = np.int64(math.sqrt(float(d)))
    while s * s > d:
        s -= 1
    while (s + 1) * (s + 1) <= d:
        s += 1
    return s


@nb.njit(cache=True)
def _fiber(a, bh, cc, B, out):
    """Integer roots |t| <= B of ``a t^2 + 2 bh t + cc``.

    Writes up to two roots into ``out`` and returns how many; returns -1 when
    the polynomial vanishes identically (every t is a root).
    """
    if a != 0:
        d4 = bh * bh - a * cc
        if d4 < 0:
            return 0
        s = isqrt64(d4)
        if s * s != d4:
            return 0
        k = 0
        num = -bh + s
        if num % a == 0:
            t = num // a
            if abs(t) <= B:
                out[k] = t
                k += 1
        if s != 0:
            num = -bh - s
            if num % a == 0:
                t = num // a
                if abs(t) <= B:
                    out[k] = t
                    k += 1
        return k
    if bh != 0:
        if cc % (2 * bh) == 0:
            t = -cc // (2 * bh)
            if abs(t) <= B:
                out[0] = t
                return 1
        return 0
    if cc == 0:
        return -1
    return 0


@nb.njit(cache=True)
def _x1_range(M, L0, L1, Q, B):
    """Range of the second coordinate where the fiber discriminant can be >= 0."""
    a = M[0, 0]
    lo = -B
    hi = B
    if a == 0:
        return lo, hi
    m01 = M[0, 1]
    m11 = M[1, 1]
    A2 = m01 * m01 - a * m11
    A1 = 2 * m01 * L0 - 2 * a * L1
    A0 = L0 * L0 - a * Q
    if A2 < 0:
        disc = float(A1) * A1 - 4.0 * A2 * A0
        if disc < 0:
            return 1, 0
        r = math.sqrt(disc)
        r1 = (-A1 + r) / (2.0 * A2)
        r2 = (-A1 - r) / (2.0 * A2)
        lo2 = math.floor(min(r1, r2)) - 1
        hi2 = math.ceil(max(r1, r2)) + 1
        if lo2 > lo:
            lo = lo2
        if hi2 < hi:
            hi = hi2
    return lo, hi


@nb.njit(cache=True)
def slice_shells(M, B):
    """``h[r]`` = #{x : |x|_inf = r, x^T M x = 0}, r <= B.  Requires n >= 2."""
    n = M.shape[0]
    hist = np.zeros(B + 1, np.int64)
    outer = np.full(n - 2, -B, np.int64)
    x = np.zeros(n, np.int64)
    roots = np.zeros(2, np.int64)
    a = M[0, 0]
    while True:
        orad = 0
        for i in range(n - 2):
            x[i + 2] = outer[i]
            if abs(outer[i]) > orad:
                orad = abs(outer[i])
        L0 = 0
        L1 = 0
        Q = 0
        for i in range(2, n):
            L0 += M[0, i] * x[i]
            L1 += M[1, i] * x[i]
            for j in range(2, n):
                Q += M[i, j] * x[i] * x[j]
        lo, hi = _x1_range(M, L0, L1, Q, B)
        A2 = M[0, 1] * M[0, 1] - a * M[1, 1]
        A1 = 2 * M[0, 1] * L0 - 2 * a * L1
        A0 = L0 * L0 - a * Q
        for x1 in range(lo, hi + 1):
            if a != 0:
                # quick rejection: fiber discriminant negative or not a square
                d4 = (A2 * x1 + A1) * x1 + A0
                if d4 < 0:
                    continue
                sq = isqrt64(d4)
                if sq * sq != d4:
                    continue
            bh = M[0, 1] * x1 + L0
            cc = (M[1, 1] * x1 + 2 * L1) * x1 + Q
            rad1 = max(orad, abs(x1))
            k = _fiber(a, bh, cc, B, roots)
            if k < 0:
                for t in range(-B, B + 1):
                    hist[max(rad1, abs(t))] += 1
            else:
                for j in range(k):
                    hist[max(rad1, abs(roots[j]))] += 1
        k = n - 3
        while k >= 0:
            outer[k] += 1
            if outer[k] <= B:
                break
            outer[k] = -B
            k -= 1
        if k < 0:
            break
    return hist


@nb.njit(cache=True)
def slice_points(M, B):
    """All x with |x|_inf <= B and x^T M x = 0, one per row."""
    n = M.shape[0]
    cap = 1024
    pts = np.zeros((cap, n), np.int64)
    cnt = 0
    outer = np.full(n - 2, -B, np.int64)
    x = np.zeros(n, np.int64)
    roots = np.zeros(2, np.int64)
    a = M[0, 0]
    while True:
        for i in range(n - 2):
            x[i + 2] = outer[i]
        L0 = 0
        L1 = 0
        Q = 0
        for i in range(2, n):
            L0 += M[0, i] * x[i]
            L1 += M[1, i] * x[i]
            for j in range(2, n):
                Q += M[i, j] * x[i] * x[j]
        lo, hi = _x1_range(M, L0, L1, Q, B)
        A2 = M[0, 1] * M[0, 1] - a * M[1, 1]
        A1 = 2 * M[0, 1] * L0 - 2 * a * L1
        A0 = L0 * L0 - a * Q
        for x1 in range(lo, hi + 1):
            if a != 0:
                d4 = (A2 * x1 + A1) * x1 + A0
                if d4 < 0:
                    continue
                sq = isqrt64(d4)
                if sq * sq != d4:
                    continue
            bh = M[0, 1] * x1 + L0
            cc = (M[1, 1] * x1 + 2 * L1) * x1 + Q
            k = _fiber(a, bh, cc, B, roots)
            every = k < 0
            if every:
                k = 2 * B + 1
            if cnt + k > cap:
                while cnt + k > cap:
                    cap *= 2
                bigger = np.zeros((cap, n), np.int64)
                bigger[:cnt] = pts[:cnt]
                pts = bigger
            x[1] = x1
            for j in range(k):
                x[0] = -B + j if every else roots[j]
                pts[cnt] = x
                cnt += 1
        k = n - 3
        while k >= 0:
            outer[k] += 1
            if outer[k] <= B:
                break
            outer[k] = -B
            k -= 1
        if k < 0:
            break
    return pts[:cnt]


@nb.njit(cache=True)
def naive_shells(M, B):
    """Reference enumeration over the whole box; same output as slice_shells."""
    n = M.shape[0]
    hist = np.zeros(B + 1, np.int64)
    x = np.full(n, -B, np.int64)
    while True:
        v = 0
        r = 0
        for i in range(n):
            if abs(x[i]) > r:
                r = abs(x[i])
            for j in range(n):
                v += M[i, j] * x[i] * x[j]
        if v == 0:
            hist[r] += 1
        k = n - 1
        while k >= 0:
            x[k] += 1
            if x[k] <= B:
                break
            x[k] = -B
            k -= 1
        if k < 0:
            break
    return hist


@nb.njit(cache=True)
def det_int64(A):
    """Bareiss determinant in int64.  Caller guarantees no overflow."""
    n = A.shape[0]
    a = A.copy()
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k, k] == 0:
            sw = -1
            for i in range(k + 1, n):
                if a[i, k] != 0:
                    sw = i
                    break
            if sw < 0:
                return 0
            for j in range(n):
                t = a[k, j]
                a[k, j] = a[sw, j]
                a[sw, j] = t
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i, j] = (a[i, j] * a[k, k] - a[i, k] * a[k, j]) // prev
        prev = a[k, k]
    return sign * a[n - 1, n - 1]


@nb.njit(cache=True)
def doubled_slice(C, v, side):
    """Integer matrix 2G of the slice at v (side 0: fix x, side 1: fix y)."""
    n = C.shape[0]
    g = np.zeros((n, n), np.int64)
    for i in range(n):
        for j in range(i, n):
            for k in range(n):
                for l in range(k, n):
                    c = C[i, j, k, l]
                    if c == 0:
                        continue
                    if side == 0:
                        g[k, l] += c * v[i] * v[j]
                    else:
                        g[i, j] += c * v[k] * v[l]
    out = np.zeros((n, n), np.int64)
    for a in range(n):
        for b in range(a, n):
            if a == b:
                out[a, a] = 2 * g[a, a]
            else:
                out[a, b] = g[a, b]
                out[b, a] = g[a, b]
    return out


@nb.njit(cache=True)
def quad_hist(M, q):
    """``H[v]`` = #{b mod q : b^T M b = v mod q}."""
    n = M.shape[0]
    H = np.zeros(q, np.int64)
    a = M[n - 1, n - 1] % q
    a2 = (2 * a) % q
    b = np.zeros(n, np.int64)
    while True:
        Q = 0
        L = 0
        for i in range(n - 1):
            L += 2 * M[i, n - 1] * b[i]
            for j in range(n - 1):
                Q += M[i, j] * b[i] * b[j]
        Q %= q
        L %= q
        v = Q
        step = (L + a) % q
        # v(t+1) - v(t) = L + a(2t+1)
        for t in range(q):
            H[v] += 1
            v += step
            if v >= q:
                v -= q
            step += a2
            if step >= q:
                step -= q
        k = n - 2
        while k >= 0:
            b[k] += 1
            if b[k] < q:
                break
            b[k] = 0
            k -= 1
        if k < 0:
            break
    return H


@nb.njit(cache=True)
def joint_hist(M, c, q):
    """``H[v, w]`` = #{b mod q : b^T M b = v, b.c = w mod q}."""
    n = M.shape[0]
    H = np.zeros((q, q), np.int64)
    a = M[n - 1, n - 1] % q
    a2 = (2 * a) % q
    cn = c[n - 1] % q
    b = np.zeros(n, np.int64)
    while True:
        Q = 0
        L = 0
        w = 0
        for i in range(n - 1):
            L += 2 * M[i, n - 1] * b[i]
            w += c[i] * b[i]
            for j in range(n - 1):
                Q += M[i, j] * b[i] * b[j]
        v = Q % q
        w %= q
        step = (L + a) % q
        for t in range(q):
            H[v, w] += 1
            # all three stay in [0, q), so one conditional subtraction reduces them
            v += step
            if v >= q:
                v -= q
            step += a2
            if step >= q:
                step -= q
            w += cn
            if w >= q:
                w -= q
        k = n - 2
        while k >= 0:
            b[k] += 1
            if b[k] < q:
                break
            b[k] = 0
            k -= 1
        if k < 0:
            break
    return H


@nb.njit(cache=True)
def biquad_hist(C, q):
    """``H[v]`` = #{(x, y) mod q : F(x; y) = v mod q}."""
    n = C.shape[0]
    H = np.zeros(q, np.int64)
    x = np.zeros(n, np.int64)
    y = np.zeros(n, np.int64)
    g = np.zeros((n, n), np.int64)
    while True:
        for k in range(n):
            for l in range(n):
                g[k, l] = 0
        for i in range(n):
            for j in range(i, n):
                xx = x[i] * x[j]
                for k in range(n):
                    for l in range(k, n):
                        g[k, l] += C[i, j, k, l] * xx
        for k in range(n):
            for l in range(k, n):
                g[k, l] %= q
        for k in range(n):
            y[k] = 0
        while True:
            v = 0
            for k in range(n):
                for l in range(k, n):
                    v += g[k, l] * y[k] * y[l]
            H[v % q] += 1
            k = n - 1
            while k >= 0:
                y[k] += 1
                if y[k] < q:
                    break
                y[k] = 0
                k -= 1
            if k < 0:
                break
        k = n - 1
        while k >= 0:
            x[k] += 1
            if x[k] < q:
                break
            x[k] = 0
            k -= 1
        if k < 0:
            break
    return H


@nb.njit(cache=True)
def _gcd(a, b):
    a = abs(a)
    b = abs(b)
    while b:
        a, b = b, a % b
    return a


@nb.njit(cache=True)
def _divisors(z):
    out = np.zeros(256, np.int64)
    k = 0
    d = 1
    while d * d <= z:
        if z % d == 0:
            out[k] = d
            k += 1
            if d * d != z:
                out[k] = z // d
                k += 1
        d += 1
    return out[:k]


@nb.njit(cache=True)
def diagonal_pair_heights(a, R):
    """Pair heights for ``F = sum a_i x_i^2 y_i^2`` with every x_i, y_i nonzero.

    Enumerates positive z with ``sum a_i z_i^2 = 0`` (z_i = |x_i y_i|) and every
    factorisation ``z_i = d_i e_i``.  Returns ``(all_h, prim_h)``: histograms over
    h = max(d) max(e) <= R of all such absolute-value patterns and of those with
    gcd(d) = gcd(e) = 1.
    """
    n = a.shape[0]
    all_h = np.zeros(R + 1, np.int64)
    prim_h = np.zeros(R + 1, np.int64)
    z = np.ones(n, np.int64)
    an = a[n - 1]
    while True:
        s = 0
        for i in range(n - 1):
            s += a[i] * z[i] * z[i]
        ok = False
        if s % an == 0 and -s // an > 0:
            zz = -s // an
            r = isqrt64(zz)
            if r * r == zz and r <= R:
                z[n - 1] = r
                ok = True
        if ok:
            divs = []
            for i in range(n):
                divs.append(_divisors(z[i]))
            idx = np.zeros(n, np.int64)
            while True:
                md = 0
                me = 0
                for i in range(n):
                    d = divs[i][idx[i]]
                    md = max(md, d)
                    me = max(me, z[i] // d)
                h = md * me
                if h <= R:
                    all_h[h] += 1
                    gd = 0
                    ge = 0
                    for i in range(n):
                        d = divs[i][idx[i]]
                        gd = _gcd(gd, d)
                        ge = _gcd(ge, z[i] // d)
                    if gd == 1 and ge == 1:
                        prim_h[h] += 1
                k = n - 1
                while k >= 0:
                    idx[k] += 1
                    if idx[k] < divs[k].shape[0]:
                        break
                    idx[k] = 0
                    k -= 1
                if k < 0:
                    break
        k = n - 2
        while k >= 0:
            z[k] += 1
            if z[k] <= R:
                break
            z[k] = 1
            k -= 1
        if k < 0:
            break
    return all_h, prim_h
