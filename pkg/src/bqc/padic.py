"""Solution counts modulo prime powers, local densities and singular series.

Local densities are computed exactly.  At primes not dividing ``2Δ_F`` the count
``N_r = #{x mod p^r : F(x) = 0}`` obeys a two-step recursion in r, so the limit
is a closed-form rational.  At the remaining primes the primitive solutions are
organised into residue classes that are refined until Hensel's lemma applies;
once every class is settled the density is again an exact rational.  For odd p
the same counts also follow from a diagonalisation over the p-adic integers and
quadratic Gauss sums, which costs nothing like p^n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from . import _kernels
from .arith import factorint, is_prime, legendre_table, primes_upto, valuation
from .errors import BudgetExceeded, NotStabilized, SingularForm
from .expsums import DEFAULT_BUDGET, _ramanujan_row, expsum_zero_exact
from .forms import BiquadraticForm, QuadraticForm, bareiss_det

__all__ = ["LocalCount", "DensityEstimate", "count_mod", "local_density",
           "singular_series", "joint_singular_series", "is_good_prime"]


@dataclass(frozen=True)
class LocalCount:
    p: int
    r: int
    count: int
    method: str = "tree"


@dataclass(frozen=True)
class DensityEstimate:
    """A density with a bound on its truncation error and a record of how it was made."""

    value: float
    tail_bound: float
    route: str
    params: dict = field(default_factory=dict, compare=False)
    exact: Fraction | None = None
    alternatives: tuple = field(default=(), compare=False)


def is_good_prime(F: QuadraticForm, p: int) -> bool:
    return p != 2 and F.discriminant % p != 0


# --- counting mod p ------------------------------------------------------

def _diagonalize_mod_p(M, p):
    """Diagonal entries (nonzero ones) of a form congruent to M over F_p, p odd."""
    a = [[v % p for v in row] for row in M]
    n = len(a)
    diag = []
    active = list(range(n))
    while active:
        piv = next((i for i in active if a[i][i] % p), None)
        if piv is None:
            pair = next(((i, j) for i in active for j in active if i < j and a[i][j] % p), None)
            if pair is None:
                break
            i, j = pair
            # e_i -> e_i + e_j makes the (i, i) entry 2 a_ij, a unit
            for k in range(n):
                a[i][k] = (a[i][k] + a[j][k]) % p
            for k in range(n):
                a[k][i] = (a[k][i] + a[k][j]) % p
            piv = i
        d = a[piv][piv]
        inv = pow(d, -1, p)
        diag.append(d)
        active.remove(piv)
        for i in active:
            f = a[i][piv] * inv % p
            if f:
                for k in range(n):
                    a[i][k] = (a[i][k] - f * a[piv][k]) % p
                for k in range(n):
                    a[k][i] = (a[k][i] - f * a[k][piv]) % p
    return diag


def _zeros_mod_p(M, p):
    """#{x mod p : x^T M x = 0} for odd p, from the rank and discriminant over F_p."""
    n = len(M)
    diag = _diagonalize_mod_p(M, p)
    m = len(diag)
    if m == 0:
        nondeg = 1
    elif m % 2:
        nondeg = p ** (m - 1)
    else:
        d = math.prod(diag) * (-1) ** (m // 2)
        chi = int(legendre_table(p)[d % p])
        nondeg = p ** (m - 1) + chi * (p - 1) * p ** (m // 2 - 1)
    return p ** (n - m) * nondeg


def _nullspace_mod_p(M, p):
    """Basis of {x mod p : M x = 0}."""
    n = len(M)
    a = [[v % p for v in row] for row in M]
    pivots = []
    row = 0
    for col in range(n):
        piv = next((i for i in range(row, n) if a[i][col]), None)
        if piv is None:
            continue
        a[row], a[piv] = a[piv], a[row]
        inv = pow(a[row][col], -1, p)
        a[row] = [v * inv % p for v in a[row]]
        for i in range(n):
            if i != row and a[i][col]:
                f = a[i][col]
                a[i] = [(v - f * w) % p for v, w in zip(a[i], a[row])]
        pivots.append(col)
        row += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [0] * n
        v[fc] = 1
        for r_i, pc in enumerate(pivots):
            v[pc] = (-a[r_i][fc]) % p
        basis.append(v)
    return basis


def _brute_count(F, q):
    M = F.matrix
    if q == 1:
        return 1
    return int(_kernels.quad_hist(M, q)[0])


def _diagonalize_p_adic(gram, p, prec):
    """Diagonal ``[(k_i, w_i mod p)]`` with F equivalent to ``sum p^{k_i} w_i x_i^2`` mod p^prec.

    p must be odd.  Entries that vanish mod p^prec are reported with k = prec.
    """
    mod = p**prec
    n = len(gram)
    a = [[v % mod for v in row] for row in gram]
    out = []
    active = list(range(n))
    while active:
        best = None
        for i in active:
            for j in active:
                if a[i][j] and (j >= i):
                    v = valuation(a[i][j], p)
                    key = (v, i != j)
                    if best is None or key < best[0]:
                        best = (key, i, j)
        if best is None:
            out.extend((prec, 0) for _ in active)
            break
        (k, off), i, j = best
        if off:
            # e_i -> e_i + e_j: the new (i, i) entry 2 a_ij + a_ii + a_jj has valuation k
            for c in range(n):
                a[i][c] = (a[i][c] + a[j][c]) % mod
            for c in range(n):
                a[c][i] = (a[c][i] + a[c][j]) % mod
        d = a[i][i]
        unit = (d // p**k) % mod
        inv = pow(unit, -1, mod)
        out.append((k, unit % p))
        active.remove(i)
        for r in active:
            f = (a[r][i] // p**k) * inv % mod
            if f:
                for c in range(n):
                    a[r][c] = (a[r][c] - f * a[i][c]) % mod
                for c in range(n):
                    a[c][r] = (a[c][r] - f * a[c][i]) % mod
    return out


def _gauss_count(gram, p, r):
    """``#{x mod p^r : F(x) = 0}`` for odd p via ``p^{-r} sum_t prod_i g(t c_i; p^r)``."""
    if r == 0:
        return 1
    n = len(gram)
    disc = bareiss_det(gram)
    prec = r + (valuation(disc, p) if disc else r) + 1
    diag = _diagonalize_p_adic(gram, p, prec)
    leg = legendre_table(p)
    minus_one = int(leg[p - 1])
    total = p ** (r * n)  # t = 0
    for s in range(r):
        power = 0
        odd = 0
        sign = 1
        for k, w in diag:
            v = s + k
            if v >= r:
                power += r
                continue
            m = r - v
            power += v + m // 2
            if m % 2:
                odd += 1
                sign *= int(leg[w])
        if odd % 2:
            continue
        # (eps_p sqrt p)^odd = (-1/p)^{odd/2} p^{odd/2}
        sign *= minus_one ** (odd // 2)
        phi = p ** (r - s) - p ** (r - s - 1)
        total += phi * sign * p ** (power + odd // 2)
    q, rem = divmod(total, p**r)
    if rem:
        raise ArithmeticError("Gauss-sum count is not an integer")
    return q


@dataclass
class _Tree:
    """Primitive solution classes of F mod powers of p, refined until settled.

    ``settled`` holds (k, e, mult): classes mod p^k with v_p(2 M x) = e < k and
    F(x) = 0 mod p^{k+e}; each lifts to p^{(r-k-e)(n-1)+en} solutions mod p^r.
    ``dead`` holds (k, v, mult): classes whose lifts stop being solutions beyond
    p^v.  ``open_`` maps a level to the number of unsettled classes there.
    """

    settled: list
    dead: list
    open_: dict
    depth: int


def _vp_vec(vals, p, cap):
    out = np.full(len(vals), cap, dtype=np.int64)
    cur = vals.copy()
    for k in range(cap):
        nz = (cur % p) != 0
        hit = nz & (out == cap)
        out[hit] = k
        cur = cur // p
    return out


def _build_tree(F: QuadraticForm, p: int, r_stop: int, budget: float) -> _Tree:
    n = F.n
    M = F.matrix
    scale = F.height * n * n
    if float(p) ** (2 * r_stop) * scale * 4 > _kernels.INT64_SAFE:
        raise BudgetExceeded(float(p) ** (2 * r_stop), _kernels.INT64_SAFE / (4 * scale),
                             "class tree exceeds int64 range")
    settled, dead, open_ = [], [], {}
    if p == 2 or n > 8:
        pts = np.array([x for x in product(range(p), repeat=n) if any(x)], dtype=np.int64)
        if float(p) ** n > budget:
            raise BudgetExceeded(float(p) ** n, budget, "level-1 classes")
        vals = np.einsum("ij,jk,ik->i", pts, M, pts)
        level = pts[vals % p == 0]
    else:
        # non-kernel zeros mod p settle at once (2 M x is a unit vector mod p)
        basis = _nullspace_mod_p(F.gram, p)
        kdim = len(basis)
        z1 = _zeros_mod_p(F.gram, p)
        non_kernel = z1 - p**kdim
        if non_kernel:
            settled.append((1, 0, non_kernel))
        if kdim:
            B = np.array(basis, dtype=np.int64)
            coeffs = np.array([c for c in product(range(p), repeat=kdim) if any(c)], dtype=np.int64)
            level = (coeffs @ B) % p
        else:
            level = np.zeros((0, n), dtype=np.int64)
    k = 1
    work = 0.0
    while len(level):
        mod = p**k
        vals = np.einsum("ij,jk,ik->i", level, M, level)
        grads = 2 * (level @ M)
        e = np.min(_vp_vec(np.abs(grads).ravel(), p, k).reshape(grads.shape), axis=1)
        vval = _vp_vec(np.abs(vals), p, 2 * k + 1)
        low = e < k
        for ev in np.unique(e[low]):
            ev = int(ev)
            sel = low & (e == ev)
            ok = sel & (vval >= k + ev)
            if ok.any():
                settled.append((k, ev, int(ok.sum())))
            for vv, cnt in zip(*np.unique(vval[sel & ~ok], return_counts=True)):
                dead.append((k, int(vv), int(cnt)))
        rest = level[~low]
        if not len(rest):
            break
        if k >= r_stop:
            open_[k] = len(rest)
            break
        work += len(rest) * float(p) ** n
        if work > budget:
            raise BudgetExceeded(work, budget, f"class tree at p={p}")
        steps = np.array(list(product(range(p), repeat=n)), dtype=np.int64) * mod
        kids = (rest[:, None, :] + steps[None, :, :]).reshape(-1, n)
        kv = np.einsum("ij,jk,ik->i", kids, M, kids)
        level = kids[kv % (mod * p) == 0]
        k += 1
    return _Tree(settled, dead, open_, k)


def _tree_count(tree: _Tree, p: int, n: int, r: int) -> int:
    total = 0
    for k, e, mult in tree.settled:
        if r < k:
            continue
        if r < k + e:
            total += mult * p ** ((r - k) * n)
        else:
            total += mult * p ** ((r - k - e) * (n - 1) + e * n)
    for k, v, mult in tree.dead:
        if k <= r <= v:
            total += mult * p ** ((r - k) * n)
    total += tree.open_.get(r, 0)
    return total


@lru_cache(maxsize=2048)
def _count_cached(gram, p, r, method, budget):
    F = QuadraticForm(gram)
    n = F.n
    if r == 0:
        return 1
    if method == "brute":
        return _brute_count(F, p**r)
    if method == "gauss":
        return _gauss_count(gram, p, r)
    if method == "recursion":
        n1 = _zeros_mod_p(F.gram, p)
        if r == 1:
            return n1
        prev = 1 if r == 2 else _count_cached(gram, p, r - 2, method, budget)
        return p ** ((r - 1) * (n - 1)) * (n1 - 1) + p**n * prev
    tree = _build_tree(F, p, r, budget)
    prim = _tree_count(tree, p, n, r)
    rest = 1 if r == 1 else p**n * _count_cached(gram, p, r - 2, method, budget)
    return prim + rest


def count_mod(F: QuadraticForm, p: int, r: int, method: str = "auto",
              budget: float = DEFAULT_BUDGET) -> LocalCount:
    """``#{x mod p^r : F(x) = 0 mod p^r}`` exactly.

    ``method``: ``brute`` (full enumeration), ``recursion`` (good primes only),
    ``tree`` (Hensel refinement of primitive classes), ``gauss`` (p-adic
    diagonalisation and Gauss sums, odd p), or ``auto``.
    """
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if r < 0:
        raise ValueError("r must be nonnegative")
    if method == "auto":
        method = "recursion" if is_good_prime(F, p) else ("tree" if p == 2 else "gauss")
    if method == "recursion" and not is_good_prime(F, p):
        raise ValueError(f"the recursion needs p not dividing 2*disc (p={p})")
    if method == "brute" and float(p) ** (r * F.n) > budget:
        raise BudgetExceeded(float(p) ** (r * F.n), budget, f"brute count mod {p}^{r}")
    if method == "gauss" and p == 2:
        raise ValueError("the Gauss-sum count needs an odd prime")
    if method not in ("brute", "recursion", "tree", "gauss"):
        raise ValueError(f"unknown method {method!r}")
    return LocalCount(p, r, _count_cached(F.gram, p, r, method, float(budget)), method)


def local_density(F: QuadraticForm, p: int, r_max: int | None = 6,
                  budget: float = DEFAULT_BUDGET) -> DensityEstimate:
    """``sigma_p = lim p^{-r(n-1)} N_r`` as an exact rational.

    At bad primes every primitive class must settle by level ``r_max``;
    otherwise :class:`NotStabilized` is raised.  ``r_max=None`` uses the level
    that always suffices, ``v_p(2 disc) + 1``.
    """
    if F.discriminant == 0:
        raise SingularForm("local density needs a nonsingular form")
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    n = F.n
    if n < 3:
        raise ValueError("the local density limit needs n >= 3")
    needed = valuation(2 * F.discriminant, p) + 1
    if is_good_prime(F, p):
        n1 = _zeros_mod_p(F.gram, p)
        prim = Fraction(n1 - 1, p ** (n - 1))
        route, depth = "recursion", 1
    elif p != 2 and r_max is None:
        # primitive counts p^{-r(n-1)} P_r are constant once r > 2 v_p(disc)
        r0 = 2 * valuation(F.discriminant, p) + 1
        ratios = []
        for r in (r0, r0 + 1):
            prim_r = _gauss_count(F.gram, p, r) - p**n * _gauss_count(F.gram, p, r - 2)
            ratios.append(Fraction(prim_r, p ** (r * (n - 1))))
        if ratios[0] != ratios[1]:
            raise NotStabilized(f"p={p}: primitive densities differ at levels {r0}, {r0 + 1}")
        prim = ratios[0]
        route, depth = "gauss", r0
    else:
        limit = needed if r_max is None else r_max
        tree = _build_tree(F, p, limit, budget)
        if tree.open_:
            raise NotStabilized(
                f"p={p}: {sum(tree.open_.values())} classes unsettled at level {limit}")
        prim = sum((Fraction(mult * p**e, p ** (k * (n - 1))) for k, e, mult in tree.settled),
                   Fraction(0))
        route, depth = "class_tree", tree.depth
    sigma = prim / (1 - Fraction(1, p ** (n - 2)))
    return DensityEstimate(float(sigma), 0.0, "brute_mod",
                           {"p": p, "method": route, "depth": depth}, exact=sigma)


def _bad_primes(F):
    return [p for p, _ in factorint(2 * abs(F.discriminant))]


def singular_series(F: QuadraticForm, q_max: int, p_max: int, C: float = 4.0,
                    eps: float = 0.25, budget: float = DEFAULT_BUDGET) -> DensityEstimate:
    """Singular series by an Euler product and by the q-series, with tail bounds.

    The returned estimate is the Euler product over p <= p_max; the q-series
    partial sum over q <= q_max is attached under ``alternatives``.
    """
    n = F.n
    if n < 5:
        raise ValueError("the singular series is only absolutely convergent for n >= 5")
    if F.discriminant == 0:
        raise SingularForm("singular series needs a nonsingular form")
    disc = abs(F.discriminant)

    exact = Fraction(1)
    for p in primes_upto(p_max):
        exact *= local_density(F, p, r_max=None, budget=budget).exact
    s = n / 2 - 1
    r0, step = (2, 2) if n % 2 else (1, 1)
    # good primes: |sigma_p - 1| <= sum_r p^{r(1-n/2)} over r with nr even
    t_good = hurwitz_zeta(r0 * s, p_max + 1) / (1 - (p_max + 1) ** (-step * s))
    t_bad = 0.0
    x_exp = 1 + eps - n / 2
    for p in _bad_primes(F):
        if p > p_max:
            x = p**x_exp
            t_bad += C * math.sqrt(p ** valuation(disc, p)) * x / (1 - x)
    T = float(t_good) + t_bad
    value = float(exact)
    euler = DensityEstimate(value, value * math.expm1(T), "euler_product",
                            {"p_max": p_max, "C": C, "eps": eps}, exact=exact)

    partial = Fraction(0)
    for q in range(1, q_max + 1):
        partial += Fraction(expsum_zero_exact(F, q, budget), q**n)
    tail_q = C * math.sqrt(disc) * float(hurwitz_zeta(n / 2 - 1 - eps, q_max + 1))
    qser = DensityEstimate(float(partial), tail_q, "q_series",
                           {"q_max": q_max, "C": C, "eps": eps}, exact=partial)
    return DensityEstimate(euler.value, euler.tail_bound, euler.route, euler.params,
                           exact=exact, alternatives=(qser,))


@lru_cache(maxsize=256)
def _joint_term(coeffs, n, q):
    Bq = BiquadraticForm(n, coeffs)
    H = _kernels.biquad_hist(np.ascontiguousarray(Bq.tensor), q)
    return Fraction(int(np.dot(H, _ramanujan_row(q))), q ** (2 * n))


def joint_singular_series(B: BiquadraticForm, q_max: int,
                          budget: float = DEFAULT_BUDGET) -> DensityEstimate:
    """Partial sum over q <= q_max of ``q^{-2n} sum_a sum_{x,y mod q} e(a F(x;y)/q)``.

    No tail bound is known, so ``tail_bound`` is infinite; the size of the last
    term is reported in ``params['last_term']`` as a heuristic.
    """
    n = B.n
    if q_max < 1:
        raise ValueError("q_max must be positive")
    for q in range(2, q_max + 1):
        if float(q) ** (2 * n) > budget:
            raise BudgetExceeded(float(q) ** (2 * n), budget, f"joint series term q={q}")
    total = Fraction(1)
    last = Fraction(1)
    for q in range(2, q_max + 1):
        last = _joint_term(B.coeffs, n, q)
        total += last
    return DensityEstimate(float(total), math.inf, "q_series",
                           {"q_max": q_max, "last_term": abs(float(last))}, exact=total)
