"""Exact lattice-point counts on quadrics and on zero sets of biquadratic forms.

Heights use the sup-norm ``|x|``.  On the biquadratic side a pair (x, y) lies
in the open set when both slice determinants are nonzero; the height condition
``|x|^{n-2} |y|^{n-2} <= B`` is the integer condition ``|x| |y| <= R`` with
``R = floor(B^{1/(n-2)})``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product
from math import gcd

import numpy as np

from . import _kernels
from .arith import iroot, mobius_table, vec_gcd
from .archimedean import WeightFunction
from .errors import BudgetExceeded
from .forms import BiquadraticForm, QuadraticForm, bareiss_det

__all__ = ["CountRecord", "HeightParams", "count_quadric_box", "quadric_shell_counts",
           "count_quadric_weighted", "count_Nx", "count_A", "count_tilde",
           "count_exceptional", "count_NU", "mobius_M", "dyadic_cell_counts",
           "thin_set_count", "zeta_series", "peyre_constant", "peyre_prediction",
           "PeyrePrediction", "DEFAULT_COUNT_BUDGET"]

DEFAULT_COUNT_BUDGET = 1e11


@dataclass(frozen=True)
class CountRecord:
    form_id: str
    params: dict
    method: str
    count: int | float
    elapsed: float = field(default=0.0, compare=False)

    def row(self, with_time=True):
        out = {"form_id": self.form_id, **self.params, "method": self.method, "count": self.count}
        if with_time:
            out["seconds"] = round(self.elapsed, 6)
        return out


@dataclass(frozen=True)
class HeightParams:
    """Anticanonical height ``H(x, y) = |x|^{n-2} |y|^{n-2}`` with bound B."""

    n: int
    bound: float

    @property
    def exponent(self) -> int:
        return self.n - 2

    @property
    def radius(self) -> int:
        """Largest integer R with ``R^{n-2} <= B``; pairs need ``|x| |y| <= R``."""
        if self.n < 3:
            raise ValueError("height needs n >= 3")
        return iroot(math.floor(self.bound), self.n - 2)

    def admits(self, hx: int, hy: int) -> bool:
        return (hx * hy) ** (self.n - 2) <= self.bound

    @staticmethod
    def u(X: float, Y: float) -> float:
        """Ratio ``log X / log Y`` describing a box's shape."""
        return math.log(X) / math.log(Y)


# --- quadrics ------------------------------------------------------------

def _slice_order(M):
    """Permutation putting a nonzero diagonal entry first (helps the fiber solver)."""
    n = len(M)
    diag = [i for i in range(n) if M[i][i] != 0]
    if not diag:
        return list(range(n))
    first = diag[0]
    rest = [i for i in range(n) if i != first]
    # prefer a second coordinate that makes the fiber discriminant concave
    best = next((j for j in rest if M[first][j] ** 2 - M[first][first] * M[j][j] < 0), rest[0] if rest else None)
    if best is None:
        return [first]
    return [first, best] + [i for i in rest if i != best]


def _int64_guard(F, B):
    need = 4.0 * F.n**4 * float(max(F.height, 1)) ** 2 * float(max(B, 1)) ** 2
    if need > _kernels.INT64_SAFE:
        raise BudgetExceeded(need, _kernels.INT64_SAFE, "int64 range of the enumerator")


@lru_cache(maxsize=256)
def _shells(gram, B, method):
    F = QuadraticForm(gram)
    if method == "naive":
        return _kernels.naive_shells(F.matrix, B)
    order = _slice_order(gram)
    M = np.ascontiguousarray(F.matrix[np.ix_(order, order)])
    return _kernels.slice_shells(M, B)


def quadric_shell_counts(F: QuadraticForm, B: int, method: str = "slice",
                         budget: float = DEFAULT_COUNT_BUDGET) -> np.ndarray:
    """``h[r] = #{x : |x| = r, F(x) = 0}`` for ``0 <= r <= B`` (read-only array)."""
    B = int(B)
    if B < 0:
        raise ValueError("B must be nonnegative")
    if method not in ("naive", "slice"):
        raise ValueError(f"unknown method {method!r}")
    if method == "slice" and F.n < 3:
        raise ValueError("the slice method needs n >= 3")
    work = float(2 * B + 1) ** (F.n if method == "naive" else F.n - 1)
    if work > budget:
        raise BudgetExceeded(work, budget, f"{method} count at B={B}")
    _int64_guard(F, B)
    h = _shells(F.gram, B, method)
    h.setflags(write=False)
    return h


def count_quadric_box(F: QuadraticForm, B: int, method: str = "slice",
                      budget: float = DEFAULT_COUNT_BUDGET) -> CountRecord:
    """``#{x in Z^n : |x| <= B, F(x) = 0}``."""
    t0 = time.perf_counter()
    total = int(quadric_shell_counts(F, B, method, budget).sum())
    return CountRecord(F.form_id, {"B": int(B)}, method, total, time.perf_counter() - t0)


def _box_cutoff(kappa, B):
    return math.floor(Fraction(str(kappa)) * B)


def count_quadric_weighted(F: QuadraticForm, w: WeightFunction, B: int, method: str = "slice",
                           budget: float = DEFAULT_COUNT_BUDGET) -> CountRecord:
    """``sum over integer zeros of w(x / B)``, evaluated shell by shell."""
    t0 = time.perf_counter()
    if w.kind == "box":
        top = _box_cutoff(w.kappa, B)
        total = int(quadric_shell_counts(F, top, method, budget).sum()) if top >= 0 else 0
    else:
        top = math.floor(w.support * B)
        h = quadric_shell_counts(F, top, method, budget)
        r = np.arange(top + 1)
        total = math.fsum(h * w.radial(r / B))
    return CountRecord(F.form_id, {"B": int(B), "weight": w.kind, "eta": w.eta}, method,
                       total, time.perf_counter() - t0)


# --- biquadratic helpers --------------------------------------------------

def _sup(v):
    return int(np.max(np.abs(v))) if len(v) else 0


def _doubled(Bq, v, side):
    return _kernels.doubled_slice(np.ascontiguousarray(Bq.tensor), np.asarray(v, np.int64), side)


def _dets_nonzero(Bq, V, side):
    """Boolean mask: slice determinant at each row of V is nonzero (exact)."""
    if len(V) == 0:
        return np.zeros(0, dtype=bool)
    n = Bq.n
    E = 2.0 * sum(abs(c) for _, c in Bq.coeffs) * float(_sup(V)) ** 2
    safe = (math.sqrt(n) * max(E, 1.0)) ** (2 * n) < _kernels.INT64_SAFE
    C = np.ascontiguousarray(Bq.tensor)
    out = np.empty(len(V), dtype=bool)
    for i, v in enumerate(V):
        G = _kernels.doubled_slice(C, v, side)
        d = _kernels.det_int64(G) if safe else bareiss_det(G.tolist())
        out[i] = d != 0
    return out


def _box_vectors(n, X):
    """All integer vectors with |v| <= X as an (m, n) int64 array."""
    g = np.arange(-X, X + 1, dtype=np.int64)
    return np.stack(np.meshgrid(*([g] * n), indexing="ij"), -1).reshape(-1, n)


def _slice_zeros(Bq, v, side, Y):
    """Integer zeros w, |w| <= Y, of the slice of Bq at v."""
    G = QuadraticForm(_doubled(Bq, v, side).tolist())
    if Bq.n >= 3:
        _int64_guard(G, Y)
        order = _slice_order(G.gram)
        inv = np.argsort(order)
        pts = _kernels.slice_points(np.ascontiguousarray(G.matrix[np.ix_(order, order)]), Y)
        return pts[:, inv]
    W = _box_vectors(Bq.n, Y)
    return W[np.einsum("ij,jk,ik->i", W, G.matrix, W) == 0]


def count_Nx(Bq: BiquadraticForm, x, Y: int, budget: float = DEFAULT_COUNT_BUDGET) -> CountRecord:
    """``#{y : |y| <= Y, F(x; y) = 0}`` from the doubled integral slice."""
    t0 = time.perf_counter()
    G = QuadraticForm(_doubled(Bq, x, 0).tolist())
    method = "slice" if Bq.n >= 3 else "naive"
    c = int(quadric_shell_counts(G, Y, method, budget).sum())
    return CountRecord(Bq.form_id, {"x": tuple(int(t) for t in x), "Y": int(Y)}, method, c,
                       time.perf_counter() - t0)


def _x_in_A1(Bq, X):
    V = _box_vectors(Bq.n, X)
    return V[_dets_nonzero(Bq, V, 0)]


def count_tilde(Bq: BiquadraticForm, X: int, Y: int,
                budget: float = DEFAULT_COUNT_BUDGET) -> CountRecord:
    """Pairs with ``|x| <= X``, ``|y| <= Y``, F = 0 and ``det F_x != 0``."""
    t0 = time.perf_counter()
    total = 0
    cache = {}
    for x in _x_in_A1(Bq, X):
        key = _doubled(Bq, x, 0).tobytes()
        if key not in cache:
            cache[key] = count_Nx(Bq, x, Y, budget).count
        total += cache[key]
    return CountRecord(Bq.form_id, {"X": X, "Y": Y}, "slice", total, time.perf_counter() - t0)


def count_A(Bq: BiquadraticForm, X: int, Y: int,
            budget: float = DEFAULT_COUNT_BUDGET) -> CountRecord:
    """Pairs with ``|x| <= X``, ``|y| <= Y``, F = 0 and both slice determinants nonzero."""
    t0 = time.perf_counter()
    total = 0
    cache = {}
    for x in _x_in_A1(Bq, X):
        key = _doubled(Bq, x, 0).tobytes()
        if key not in cache:
            ys = _slice_zeros(Bq, x, 0, Y)
            cache[key] = int(_dets_nonzero(Bq, ys, 1).sum())
        total += cache[key]
    return CountRecord(Bq.form_id, {"X": X, "Y": Y}, "slice", total, time.perf_counter() - t0)


def _diagonal_coeffs(Bq):
    if not Bq.is_z_diagonal():
        return None
    d = Bq.coeff_dict
    return [d.get((i, i, i, i), 0) for i in range(Bq.n)]


def count_exceptional(Bq: BiquadraticForm, X: int, Y: int,
                      budget: float = DEFAULT_COUNT_BUDGET) -> CountRecord:
    """``count_tilde - count_A``: pairs with ``det F_x != 0`` but ``det F_y = 0``.

    For ``F = sum a_i x_i^2 y_i^2`` the condition on y is that some coordinate
    vanishes, and the count follows by inclusion-exclusion over the vanishing
    coordinates, each term a count on a smaller diagonal quadric.
    """
    t0 = time.perf_counter()
    a = _diagonal_coeffs(Bq)
    if a is None:
        val = count_tilde(Bq, X, Y, budget).count - count_A(Bq, X, Y, budget).count
        return CountRecord(Bq.form_id, {"X": X, "Y": Y}, "difference", val,
                           time.perf_counter() - t0)
    n = Bq.n
    if any(c == 0 for c in a):
        return CountRecord(Bq.form_id, {"X": X, "Y": Y}, "diagonal", 0, time.perf_counter() - t0)
    total = 0
    for absx in product(range(1, X + 1), repeat=n):
        coef = [a[i] * absx[i] ** 2 for i in range(n)]
        sub = 0
        for size in range(1, n + 1):
            for S in combinations(range(n), size):
                keep = [coef[i] for i in range(n) if i not in S]
                sub += (-1) ** (size + 1) * _diag_count(tuple(keep), Y, budget)
        total += 2**n * sub
    return CountRecord(Bq.form_id, {"X": X, "Y": Y}, "diagonal", total, time.perf_counter() - t0)


@lru_cache(maxsize=4096)
def _diag_count(coef, Y, budget):
    m = len(coef)
    if m == 0:
        return 1
    G = QuadraticForm.diagonal(coef)
    return int(quadric_shell_counts(G, Y, "slice" if m >= 3 else "naive", budget).sum())


# --- pairs of bounded height ---------------------------------------------

@lru_cache(maxsize=64)
def _pair_list(coeffs, n, R):
    """All (x, y) in the open set with F = 0 and ``|x| |y| <= R`` (generic scan)."""
    Bq = BiquadraticForm(n, coeffs)
    s = math.isqrt(R)
    xs_out, ys_out = [], []
    for x in _x_in_A1(Bq, s):
        hx = _sup(x)
        if hx == 0:
            continue
        ys = _slice_zeros(Bq, x, 0, R // hx)
        ys = ys[_dets_nonzero(Bq, ys, 1)]
        xs_out.append(np.broadcast_to(x, ys.shape))
        ys_out.append(ys)
    V = _box_vectors(n, s)
    for y in V[_dets_nonzero(Bq, V, 1)]:
        hy = _sup(y)
        if hy == 0 or R // hy <= s:
            continue
        xs = _slice_zeros(Bq, y, 1, R // hy)
        xs = xs[np.max(np.abs(xs), axis=1) > s] if len(xs) else xs
        xs = xs[_dets_nonzero(Bq, xs, 0)]
        xs_out.append(xs)
        ys_out.append(np.broadcast_to(y, xs.shape))
    if not xs_out:
        empty = np.zeros((0, n), np.int64)
        return empty, empty
    return np.concatenate(xs_out), np.concatenate(ys_out)


def _canonical(v):
    nz = v[v != 0]
    return len(nz) > 0 and nz[0] > 0


@lru_cache(maxsize=32)
def _diagonal_heights(a, R):
    return _kernels.diagonal_pair_heights(np.array(a, dtype=np.int64), R)


def _check_pair_budget(n, R, budget, diagonal):
    work = float(R) ** (n - 1) if diagonal else float(2 * math.isqrt(R) + 1) ** n * float(2 * R + 1) ** (n - 1)
    if work > budget:
        raise BudgetExceeded(work, budget, f"pair enumeration at R={R}")


def _M_from_heights(heights_cum, Rp):
    return int(heights_cum[min(Rp, len(heights_cum) - 1)]) if Rp >= 1 else 0


def mobius_M(Bq: BiquadraticForm, R: float, method: str = "auto",
             budget: float = DEFAULT_COUNT_BUDGET) -> CountRecord:
    """``#{(x, y) in the open set : |x| |y| <= R, F(x; y) = 0}`` (no primitivity)."""
    t0 = time.perf_counter()
    Rf = math.floor(R)
    if Rf < 1:
        return CountRecord(Bq.form_id, {"R": R}, "trivial", 0, time.perf_counter() - t0)
    a = _diagonal_coeffs(Bq)
    use_diag = a is not None and method in ("auto", "diagonal")
    _check_pair_budget(Bq.n, Rf, budget, use_diag)
    if use_diag:
        if any(c == 0 for c in a):
            val = 0
        else:
            all_h, _ = _diagonal_heights(tuple(a), Rf)
            val = 4**Bq.n * int(all_h.sum())
        m = "diagonal"
    else:
        xs, ys = _pair_list(Bq.coeffs, Bq.n, Rf)
        val = len(xs)
        m = "scan"
    return CountRecord(Bq.form_id, {"R": R}, m, val, time.perf_counter() - t0)


def count_NU(Bq: BiquadraticForm, height_bound: float, route: str = "direct",
             canonical: bool = True, method: str = "auto",
             budget: float = DEFAULT_COUNT_BUDGET) -> CountRecord:
    """Points of height at most B on the open set, counted modulo the sign action.

    ``direct``: primitive pairs with first nonzero coordinates positive.
    ``mobius``: ``(1/4) sum mu(k1) mu(k2) M(R / (k1 k2))``.
    ``canonical=False`` (direct only) counts all primitive sign representatives.
    """
    t0 = time.perf_counter()
    n = Bq.n
    R = HeightParams(n, height_bound).radius
    params = {"B": height_bound, "R": R}
    if R < 1:
        return CountRecord(Bq.form_id, params, route, 0, time.perf_counter() - t0)
    a = _diagonal_coeffs(Bq)
    use_diag = a is not None and method in ("auto", "diagonal")
    _check_pair_budget(n, R, budget, use_diag)
    if use_diag and any(c == 0 for c in a):
        return CountRecord(Bq.form_id, params, route, 0, time.perf_counter() - t0)
    if use_diag:
        all_h, prim_h = _diagonal_heights(tuple(a), R)
        cum = np.cumsum(all_h) * 4**n
        if route == "direct":
            val = int(prim_h.sum()) * (4 ** (n - 1) if canonical else 4**n)
        tag = "diagonal"
    else:
        xs, ys = _pair_list(Bq.coeffs, n, R)
        h = np.max(np.abs(xs), axis=1) * np.max(np.abs(ys), axis=1) if len(xs) else np.zeros(0, int)
        cum = np.cumsum(np.bincount(h, minlength=R + 1)) if len(h) else np.zeros(R + 1, int)
        if route == "direct":
            val = 0
            for x, y in zip(xs, ys):
                if vec_gcd(x) != 1 or vec_gcd(y) != 1:
                    continue
                if canonical and not (_canonical(x) and _canonical(y)):
                    continue
                val += 1
        tag = "scan"
    if route == "mobius":
        if not canonical:
            raise ValueError("the Mobius route always counts modulo signs")
        mu = mobius_table(R)
        acc = 0
        for k1 in range(1, R + 1):
            if mu[k1] == 0:
                continue
            for k2 in range(1, R // k1 + 1):
                if mu[k2]:
                    acc += int(mu[k1] * mu[k2]) * _M_from_heights(cum, R // (k1 * k2))
        if acc % 4:
            raise ArithmeticError("Mobius sum is not divisible by 4")
        val = acc // 4
    elif route != "direct":
        raise ValueError(f"unknown route {route!r}")
    return CountRecord(Bq.form_id, params, f"{route}/{tag}", val, time.perf_counter() - t0)


def dyadic_cell_counts(Bq: BiquadraticForm, R: int, xi: float = 0.5) -> dict:
    """Counts of the open-set pairs with ``|x| |y| <= R`` split into (1+xi)-adic cells.

    Cell (i, j) holds pairs with ``(1+xi)^i <= |x| < (1+xi)^{i+1}`` and likewise
    for y with j.  Computed per x from the radial shells of the y-slice.
    """
    R = int(R)
    out = {}
    base = 1.0 + xi

    def cell(v):
        i = 0
        while base ** (i + 1) <= v:
            i += 1
        return i

    for x in _x_in_A1(Bq, R):
        hx = _sup(x)
        if hx == 0:
            continue
        ys = _slice_zeros(Bq, x, 0, R // hx)
        ys = ys[_dets_nonzero(Bq, ys, 1)]
        if not len(ys):
            continue
        shells = np.bincount(np.max(np.abs(ys), axis=1), minlength=R // hx + 1)
        ci = cell(hx)
        for r in range(1, len(shells)):
            if shells[r]:
                key = (ci, cell(r))
                out[key] = out.get(key, 0) + int(shells[r])
    return out


# --- thin set ------------------------------------------------------------

def thin_set_count(n: int, height_bound: float, method: str = "mobius",
                   budget: float = DEFAULT_COUNT_BUDGET) -> CountRecord:
    """Points of ``sum x_i^2 y_i^2 = 0`` with ``x_1 = 0`` and ``y = (1, 0, ..., 0)``.

    Modulo signs these are the primitive ``(x_2, ..., x_n)`` with
    ``|x|^{n-2} <= B``, counted up to ``x -> -x``.
    """
    t0 = time.perf_counter()
    X = HeightParams(n, height_bound).radius
    m = n - 1
    if method == "mobius":
        mu = mobius_table(max(X, 1))
        prim = sum(int(mu[k]) * ((2 * (X // k) + 1) ** m - 1) for k in range(1, X + 1))
    elif method == "enumerate":
        work = float(2 * X + 1) ** m
        if work > budget:
            raise BudgetExceeded(work, budget, "thin-set enumeration")
        V = _box_vectors(m, X)
        g = np.gcd.reduce(np.abs(V), axis=1)
        prim = int((g == 1).sum())
    else:
        raise ValueError(f"unknown method {method!r}")
    return CountRecord(f"thin{n}", {"B": height_bound, "R": X}, method, prim // 2,
                       time.perf_counter() - t0)


# --- Peyre-type constant ---------------------------------------------------

def zeta_series(s: float, tol: float = 1e-12) -> float:
    """Riemann zeta for real s > 1: partial sum plus an Euler-Maclaurin tail."""
    if s <= 1:
        raise ValueError("zeta series needs s > 1")
    N = 64
    while True:
        head = math.fsum(k ** (-s) for k in range(1, N))
        # tail sum_{k >= N} k^{-s}
        tail = N ** (1 - s) / (s - 1) + 0.5 * N ** (-s) + s * N ** (-s - 1) / 12 \
            - s * (s + 1) * (s + 2) * N ** (-s - 3) / 720
        err = s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * N ** (-s - 5) / 30240
        if err < tol * 0.01:
            return head + tail
        N *= 2


@dataclass(frozen=True)
class PeyrePrediction:
    value: float
    uncertainty: float
    joint_series: float
    joint_integral: float
    zeta: float


def peyre_constant(series: float, integral: float, n: int) -> float:
    """``series * integral / (4 zeta(n-2)^2)``; zero when n = 3 since zeta(1) diverges."""
    if n < 3:
        raise ValueError("needs n >= 3")
    if n == 3:
        return 0.0
    z = zeta_series(n - 2)
    return series * integral / (4 * z * z)


def peyre_prediction(Bq: BiquadraticForm, q_max: int, mc_params: dict | None = None,
                     series=None, integral=None) -> PeyrePrediction:
    """Leading constant c in ``N_U(B) ~ c B log B`` from the joint series and integral."""
    from .archimedean import joint_singular_integral
    from .padic import joint_singular_series
    n = Bq.n
    if series is None:
        series = joint_singular_series(Bq, q_max)
    if integral is None:
        integral = joint_singular_integral(Bq, **(mc_params or {}))
    S = series.value
    T = integral.value
    z = zeta_series(n - 2) if n > 3 else math.inf
    val = peyre_constant(S, T, n)
    heuristic = series.params.get("last_term", 0.0)
    unc = 0.0 if n == 3 else math.hypot(S * integral.mc_stderr, T * heuristic) / (4 * z * z)
    return PeyrePrediction(val, unc, S, T, z)
