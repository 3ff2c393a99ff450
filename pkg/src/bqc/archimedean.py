"""Weight functions, the tent kernel and real densities of quadric zero sets.

The singular integral is computed as the limit of the smoothed volumes

    sigma_delta(w; F) = integral of w(x) K(-F(x); delta) dx,

with ``K(u; delta) = delta^{-2} (delta - |u|)_+``.  Estimates are Monte Carlo
over all but one coordinate; along the last coordinate F is a quadratic
polynomial and the kernel is integrated exactly between its breakpoints.  The
same samples serve every delta, and the delta -> 0 value comes from linear
extrapolation of the last two levels, evaluated per sample so the reported
standard error is exact.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate

from .errors import NonConvergent, SingularForm
from .forms import BiquadraticForm, QuadraticForm

__all__ = ["WeightFunction", "IntegralEstimate", "MainTerm", "kernel_K", "kernel_K_array",
           "sigma_delta", "sigma_infinity", "sigma_infinity_quadrature",
           "joint_singular_integral", "joint_delta_sumsq_oracle", "predicted_main_term",
           "DEFAULT_SCHEDULE", "smooth_step"]

DEFAULT_SCHEDULE = (0.2, 0.1, 0.05, 0.025)
CHUNK = 2**16


# --- weights -------------------------------------------------------------

def _bump(t):
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    a = _bump(t)
    b = _bump(1.0 - np.asarray(t, dtype=float))
    return a / (a + b)


@dataclass(frozen=True)
class WeightFunction:
    """Radial weight of the sup-norm ``|u|``.

    kinds: ``box`` (indicator of ``|u| <= kappa``), ``annular1`` (0 on |u| <= eta
    and |u| >= 1, 1 on [2 eta, 1 - eta]), ``annular2`` (0 on |u| <= eta and
    |u| >= 1 + eta, 1 on [2 eta, 1]) and ``custom`` (a smooth radial profile
    ``profile(rho)`` supported in ``|u| <= radius``).
    """

    kind: str = "box"
    eta: float = 0.1
    kappa: float = 1.0
    profile: Callable | None = field(default=None, compare=False)
    radius: float = 1.0
    knots: tuple = ()

    def __post_init__(self):
        if self.kind not in ("box", "annular1", "annular2", "custom"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind in ("annular1", "annular2") and not 0 < self.eta < 0.25:
            raise ValueError("eta must lie in (0, 1/4)")
        if self.kind == "box" and self.kappa <= 0:
            raise ValueError("kappa must be positive")
        if self.kind == "custom" and self.profile is None:
            raise ValueError("custom weights need a profile")

    @classmethod
    def box(cls, kappa=1.0):
        return cls("box", kappa=kappa)

    @classmethod
    def annular1(cls, eta):
        return cls("annular1", eta=eta)

    @classmethod
    def annular2(cls, eta):
        return cls("annular2", eta=eta)

    @property
    def support(self) -> float:
        return {"box": self.kappa, "annular1": 1.0, "annular2": 1.0 + self.eta,
                "custom": self.radius}[self.kind]

    def radial(self, rho):
        rho = np.asarray(rho, dtype=float)
        e = self.eta
        if self.kind == "box":
            return (rho <= self.kappa).astype(float)
        if self.kind == "annular1":
            return smooth_step((rho - e) / e) * smooth_step((1.0 - rho) / e)
        if self.kind == "annular2":
            return smooth_step((rho - e) / e) * smooth_step((1.0 + e - rho) / e)
        return np.where(rho <= self.radius, self.profile(rho), 0.0)

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return self.radial(np.max(np.abs(u), axis=-1))

    @property
    def radial_knots(self):
        """Radii where the profile is not smooth or changes regime."""
        e = self.eta
        if self.kind == "box":
            return (self.kappa,)
        if self.kind == "annular1":
            return (e, 2 * e, 1 - e, 1.0)
        if self.kind == "annular2":
            return (e, 2 * e, 1.0, 1 + e)
        return tuple(self.knots) + (self.radius,)


# --- kernel --------------------------------------------------------------

def kernel_K(u, delta):
    """``delta^{-2} (delta - |u|)`` for ``|u| <= delta``, else 0.  Exact on Fractions."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    au = abs(u)
    if au > delta:
        return Fraction(0) if isinstance(u, Fraction) or isinstance(delta, Fraction) else 0.0
    return (delta - au) / (delta * delta)


def kernel_K_array(u, delta):
    u = np.abs(np.asarray(u, dtype=float))
    return np.where(u <= delta, (delta - u) / (delta * delta), 0.0)


# --- exact 1-d integration of the kernel along a line ---------------------

def _roots_in(q2, q1, q0, lo, hi):
    """Real roots of ``q2 t^2 + q1 t + q0`` strictly inside (lo, hi); others -> hi."""
    q2 = np.broadcast_to(np.asarray(q2, float), np.shape(q0))
    q1 = np.broadcast_to(np.asarray(q1, float), np.shape(q0))
    d = q1 * q1 - 4 * q2 * q0
    with np.errstate(all="ignore"):
        sq = np.sqrt(np.where(d >= 0, d, np.nan))
        qq = -0.5 * (q1 + np.where(q1 >= 0, 1.0, -1.0) * sq)
        r1 = np.where(q2 != 0, qq / q2, -q0 / q1)
        r2 = np.where(q2 != 0, q0 / qq, np.nan)
    out = []
    for r in (r1, r2):
        out.append(np.where(np.isfinite(r) & (r > lo) & (r < hi), r, hi))
    return out


def _breakpoints(a, b, c, delta, lo, hi, extra=()):
    pts = [np.full(np.shape(c), lo, float), np.full(np.shape(c), hi, float)]
    for v in (-delta, 0.0, delta):
        pts.extend(_roots_in(a, b, c - v, lo, hi))
    for e in extra:
        pts.append(np.clip(np.broadcast_to(e, np.shape(c)).astype(float), lo, hi))
    return np.sort(np.stack(pts, axis=-1), axis=-1)


def line_kernel_integral(a, b, c, delta, lo, hi):
    """``int_lo^hi K(g(t); delta) dt`` for ``g = a t^2 + b t + c`` (arrays over samples)."""
    P = _breakpoints(a, b, c, delta, lo, hi)
    L, H = P[..., :-1], P[..., 1:]
    a_ = np.asarray(a, float)[..., None] if np.ndim(a) else float(a)
    b_ = np.asarray(b, float)[..., None]
    c_ = np.asarray(c, float)[..., None]
    mid = 0.5 * (L + H)
    gm = a_ * mid * mid + b_ * mid + c_
    active = np.abs(gm) < delta
    s = np.sign(gm)
    piece = delta * (H - L) - s * (a_ * (H**3 - L**3) / 3 + b_ * (H**2 - L**2) / 2 + c_ * (H - L))
    return np.where(active, piece, 0.0).sum(axis=-1) / (delta * delta)


_GL_X, _GL_W = leggauss(8)


def line_kernel_integral_weighted(a, b, c, delta, lo, hi, wfun, extra):
    """``int_lo^hi wfun(t) K(g(t); delta) dt`` with Gauss-Legendre on smooth pieces."""
    P = _breakpoints(a, b, c, delta, lo, hi, extra)
    L, H = P[..., :-1], P[..., 1:]
    half = 0.5 * (H - L)
    mid = 0.5 * (H + L)
    t = mid[..., None] + half[..., None] * _GL_X
    a_ = np.asarray(a, float)[..., None, None] if np.ndim(a) else float(a)
    b_ = np.asarray(b, float)[..., None, None]
    c_ = np.asarray(c, float)[..., None, None]
    g = a_ * t * t + b_ * t + c_
    val = np.maximum(delta - np.abs(g), 0.0) * wfun(t)
    return (val @ _GL_W * half).sum(axis=-1) / (delta * delta)


# --- estimates -----------------------------------------------------------

@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    mc_stderr: float
    delta_schedule: tuple
    samples: int
    seed: int
    levels: tuple = ()
    extrapolation_shift: float = math.nan
    shift_stderr: float = math.nan


@dataclass(frozen=True)
class MainTerm:
    value: float
    uncertainty: float
    sigma_infinity: float
    singular_series: float


def _rng(seed, chunk):
    return np.random.Generator(np.random.Philox(key=int(seed) + (int(chunk) << 64)))


def _check_schedule(schedule):
    schedule = tuple(float(d) for d in schedule)
    if not schedule or any(d <= 0 for d in schedule):
        raise ValueError("delta schedule must be nonempty and positive")
    if any(b >= a for a, b in zip(schedule, schedule[1:])):
        raise ValueError("delta schedule must be strictly decreasing")
    return schedule


def _pick_last(diag):
    return int(np.argmax(np.abs(np.asarray(diag, float))))


class _Accumulator:
    def __init__(self, k):
        self.n = 0
        self.s1 = np.zeros(k)
        self.s2 = np.zeros(k)

    def add(self, vals):
        self.n += vals.shape[1]
        self.s1 += vals.sum(axis=1)
        self.s2 += (vals * vals).sum(axis=1)

    def mean_se(self):
        m = self.s1 / self.n
        var = np.maximum(self.s2 / self.n - m * m, 0.0) * self.n / max(self.n - 1, 1)
        return m, np.sqrt(var / self.n)


def _run(per_chunk, dim, schedule, samples, seed):
    """Drive chunked sampling; ``per_chunk(u)`` returns values of shape (len(schedule), m)."""
    schedule = _check_schedule(schedule)
    if samples < 2:
        raise ValueError("need at least two samples")
    k = len(schedule)
    acc = _Accumulator(k + 2)
    done = 0
    chunk = 0
    while done < samples:
        m = min(CHUNK, samples - done)
        u = _rng(seed, chunk).random((m, dim)) * 2.0 - 1.0
        vals = per_chunk(u)
        rows = [vals]
        rows.append(_extrap(vals, schedule, k - 1)[None])
        rows.append((_extrap(vals, schedule, k - 1) - _extrap(vals, schedule, k - 2))[None])
        acc.add(np.concatenate(rows, axis=0))
        done += m
        chunk += 1
    mean, se = acc.mean_se()
    levels = tuple((schedule[i], float(mean[i]), float(se[i])) for i in range(k))
    value, stderr = float(mean[k]), float(se[k])
    shift, shift_se = (float(mean[k + 1]), float(se[k + 1])) if k >= 3 else (math.nan, math.nan)
    return value, stderr, levels, shift, shift_se, schedule


def _extrap(vals, schedule, i):
    """Linear extrapolation to delta = 0 through levels i-1 and i (level i alone if i == 0)."""
    if i <= 0:
        return vals[max(i, 0)]
    d0, d1 = schedule[i - 1], schedule[i]
    return vals[i] - d1 * (vals[i - 1] - vals[i]) / (d0 - d1)


def _finish(value, stderr, levels, shift, shift_se, schedule, samples, seed, check):
    if check and len(levels) >= 3:
        # compare the last two extrapolants against their combined standard errors
        prev_se = _pair_se(levels, -3, -2)
        last_se = _pair_se(levels, -2, -1)
        combined = math.hypot(prev_se, last_se)
        if abs(shift) > 5 * combined:
            raise NonConvergent(
                f"extrapolants differ by {abs(shift):.3g} > 5 x {combined:.3g}")
    return IntegralEstimate(value, stderr, schedule, samples, seed, levels, shift, shift_se)


def _pair_se(levels, i, j):
    (d0, _, s0), (d1, _, s1) = levels[i], levels[j]
    w = d1 / (d0 - d1)
    return math.hypot((1 + w) * s1, w * s0)


def _quadric_line_coeffs(M, last, u):
    """Split F(x) along coordinate ``last``: F = a t^2 + b t + c with x_other = u."""
    n = M.shape[0]
    other = [i for i in range(n) if i != last]
    Mo = M[np.ix_(other, other)]
    a = float(M[last, last])
    b = 2.0 * (u @ M[other, last])
    c = np.einsum("ij,jk,ik->i", u, Mo, u)
    return a, b, c


def _pilot_coordinate(M, R, delta, seed):
    """Coordinate whose exact line integral gives the smallest pilot variance."""
    n = M.shape[0]
    cands = [i for i in range(n) if M[i, i] != 0] or list(range(n))
    u_all = (_rng(seed, 0).random((4096, n - 1)) * 2.0 - 1.0) * R
    best, best_var = cands[0], math.inf
    for i in cands:
        a, b, c = _quadric_line_coeffs(M, i, u_all)
        var = float(np.var(line_kernel_integral(a, b, c, delta, -R, R)))
        if var < best_var:
            best, best_var = i, var
    return best


def _sigma_levels(F, w, schedule, samples, seed):
    M = np.array(F.gram, dtype=float)
    n = F.n
    R = w.support
    last = _pilot_coordinate(M, R, min(schedule), seed)
    vol = (2 * R) ** (n - 1)
    knots = tuple(k for r in w.radial_knots for k in (r, -r))

    def per_chunk(u):
        u = u * R
        a, b, c = _quadric_line_coeffs(M, last, u)
        out = np.empty((len(schedule), u.shape[0]))
        if w.kind == "box":
            for i, d in enumerate(schedule):
                out[i] = vol * line_kernel_integral(a, b, c, d, -R, R)
        else:
            rad = np.max(np.abs(u), axis=1)

            def wfun(t):
                return w.radial(np.maximum(rad[:, None, None], np.abs(t)))

            extra = knots + (rad, -rad)
            for i, d in enumerate(schedule):
                out[i] = vol * line_kernel_integral_weighted(a, b, c, d, -R, R, wfun, extra)
        return out

    return _run(per_chunk, n - 1, schedule, samples, seed)


def sigma_delta(F: QuadraticForm, w: WeightFunction, delta: float, samples: int = 10**6,
                seed: int = 0) -> tuple:
    """Monte Carlo ``(mean, stderr)`` of the smoothed volume at a single delta."""
    _, _, levels, *_ = _sigma_levels(F, w, (float(delta),), samples, seed)
    return levels[0][1], levels[0][2]


def sigma_infinity(F: QuadraticForm, w: WeightFunction | None = None,
                   delta_schedule=DEFAULT_SCHEDULE, samples: int = 10**6, seed: int = 0,
                   check: bool = True) -> IntegralEstimate:
    """Real density of the zero set of F weighted by w (conditional Monte Carlo)."""
    if F.discriminant == 0:
        raise SingularForm("sigma_infinity needs a nonsingular form")
    w = w or WeightFunction.box()
    res = _sigma_levels(F, w, delta_schedule, samples, seed)
    return _finish(*res, samples, seed, check)


def _joint_line_coeffs(C, last, xs, ys):
    """F(x; y) as a quadratic in y_last with the other coordinates given."""
    n = C.shape[0]
    g = np.einsum("ijkl,si,sj->skl", C, xs, xs)
    g = g + np.transpose(g, (0, 2, 1))  # symmetrised doubled slice 2G
    other = [i for i in range(n) if i != last]
    a = 0.5 * g[:, last, last]
    b = np.einsum("sk,sk->s", g[:, other, last], ys)
    Go = g[:, other][:, :, other]
    c = 0.5 * np.einsum("sk,skl,sl->s", ys, Go, ys)
    return a, b, c


def joint_singular_integral(B: BiquadraticForm, delta_schedule=DEFAULT_SCHEDULE,
                            samples: int = 10**6, seed: int = 0,
                            sample_map: Callable | None = None,
                            check: bool = True) -> IntegralEstimate:
    """Smoothed volume of ``F(x; y) = 0`` in ``[-1, 1]^{2n}`` and its delta -> 0 extrapolation.

    ``sample_map`` (optional) transforms each chunk of raw uniform samples,
    laid out as ``(x, y without its last-integrated coordinate)``.
    """
    n = B.n
    if n < 2:
        raise ValueError("need n >= 2")
    C = np.array(B.tensor, dtype=float)
    weight = np.abs(C).sum(axis=(0, 1))
    last = int(np.argmax(np.diag(weight)))
    vol = 2.0 ** (2 * n - 1)
    schedule = _check_schedule(delta_schedule)

    def per_chunk(u):
        if sample_map is not None:
            u = sample_map(u)
        xs, ys = u[:, :n], u[:, n:]
        a, b, c = _joint_line_coeffs(C, last, xs, ys)
        out = np.empty((len(schedule), u.shape[0]))
        for i, d in enumerate(schedule):
            out[i] = vol * line_kernel_integral(a, b, c, d, -1.0, 1.0)
        return out

    res = _run(per_chunk, 2 * n - 1, schedule, samples, seed)
    return _finish(*res, samples, seed, check)


# --- deterministic oracles -----------------------------------------------

def _antiderivative(al, be, ga, s):
    """An antiderivative of ``1/sqrt(al s^2 + be s + ga)`` valid where the radicand is > 0."""
    u = 2 * al * s + be
    disc = be * be - 4 * al * ga
    rd = np.sqrt(np.abs(disc))
    safe = np.where(rd > 0, rd, 1.0)
    sa = np.sqrt(np.abs(al))
    with np.errstate(all="ignore"):
        v_pos = np.where(
            disc > 0, np.sign(u) * np.arccosh(np.maximum(np.abs(u) / safe, 1.0)),
            np.where(disc < 0, np.arcsinh(u / safe), np.sign(u) * np.log(np.abs(u)))) / sa
        v_neg = -np.arcsin(np.clip(u / safe, -1.0, 1.0)) / sa
        lin = np.where(be != 0, 2 * np.sqrt(np.maximum(be * s + ga, 0.0)) / np.where(be != 0, be, 1.0),
                       s / np.sqrt(np.where(ga > 0, ga, 1.0)))
    return np.where(al > 0, v_pos, np.where(al < 0, v_neg, lin))


def _conic_fiber_density(b1, b0, c2, c1, c0, a, kap):
    """``int_{-kap}^{kap} ds sum_{t: F(s,t)=0, |t|<=kap} 1/|dF/dt|`` per row.

    ``F(s, t) = a t^2 + (b1 s + b0) t + (c2 s^2 + c1 s + c0)`` with a != 0.
    """
    N = len(b0)
    al = np.full(N, b1 * b1 - 4 * a * c2, dtype=float)
    be = 2 * b1 * b0 - 4 * a * c1
    ga = b0 * b0 - 4 * a * c0
    pts = [np.full(N, -kap), np.full(N, kap)]
    pts.extend(_roots_in(al, be, ga, -kap, kap))
    for tv in (kap, -kap):
        pts.extend(_roots_in(np.full(N, float(c2)), c1 + b1 * tv, c0 + b0 * tv + a * tv * tv, -kap, kap))
    P = np.sort(np.stack(pts, 1), 1)
    L, H = P[:, :-1], P[:, 1:]
    m = 0.5 * (L + H)
    alc, bec, gac = al[:, None], be[:, None], ga[:, None]
    D = alc * m * m + bec * m + gac
    bm = b1 * m + b0[:, None]
    with np.errstate(all="ignore"):
        sq = np.sqrt(np.maximum(D, 0))
        tp = (-bm + sq) / (2 * a)
        tm = (-bm - sq) / (2 * a)
    k = ((D > 0) & (np.abs(tp) <= kap)).astype(float) + ((D > 0) & (np.abs(tm) <= kap))
    shape = L.shape
    A, Bb, G = (np.broadcast_to(v, shape) for v in (alc, bec, gac))
    val = k * (_antiderivative(A, Bb, G, H) - _antiderivative(A, Bb, G, L))
    return np.where(k > 0, val, 0.0).sum(1)


def _quadrature(M, m, kap):
    n = len(M)
    h = 2 * kap / m
    g = -kap + h * (np.arange(m) + 0.5)
    X = np.stack(np.meshgrid(*([g] * (n - 2)), indexing="ij"), -1).reshape(-1, n - 2)
    a = M[n - 1, n - 1]
    total = 0.0
    for start in range(0, len(X), 2**14):
        Xc = X[start:start + 2**14]
        Qpp = np.einsum("ki,ij,kj->k", Xc, M[:n - 2, :n - 2], Xc)
        Ls = Xc @ M[:n - 2, n - 2]
        Lt = Xc @ M[:n - 2, n - 1]
        total += _conic_fiber_density(2 * M[n - 2, n - 1], 2 * Lt, M[n - 2, n - 2], 2 * Ls,
                                      Qpp, a, kap).sum()
    return total * h ** (n - 2)


def sigma_infinity_quadrature(F: QuadraticForm, kappa: float = 1.0, m: int = 64) -> tuple:
    """Deterministic ``(value, uncertainty)`` of the box-weighted real density.

    Integrates the delta-function measure directly: midpoint rule over n-2
    coordinates and closed-form integration over the remaining conic.  The
    uncertainty is the change from halving the grid.
    """
    if F.n < 3:
        raise ValueError("quadrature oracle needs n >= 3")
    M = np.array(F.gram, dtype=float)
    last = _pick_last(np.diag(M))
    if M[last, last] == 0:
        raise ValueError("quadrature oracle needs a nonzero diagonal entry")
    order = [i for i in range(F.n) if i != last] + [last]
    M = M[np.ix_(order, order)]
    fine = _quadrature(M, m, kappa)
    coarse = _quadrature(M, m // 2, kappa)
    return fine, abs(fine - coarse)


def joint_delta_sumsq_oracle(n: int, delta: float) -> float:
    """Smoothed volume at level delta for ``F = sum_i x_i^2 y_i^2`` on ``[-1, 1]^{2n}``.

    Uses that u = x y with x, y uniform on [-1, 1] has density ``-2 log|u|``
    (relative to Lebesgue measure), so the 2n-dimensional integral reduces to
    a radial integral in u-space times spherical moments of the log density.
    Valid for ``delta <= 1`` (the ball of radius sqrt(delta) stays in the cube).
    """
    if not 0 < delta <= 1:
        raise ValueError("oracle needs 0 < delta <= 1")
    if n not in (2, 3):
        raise ValueError("oracle implemented for n = 2 and n = 3")
    lb = lambda z: -2.0 * math.log(abs(z)) if z != 0 else 0.0  # noqa: E731
    # I_k: integral over the unit sphere of prod_{i<k} (-2 log|omega_i|)
    if n == 2:
        def sph(k):
            f = lambda th: math.prod(lb(v) for v in (math.cos(th), math.sin(th))[:k])  # noqa: E731
            pts = [math.pi / 2, math.pi, 3 * math.pi / 2]
            return integrate.quad(f, 0, 2 * math.pi, points=pts, limit=400)[0]
    else:
        def sph(k):
            def f(phi, z):
                r = math.sqrt(max(1 - z * z, 0.0))
                om = (z, r * math.cos(phi), r * math.sin(phi))
                return math.prod(lb(v) for v in om[:k])
            inner = lambda z: integrate.quad(  # noqa: E731
                lambda phi: f(phi, z), 0, 2 * math.pi,
                points=[math.pi / 2, math.pi, 3 * math.pi / 2], limit=400)[0]
            return integrate.quad(inner, -1, 1, points=[0.0], limit=400)[0]

    total = 0.0
    rmax = math.sqrt(delta)
    for k in range(n + 1):
        Ik = sph(k)
        radial = integrate.quad(
            lambda r: (delta - r * r) * r ** (n - 1) * (-2 * math.log(r)) ** (n - k),
            0, rmax, limit=200)[0]
        total += math.comb(n, k) * Ik * radial
    return total / delta**2


def predicted_main_term(F: QuadraticForm, w: WeightFunction | None, B: float,
                        sigma: IntegralEstimate | None = None, series=None,
                        samples: int = 10**6, seed: int = 0, q_max: int = 20,
                        p_max: int = 50) -> MainTerm:
    """``sigma_inf(w; F) * singular_series(F) * B^{n-2}`` with propagated uncertainty."""
    if F.n < 5:
        raise ValueError("main term needs n >= 5")
    if sigma is None:
        sigma = sigma_infinity(F, w, samples=samples, seed=seed)
    if series is None:
        from .padic import singular_series
        series = singular_series(F, q_max, p_max)
    prod = sigma.value * series.value
    scale = float(B) ** (F.n - 2)
    unc = math.hypot(series.value * sigma.mc_stderr, sigma.value * series.tail_bound)
    return MainTerm(prod * scale, unc * scale, sigma.value, series.value)
