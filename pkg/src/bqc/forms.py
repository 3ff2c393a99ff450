"""Integral quadratic and biquadratic forms with exact invariants.

Quadratic forms follow the convention ``F(x) = x^T M x`` with ``M`` an integer
symmetric matrix.  A biquadratic form is stored as the integer coefficients of
the monomials ``x_i x_j y_k y_l`` with ``i <= j`` and ``k <= l``; its slices
``F_x`` (a quadratic form in ``y``) may have half-integral Gram entries, so they
are kept as exact :class:`fractions.Fraction` matrices.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from .errors import NotOnHypersurface, SchemaError, SingularForm

__all__ = [
    "QuadraticForm", "DualForm", "BiquadraticForm", "SliceForm",
    "bareiss_det", "adjugate", "discriminant", "height", "dual_form",
    "slice_x", "slice_y", "in_Z", "form_to_json", "form_from_json",
    "load_form", "save_form",
]


def bareiss_det(A):
    """Exact determinant of a square integer matrix by fraction-free elimination."""
    a = [[int(v) for v in row] for row in A]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i, row_k = a[i], a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
        prev = akk
    return sign * a[n - 1][n - 1]


def _minor(A, i, j):
    return [row[:j] + row[j + 1:] for r, row in enumerate(A) if r != i]


def adjugate(A):
    """Exact integer adjugate (transposed cofactor matrix); defined for singular A too."""
    a = [[int(v) for v in row] for row in A]
    n = len(a)
    if n == 1:
        return ((1,),)
    cof = [[(-1) ** (i + j) * bareiss_det(_minor(a, i, j)) for j in range(n)]
           for i in range(n)]
    return tuple(tuple(cof[j][i] for j in range(n)) for i in range(n))


def _matmul(A, B):
    return tuple(tuple(sum(A[i][k] * B[k][j] for k in range(len(B)))
                       for j in range(len(B[0]))) for i in range(len(A)))


@dataclass(frozen=True)
class QuadraticForm:
    """``F(x) = x^T M x`` with ``M`` integral and symmetric."""

    gram: tuple

    def __post_init__(self):
        rows = tuple(tuple(int(v) for v in row) for row in self.gram)
        n = len(rows)
        if n < 1 or any(len(r) != n for r in rows):
            raise SchemaError("gram must be a non-empty square matrix")
        for i in range(n):
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise SchemaError(
                        f"gram[{i}][{j}]={rows[i][j]} differs from gram[{j}][{i}]={rows[j][i]}")
        object.__setattr__(self, "gram", rows)

    @classmethod
    def diagonal(cls, diag):
        n = len(diag)
        return cls(tuple(tuple(int(diag[i]) if i == j else 0 for j in range(n))
                         for i in range(n)))

    @property
    def n(self):
        return len(self.gram)

    @cached_property
    def discriminant(self):
        return bareiss_det(self.gram)

    @cached_property
    def height(self):
        return max(abs(v) for row in self.gram for v in row)

    @property
    def is_nonsingular(self):
        return self.discriminant != 0

    @cached_property
    def matrix(self):
        """Read-only ``int64`` copy of the Gram matrix for the numeric kernels."""
        m = np.array(self.gram, dtype=np.int64)
        m.setflags(write=False)
        return m

    def __call__(self, x):
        x = [int(t) for t in x]
        if len(x) != self.n:
            raise ValueError(f"expected a vector of length {self.n}")
        return sum(self.gram[i][j] * x[i] * x[j]
                   for i in range(self.n) for j in range(self.n))

    def dual(self):
        return dual_form(self)

    def permuted(self, perm):
        """The form ``x -> F(x o perm)``, i.e. variables relabelled by ``perm``."""
        return QuadraticForm(tuple(tuple(self.gram[perm[i]][perm[j]] for j in range(self.n))
                                   for i in range(self.n)))

    @property
    def form_id(self):
        h = hashlib.sha1(json.dumps(self.gram).encode()).hexdigest()[:8]
        return f"q{self.n}-{h}"


@dataclass(frozen=True)
class DualForm:
    base: QuadraticForm
    mstar: tuple

    @property
    def n(self):
        return self.base.n

    def __call__(self, c):
        c = [int(t) for t in c]
        return sum(self.mstar[i][j] * c[i] * c[j]
                   for i in range(self.n) for j in range(self.n))

    def as_form(self):
        return QuadraticForm(self.mstar)


def discriminant(F):
    return F.discriminant


def height(F):
    return F.height


def dual_form(F):
    """The form with matrix ``adj(M) = Δ_F M^{-1}``."""
    if F.discriminant == 0:
        raise SingularForm("dual form needs a nonsingular quadratic form")
    return DualForm(F, adjugate(F.gram))


@dataclass(frozen=True)
class SliceForm:
    """A quadratic form with Gram entries in ``(1/2)Z``; ``det`` is exact."""

    n: int
    gram: tuple
    det: Fraction

    def __call__(self, v):
        v = [int(t) for t in v]
        return sum(self.gram[i][j] * v[i] * v[j]
                   for i in range(self.n) for j in range(self.n))

    @cached_property
    def doubled(self):
        """The integral form with Gram matrix ``2G``; same zero set as this slice."""
        return QuadraticForm(tuple(tuple(int(2 * g) for g in row) for row in self.gram))


def _pairs(n):
    return list(combinations_with_replacement(range(n), 2))


@dataclass(frozen=True)
class BiquadraticForm:
    """Bidegree (2,2) form ``F(x;y) = sum c[i,j,k,l] x_i x_j y_k y_l`` (0-based, i<=j, k<=l)."""

    n: int
    coeffs: tuple

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise SchemaError("n must be positive")
        items = dict(self.coeffs) if not isinstance(self.coeffs, dict) else self.coeffs
        clean = {}
        for key, c in items.items():
            i, j, k, l = (int(t) for t in key)
            if not (0 <= i <= j < n and 0 <= k <= l < n):
                raise SchemaError(f"bad coefficient index {(i, j, k, l)} for n={n}")
            if int(c) != c:
                raise SchemaError(f"coefficient at {(i, j, k, l)} is not an integer")
            if c:
                clean[(i, j, k, l)] = clean.get((i, j, k, l), 0) + int(c)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "coeffs", tuple(sorted((k, v) for k, v in clean.items() if v)))

    @classmethod
    def from_dict(cls, n, coeffs):
        return cls(n, tuple(coeffs.items()))

    @classmethod
    def diagonal(cls, a):
        """``sum a_i x_i^2 y_i^2``."""
        return cls(len(a), tuple(((i, i, i, i), int(v)) for i, v in enumerate(a) if v))

    @cached_property
    def coeff_dict(self):
        return dict(self.coeffs)

    @cached_property
    def tensor(self):
        """Dense ``int64`` array ``C[i, j, k, l]`` (zero unless i<=j, k<=l)."""
        t = np.zeros((self.n,) * 4, dtype=np.int64)
        for (i, j, k, l), c in self.coeffs:
            t[i, j, k, l] = c
        t.setflags(write=False)
        return t

    @property
    def coeff_height(self):
        return max((abs(c) for _, c in self.coeffs), default=0)

    def __call__(self, x, y):
        x = [int(t) for t in x]
        y = [int(t) for t in y]
        return sum(c * x[i] * x[j] * y[k] * y[l] for (i, j, k, l), c in self.coeffs)

    def transpose(self):
        """Swap the roles of x and y."""
        return BiquadraticForm(self.n, tuple(((k, l, i, j), c) for (i, j, k, l), c in self.coeffs))

    def is_z_diagonal(self):
        """True when ``F = sum a_i x_i^2 y_i^2``."""
        return all(i == j == k == l for (i, j, k, l), _ in self.coeffs)

    @property
    def form_id(self):
        h = hashlib.sha1(json.dumps(self.coeffs).encode()).hexdigest()[:8]
        return f"b{self.n}-{h}"


def _slice(B, v, side):
    n = B.n
    v = [int(t) for t in v]
    if len(v) != n:
        raise ValueError(f"expected a vector of length {n}")
    g = [[0] * n for _ in range(n)]
    for (i, j, k, l), c in B.coeffs:
        if side == "x":
            g[k][l] += c * v[i] * v[j]
        else:
            g[i][j] += c * v[k] * v[l]
    gram = tuple(tuple(Fraction(g[a][a]) if a == b else Fraction(g[min(a, b)][max(a, b)], 2)
                       for b in range(n)) for a in range(n))
    doubled = [[int(2 * e) for e in row] for row in gram]
    det = Fraction(bareiss_det(doubled), 2**n)
    return SliceForm(n, gram, det)


def slice_x(B, x):
    """``F_x``: the quadratic form in y obtained by fixing x."""
    return _slice(B, x, "x")


def slice_y(B, y):
    """``F_y``: the quadratic form in x obtained by fixing y."""
    return _slice(B, y, "y")


def in_Z(B, x, y):
    """Whether the point (x, y) of the hypersurface lies on ``det(F_x) det(F_y) = 0``."""
    if B(x, y) != 0:
        raise NotOnHypersurface(f"F(x;y) = {B(x, y)} != 0")
    return slice_x(B, x).det == 0 or slice_y(B, y).det == 0


# --- JSON schema ---------------------------------------------------------

def form_to_json(F):
    if isinstance(F, QuadraticForm):
        return {"kind": "quadratic", "n": F.n, "gram": [list(r) for r in F.gram]}
    if isinstance(F, BiquadraticForm):
        return {"kind": "biquadratic", "n": F.n,
                "coeffs": [{"i": i + 1, "j": j + 1, "k": k + 1, "l": l + 1, "c": c}
                           for (i, j, k, l), c in F.coeffs]}
    raise TypeError(f"not a form: {F!r}")


def _need_int(value, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{where}: expected an integer, got {value!r}")
    return value


def form_from_json(data):
    if not isinstance(data, dict):
        raise SchemaError("form: expected a JSON object")
    kind = data.get("kind")
    if kind not in ("quadratic", "biquadratic"):
        raise SchemaError(f"kind: expected 'quadratic' or 'biquadratic', got {kind!r}")
    if "n" not in data:
        raise SchemaError("n: missing")
    n = _need_int(data["n"], "n")
    if n < 1:
        raise SchemaError(f"n: must be positive, got {n}")
    if kind == "quadratic":
        gram = data.get("gram")
        if not isinstance(gram, list) or len(gram) != n:
            raise SchemaError(f"gram: expected {n} rows")
        for i, row in enumerate(gram):
            if not isinstance(row, list) or len(row) != n:
                raise SchemaError(f"gram[{i}]: expected {n} entries")
            for j, v in enumerate(row):
                _need_int(v, f"gram[{i}][{j}]")
        for i in range(n):
            for j in range(i + 1, n):
                if gram[i][j] != gram[j][i]:
                    raise SchemaError(f"gram[{i}][{j}]={gram[i][j]} is not symmetric "
                                      f"(gram[{j}][{i}]={gram[j][i]})")
        return QuadraticForm(tuple(tuple(r) for r in gram))
    coeffs = data.get("coeffs")
    if not isinstance(coeffs, list):
        raise SchemaError("coeffs: expected a list")
    out = {}
    for idx, entry in enumerate(coeffs):
        where = f"coeffs[{idx}]"
        if not isinstance(entry, dict):
            raise SchemaError(f"{where}: expected an object")
        vals = {}
        for key in ("i", "j", "k", "l", "c"):
            if key not in entry:
                raise SchemaError(f"{where}.{key}: missing")
            vals[key] = _need_int(entry[key], f"{where}.{key}")
        for key in ("i", "j", "k", "l"):
            if not 1 <= vals[key] <= n:
                raise SchemaError(f"{where}.{key}={vals[key]} outside 1..{n}")
        if vals["i"] > vals["j"]:
            raise SchemaError(f"{where}: i={vals['i']} > j={vals['j']}")
        if vals["k"] > vals["l"]:
            raise SchemaError(f"{where}: k={vals['k']} > l={vals['l']}")
        key = (vals["i"] - 1, vals["j"] - 1, vals["k"] - 1, vals["l"] - 1)
        out[key] = out.get(key, 0) + vals["c"]
    return BiquadraticForm.from_dict(n, out)


def load_form(path):
    path = Path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return form_from_json(data)
    except SchemaError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def save_form(F, path):
    Path(path).write_text(json.dumps(form_to_json(F), indent=1) + "\n")
