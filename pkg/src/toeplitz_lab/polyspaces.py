"""Exact homogeneous polynomial algebra on C^n.

Structural computations (Laplacian kernels, isotypic decompositions, weight
classes) run in exact Gaussian-rational arithmetic; floating coefficients only
appear after a group substitution.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb

import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .errors import DimensionMismatch, NotAWeightVector, OutOfRange, SolveFailure


@dataclass(frozen=True)
class GaussianRational:
    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @classmethod
    def coerce(cls, v) -> "GaussianRational":
        if isinstance(v, GaussianRational):
            return v
        if isinstance(v, complex):
            return cls(Fraction(v.real), Fraction(v.imag))
        return cls(Fraction(v), Fraction(0))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __add__(self, o):
        if not isinstance(o, (GaussianRational, int, Fraction)):
            return complex(self) + o
        o = GaussianRational.coerce(o)
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if not isinstance(o, (GaussianRational, int, Fraction)):
            return complex(self) * o
        o = GaussianRational.coerce(o)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = GaussianRational.coerce(o)
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("GaussianRational division by zero")
        return self * GaussianRational(o.re / den, -o.im / den)

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"


I = GaussianRational(0, 1)


def _is_zero(c) -> bool:
    return not c


def _coerce_coeff(c):
    if isinstance(c, (GaussianRational, complex, float, np.floating, np.complexfloating)):
        return c if isinstance(c, GaussianRational) else complex(c)
    if isinstance(c, (int, Fraction)):
        return GaussianRational.coerce(c)
    raise TypeError(f"unsupported coefficient {c!r}")


class Polynomial:
    """Sparse polynomial: multi-index tuple -> coefficient. Zero coefficients are never stored."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms=None):
        self.n = int(n)
        clean = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or min(alpha, default=0) < 0:
                raise DimensionMismatch(f"bad multi-index {alpha} for n = {self.n}")
            c = _coerce_coeff(c)
            if not _is_zero(c):
                clean[alpha] = c
        self.terms = clean

    # -- constructors
    @classmethod
    def constant(cls, n, c=1):
        return cls(n, {(0,) * n: c})

    @classmethod
    def variable(cls, n, j, c=1):
        """c * z_j, 0-based index."""
        alpha = [0] * n
        alpha[j] = 1
        return cls(n, {tuple(alpha): c})

    @classmethod
    def zz(cls, n):
        """z^T z = z_1^2 + ... + z_n^2."""
        return cls(n, {tuple(2 if k == j else 0 for k in range(n)): 1 for j in range(n)})

    # -- structure
    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, GaussianRational) for c in self.terms.values())

    @property
    def degrees(self) -> set:
        return {sum(a) for a in self.terms}

    @property
    def degree(self) -> int:
        return max(self.degrees, default=0)

    @property
    def is_homogeneous(self) -> bool:
        return len(self.degrees) <= 1

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __repr__(self):
        return f"Polynomial(n={self.n}, terms={len(self.terms)})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for alpha in sorted(self.terms, key=grlex_key):
            mono = "*".join(
                f"z{j + 1}" + (f"^{a}" if a > 1 else "") for j, a in enumerate(alpha) if a
            )
            c = self.terms[alpha]
            cs = _coeff_str(c)
            parts.append(f"({cs})" + (f"*{mono}" if mono else ""))
        return " + ".join(parts)

    # -- arithmetic
    def _check(self, other):
        if self.n != other.n:
            raise DimensionMismatch(f"n differs: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(self.n, other)
        self._check(other)
        out = dict(self.terms)
        for a, c in other.terms.items():
            out[a] = out[a] + c if a in out else c
        return Polynomial(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.n, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            other = _coerce_coeff(other)
            return Polynomial(self.n, {a: c * other for a, c in self.terms.items()})
        self._check(other)
        out = {}
        for a, c in self.terms.items():
            for b, d in other.terms.items():
                k = tuple(x + y for x, y in zip(a, b))
                out[k] = out[k] + c * d if k in out else c * d
        return Polynomial(self.n, out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        result = Polynomial.constant(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def homogeneous_part(self, m: int) -> "Polynomial":
        return Polynomial(self.n, {a: c for a, c in self.terms.items() if sum(a) == m})

    def to_complex(self) -> "Polynomial":
        return Polynomial(self.n, {a: complex(c) for a, c in self.terms.items()})

    def coefficient_vector(self, basis) -> np.ndarray:
        """Complex coefficients against an ordered list of multi-indices."""
        return np.array([complex(self.terms.get(a, 0)) for a in basis])

    # -- serialisation
    def to_json(self) -> dict:
        out = []
        for alpha in sorted(self.terms, key=grlex_key):
            g = GaussianRational.coerce(self.terms[alpha])
            out.append({"alpha": list(alpha), "re": _frac_str(g.re), "im": _frac_str(g.im)})
        return {"n": self.n, "terms": out}

    @classmethod
    def from_json(cls, data) -> "Polynomial":
        if isinstance(data, str):
            data = json.loads(data)
        terms = {
            tuple(t["alpha"]): GaussianRational(Fraction(t["re"]), Fraction(t["im"]))
            for t in data["terms"]
        }
        return cls(data["n"], terms)


def _frac_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _coeff_str(c) -> str:
    if isinstance(c, GaussianRational):
        if c.im == 0:
            return str(c.re)
        if c.re == 0:
            return f"{c.im}i"
        return f"{c.re}{'+' if c.im > 0 else '-'}{abs(c.im)}i"
    return repr(c)


def grlex_key(alpha):
    """Graded lexicographic order, highest first: degree descending, then exponents descending."""
    return (-sum(alpha), tuple(-a for a in alpha))


@lru_cache(maxsize=None)
def monomials(n: int, m: int) -> tuple:
    """All multi-indices of total degree m, in graded-lex order."""

    def rec(k, rem):
        if k == 1:
            yield (rem,)
            return
        for a in range(rem, -1, -1):
            for rest in rec(k - 1, rem - a):
                yield (a,) + rest

    return tuple(rec(n, m))


def evaluate(p: Polynomial, z):
    """Evaluate at one point (n,) or a batch (..., n) via per-variable power tables."""
    z = np.asarray(z, dtype=complex)
    if z.shape[-1] != p.n:
        raise DimensionMismatch(f"point has {z.shape[-1]} coordinates, polynomial has n = {p.n}")
    return evaluate_many([p], z)[..., 0]


def power_table(z, max_deg):
    """pw[k][..., j] = z_j ** k for k = 0..max_deg."""
    z = np.asarray(z, dtype=complex)
    pw = [np.ones_like(z)]
    for _ in range(max_deg):
        pw.append(pw[-1] * z)
    return pw


def monomial_values(z, exps, pw=None):
    """Matrix of monomial values, shape (..., len(exps))."""
    z = np.asarray(z, dtype=complex)
    exps = np.asarray(exps, dtype=int).reshape(-1, z.shape[-1])
    if pw is None:
        pw = power_table(z, int(exps.max(initial=0)))
    out = np.ones(z.shape[:-1] + (len(exps),), dtype=complex)
    for i, alpha in enumerate(exps):
        v = out[..., i]
        for j, a in enumerate(alpha):
            if a:
                v = v * pw[a][..., j]
        out[..., i] = v
    return out


def coefficient_matrix(polys, exps) -> np.ndarray:
    index = {a: i for i, a in enumerate(exps)}
    C = np.zeros((len(exps), len(polys)), dtype=complex)
    for k, p in enumerate(polys):
        for a, c in p.terms.items():
            C[index[a], k] = complex(c)
    return C


def evaluate_many(polys, z):
    """Values of several polynomials, shape (..., len(polys))."""
    z = np.asarray(z, dtype=complex)
    if not polys:
        return np.zeros(z.shape[:-1] + (0,), dtype=complex)
    exps = sorted({a for p in polys for a in p.terms} or {(0,) * z.shape[-1]}, key=grlex_key)
    return monomial_values(z, exps) @ coefficient_matrix(polys, exps)


def holomorphic_laplacian(p: Polynomial) -> Polynomial:
    out = {}
    for alpha, c in p.terms.items():
        for j, a in enumerate(alpha):
            if a >= 2:
                beta = alpha[:j] + (a - 2,) + alpha[j + 1 :]
                v = c * (a * (a - 1))
                out[beta] = out[beta] + v if beta in out else v
    return Polynomial(p.n, out)


def _qq(f: Fraction):
    return QQ(f.numerator, f.denominator)


def _frac(q) -> Fraction:
    return Fraction(int(q.numerator), int(q.denominator))


@lru_cache(maxsize=None)
def _laplacian_matrix(n: int, m: int) -> DomainMatrix:
    cols = monomials(n, m)
    rows = monomials(n, m - 2) if m >= 2 else ()
    if not rows:
        return DomainMatrix.zeros((0, len(cols)), QQ)
    index = {a: i for i, a in enumerate(rows)}
    M = [[QQ(0)] * len(cols) for _ in rows]
    for k, alpha in enumerate(cols):
        for j, a in enumerate(alpha):
            if a >= 2:
                beta = alpha[:j] + (a - 2,) + alpha[j + 1 :]
                M[index[beta]][k] += QQ(a * (a - 1))
    return DomainMatrix(M, (len(rows), len(cols)), QQ)


@lru_cache(maxsize=None)
def _harmonic_basis(n: int, m: int) -> tuple:
    cols = monomials(n, m)
    L = _laplacian_matrix(n, m)
    if L.shape[0] == 0:
        vecs = [[QQ(1) if i == k else QQ(0) for i in range(len(cols))] for k in range(len(cols))]
    else:
        vecs = L.nullspace().to_list()
    basis = []
    for v in vecs:
        basis.append(
            Polynomial(n, {cols[i]: GaussianRational(_frac(c)) for i, c in enumerate(v) if c})
        )
    return tuple(basis)


def harmonic_basis(n: int, m: int) -> list:
    """Exact basis of H^m(C^n): the reduced-echelon nullspace of the Laplacian on P^m."""
    if m < 0:
        raise OutOfRange("degree must be non-negative")
    return list(_harmonic_basis(n, m))


def harmonic_dim(n: int, m: int) -> int:
    if m < 0:
        raise OutOfRange("degree must be non-negative")
    return comb(n + m - 1, n - 1) - (comb(n + m - 3, n - 1) if m >= 2 else 0)


@lru_cache(maxsize=None)
def _block_layout(n: int, m: int):
    """Column layout for the isotypic solve on P^m: [(label, harmonic basis), ...] and the matrix."""
    layout = []
    columns = []
    for k2 in range(m // 2, -1, -1):
        k1 = m - 2 * k2
        hb = _harmonic_basis(n, k1)
        layout.append(((k1, k2), hb))
        zz_pow = Polynomial.zz(n) ** k2
        columns.extend(h * zz_pow for h in hb)
    rows = monomials(n, m)
    index = {a: i for i, a in enumerate(rows)}
    M = [[QQ(0)] * len(columns) for _ in rows]
    for k, col in enumerate(columns):
        for a, c in col.terms.items():
            M[index[a]][k] = _qq(c.re)
    return tuple(layout), DomainMatrix(M, (len(rows), len(columns)), QQ)


def decompose(p: Polynomial) -> dict:
    """Split p in P^m into components h_(k1,k2) in H^k1 with p = sum h (z^T z)^k2.

    Returns {(k1, k2): h} with zero components omitted.
    """
    if not p.is_homogeneous:
        raise ValueError("decompose needs a homogeneous polynomial")
    if p.is_zero():
        return {}
    if not p.is_exact:
        raise TypeError("decompose needs exact coefficients")
    n, m = p.n, p.degree
    layout, B = _block_layout(n, m)
    if B.shape[0] != B.shape[1]:
        raise SolveFailure(f"isotypic system is {B.shape}, not square")
    rows = monomials(n, m)
    rhs_re = DomainMatrix([[_qq(p.terms.get(a, GaussianRational()).re)] for a in rows], (len(rows), 1), QQ)
    rhs_im = DomainMatrix([[_qq(p.terms.get(a, GaussianRational()).im)] for a in rows], (len(rows), 1), QQ)
    try:
        xr = [r[0] for r in B.lu_solve(rhs_re).to_list()]
        xi = [r[0] for r in B.lu_solve(rhs_im).to_list()]
    except Exception as exc:  # sympy raises several types for singular systems
        raise SolveFailure(f"isotypic solve failed for n={n}, m={m}: {exc}") from exc
    out = {}
    k = 0
    for label, hb in layout:
        h = Polynomial(n)
        for basis_poly in hb:
            coef = GaussianRational(_frac(xr[k]), _frac(xi[k]))
            if coef:
                h = h + basis_poly * coef
            k += 1
        if not h.is_zero():
            out[label] = h
    return out


def highest_weight_vector(k1: int, k2: int, n: int) -> Polynomial:
    """(z1 - i z2)^k1 (z^T z)^k2."""
    p1 = Polynomial.variable(n, 0) + Polynomial.variable(n, 1, -I)
    return p1**k1 * Polynomial.zz(n) ** k2


@dataclass(frozen=True)
class WeightLabel:
    torus_weight: tuple
    so2_weight: int


def _rotated_coordinates(n):
    """Linear forms z_{2j-1} -+ i z_{2j} (and z_n for odd n)."""
    ell = n // 2
    minus, plus = [], []
    for j in range(ell):
        a = Polynomial.variable(n, 2 * j)
        b = Polynomial.variable(n, 2 * j + 1, I)
        minus.append(a - b)
        plus.append(a + b)
    last = Polynomial.variable(n, n - 1) if n % 2 else None
    return minus, plus, last


def _compositions(total, parts):
    if parts == 0:
        if total == 0:
            yield ()
        return
    for a in range(total, -1, -1):
        for rest in _compositions(total - a, parts - 1):
            yield (a,) + rest


@lru_cache(maxsize=None)
def _q_basis(n: int, m: int) -> tuple:
    ell = n // 2
    minus, plus, last = _rotated_coordinates(n)
    out = []
    slots = 2 * ell + (1 if n % 2 else 0)
    for exps in _compositions(m, slots):
        alpha, beta = exps[:ell], exps[ell : 2 * ell]
        q = Polynomial.constant(n, 1)
        for j in range(ell):
            q = q * minus[j] ** alpha[j] * plus[j] ** beta[j]
        if n % 2:
            q = q * last ** exps[-1]
        label = WeightLabel(tuple(b - a for a, b in zip(alpha, beta)), -m)
        out.append((q, label, exps))
    return tuple(out)


def q_basis(n: int, m: int) -> list:
    """Torus weight basis q_(alpha,beta[,gamma]) of P^m with labels (beta - alpha, -m)."""
    return [(q, label) for q, label, _ in _q_basis(n, m)]


def to_rotated(p: Polynomial) -> Polynomial:
    """Coefficients of p in the variables w = (z1 - i z2, z1 + i z2, ..., [z_n]).

    Exponent slot layout matches q_basis: (alpha_1..alpha_l, beta_1..beta_l[, gamma]).
    """
    n = p.n
    ell = n // 2
    slots = 2 * ell + (1 if n % 2 else 0)
    half = GaussianRational(Fraction(1, 2))
    half_i = GaussianRational(0, Fraction(1, 2))
    subs = []
    for j in range(ell):
        wa = Polynomial.variable(slots, j)
        wb = Polynomial.variable(slots, ell + j)
        subs.append((wa + wb) * half)  # z_{2j-1}
        subs.append((wa - wb) * half_i)  # z_{2j}
    if n % 2:
        subs.append(Polynomial.variable(slots, slots - 1))
    return substitute_linear(p, subs)


def substitute_linear(p: Polynomial, forms) -> Polynomial:
    """p(forms[0], ..., forms[n-1]) for polynomial ``forms`` in a common ring."""
    if len(forms) != p.n:
        raise DimensionMismatch("need one form per variable")
    target_n = forms[0].n
    cache = {}

    def power(j, a):
        key = (j, a)
        if key not in cache:
            cache[key] = forms[j] ** a
        return cache[key]

    out = Polynomial(target_n)
    for alpha, c in p.terms.items():
        term = Polynomial.constant(target_n, c)
        for j, a in enumerate(alpha):
            if a:
                term = term * power(j, a)
        out = out + term
    return out


def weight_of(p: Polynomial, tol: float = 1e-12) -> WeightLabel:
    if p.is_zero() or not p.is_homogeneous:
        raise NotAWeightVector("weight vectors are non-zero and homogeneous")
    n = p.n
    ell = n // 2
    rot = to_rotated(p)
    if not rot.is_exact:
        scale = max(abs(complex(c)) for c in rot.terms.values())
        keep = {a: c for a, c in rot.terms.items() if abs(complex(c)) > tol * scale}
    else:
        keep = rot.terms
    weights = {tuple(a[ell + j] - a[j] for j in range(ell)) for a in keep}
    if len(weights) != 1:
        raise NotAWeightVector(f"polynomial mixes torus weights {sorted(weights)}")
    return WeightLabel(weights.pop(), -p.degree)


def act_on_poly(g, p: Polynomial) -> Polynomial:
    """(pi(g) p)(z) = p(conj(t) A^{-1} z), floating coefficients."""
    n = p.n
    M = np.conj(g.t) * g.A.T  # A^{-1} = A^T
    forms = [
        Polynomial(n, {tuple(1 if k == c else 0 for k in range(n)): complex(M[r, c]) for c in range(n)})
        for r in range(n)
    ]
    return substitute_linear(p.to_complex(), forms)


def parity(m: int) -> int:
    return m % 2


def branching_multiplicity(m: int, r: int, n: int = 4) -> int:
    """Multiplicity of H^r(C^{n-1}) (x) C_m inside P^m(C^n) under SO(n-1) x SO(2)."""
    if n < 4:
        raise OutOfRange("branching to SO(n-1) is defined here for n >= 4 only")
    if not 0 <= r <= m:
        raise OutOfRange(f"need 0 <= r <= m, got r={r}, m={m}")
    return m // 2 - (r + parity(m + 1)) // 2 + 1


def branching_count(m: int, r: int) -> int:
    """Enumerate P^m -> sum_k H^{m-2k} -> sum_k sum_{j<=m-2k} H^j(C^{n-1}) and count r."""
    return sum(1 for k in range(m // 2 + 1) for j in range(m - 2 * k + 1) if j == r)
