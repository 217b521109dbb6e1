"""Eigenvalues c_{k1,k2}(a, lambda) of invariant Toeplitz operators from the cone formula.

The spectral integral runs over the order interval 0 < x < e1 of the spin
factor R^n. Rotating x' about e1 reduces it to three variables: x1, r = |x'|
and t = x2 / r, with weight r^(n-2) (1-t^2)^((n-4)/2). The constant area of
S^(n-3) is dropped because it cancels in every ratio.

Quadrature splits at x1 = 1/2, where the upper limit min(x1, 1-x1) of r has
its kink. In the upper half the factor ((1-x1)^2 - r^2)^(lambda-n) vanishes
or blows up at r = 1 - x1; the substitution r = (1-x1) sigma turns it into
(1-sigma)^(lambda-n) (1+sigma)^(lambda-n) (1-x1)^(2(lambda-n)), and the first
factor goes into a Gauss-Jacobi weight.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .bergman import MCParams, rayleigh_eigenvalue, sample_domain
from .errors import ExponentRange, KindError, UnsupportedLambda
from .symbols import eval_on_uw, is_invariant_kind

METHODS = ("quad", "mc_cone", "bergman_mc")
TABLE_FIELDS = ("n", "lambda", "k1", "k2", "method", "value", "error", "samples", "seed")


@dataclass(frozen=True)
class QuadSpec:
    order_x1: int = 64
    order_r: int = 64
    order_t: int = 64

    def __post_init__(self):
        if min(self.order_x1, self.order_r, self.order_t) < 1:
            raise ValueError("quadrature orders must be >= 1")

    @property
    def split(self) -> float:
        return 0.5

    def doubled(self) -> "QuadSpec":
        return QuadSpec(2 * self.order_x1, 2 * self.order_r, 2 * self.order_t)


@lru_cache(maxsize=256)
def _gj(order, a, b):
    x, w = roots_jacobi(order, a, b)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_jacobi_nodes(order: int, a: float, b: float):
    """Nodes and weights for the weight (1-t)^a (1+t)^b on [-1, 1]."""
    if a <= -1 or b <= -1:
        raise ExponentRange(f"Jacobi exponents must exceed -1, got a = {a}, b = {b}")
    if order < 1:
        raise ValueError("order must be >= 1")
    x, w = _gj(int(order), float(a), float(b))
    return x.copy(), w.copy()


def _unit_interval(order, a=0.0):
    """Rule on (0, 1) for the weight (1-s)^a."""
    x, w = gauss_jacobi_nodes(order, a, 0.0)
    return (x + 1) / 2, w / 2 ** (a + 1)


def _check(n, lam):
    if n < 3:
        raise UnsupportedLambda(f"the cone formula needs n >= 3, got n = {n}")
    if not lam > n - 1:
        raise UnsupportedLambda(f"lambda = {lam} must exceed n - 1 = {n - 1}")


def _symbol_on_grid(spec, u, w):
    if spec is None:
        return np.ones(np.broadcast_shapes(np.shape(u), np.shape(w)))
    if not is_invariant_kind(spec):
        raise KindError("only moment and invariant symbols have a cone representation")
    return eval_on_uw(spec, u, w)


def _half_grid(n, lam, quad: QuadSpec, upper: bool):
    """Nodes (x1, r, t) and weights of one half of the split, as flat arrays."""
    e = lam - n
    xs, xw = _unit_interval(quad.order_x1)
    x1 = (0.5 + xs / 2) if upper else xs / 2
    xw = xw / 2
    if upper:
        sg, sw = _unit_interval(quad.order_r, e)
        rho = 1.0 - x1
    else:
        sg, sw = _unit_interval(quad.order_r)
        rho = x1
    tt, tw = gauss_jacobi_nodes(quad.order_t, (n - 4) / 2, (n - 4) / 2)
    X1 = x1[:, None, None]
    RHO = rho[:, None, None]
    S = sg[None, :, None]
    R = RHO * S
    T = tt[None, None, :]
    if upper:
        # ((1-x1)^2 - r^2)^e = rho^(2e) (1-sigma)^e (1+sigma)^e; (1-sigma)^e is in sw
        rest = RHO ** (2 * e) * (1 + S) ** e
    else:
        rest = ((1 - X1) ** 2 - R**2) ** e
    W = xw[:, None, None] * sw[None, :, None] * tw[None, None, :] * RHO * rest * R ** (n - 2)
    return X1, R, T, W


def cone_integral(spec, n: int, lam: float, k1: int, k2: int, quad: QuadSpec | None = None) -> float:
    """Integral of a(E(sqrt x)) (x1+x2)^k1 (x1^2 - x'.x')^k2 ((1-x1)^2 - x'.x')^(lambda-n) over 0 < x < e1.

    ``spec`` None means the unit symbol. The area of S^(n-3) is omitted.
    """
    _check(n, lam)
    quad = quad or QuadSpec()
    parts = []
    for upper in (False, True):
        X1, R, T, W = _half_grid(n, lam, quad, upper)
        rr = R * R
        w = X1 * X1 - rr
        base = (X1 + R * T) ** k1 * w**k2 * W
        a = _symbol_on_grid(spec, X1, w)
        # pairwise sums over (r, t), then a compensated fold over x1 nodes
        parts.append(np.sum(np.broadcast_to(a * base, W.shape), axis=(1, 2)))
    return math.fsum(np.concatenate(parts))


def eigenvalue_quad(spec, n: int, lam: float, k1: int, k2: int, quad: QuadSpec | None = None) -> float:
    return cone_integral(spec, n, lam, k1, k2, quad) / cone_integral(None, n, lam, k1, k2, quad)


def _cone_points(n, samples, seed, chunk=1 << 16):
    """x1 ~ U(0,1), x' uniform in the (n-1)-ball of radius min(x1, 1-x1); chunked Philox streams."""
    out1, outp = [], []
    for c, lo in enumerate(range(0, samples, chunk)):
        m = min(chunk, samples - lo)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(1 << 20, c))))
        x1 = rng.random(m)
        g = rng.standard_normal((m, n - 1))
        g /= np.linalg.norm(g, axis=1)[:, None]
        rad = np.minimum(x1, 1 - x1) * rng.random(m) ** (1.0 / (n - 1))
        out1.append(x1)
        outp.append(g * rad[:, None])
    return np.concatenate(out1), np.concatenate(outp)


def eigenvalue_mc_cone(spec, n: int, lam: float, k1: int, k2: int, samples: int, seed: int = 0):
    """Ratio estimator over the full n-dimensional order interval; independent of the 3D reduction."""
    _check(n, lam)
    x1, xp = _cone_points(n, samples, seed)
    qq = np.sum(xp * xp, axis=1)
    rho = np.minimum(x1, 1 - x1)
    # density of x' is 1/(vol * rho^(n-1)); multiply back the rho^(n-1) volume factor
    wt = rho ** (n - 1) * ((1 - x1) ** 2 - qq) ** (lam - n) * (x1 + xp[:, 0]) ** k1 * (x1 * x1 - qq) ** k2
    a = _symbol_on_grid(spec, x1, x1 * x1 - qq)
    sw = math.fsum(wt)
    r = math.fsum(a * wt) / sw
    err = math.sqrt(math.fsum(wt * wt * (a - r) ** 2)) / sw
    return float(r), float(err)


@dataclass(frozen=True)
class EigenvalueRow:
    n: int
    lam: float
    k1: int
    k2: int
    method: str
    value: float
    error: float
    samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ArithmeticError(f"non-finite eigenvalue for ({self.k1}, {self.k2})")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return {k: d[k] for k in TABLE_FIELDS}


def table_labels(kmax: int) -> list:
    labels = [(k1, k2) for k2 in range(kmax // 2 + 1) for k1 in range(kmax - 2 * k2 + 1)]
    return sorted(labels, key=lambda l: (l[0] + 2 * l[1], l[0]))


def eigenvalue_table(spec, n: int, lam: float, kmax: int, method: str = "quad", samples: int = 10**6,
                     seed: int = 0, quad: QuadSpec | None = None, force: bool = False) -> list:
    """Rows for all k1 + 2 k2 <= kmax, sorted by (k1 + 2 k2, k1)."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    _check(n, lam)
    rows = []
    sset = None
    if method == "bergman_mc":
        params = MCParams(n, lam, samples, seed, force=force)
        sset = sample_domain(params)
    for k1, k2 in table_labels(kmax):
        if method == "quad":
            rows.append(EigenvalueRow(n, lam, k1, k2, method, eigenvalue_quad(spec, n, lam, k1, k2, quad), 0.0))
        elif method == "mc_cone":
            v, e = eigenvalue_mc_cone(spec, n, lam, k1, k2, samples, seed)
            rows.append(EigenvalueRow(n, lam, k1, k2, method, v, e, samples, seed))
        else:
            v, e = rayleigh_eigenvalue(spec, k1, k2, sset.params, sset)
            rows.append(EigenvalueRow(n, lam, k1, k2, method, v, e, samples, seed))
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=TABLE_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        d = row.as_dict()
        d["value"] = repr(d["value"])
        d["error"] = repr(d["error"])
        writer.writerow(d)
    return buf.getvalue()


def rows_to_json(rows) -> str:
    return json.dumps([r.as_dict() for r in rows], indent=1)


def rows_from_json(text: str) -> list:
    return [
        EigenvalueRow(d["n"], d["lambda"], d["k1"], d["k2"], d["method"], d["value"], d["error"], d["samples"], d["seed"])
        for d in json.loads(text)
    ]


def rows_from_csv(text: str) -> list:
    rows = []
    for d in csv.DictReader(io.StringIO(text)):
        rows.append(EigenvalueRow(int(d["n"]), float(d["lambda"]), int(d["k1"]), int(d["k2"]), d["method"],
                                  float(d["value"]), float(d["error"]), int(d["samples"]), int(d["seed"])))
    return rows
