"""The Lie ball D = {|z| < 1, 2|z|^2 < 1 + |z^T z|^2}: kernels, metric, symplectic form.

All scalar helpers accept a single point of shape (n,) or a batch of shape (..., n).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import BranchFailure, PointNotInDomain, UnsupportedLambda


def _norm2(z):
    return np.sum(z.real * z.real + z.imag * z.imag, axis=-1)


def _zz(z):
    return np.sum(z * z, axis=-1)


def _abs2(c):
    """|c|^2 as re^2 + im^2 (no hypot rounding), matching complex products like c * conj(c)."""
    return c.real * c.real + c.imag * c.imag


def delta(z):
    z = np.asarray(z, dtype=complex)
    return 1.0 - 2.0 * _norm2(z) + _abs2(_zz(z))


def in_domain(z):
    z = np.asarray(z, dtype=complex)
    nz = _norm2(z)
    return (nz < 1.0) & (2.0 * nz < 1.0 + _abs2(_zz(z)))


def domain_violation(z) -> str | None:
    """Describe which defining inequality fails, or None when ``z`` is inside."""
    z = np.asarray(z, dtype=complex)
    nz = float(_norm2(z))
    q = float(_abs2(_zz(z)))
    if not nz < 1.0:
        return f"|z|^2 = {nz:.17g} is not < 1"
    if not 2.0 * nz < 1.0 + q:
        return f"2|z|^2 = {2 * nz:.17g} is not < 1 + |z^T z|^2 = {1 + q:.17g}"
    return None


@dataclass(frozen=True, eq=False)
class DomainPoint:
    z: np.ndarray

    def __post_init__(self):
        z = np.array(self.z, dtype=complex).reshape(-1)
        why = domain_violation(z)
        if why is not None:
            raise PointNotInDomain(why, point=z.tolist())
        z.setflags(write=False)
        object.__setattr__(self, "z", z)

    @property
    def n(self) -> int:
        return self.z.size


@dataclass(frozen=True)
class WeightParam:
    lam: float
    n: int

    def __post_init__(self):
        if not self.lam > self.n - 1:
            raise UnsupportedLambda(f"lambda = {self.lam} must exceed n - 1 = {self.n - 1}")


def _as_array(p):
    return p.z if isinstance(p, DomainPoint) else np.asarray(p, dtype=complex)


def kernel_base(z, w):
    """1 - 2 z.conj(w) + (z^T z) conj(w^T w), in real arithmetic.

    On the diagonal the real part then agrees bit for bit with ``delta``.
    """
    z, w = _as_array(z), _as_array(w)
    s_re = np.sum(z.real * w.real + z.imag * w.imag, axis=-1)
    s_im = np.sum(z.imag * w.real - z.real * w.imag, axis=-1)
    a, c = _zz(z), _zz(w)
    p_re = a.real * c.real + a.imag * c.imag
    p_im = a.imag * c.real - a.real * c.imag
    return (1.0 - 2.0 * s_re + p_re) + 1j * (p_im - 2.0 * s_im)


def bergman_kernel(z, w, lam):
    """Weighted Bergman kernel, principal branch of base**(-lam)."""
    lam = lam.lam if isinstance(lam, WeightParam) else float(lam)
    base = np.asarray(kernel_base(z, w))
    bad = (base.imag == 0) & (base.real <= 0)
    if np.any(bad):
        raise BranchFailure("kernel base on the closed negative real axis")
    return np.exp(-lam * np.log(base))


def metric(z) -> np.ndarray:
    """Bergman metric coefficients g_jk with normalisation 1/(2n)."""
    z = _as_array(z)
    d = delta(z)
    zz = _zz(z)
    a = np.conj(z) - z * np.conj(zz)  # conj(z_j) - z_j conj(z^T z)
    b = z - np.conj(z) * zz  # z_k - conj(z_k) z^T z
    n = z.shape[-1]
    return (d * (np.eye(n) - 2.0 * np.outer(z, np.conj(z))) + 2.0 * np.outer(a, b)) / d**2


def symplectic_form(z, u, v) -> float:
    """omega_z(u, v) = i sum g_jk (u_j conj(v_k) - v_j conj(u_k)).

    Real tangent vectors are encoded as complex n-vectors with dz_j(u) = u_j.
    """
    g = metric(z)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    val = 1j * (u @ g @ np.conj(v) - v @ g @ np.conj(u))
    return float(val.real)


def jordan_pair_coeff(j, k, m, l) -> float:
    d = lambda a, b: 1.0 if a == b else 0.0  # noqa: E731
    return 2.0 * (d(j, k) * d(m, l) - d(j, m) * d(k, l) + d(k, m) * d(j, l))


def _log_kernel_diag(z, n):
    return -n * np.log(delta(z))


def _wirtinger_fourth(f, n, idx, h):
    """d^4 f / dz_j dzbar_k dz_m dzbar_l at 0 from products of central differences.

    Each Wirtinger derivative is (d/dx -+ i d/dy)/2; the 16 real mixed partials
    are each a 16-point product stencil, evaluated in one batch.
    """
    j, k, m, l = idx
    slots = [(j, -1), (k, +1), (m, -1), (l, +1)]  # -1: d/dz, +1: d/dzbar
    combos = []
    for choice in itertools.product((0, 1), repeat=4):
        coef = 1.0 + 0j
        dirs = []
        for (var, sgn), c in zip(slots, choice):
            e = np.zeros(n, dtype=complex)
            if c == 0:
                e[var] = 1.0
            else:
                e[var] = 1j
                coef *= sgn * 1j
            dirs.append(e)
        combos.append((coef / 16.0, dirs))
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=4)))
    sprod = np.prod(signs, axis=1)
    total = 0.0 + 0j
    for coef, dirs in combos:
        pts = h * signs @ np.array(dirs)
        vals = f(pts)
        total += coef * np.sum(sprod * vals) / (2 * h) ** 4
    return total


def jordan_pair_coeff_numeric(j, k, m, l, n=3, h=1e-2) -> float:
    """Finite-difference estimate of (1/2n) d^4 log K(z,z) at 0, Richardson-extrapolated once.

    Indices are 1-based.
    """
    idx = (j - 1, k - 1, m - 1, l - 1)
    f = lambda pts: _log_kernel_diag(pts, n) / (2 * n)  # noqa: E731
    coarse = _wirtinger_fourth(f, n, idx, h)
    fine = _wirtinger_fourth(f, n, idx, h / 2)
    return float(((4 * fine - coarse) / 3).real)


def _metric_fd(z, n, h):
    f = lambda p: _log_kernel_diag(p, n) / (2 * n)  # noqa: E731
    g = np.zeros((n, n), dtype=complex)
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=2)))
    sprod = signs[:, 0] * signs[:, 1]
    for a in range(n):
        for b in range(n):
            acc = 0j
            for ca, cb in itertools.product((0, 1), repeat=2):
                ea = np.zeros(n, dtype=complex)
                eb = np.zeros(n, dtype=complex)
                ea[a] = 1.0 if ca == 0 else 1j
                eb[b] = 1.0 if cb == 0 else 1j
                coef = (1.0 if ca == 0 else -1j) * (1.0 if cb == 0 else 1j) / 4.0
                pts = z + h * signs @ np.array([ea, eb])
                acc += coef * np.sum(sprod * f(pts)) / (2 * h) ** 2
            g[a, b] = acc
    return g


def metric_from_kernel_fd(z, h=None) -> np.ndarray:
    """Central-difference (1/2n) d^2 log K(z,z) / dz_j dzbar_k; oracle for ``metric``.

    The default step shrinks with Delta(z), since the metric varies on that
    scale near the boundary; one Richardson step removes the h^2 term.
    """
    z = _as_array(z)
    if h is None:
        h = 1e-2 * min(1.0, float(delta(z)))
    coarse = _metric_fd(z, z.size, h)
    fine = _metric_fd(z, z.size, h / 2)
    return (4 * fine - coarse) / 3


def random_domain_points(rng: np.random.Generator, n: int, size: int, shrink: float = 1.0) -> np.ndarray:
    """Uniform points of the domain scaled by ``shrink`` (rejection from the unit ball of R^{2n})."""
    out, got = [], 0
    while got < size:
        g = rng.standard_normal((2 * size, 2 * n))
        g /= np.linalg.norm(g, axis=1)[:, None]
        g *= rng.random(2 * size)[:, None] ** (1.0 / (2 * n))
        z = g[:, :n] + 1j * g[:, n:]
        z = z[in_domain(z)]
        out.append(z)
        got += len(z)
    return shrink * np.concatenate(out)[:size]
