"""Linear SO(n) x SO(2) action, the maximal torus, and its moment maps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutOfRange, StepExitsDomain
from .geometry import _abs2, _norm2, _zz, delta, in_domain, symplectic_form


def rotation(theta: float) -> np.ndarray:
    """R(theta) with rows [cos, sin; -sin, cos]."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


@dataclass(frozen=True, eq=False)
class GroupElement:
    A: np.ndarray
    t: complex = 1.0

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        if np.max(np.abs(A.T @ A - np.eye(n))) > 1e-12 or abs(np.linalg.det(A) - 1) > 1e-12:
            raise ValueError("A is not in SO(n)")
        if abs(abs(self.t) - 1) > 1e-14:
            raise ValueError("|t| must be 1")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "t", complex(self.t))

    @classmethod
    def identity(cls, n: int) -> "GroupElement":
        return cls(np.eye(n), 1.0)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.A @ other.A, self.t * other.t)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.A.T, np.conj(self.t))


def act(g: GroupElement, z) -> np.ndarray:
    """(A, t) . z = t A z; ``z`` may be a batch of shape (..., n)."""
    z = np.asarray(z, dtype=complex)
    return g.t * (z @ g.A.T)


def torus_element(theta, n: int) -> GroupElement:
    return GroupElement(torus_matrix(theta, n), 1.0)


def torus_matrix(theta, n: int) -> np.ndarray:
    """A(theta): blocks R(theta_j) down the diagonal, trailing 1 for odd n."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.size != n // 2:
        raise ValueError(f"need {n // 2} angles for n = {n}, got {theta.size}")
    A = np.eye(n)
    for j, th in enumerate(theta):
        A[2 * j : 2 * j + 2, 2 * j : 2 * j + 2] = rotation(th)
    return A


def torus_group_element(theta, n: int, phase: float = 0.0) -> GroupElement:
    """Element (A(theta), e^{i phase}) of the maximal torus T_n x SO(2)."""
    return GroupElement(torus_matrix(theta, n), np.exp(1j * phase))


def random_group_element(rng: np.random.Generator, n: int) -> GroupElement:
    """Haar-ish random (A, t): QR of a Gaussian matrix, determinant fixed to +1."""
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return GroupElement(q, np.exp(2j * np.pi * rng.random()))


def _check_index(j: int, n: int) -> int:
    ell = n // 2
    if not 1 <= j <= ell + 1:
        raise OutOfRange(f"basis index {j} outside 1..{ell + 1}")
    return ell


def infinitesimal_field(j: int, z) -> np.ndarray:
    """Holomorphic components of the vector field generated by basis element X_j (1-based)."""
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1]
    ell = _check_index(j, n)
    if j == ell + 1:
        return 1j * z
    out = np.zeros_like(z)
    out[..., 2 * j - 2] = z[..., 2 * j - 1]
    out[..., 2 * j - 1] = -z[..., 2 * j - 2]
    return out


def moment_map_torus(z) -> np.ndarray:
    """Components against X_1..X_{l+1}; works on batches (..., n) -> (..., l+1)."""
    z = np.asarray(z, dtype=complex)
    n = z.shape[-1]
    ell = n // 2
    d = delta(z)
    comps = []
    for j in range(ell):
        a, b = z[..., 2 * j], z[..., 2 * j + 1]
        comps.append((1j * (np.conj(a) * b - a * np.conj(b))).real / d)
    comps.append(moment_map_so2(z))
    return np.stack(comps, axis=-1)


def moment_map_so2(z):
    z = np.asarray(z, dtype=complex)
    q = _abs2(_zz(z))
    nz = _norm2(z)
    return (q - nz) / (1.0 + q - 2.0 * nz)


def hamiltonian_residual(j: int, z, u, h: float = 1e-5) -> float:
    """|central difference of mu_j along u  -  omega(X_j^sharp, u)|."""
    z = np.asarray(z, dtype=complex)
    u = np.asarray(u, dtype=complex)
    _check_index(j, z.size)
    zp, zm = z + h * u, z - h * u
    if not (in_domain(zp) and in_domain(zm)):
        raise StepExitsDomain("displaced point leaves the domain", h=h)
    dmu = (moment_map_torus(zp)[j - 1] - moment_map_torus(zm)[j - 1]) / (2 * h)
    return abs(dmu - symplectic_form(z, infinitesimal_field(j, z), u))
