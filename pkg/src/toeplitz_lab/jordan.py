"""Spin-factor Jordan algebra on R^n and its complexification on C^n.

Real elements are split as ``x = x1 e1 + x'`` with the distinguished unit
coordinate kept separate from the tail vector.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConeViolation, DimensionMismatch


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SpinElement:
    x1: float
    xprime: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x1", float(self.x1))
        object.__setattr__(self, "xprime", _frozen(self.xprime, float))
        if not np.isfinite(self.x1) or not np.all(np.isfinite(self.xprime)):
            raise ValueError("SpinElement entries must be finite")

    @classmethod
    def from_vector(cls, v) -> "SpinElement":
        v = np.asarray(v, dtype=float).reshape(-1)
        return cls(v[0], v[1:])

    @classmethod
    def unit(cls, n: int) -> "SpinElement":
        return cls(1.0, np.zeros(n - 1))

    @property
    def n(self) -> int:
        return self.xprime.size + 1

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.x1], self.xprime))

    def __eq__(self, other):
        if not isinstance(other, SpinElement):
            return NotImplemented
        return self.x1 == other.x1 and np.array_equal(self.xprime, other.xprime)

    def __sub__(self, other: "SpinElement") -> "SpinElement":
        _check_dims(self, other)
        return SpinElement(self.x1 - other.x1, self.xprime - other.xprime)

    def __repr__(self):
        return f"SpinElement({self.x1!r}, {self.xprime.tolist()!r})"


@dataclass(frozen=True, eq=False)
class ComplexSpinElement:
    z: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "z", _frozen(self.z, complex))
        if not np.all(np.isfinite(self.z)):
            raise ValueError("ComplexSpinElement entries must be finite")

    @property
    def n(self) -> int:
        return self.z.size

    def __eq__(self, other):
        if not isinstance(other, ComplexSpinElement):
            return NotImplemented
        return np.array_equal(self.z, other.z)

    def __repr__(self):
        return f"ComplexSpinElement({self.z.tolist()!r})"


def _check_dims(a, b):
    if a.n != b.n:
        raise DimensionMismatch(f"dimensions differ: {a.n} vs {b.n}")


def jordan_product(x: SpinElement, y: SpinElement) -> SpinElement:
    _check_dims(x, y)
    return SpinElement(
        x.x1 * y.x1 + float(np.dot(x.xprime, y.xprime)),
        x.x1 * y.xprime + y.x1 * x.xprime,
    )


def in_cone(x: SpinElement) -> bool:
    """Strict interior of the cone of squares; boundary points are excluded."""
    return bool(x.x1 > 0 and x.x1 * x.x1 - float(np.dot(x.xprime, x.xprime)) > 0)


def jordan_sqrt(x: SpinElement) -> SpinElement:
    """Unique square root inside the cone.

    Closed form; loses relative accuracy as ``x1**2 - x'.x'`` approaches 0.
    """
    if not in_cone(x):
        raise ConeViolation(f"{x!r} is not in the open cone")
    y1, yp = sqrt_components(x.x1, x.xprime)
    return SpinElement(y1, yp)


def sqrt_components(x1, xprime):
    """Vectorised square root: ``x1`` of shape (...,), ``xprime`` of shape (..., n-1)."""
    x1 = np.asarray(x1, dtype=float)
    xprime = np.asarray(xprime, dtype=float)
    qq = np.sum(xprime * xprime, axis=-1)
    s = x1 + np.sqrt(x1 * x1 - qq)
    return np.sqrt(s / 2), xprime / np.sqrt(2 * s)[..., None]


def embed_real_form(x: SpinElement) -> ComplexSpinElement:
    return ComplexSpinElement(np.concatenate(([x.x1 + 0j], 1j * x.xprime)))


def complex_jordan_product(z: ComplexSpinElement, w: ComplexSpinElement) -> ComplexSpinElement:
    _check_dims(z, w)
    a, b = z.z, w.z
    # plain sum, not vdot: no conjugation in the bilinear tail term
    head = a[0] * b[0] - np.sum(a[1:] * b[1:])
    return ComplexSpinElement(np.concatenate(([head], a[0] * b[1:] + b[0] * a[1:])))


def involution(z: ComplexSpinElement) -> ComplexSpinElement:
    c = np.conj(z.z)
    return ComplexSpinElement(np.concatenate(([c[0]], -c[1:])))


def in_order_interval(x: SpinElement) -> bool:
    """``0 < x < e1`` in the cone order."""
    return in_cone(x) and in_cone(SpinElement.unit(x.n) - x)


def random_order_interval(rng: np.random.Generator, n: int, size: int):
    """Points of 0 < x < e1: x1 ~ U(0,1), x' uniform in the ball of radius min(x1, 1-x1).

    Returns (x1, xprime) with shapes (size,) and (size, n-1).
    """
    x1 = rng.random(size)
    g = rng.standard_normal((size, n - 1))
    g /= np.linalg.norm(g, axis=1)[:, None]
    rad = np.minimum(x1, 1 - x1) * rng.random(size) ** (1.0 / (n - 1))
    return x1, g * rad[:, None]
