"""Orthonormal function systems on an interval [t, T].

Two complete orthonormal families of L2([t, T]) are supported: rescaled
Legendre polynomials and the full trigonometric system.  Both expose exact
pointwise evaluation and closed-form antiderivatives; everything downstream
(coefficient tensors, tail kernels, diagnostics) is built on these.

Trigonometric ordering: element 0 is the constant, element 2r-1 is
sin(2 pi r u) and element 2r is cos(2 pi r u) with u = (s - t)/(T - t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LEGENDRE = "legendre"
TRIGONOMETRIC = "trigonometric"

_DOMAIN_EPS = 1e-12


class DomainError(ValueError):
    """Argument outside the interval or reference domain."""


@dataclass(frozen=True)
class Interval:
    t: float
    T: float

    def __post_init__(self):
        if not (math.isfinite(self.t) and math.isfinite(self.T)):
            raise DomainError("interval endpoints must be finite")
        if not self.T > self.t:
            raise DomainError(f"need T > t, got [{self.t}, {self.T}]")

    @property
    def length(self) -> float:
        return self.T - self.t

    def contains(self, s) -> bool:
        s = np.asarray(s)
        tol = _DOMAIN_EPS * max(1.0, self.length)
        return bool(np.all(s >= self.t - tol) and np.all(s <= self.T + tol))

    def to_reference(self, s):
        """Affine map onto [-1, 1]."""
        return (np.asarray(s, dtype=float) - 0.5 * (self.T + self.t)) * (2.0 / self.length)


@dataclass(frozen=True)
class BasisSystem:
    kind: str
    interval: Interval

    def __post_init__(self):
        if self.kind not in (LEGENDRE, TRIGONOMETRIC):
            raise ValueError(f"unknown basis kind {self.kind!r}")


def legendre_all(nmax: int, x):
    """P_0 .. P_nmax at points x via the three-term recurrence.

    Returns shape (nmax+1,) + x.shape.  The recurrence is run upward in
    double precision; callers cap nmax (default tensor caps keep it < 4096).
    """
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + _DOMAIN_EPS):
        raise DomainError("Legendre evaluation needs |x| <= 1")
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = 1.0
    if nmax >= 1:
        out[1] = x
    for n in range(1, nmax):
        out[n + 1] = ((2 * n + 1) * x * out[n] - n * out[n - 1]) / (n + 1)
    return out


def legendre_P(n: int, x):
    """Legendre polynomial P_n(x) on [-1, 1]."""
    if n < 0:
        raise ValueError("degree must be nonnegative")
    return legendre_all(n, x)[n]


def phi_matrix(basis: BasisSystem, p: int, s):
    """Values of the first p+1 basis elements: shape (p+1,) + s.shape."""
    s = np.asarray(s, dtype=float)
    iv = basis.interval
    if not iv.contains(s):
        raise DomainError("evaluation points must lie in [t, T]")
    L = iv.length
    if basis.kind == LEGENDRE:
        z = np.clip(iv.to_reference(s), -1.0, 1.0)
        P = legendre_all(p, z)
        scale = np.sqrt((2.0 * np.arange(p + 1) + 1.0) / L)
        return scale.reshape((p + 1,) + (1,) * s.ndim) * P
    u = (s - iv.t) / L
    out = np.empty((p + 1,) + s.shape)
    out[0] = 1.0 / np.sqrt(L)
    amp = np.sqrt(2.0 / L)
    for j in range(1, p + 1):
        r = (j + 1) // 2
        arg = 2.0 * np.pi * r * u
        out[j] = amp * (np.sin(arg) if j % 2 == 1 else np.cos(arg))
    return out


def phi(basis: BasisSystem, j: int, s):
    """Single basis element phi_j evaluated at s."""
    if j < 0:
        raise ValueError("index must be nonnegative")
    return phi_matrix(basis, j, s)[j]


def phi_antideriv_matrix(basis: BasisSystem, p: int, s):
    """Closed-form A_j(s) = int_t^s phi_j, shape (p+1,) + s.shape."""
    s = np.asarray(s, dtype=float)
    iv = basis.interval
    if not iv.contains(s):
        raise DomainError("evaluation points must lie in [t, T]")
    L = iv.length
    out = np.empty((p + 1,) + s.shape)
    out[0] = (s - iv.t) / np.sqrt(L)
    if basis.kind == LEGENDRE:
        if p >= 1:
            z = np.clip(iv.to_reference(s), -1.0, 1.0)
            P = legendre_all(p + 1, z)
            for j in range(1, p + 1):
                out[j] = np.sqrt(L) / (2.0 * np.sqrt(2.0 * j + 1.0)) * (P[j + 1] - P[j - 1])
        return out
    u = (s - iv.t) / L
    amp = np.sqrt(2.0 / L)
    for j in range(1, p + 1):
        r = (j + 1) // 2
        arg = 2.0 * np.pi * r * u
        c = L / (2.0 * np.pi * r)
        out[j] = amp * c * ((1.0 - np.cos(arg)) if j % 2 == 1 else np.sin(arg))
    return out


def phi_total_integrals(basis: BasisSystem, p: int):
    """int_t^T phi_j for j = 0..p: sqrt(T-t) for j=0, zero otherwise."""
    out = np.zeros(p + 1)
    out[0] = np.sqrt(basis.interval.length)
    return out


def phi_remaining_matrix(basis: BasisSystem, p: int, s):
    """B_j(s) = int_s^T phi_j, shape (p+1,) + s.shape."""
    tot = phi_total_integrals(basis, p)
    A = phi_antideriv_matrix(basis, p, s)
    return tot.reshape((p + 1,) + (1,) * (A.ndim - 1)) - A


def phi_integral(basis: BasisSystem, j: int, a: float, b: float) -> float:
    """int_a^b phi_j(s) ds in closed form."""
    iv = basis.interval
    if not (iv.contains(a) and iv.contains(b) and a <= b):
        raise DomainError("need t <= a <= b <= T")
    A = phi_antideriv_matrix(basis, j, np.array([a, b]))
    return float(A[j, 1] - A[j, 0])


def harmonic(j: int) -> int:
    """Trigonometric harmonic number of element j (0 for the constant)."""
    return (j + 1) // 2
