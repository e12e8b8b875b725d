"""Numerical verification machinery for the expansion limit theorems.

Everything here revolves around tail quantities of the form
"sum over basis indices j > p" which are never summed directly: completeness
of the basis turns them into a closed kernel minus a finite sum, e.g.

    sum_{j>p} (int_t^s phi_j)^2       = (s - t) - sum_{j<=p} (int_t^s phi_j)^2,
    sum_{j>p} int_{s1}^T phi_j int_s^T phi_j
                                      = (T - max(s, s1)) - finite sum.

The eight coefficient families a..h are the tail-weighted double integrals
whose vanishing (together with three constants B_1..B_3) drives the
multiplicity-4 Stratonovich limit; each is computed as a dense (p+1)^2 table
by nested running integrals on a quadrature grid.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .basis import (BasisSystem, DomainError, Interval, LEGENDRE, harmonic,
                    phi_antideriv_matrix, phi_matrix, phi_remaining_matrix)
from .coeffs import (CoeffTensor, WeightFn, coeff_tensor, half_weight_product_integral,
                     trace_sum, weight_one)
from .quadrature import Grid

DELTA_KINDS = ("a", "b", "c", "d", "e", "f", "g", "h")

SECOND_MOMENT_CASES = ("equal", "distinct", "zero_left", "zero_right", "zero_both")


def tail_antideriv_sq(basis: BasisSystem, p: int, s):
    """sum_{j>p} (int_t^s phi_j)^2 via completeness; p = -1 keeps all terms."""
    s = np.asarray(s, dtype=float)
    base = s - basis.interval.t
    if p < 0:
        return base
    A = phi_antideriv_matrix(basis, p, s)
    return base - (A ** 2).sum(axis=0)


def tail_remaining_sq(basis: BasisSystem, p: int, s):
    """sum_{j>p} (int_s^T phi_j)^2 via completeness."""
    s = np.asarray(s, dtype=float)
    base = basis.interval.T - s
    if p < 0:
        return base
    B = phi_remaining_matrix(basis, p, s)
    return base - (B ** 2).sum(axis=0)


def tail_kernel_Fp(s: float, s1: float, p: int, basis: BasisSystem) -> float:
    """F_p(s, s1) = sum_{j>p} int_{s1}^T phi_j * int_s^T phi_j.

    Defined for interior points only; the closed form is
    (T - max(s, s1)) minus the finite rank-(p+1) sum.
    """
    iv = basis.interval
    for v in (s, s1):
        if not (iv.t < v < iv.T):
            raise DomainError("tail kernel is defined on the open interval (t, T)")
    base = iv.T - max(s, s1)
    if p < 0:
        return float(base)
    B = phi_remaining_matrix(basis, p, np.array([s, s1]))
    return float(base - (B[:, 0] * B[:, 1]).sum())


def _delta_grid(basis: BasisSystem, p: int) -> Grid:
    if basis.kind == LEGENDRE:
        degree = 4 * p + 8
        return Grid(basis.interval, 1, max(10, degree // 2 + 3))
    panels = 2 * harmonic(p) * 2 + 8
    return Grid(basis.interval, panels, 14)


def _delta_table_impl(kind: str, p: int, basis: BasisSystem) -> np.ndarray:
    grid = _delta_grid(basis, p)
    x, w = grid.x, grid.w
    iv = basis.interval
    Phi = phi_matrix(basis, p, x)
    A = phi_antideriv_matrix(basis, p, x)
    B = phi_remaining_matrix(basis, p, x)
    S0 = (x - iv.t) - (A ** 2).sum(axis=0)        # sum_{j>p} A_j^2
    TD = (iv.T - x) - (B ** 2).sum(axis=0)        # sum_{j>p} B_j^2
    Pw = Phi * w[None, :]

    if kind == "a":
        inner = grid.indefinite(Phi * S0[None, :])
        return 0.5 * Pw @ inner.T
    if kind == "b":
        return 0.5 * (Phi * (S0 * w)[None, :]) @ A.T
    if kind == "d":
        return 0.5 * (B * (TD * w)[None, :]) @ Phi.T
    if kind == "f":
        return 0.5 * (Phi * (TD * w)[None, :]) @ A.T
    if kind == "c":
        X = grid.indefinite(Phi * x[None, :])
        Y = grid.indefinite(Phi * ((A ** 2).sum(axis=0))[None, :])
        out = np.empty((p + 1, p + 1))
        for j2 in range(p + 1):
            W = grid.indefinite(Phi[j2][None, :] * A)
            inner = ((S0 + iv.t) * A[j2] - X[j2] + 2.0 * (A * W).sum(axis=0) - Y[j2])
            out[:, j2] = Pw @ inner
        return 0.5 * out
    if kind == "e":
        R1 = grid.remaining(Phi * x[None, :])
        RY = grid.remaining(Phi * ((A ** 2).sum(axis=0))[None, :])
        out = np.empty((p + 1, p + 1))
        for j3 in range(p + 1):
            RW = grid.remaining(Phi[j3][None, :] * A)
            inner = (R1[j3] - x * B[j3] - RY[j3] + 2.0 * (A * RW).sum(axis=0)
                     - (A ** 2).sum(axis=0) * B[j3])
            out[j3, :] = Pw @ inner
        return 0.5 * out
    if kind == "g":
        out = np.empty((p + 1, p + 1))
        for j2 in range(p + 1):
            WB = grid.indefinite(Phi[j2][None, :] * B)
            inner = (iv.T - x) * A[j2] - (B * WB).sum(axis=0)
            out[:, j2] = Pw @ inner
        return out
    if kind == "h":
        R1 = grid.remaining(Phi * x[None, :])
        out = np.empty((p + 1, p + 1))
        for j3 in range(p + 1):
            RB = grid.remaining(Phi[j3][None, :] * B)
            inner = iv.T * B[j3] - R1[j3] - (B * RB).sum(axis=0)
            out[j3, :] = Pw @ inner
        return out
    raise ValueError(f"unknown coefficient family {kind!r}")


@lru_cache(maxsize=64)
def _delta_table_cached(kind: str, p: int, basis: BasisSystem):
    table = _delta_table_impl(kind, p, basis)
    table.setflags(write=False)
    return table


def delta_table(kind: str, p: int, basis: BasisSystem) -> np.ndarray:
    """Full (p+1) x (p+1) table of one coefficient family at tail order p.

    Row index is the family's first subscript, column index the second; the
    column variable pairs with the first of the two Gaussian factors.
    """
    if kind not in DELTA_KINDS:
        raise ValueError(f"unknown coefficient family {kind!r}")
    if p < 0:
        raise ValueError("tail order must be nonnegative")
    return _delta_table_cached(kind, int(p), basis)


def delta_coeff(kind: str, j: int, jp: int, p: int, basis: BasisSystem) -> float:
    """Single entry x^p_{j, jp} of a coefficient family table."""
    if not (0 <= j <= p and 0 <= jp <= p):
        raise ValueError("entry indices must satisfy 0 <= j, j' <= p")
    return float(delta_table(kind, p, basis)[j, jp])


def second_moment_from_table(table: np.ndarray, case: str, length: float) -> float:
    """Exact second moment of sum_{j,j'} x_{j'j} zeta_j zeta_{j'} per index case.

    `zero_left` means the Gaussian factor attached to the first (row)
    subscript is the deterministic time row; `zero_right` the second.
    """
    if case == "equal":
        d = np.diag(table)
        sym = table + table.T
        iu = np.triu_indices(table.shape[0], k=1)
        return float(d.sum() ** 2 + (sym[iu] ** 2).sum() + 2.0 * (d ** 2).sum())
    if case == "distinct":
        return float((table ** 2).sum())
    if case == "zero_left":
        return float(length * (table[0, :] ** 2).sum())
    if case == "zero_right":
        return float(length * (table[:, 0] ** 2).sum())
    if case == "zero_both":
        return float(length ** 2 * table[0, 0] ** 2)
    raise ValueError(f"unknown index case {case!r}; choose from {SECOND_MOMENT_CASES}")


def delta_second_moment(kind: str, p: int, case: str, basis: BasisSystem) -> float:
    table = delta_table(kind, p, basis)
    return second_moment_from_table(table, case, basis.interval.length)


def delta_sum_trend(kind: str, p_list, basis: BasisSystem) -> np.ndarray:
    """Diagonal sums sum_{j<=p} x^p_{jj} along an ascending list of tail orders."""
    p_list = [int(p) for p in p_list]
    if any(b <= a for a, b in zip(p_list, p_list[1:])):
        raise ValueError("tail orders must be strictly ascending")
    return np.array([float(np.trace(delta_table(kind, p, basis))) for p in p_list])


def residual_eq15(p: int, w1: WeightFn, w2: WeightFn, basis: BasisSystem) -> float:
    """|sum_{j<=p} C_jj - 0.5 int psi_1 psi_2| for the multiplicity-2 diagonal."""
    return abs(trace_sum(p, [w1, w2], basis) - half_weight_product_integral([w1, w2]))


def b_constants(p: int, basis: BasisSystem) -> tuple[float, float, float]:
    """Partial sums of the three multiplicity-4 double-pair constants.

    With constant weights these converge to ((T-t)^2 / 8, 0, 0).
    """
    iv = basis.interval
    C = coeff_tensor(4, p, [weight_one(iv)] * 4, basis)
    v = C.values
    return (float(np.einsum("aabb->", v)), float(np.einsum("abab->", v)),
            float(np.einsum("abba->", v)))


def weighted_antideriv_at(basis: BasisSystem, p: int, weight: WeightFn, s: float,
                          from_start: bool = True) -> np.ndarray:
    """int_t^s psi phi_j (or int_s^T) for j = 0..p at one interior point."""
    iv = basis.interval
    a, b = (iv.t, s) if from_start else (s, iv.T)
    if basis.kind == LEGENDRE:
        wdeg = weight.poly_degree if weight.poly_degree is not None else 6
        deg = 2 * p + wdeg + 4
        sub = Grid(Interval(a, b), 1, max(8, deg // 2 + 3)) if b > a else None
    else:
        sub = Grid(Interval(a, b), 2 * harmonic(p) + 6, 14) if b > a else None
    if sub is None:
        return np.zeros(p + 1)
    vals = phi_matrix(basis, p, sub.x) * weight(sub.x)[None, :]
    return vals @ sub.w


def diagonal_partial_sum(s_points, p: int, w1: WeightFn, w2: WeightFn,
                         basis: BasisSystem) -> np.ndarray:
    """sum_{j<=p} psi_2(s) phi_j(s) int_t^s psi_1 phi_j, which tends to
    0.5 psi_1(s) psi_2(s) at interior points."""
    s_points = np.asarray(s_points, dtype=float)
    out = np.empty(s_points.shape)
    for i, s in enumerate(s_points.ravel()):
        inner = weighted_antideriv_at(basis, p, w1, float(s), from_start=True)
        out.ravel()[i] = float(w2(s) * (phi_matrix(basis, p, np.array([s]))[:, 0] * inner).sum())
    return out


def mirror_partial_sum(s_points, p: int, w2: WeightFn, w3: WeightFn,
                       basis: BasisSystem) -> np.ndarray:
    """sum_{j<=p} psi_2(s) phi_j(s) int_s^T psi_3 phi_j -> 0.5 psi_2 psi_3."""
    s_points = np.asarray(s_points, dtype=float)
    out = np.empty(s_points.shape)
    for i, s in enumerate(s_points.ravel()):
        inner = weighted_antideriv_at(basis, p, w3, float(s), from_start=False)
        out.ravel()[i] = float(w2(s) * (phi_matrix(basis, p, np.array([s]))[:, 0] * inner).sum())
    return out
