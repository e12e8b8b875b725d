"""Truncated series expansions of iterated stochastic integrals.

An expansion realization is a polynomial in the Gaussian coordinates
zeta_j^(i) = int_t^T phi_j dw^(i).  The Ito form carries indicator
corrections for every coinciding pair of noise indices; the Stratonovich
form is the plain multiple sum.  Their exact finite-truncation difference
is exposed separately (:func:`strat_correction`) so the bookkeeping can be
verified realization by realization.

Row 0 of a :class:`GaussianTable` belongs to the time component w^(0) and is
deterministic: zeta_j^(0) = int_t^T phi_j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .basis import BasisSystem, phi_total_integrals
from .coeffs import CoeffTensor, WeightFn, coeff_tensor, kernel_norm_sq

_PAIR_SUBSCRIPTS_4 = {
    (0, 1): "jjcd",
    (0, 2): "jbjd",
    (0, 3): "jbcj",
    (1, 2): "ajjd",
    (1, 3): "ajcj",
    (2, 3): "abjj",
}
_DOUBLE_PAIRS_4 = (((0, 1), (2, 3), "jjkk"), ((0, 2), (1, 3), "jkjk"),
                   ((0, 3), (1, 2), "jkkj"))


@dataclass(frozen=True)
class GaussianTable:
    """Realized coordinates zeta_j^(i), i = 0..m, j = 0..p."""

    m: int
    p: int
    basis: BasisSystem
    seed: int
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    def row(self, i: int) -> np.ndarray:
        return self.values[i]


def sample_table(seed: int, m: int, p: int, basis: BasisSystem) -> GaussianTable:
    """Draw one coordinate table; entry (i, j) depends only on (seed, i, j)."""
    if m < 1 or p < 0:
        raise ValueError("need m >= 1 and p >= 0")
    values = np.empty((m + 1, p + 1))
    values[0] = phi_total_integrals(basis, p)
    values[1:] = rng.keyed_normals(
        seed, np.arange(1, m + 1)[:, None], np.arange(p + 1)[None, :])
    return GaussianTable(m, p, basis, seed, values)


def sample_table_batch(seed: int, count: int, m: int, p: int,
                       basis: BasisSystem) -> np.ndarray:
    """Stack of `count` tables; slice s equals sample_table(seed + s, ...).values."""
    values = np.empty((count, m + 1, p + 1))
    values[:, 0, :] = phi_total_integrals(basis, p)[None, :]
    seeds = (np.uint64(seed) + np.arange(count, dtype=np.uint64))[:, None, None]
    values[:, 1:, :] = rng.keyed_normals(
        seeds, np.arange(1, m + 1)[None, :, None], np.arange(p + 1)[None, None, :])
    return values


def validate_index_tuple(k: int, idx, m: int) -> tuple[int, ...]:
    idx = tuple(int(i) for i in idx)
    if len(idx) != k:
        raise ValueError(f"index tuple has arity {len(idx)}, expected {k}")
    if any(i < 0 or i > m for i in idx):
        raise ValueError(f"noise indices must lie in 0..{m}")
    return idx


def _resolve_trunc(C: CoeffTensor, trunc) -> tuple[int, ...]:
    if trunc is None:
        return C.orders
    if np.isscalar(trunc):
        trunc = (int(trunc),) * C.k
    trunc = tuple(int(v) for v in trunc)
    if C.k >= 3 and len(set(trunc)) != 1:
        raise ValueError("multiplicities 3 and 4 use a single shared truncation order")
    return trunc


def _rows(values: np.ndarray, idx, orders) -> list[np.ndarray]:
    return [values[..., i, : o + 1] for i, o in zip(idx, orders)]


def _gate(idx, a: int, b: int) -> bool:
    return idx[a] == idx[b] and idx[a] != 0


def _plain(values_C: np.ndarray, zs: list[np.ndarray]) -> np.ndarray:
    k = len(zs)
    letters = "abcd"[:k]
    spec = letters + "," + ",".join(f"...{c}" for c in letters) + "->..."
    return np.einsum(spec, values_C, *zs, optimize=True)


def _correction(values_C: np.ndarray, zs, idx, orders) -> np.ndarray:
    k = len(zs)
    batch = np.broadcast_shapes(*(z.shape[:-1] for z in zs)) if zs else ()
    out = np.zeros(batch)
    if k == 2:
        if _gate(idx, 0, 1):
            d = min(orders) + 1
            out = out + np.trace(values_C[:d, :d])
        return out
    if k == 3:
        gates = (((0, 1), "jjc->c", 2), ((1, 2), "ajj->a", 0), ((0, 2), "jbj->b", 1))
        for (a, b), sub, rem in gates:
            if _gate(idx, a, b):
                out = out + zs[rem] @ np.einsum(sub, values_C)
        return out
    for (a, b), sub in _PAIR_SUBSCRIPTS_4.items():
        if _gate(idx, a, b):
            rem = [l for l in range(4) if l not in (a, b)]
            free = [c for c in sub if sub.count(c) == 1]
            mat = np.einsum(f"{sub}->{''.join(free)}", values_C)
            out = out + np.einsum("ab,...a,...b->...", mat, zs[rem[0]], zs[rem[1]])
    for pair1, pair2, sub in _DOUBLE_PAIRS_4:
        if _gate(idx, *pair1) and _gate(idx, *pair2):
            out = out - np.einsum(f"{sub}->", values_C)
    return out


def strat_truncated_batch(C: CoeffTensor, values_Z: np.ndarray, idx,
                          trunc=None) -> np.ndarray:
    orders = _resolve_trunc(C, trunc)
    idx = validate_index_tuple(C.k, idx, values_Z.shape[-2] - 1)
    zs = _rows(values_Z, idx, orders)
    return _plain(C.truncated(orders), zs)


def ito_truncated_batch(C: CoeffTensor, values_Z: np.ndarray, idx,
                        trunc=None) -> np.ndarray:
    orders = _resolve_trunc(C, trunc)
    idx = validate_index_tuple(C.k, idx, values_Z.shape[-2] - 1)
    zs = _rows(values_Z, idx, orders)
    Ct = C.truncated(orders)
    return _plain(Ct, zs) - _correction(Ct, zs, idx, orders)


def strat_correction_batch(C: CoeffTensor, values_Z: np.ndarray, idx,
                           trunc=None) -> np.ndarray:
    orders = _resolve_trunc(C, trunc)
    idx = validate_index_tuple(C.k, idx, values_Z.shape[-2] - 1)
    zs = _rows(values_Z, idx, orders)
    return _correction(C.truncated(orders), zs, idx, orders)


def ito_truncated(C: CoeffTensor, Z: GaussianTable, idx, trunc=None) -> float:
    """Ito expansion value: the multiple sum with all indicator corrections."""
    return float(ito_truncated_batch(C, Z.values, idx, trunc))


def strat_truncated(C: CoeffTensor, Z: GaussianTable, idx, trunc=None) -> float:
    """Stratonovich expansion value: the plain multiple sum, no corrections."""
    return float(strat_truncated_batch(C, Z.values, idx, trunc))


def strat_correction(C: CoeffTensor, Z: GaussianTable, idx, trunc=None) -> float:
    """Exact finite-truncation difference strat - ito for this realization."""
    return float(strat_correction_batch(C, Z.values, idx, trunc))


def hermite_coefficients(weight: WeightFn, basis: BasisSystem, p: int):
    """(c_j, Delta): the single-level coefficient vector and int psi^2 ds."""
    c = coeff_tensor(1, p, [weight], basis).values
    return c, kernel_norm_sq(1, [weight])


def hermite_reference_batch(k: int, values_Z: np.ndarray, i: int,
                            weight: WeightFn, basis: BasisSystem, p: int) -> np.ndarray:
    if i < 1:
        raise ValueError("the closed forms apply to a single Wiener component i >= 1")
    c, Delta = hermite_coefficients(weight, basis, p)
    delta = values_Z[..., i, : p + 1] @ c
    if k == 1:
        return delta
    if k == 2:
        return (delta ** 2 - Delta) / 2.0
    if k == 3:
        return (delta ** 3 - 3.0 * delta * Delta) / 6.0
    if k == 4:
        return (delta ** 4 - 6.0 * delta ** 2 * Delta + 3.0 * Delta ** 2) / 24.0
    raise ValueError("multiplicity must be 1..4")


def hermite_reference(k: int, Z: GaussianTable, i: int, weight: WeightFn,
                      trunc: int | None = None) -> float:
    """Closed-form value of the equal-index integral with common weight psi.

    delta is truncated at the same order as the expansions it is compared
    against; Delta = int psi^2 ds is exact.
    """
    p = Z.p if trunc is None else int(trunc)
    return float(hermite_reference_batch(k, Z.values, i, weight, Z.basis, p))


def strat_guarantee_violations(k: int, weights) -> list[str]:
    """Smoothness/scope conditions under which the Stratonovich limits are stated.

    Returns human-readable violations (empty list when the configuration is
    covered).  Multiplicity 4 is only covered for constant weights.
    """
    out = []
    if k == 2:
        need = [(0, 2), (1, 1)]
    elif k == 3:
        need = [(0, 2), (1, 1), (2, 2)]
    elif k == 4:
        for l, w in enumerate(weights):
            if not w.is_one:
                out.append(
                    f"multiplicity-4 Stratonovich expansions are only covered for "
                    f"constant weights; psi_{l + 1} is not identically one")
        return out
    else:
        return out
    for pos, order in need:
        if weights[pos].smoothness_order < order:
            out.append(
                f"multiplicity-{k} Stratonovich expansions need psi_{pos + 1} to be "
                f"{order} times continuously differentiable; declared smoothness is "
                f"{weights[pos].smoothness_order}")
    return out
