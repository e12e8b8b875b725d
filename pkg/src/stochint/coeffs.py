"""Fourier coefficients of the iterated-integration kernel.

The kernel of a multiplicity-k iterated integral is the product of the
weight functions restricted to the ordered simplex t < t_1 < ... < t_k < T.
Its Fourier coefficient against phi_{j_1} x ... x phi_{j_k} is computed as a
chain of running integrals:

    F_1(s) = int_t^s psi_1 phi_{j_1},   F_l(s) = int_t^s psi_l phi_{j_l} F_{l-1},

with the coefficient equal to F_k(T).  On a :class:`~stochint.quadrature.Grid`
each link in the chain is one matrix product, so dense coefficient tensors up
to multiplicity 4 are cheap and, for polynomial data, exact to rounding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import BasisSystem, Interval, LEGENDRE
from .quadrature import Grid, QuadratureError, chain_grid

WEIGHT_ONE = "one"
WEIGHT_MONOMIAL = "monomial"
WEIGHT_CUSTOM = "custom"

DEFAULT_MAX_ENTRIES = 64 ** 4


class TensorSizeError(MemoryError):
    """Requested dense tensor exceeds the configured entry cap."""


@dataclass(frozen=True)
class WeightFn:
    """One weight factor psi_l of the integrand.

    `monomial` means psi(s) = (t - s)**q on the carried interval; `custom`
    wraps an arbitrary smooth callable together with its declared number of
    continuous derivatives (monomials and the constant are C-infinity).
    """

    kind: str
    interval: Interval
    q: int = 0
    fn: Callable | None = field(default=None, compare=False)
    smoothness: float = math.inf

    def __post_init__(self):
        if self.kind not in (WEIGHT_ONE, WEIGHT_MONOMIAL, WEIGHT_CUSTOM):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.kind == WEIGHT_MONOMIAL and self.q < 0:
            raise ValueError("monomial exponent must be nonnegative")
        if self.kind == WEIGHT_CUSTOM and self.fn is None:
            raise ValueError("custom weight needs a callable")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == WEIGHT_ONE:
            return np.ones_like(s)
        if self.kind == WEIGHT_MONOMIAL:
            return (self.interval.t - s) ** self.q
        return np.asarray(self.fn(s), dtype=float)

    @property
    def poly_degree(self) -> int | None:
        """Polynomial degree, or None when the weight is not a polynomial."""
        if self.kind == WEIGHT_ONE:
            return 0
        if self.kind == WEIGHT_MONOMIAL:
            return self.q
        return None

    @property
    def smoothness_order(self) -> float:
        return math.inf if self.kind != WEIGHT_CUSTOM else self.smoothness

    @property
    def is_one(self) -> bool:
        return self.kind == WEIGHT_ONE or (self.kind == WEIGHT_MONOMIAL and self.q == 0)


def weight_one(interval: Interval) -> WeightFn:
    return WeightFn(WEIGHT_ONE, interval)


def weight_monomial(q: int, interval: Interval) -> WeightFn:
    return WeightFn(WEIGHT_MONOMIAL, interval, q=q)


def weight_custom(fn: Callable, smoothness: int, interval: Interval) -> WeightFn:
    return WeightFn(WEIGHT_CUSTOM, interval, fn=fn, smoothness=smoothness)


@dataclass(frozen=True)
class CoeffTensor:
    """Dense tensor of kernel Fourier coefficients.

    `values[j_1, ..., j_k]` is the coefficient whose innermost integration
    variable carries index j_1 and whose outermost carries j_k.
    """

    k: int
    orders: tuple[int, ...]
    basis: BasisSystem
    weights: tuple[WeightFn, ...]
    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    def truncated(self, orders: Sequence[int]) -> np.ndarray:
        """View of the tensor truncated to the given per-dimension orders."""
        orders = tuple(int(o) for o in orders)
        if len(orders) != self.k:
            raise ValueError("truncation arity must match multiplicity")
        if any(o < 0 or o > built for o, built in zip(orders, self.orders)):
            raise ValueError(f"truncation {orders} exceeds built orders {self.orders}")
        return self.values[tuple(slice(0, o + 1) for o in orders)]


def _normalize_orders(k: int, p) -> tuple[int, ...]:
    if np.isscalar(p):
        return (int(p),) * k
    orders = tuple(int(v) for v in p)
    if len(orders) != k:
        raise ValueError("need one truncation order per dimension")
    if k >= 3 and len(set(orders)) != 1:
        raise ValueError("multiplicities 3 and 4 use a single shared order")
    return orders


def _check_weights(k: int, weights: Sequence[WeightFn], basis: BasisSystem | None):
    weights = tuple(weights)
    if len(weights) != k:
        raise ValueError(f"need {k} weights, got {len(weights)}")
    iv = basis.interval if basis is not None else weights[0].interval
    for w in weights:
        if w.interval != iv:
            raise ValueError("weight interval disagrees with basis interval")
    return weights


def _tensor_on_grid(grid: Grid, orders, weights, basis: BasisSystem) -> np.ndarray:
    from .basis import phi_matrix

    k = len(orders)
    psi = [w(grid.x) for w in weights]
    phis = [phi_matrix(basis, orders[l], grid.x) for l in range(k)]
    wphi_last = phis[-1] * (psi[-1] * grid.w)[None, :]

    F1 = grid.indefinite(phis[0] * psi[0][None, :])
    if k == 1:
        return grid.integrate(phis[0] * psi[0][None, :])
    if k == 2:
        return F1 @ wphi_last.T
    p2 = orders[1]
    if k == 3:
        C = np.empty(tuple(o + 1 for o in orders))
        for j2 in range(p2 + 1):
            F2 = grid.indefinite(phis[1][j2][None, :] * psi[1][None, :] * F1)
            C[:, j2, :] = F2 @ wphi_last.T
        return C
    p3 = orders[2]
    C = np.empty(tuple(o + 1 for o in orders))
    for j2 in range(p2 + 1):
        F2 = grid.indefinite(phis[1][j2][None, :] * psi[1][None, :] * F1)
        for j3 in range(p3 + 1):
            F3 = grid.indefinite(phis[2][j3][None, :] * psi[2][None, :] * F2)
            C[:, j2, j3, :] = F3 @ wphi_last.T
    return C


def _weights_poly_extra(weights) -> int | None:
    total = 0
    for w in weights:
        d = w.poly_degree
        if d is None:
            return None
        total += d
    return total


def coeff_tensor(k: int, p, weights: Sequence[WeightFn], basis: BasisSystem,
                 max_entries: int = DEFAULT_MAX_ENTRIES) -> CoeffTensor:
    """Dense coefficient tensor for multiplicity k at truncation order(s) p.

    p may be a scalar or, for k <= 2, a per-dimension pair.  Raises
    :class:`TensorSizeError` beyond `max_entries` (default keeps the k = 4
    tensor at or below 64^4 doubles) and :class:`QuadratureError` when an
    adaptive rule for a custom weight fails to settle.
    """
    if k not in (1, 2, 3, 4):
        raise ValueError("multiplicity must be 1..4")
    orders = _normalize_orders(k, p)
    weights = _check_weights(k, weights, basis)
    entries = int(np.prod([o + 1 for o in orders]))
    if entries > max_entries:
        raise TensorSizeError(
            f"tensor with orders {orders} needs {entries} entries "
            f"(> cap {max_entries}); raise max_entries explicitly to allow it")

    extra = _weights_poly_extra(weights)
    if extra is not None:
        grid = chain_grid(basis, orders, poly_degree_extra=extra)
        values = _tensor_on_grid(grid, orders, weights, basis)
    else:
        base = chain_grid(basis, orders, poly_degree_extra=0)
        values = _tensor_on_grid(base, orders, weights, basis)
        refined = Grid(basis.interval, base.panels * 2, base.nodes)
        check = _tensor_on_grid(refined, orders, weights, basis)
        err = float(np.max(np.abs(values - check)))
        if err > 1e-12:
            finer = Grid(basis.interval, base.panels * 4, base.nodes)
            values, check = check, _tensor_on_grid(finer, orders, weights, basis)
            err = float(np.max(np.abs(values - check)))
            if err > 1e-12:
                raise QuadratureError(
                    f"custom-weight tensor did not converge (last change {err:.2e})")
            values = check
        else:
            values = check
    return CoeffTensor(k, orders, basis, weights, values)


def fourier_coeff(k: int, j: Sequence[int], weights: Sequence[WeightFn],
                  basis: BasisSystem) -> float:
    """Single kernel Fourier coefficient for index tuple (j_1, ..., j_k)."""
    j = tuple(int(v) for v in j)
    if len(j) != k:
        raise ValueError("index tuple arity must equal multiplicity")
    if any(v < 0 for v in j):
        raise ValueError("basis indices must be nonnegative")
    weights = _check_weights(k, weights, basis)
    from .basis import phi_matrix

    def chain(grid: Grid) -> float:
        F = None
        for l in range(k):
            row = phi_matrix(basis, j[l], grid.x)[j[l]] * weights[l](grid.x)
            if F is None:
                cur = row
            else:
                cur = row * F
            if l == k - 1:
                return float(grid.integrate(cur))
            F = grid.indefinite(cur)

    extra = _weights_poly_extra(weights)
    if extra is not None:
        return chain(chain_grid(basis, j, poly_degree_extra=extra))
    base = chain_grid(basis, j, poly_degree_extra=0)
    first = chain(base)
    second = chain(Grid(basis.interval, base.panels * 2, base.nodes))
    if abs(first - second) > 1e-12 * max(1.0, abs(second)):
        third = chain(Grid(basis.interval, base.panels * 4, base.nodes))
        if abs(second - third) > 1e-12 * max(1.0, abs(third)):
            raise QuadratureError("custom-weight coefficient did not converge")
        return third
    return second


def kernel_norm_sq(k: int, weights: Sequence[WeightFn]) -> float:
    """Squared L2 norm of the kernel: the simplex integral of prod psi_l^2."""
    if k not in (1, 2, 3, 4):
        raise ValueError("multiplicity must be 1..4")
    weights = _check_weights(k, weights, None)
    iv = weights[0].interval

    def chain(grid: Grid) -> float:
        F = None
        for l in range(k):
            row = weights[l](grid.x) ** 2
            cur = row if F is None else row * F
            if l == k - 1:
                return float(grid.integrate(cur))
            F = grid.indefinite(cur)

    extra = _weights_poly_extra(weights)
    if extra is not None:
        nodes = max(8, (2 * extra + k + 2) // 2 + 3)
        return chain(Grid(iv, 1, nodes))
    first = chain(Grid(iv, 8, 14))
    second = chain(Grid(iv, 16, 14))
    if abs(first - second) > 1e-13 * max(1.0, abs(second)):
        third = chain(Grid(iv, 32, 14))
        if abs(second - third) > 1e-13 * max(1.0, abs(third)):
            raise QuadratureError("kernel norm quadrature did not converge")
        return third
    return second


def trace_sum(p: int, weights: Sequence[WeightFn], basis: BasisSystem) -> float:
    """Diagonal coefficient sum of the multiplicity-2 tensor, sum_{j<=p} C_jj."""
    weights = _check_weights(2, weights, basis)
    from .basis import phi_matrix

    def run(grid: Grid) -> float:
        Phi = phi_matrix(basis, p, grid.x)
        F1 = grid.indefinite(Phi * weights[0](grid.x)[None, :])
        diag = ((Phi * (weights[1](grid.x) * grid.w)[None, :]) * F1).sum(axis=1)
        return float(diag.sum())

    extra = _weights_poly_extra(weights)
    if extra is not None:
        return run(chain_grid(basis, (p, p), poly_degree_extra=extra))
    base = chain_grid(basis, (p, p), poly_degree_extra=0)
    first, second = run(base), run(Grid(basis.interval, base.panels * 2, base.nodes))
    if abs(first - second) > 1e-12 * max(1.0, abs(second)):
        raise QuadratureError("trace-sum quadrature did not converge")
    return second


def half_weight_product_integral(weights: Sequence[WeightFn]) -> float:
    """Exact 0.5 * int_t^T psi_1 psi_2, the limit of the diagonal trace."""
    weights = _check_weights(2, weights, None)
    iv = weights[0].interval
    extra = _weights_poly_extra(weights)
    if extra is not None:
        grid = Grid(iv, 1, max(8, extra // 2 + 3))
        return 0.5 * float(grid.integrate(weights[0](grid.x) * weights[1](grid.x)))
    vals = []
    for panels in (8, 16, 32):
        grid = Grid(iv, panels, 14)
        vals.append(0.5 * float(grid.integrate(weights[0](grid.x) * weights[1](grid.x))))
    if abs(vals[-1] - vals[-2]) > 1e-13 * max(1.0, abs(vals[-1])):
        raise QuadratureError("weight-product quadrature did not converge")
    return vals[-1]
