"""Fine-grid simulation oracle for iterated stochastic integrals.

The oracle approximates the integrals directly by nested integral sums over
a uniform partition of [t, T]: left-endpoint evaluation for the Ito forms,
midpoint (or trapezoidal) evaluation for the Stratonovich forms.  Gaussian
coordinates can be extracted from the same path, which couples a truncated
series expansion to the path realization and makes the difference between
the two a strong (pathwise) error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .basis import BasisSystem, Interval, phi_matrix, phi_total_integrals
from .coeffs import CoeffTensor, WeightFn, kernel_norm_sq
from .expand import (GaussianTable, ito_truncated_batch, strat_truncated_batch,
                     validate_index_tuple)

MIDPOINT = "midpoint"
TRAPEZOID = "trapezoid"


@dataclass(frozen=True)
class WienerPath:
    """Increments of an m-component Wiener process on a uniform grid."""

    interval: Interval
    m: int
    N: int
    seed: int
    dW: np.ndarray  # shape (m, N)

    def __post_init__(self):
        self.dW.setflags(write=False)

    @property
    def dt(self) -> float:
        return self.interval.length / self.N

    @property
    def times(self) -> np.ndarray:
        return self.interval.t + self.dt * np.arange(self.N + 1)


def sample_path(seed: int, m: int, N: int, interval: Interval) -> WienerPath:
    """Uniform-grid Wiener increments, variance (T-t)/N per component."""
    if N < 2:
        raise ValueError("need at least two grid cells")
    std = math.sqrt(interval.length / N)
    dW = np.empty((m, N))
    for i in range(1, m + 1):
        dW[i - 1] = std * rng.component_stream(seed, i).standard_normal(N)
    return WienerPath(interval, m, N, seed, dW)


def sample_path_batch(seed: int, count: int, m: int, N: int,
                      interval: Interval) -> np.ndarray:
    """Stack of increments, shape (count, m, N); slice s uses seed + s."""
    std = math.sqrt(interval.length / N)
    out = np.empty((count, m, N))
    for s in range(count):
        for i in range(1, m + 1):
            out[s, i - 1] = rng.component_stream(seed + s, i).standard_normal(N)
    out *= std
    return out


def ito_sum_batch(path_dW: np.ndarray, k: int, weights, idx,
                  interval: Interval) -> np.ndarray:
    """Left-endpoint nested sum over the strict simplex l_1 < ... < l_k."""
    N = path_dW.shape[-1]
    m = path_dW.shape[-2]
    idx = validate_index_tuple(k, idx, m)
    dt = interval.length / N
    tau = interval.t + dt * np.arange(N)
    S = None
    for l, i in enumerate(idx):
        psi = weights[l](tau)
        if i == 0:
            incr = np.broadcast_to(np.full(N, dt), path_dW.shape[:-2] + (N,))
        else:
            incr = path_dW[..., i - 1, :]
        u = psi * incr if S is None else psi * incr * S
        if l == k - 1:
            return u.sum(axis=-1)
        cum = np.cumsum(u, axis=-1)
        S = np.concatenate([np.zeros(u.shape[:-1] + (1,)), cum[..., :-1]], axis=-1)


def strat_sum_batch(path_dW: np.ndarray, k: int, weights, idx,
                    interval: Interval, rule: str = MIDPOINT) -> np.ndarray:
    """Nested sum with symmetric-rule increments on Wiener dimensions.

    `midpoint` evaluates the weight at the cell midpoint and the inner
    running value as the endpoint average; `trapezoid` averages the full
    integrand at the cell endpoints.  Both converge to the Stratonovich
    integral; midpoint is the default.
    """
    if rule not in (MIDPOINT, TRAPEZOID):
        raise ValueError(f"unknown discretization rule {rule!r}")
    N = path_dW.shape[-1]
    m = path_dW.shape[-2]
    idx = validate_index_tuple(k, idx, m)
    dt = interval.length / N
    tau = interval.t + dt * np.arange(N + 1)
    tau_mid = tau[:-1] + dt / 2.0
    V_prev = None  # inclusive running values of the previous level at grid points
    for l, i in enumerate(idx):
        if i == 0:
            incr = np.broadcast_to(np.full(N, dt), path_dW.shape[:-2] + (N,))
        else:
            incr = path_dW[..., i - 1, :]
        w = weights[l]
        if V_prev is None:
            u = (w(tau_mid) if rule == MIDPOINT else
                 0.5 * (w(tau[:-1]) + w(tau[1:]))) * incr
        else:
            cum = np.cumsum(V_prev, axis=-1)
            left = np.concatenate([np.zeros(cum.shape[:-1] + (1,)), cum[..., :-1]],
                                  axis=-1)
            right = cum
            if rule == MIDPOINT:
                u = w(tau_mid) * 0.5 * (left + right) * incr
            else:
                u = 0.5 * (w(tau[:-1]) * left + w(tau[1:]) * right) * incr
        if l == k - 1:
            return u.sum(axis=-1)
        V_prev = u


def ito_sum(path: WienerPath, k: int, weights, idx) -> float:
    return float(ito_sum_batch(path.dW, k, weights, idx, path.interval))


def strat_sum(path: WienerPath, k: int, weights, idx, rule: str = MIDPOINT) -> float:
    return float(strat_sum_batch(path.dW, k, weights, idx, path.interval, rule))


def zeta_matrix_batch(path_dW: np.ndarray, basis: BasisSystem, p: int,
                      N: int) -> np.ndarray:
    """Coordinates from paths: row 0 deterministic, rows i >= 1 left-point sums."""
    interval = basis.interval
    dt = interval.length / N
    tau = interval.t + dt * np.arange(N)
    Phi = phi_matrix(basis, p, tau)
    lead = path_dW.shape[:-2]
    m = path_dW.shape[-2]
    out = np.empty(lead + (m + 1, p + 1))
    out[..., 0, :] = phi_total_integrals(basis, p)
    out[..., 1:, :] = path_dW @ Phi.T
    return out


def zeta_from_path(path: WienerPath, basis: BasisSystem, p: int) -> GaussianTable:
    """Gaussian coordinate table coupled to the given path realization."""
    values = zeta_matrix_batch(path.dW, basis, p, path.N)
    return GaussianTable(path.m, p, basis, path.seed, values)


@dataclass(frozen=True)
class MseResult:
    mse: float
    ci_halfwidth: float  # 3 sigma of the sample mean of squared errors
    parseval_bound: float | None
    n_seeds: int


def parseval_residual(C: CoeffTensor, trunc=None) -> float:
    """kernel_norm_sq minus the retained coefficient mass (Bessel remainder)."""
    vals = C.truncated(trunc) if trunc is not None else C.values
    return kernel_norm_sq(C.k, C.weights) - float((vals ** 2).sum())


def mse_pathwise(k: int, weights, idx, p, N: int, seeds: int, C: CoeffTensor,
                 mode: str = "ito", seed0: int = 0, chunk: int = 256,
                 rule: str = MIDPOINT) -> MseResult:
    """Strong error of the truncated expansion against the integral-sum oracle.

    For each seed a fine path drives both the oracle sum and, through
    :func:`zeta_matrix_batch`, the expansion; the squared differences are
    averaged with compensated summation.  For multiplicity <= 2 with
    pairwise-distinct nonzero indices the Parseval remainder is attached for
    comparison.
    """
    basis = C.basis
    interval = basis.interval
    m = max(1, max(int(i) for i in idx))
    idx = validate_index_tuple(k, idx, m)
    sq_sums = []
    done = 0
    pmax = max(C.orders)
    while done < seeds:
        n = min(chunk, seeds - done)
        dW = sample_path_batch(seed0 + done, n, m, N, interval)
        Z = zeta_matrix_batch(dW, basis, pmax, N)
        if mode == "ito":
            approx = ito_truncated_batch(C, Z, idx, trunc=p)
            exact = ito_sum_batch(dW, k, weights, idx, interval)
        else:
            approx = strat_truncated_batch(C, Z, idx, trunc=p)
            exact = strat_sum_batch(dW, k, weights, idx, interval, rule)
        sq = (approx - exact) ** 2
        sq_sums.append((float(sq.sum()), float((sq ** 2).sum()), n))
        done += n
    total = math.fsum(s for s, _, _ in sq_sums)
    total2 = math.fsum(s2 for _, s2, _ in sq_sums)
    mse = total / seeds
    var = max(total2 / seeds - mse ** 2, 0.0)
    ci = 3.0 * math.sqrt(var / seeds)
    bound = None
    if k <= 2 and len(set(idx)) == k and all(i != 0 for i in idx):
        bound = parseval_residual(C, trunc=(p,) * k if np.isscalar(p) else p)
    return MseResult(mse, ci, bound, seeds)
