"""Strong SDE schemes driven by the expansion engine.

Euler and Milstein steps for dx = a dt + B dW, with the Milstein pair
integrals I_(i1 i2) supplied per step either from increment products alone
(the order-0 truncation) or from the truncated series expansion coupled to
sub-increments of a shared fine Wiener path.  The strong-order study
measures pathwise errors against the finest-grid solution driven by the
same paths, which is what makes the measured rates strong rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng
from .basis import BasisSystem, Interval, LEGENDRE, phi_matrix
from .coeffs import coeff_tensor, weight_one

EULER = "euler"
MILSTEIN = "milstein"


class IntegrationError(RuntimeError):
    """Trajectory left the finite range; message carries the step index."""


@dataclass(frozen=True)
class SdeModel:
    """Ito system dx = drift dt + sum_i diffusion[:, i] dW_i.

    `diffusion_jacobian(x, s)[..., a, b, i]` is the derivative of diffusion
    column i, component a, with respect to state component b.  Callables
    must accept batched states of shape (..., dim).
    """

    dim: int
    m: int
    x0: np.ndarray
    drift: Callable
    diffusion: Callable
    diffusion_jacobian: Callable | None = field(default=None, compare=False)


def noncommutative_model() -> SdeModel:
    """2-dimensional, 2-noise system whose diffusion columns do not commute."""

    c = 0.4

    def drift(x, s):
        return np.stack([-0.5 * x[..., 0] + 0.1 * x[..., 1],
                         -0.5 * x[..., 1] - 0.1 * x[..., 0]], axis=-1)

    def diffusion(x, s):
        one = np.ones_like(x[..., 0])
        col1 = np.stack([one, c * x[..., 0]], axis=-1)
        col2 = np.stack([c * x[..., 1], one], axis=-1)
        return np.stack([col1, col2], axis=-1)

    def diffusion_jacobian(x, s):
        out = np.zeros(x.shape[:-1] + (2, 2, 2))
        out[..., 1, 0, 0] = c  # d B_{2,1} / d x_1
        out[..., 0, 1, 1] = c  # d B_{1,2} / d x_2
        return out

    return SdeModel(2, 2, np.array([1.0, 1.0]), drift, diffusion, diffusion_jacobian)


def commutative_model(mu: float = 0.05, a1: float = 0.3, a2: float = 0.2) -> SdeModel:
    """Scalar equation with two proportional noise columns (commuting)."""

    def drift(x, s):
        return mu * x

    def diffusion(x, s):
        return np.stack([a1 * x, a2 * x], axis=-1)

    def diffusion_jacobian(x, s):
        out = np.zeros(x.shape[:-1] + (1, 1, 2))
        out[..., 0, 0, 0] = a1
        out[..., 0, 0, 1] = a2
        return out

    return SdeModel(1, 2, np.array([1.0]), drift, diffusion, diffusion_jacobian)


def linear_model(lam: float = 0.8) -> SdeModel:
    """dx = lam x dW with a single noise component and no drift."""

    def drift(x, s):
        return np.zeros_like(x)

    def diffusion(x, s):
        return (lam * x)[..., None]

    def diffusion_jacobian(x, s):
        out = np.zeros(x.shape[:-1] + (1, 1, 1))
        out[..., 0, 0, 0] = lam
        return out

    return SdeModel(1, 1, np.array([1.0]), drift, diffusion, diffusion_jacobian)


def zero_diffusion_model(rate: float = 1.3) -> SdeModel:
    """Deterministic decay dx = -rate x dt (diffusion identically zero)."""

    def drift(x, s):
        return -rate * x

    def diffusion(x, s):
        return np.zeros(x.shape + (1,))

    def diffusion_jacobian(x, s):
        return np.zeros(x.shape[:-1] + (1, 1, 1))

    return SdeModel(1, 1, np.array([1.0]), drift, diffusion, diffusion_jacobian)


def pair_integrals(dw: np.ndarray, h: float) -> np.ndarray:
    """I_(i1 i2) from increment products only.

    Off-diagonal entries are the symmetric half-products, diagonal entries
    the exact same-index values (dw_i^2 - h)/2; identical to the order-0
    truncation of the coupled expansion.
    """
    outer = 0.5 * dw[..., :, None] * dw[..., None, :]
    eye = np.eye(dw.shape[-1])
    return outer - 0.5 * h * eye


class ExpansionIntegralSource:
    """Pair integrals from the truncated expansion on each step window.

    Coordinates are extracted from the sub-increments of the step by the
    left-point rule, so every consumer of the step (scheme and reference)
    sees integrals coupled to one underlying fine path.
    """

    def __init__(self, p: int):
        self.p = p
        self._unit = BasisSystem(LEGENDRE, Interval(0.0, 1.0))
        self.C01 = coeff_tensor(2, p, [weight_one(self._unit.interval)] * 2,
                                self._unit).values
        self.trace01 = float(np.trace(self.C01))
        self._phi_cache: dict[int, np.ndarray] = {}

    def _phi01(self, n_sub: int) -> np.ndarray:
        if n_sub not in self._phi_cache:
            u_left = np.arange(n_sub) / n_sub
            self._phi_cache[n_sub] = phi_matrix(self._unit, self.p, u_left)
        return self._phi_cache[n_sub]

    def integrals(self, sub_dw: np.ndarray, h: float) -> np.ndarray:
        """sub_dw has shape (..., m, n_sub); returns (..., m, m)."""
        zeta = (sub_dw @ self._phi01(sub_dw.shape[-1]).T) / math.sqrt(h)
        plain = np.einsum("ab,...ia,...jb->...ij", self.C01, zeta, zeta, optimize=True)
        eye = np.eye(sub_dw.shape[-2])
        return h * (plain - self.trace01 * eye)


def strong_step(model: SdeModel, scheme: str, state, t0: float, h: float,
                dw, pair_ints=None):
    """One strong step; `pair_ints` (m, m) is required for Milstein."""
    x = np.asarray(state, dtype=float)
    a = model.drift(x, t0)
    B = model.diffusion(x, t0)
    nxt = x + a * h + np.einsum("...ai,...i->...a", B, np.asarray(dw))
    if scheme == EULER:
        return nxt
    if scheme != MILSTEIN:
        raise ValueError(f"unknown scheme {scheme!r}")
    if pair_ints is None:
        raise ValueError("Milstein needs the pair integrals I_(i1 i2)")
    if model.diffusion_jacobian is None:
        raise ValueError("Milstein needs the diffusion Jacobian")
    dB = model.diffusion_jacobian(x, t0)
    lam = np.einsum("...abj,...bi->...aij", dB, B)
    return nxt + np.einsum("...aij,...ij->...a", lam, np.asarray(pair_ints))


@dataclass(frozen=True)
class StrongOrderResult:
    h: np.ndarray
    errors: np.ndarray
    slope: float
    scheme: str
    n_paths: int
    reference_h: float


def _integrate_level(model, scheme, dw, pair_ints, h, t_start=0.0):
    """March a full level; dw shape (paths, steps, m), pair_ints same leading."""
    n_paths, steps, _ = dw.shape
    x = np.broadcast_to(model.x0, (n_paths, model.dim)).copy()
    for n in range(steps):
        x = strong_step(model, scheme, x, t_start + n * h, h, dw[:, n],
                        None if pair_ints is None else pair_ints[:, n])
        if not np.all(np.isfinite(x)):
            raise IntegrationError(f"non-finite state at step {n} (h={h})")
    return x


def strong_order_study(model: SdeModel, scheme: str, h_list, n_paths: int,
                       seed: int = 0, p: int = 64, t_end: float = 1.0,
                       ref_h: float | None = None, n_sub: int = 8,
                       path_chunk: int = 100) -> StrongOrderResult:
    """Measure strong error against a shared-path fine reference solution.

    Every level, including the reference (Milstein at `ref_h`), consumes
    increments aggregated from one fine path per seed, and pair integrals
    from the expansion source at order `p` on its own step windows.
    """
    h_list = sorted(float(h) for h in h_list)
    if ref_h is None:
        ref_h = h_list[0] / 4.0
    steps_ref = round(t_end / ref_h)
    if abs(steps_ref * ref_h - t_end) > 1e-12:
        raise ValueError("reference step must divide the horizon")
    for h in h_list:
        ratio = h / ref_h
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("every step size must be a multiple of the reference step")
    N_f = steps_ref * n_sub
    levels = h_list + [ref_h]
    source = ExpansionIntegralSource(p)

    store = {}
    for h in levels:
        steps = round(t_end / h)
        store[h] = (np.empty((n_paths, steps, model.m)),
                    np.empty((n_paths, steps, model.m, model.m)))

    std = math.sqrt(t_end / N_f)
    done = 0
    while done < n_paths:
        nchunk = min(path_chunk, n_paths - done)
        fine = np.empty((nchunk, model.m, N_f))
        for s in range(nchunk):
            for i in range(1, model.m + 1):
                fine[s, i - 1] = rng.component_stream(seed + done + s, i).standard_normal(N_f)
        fine *= std
        for h in levels:
            steps = round(t_end / h)
            sub = N_f // steps
            sub_dw = fine.reshape(nchunk, model.m, steps, sub).transpose(0, 2, 1, 3)
            dw_store, ii_store = store[h]
            dw_store[done:done + nchunk] = sub_dw.sum(axis=-1)
            ii_store[done:done + nchunk] = source.integrals(sub_dw, h)
        done += nchunk

    terminal = {}
    for h in levels:
        dw_store, ii_store = store[h]
        terminal[h] = _integrate_level(
            model, MILSTEIN if h == ref_h else scheme, dw_store,
            None if scheme == EULER and h != ref_h else ii_store, h)

    ref = terminal[ref_h]
    errs = np.array([
        float(np.mean(np.linalg.norm(terminal[h] - ref, axis=-1))) for h in h_list])
    slope = float(np.polyfit(np.log(np.array(h_list)), np.log(errs), 1)[0])
    return StrongOrderResult(np.array(h_list), errs, slope, scheme, n_paths, ref_h)
