"""Composite Gauss-Legendre quadrature with spectral antiderivatives.

A :class:`Grid` covers [t, T] with uniform panels, each carrying an n-point
Gauss rule and an n x n matrix that maps integrand values at the panel nodes
to values of the running integral at those same nodes.  For polynomial
integrands a single panel with enough nodes makes every operation exact to
rounding; for trigonometric integrands the panel count is tied to the total
number of periods, which drives the interpolation error below 1e-14.

This turns the nested simplex integrals used throughout the package into
chains of cheap matrix products: values -> running integral -> values.
"""

from __future__ import annotations

import numpy as np

from .basis import BasisSystem, Interval, LEGENDRE, harmonic, legendre_all

_TRIG_NODES = 14


class QuadratureError(RuntimeError):
    """Raised when an adaptive rule fails to converge."""


def _reference_antiderivative(nodes: int):
    """Matrix taking f(y_q) to int_{-1}^{y_q} f for the degree-(nodes-1) interpolant."""
    y, w = np.polynomial.legendre.leggauss(nodes)
    P = legendre_all(nodes + 1, y)
    analysis = (2.0 * np.arange(nodes) + 1.0)[:, None] / 2.0 * (P[:nodes] * w[None, :])
    synthesis = np.empty((nodes, nodes))
    synthesis[:, 0] = y + 1.0
    for k in range(1, nodes):
        synthesis[:, k] = (P[k + 1] - P[k - 1]) / (2.0 * k + 1.0)
    return synthesis @ analysis


class Grid:
    """Uniform-panel Gauss grid over an interval with running-integral support."""

    def __init__(self, interval: Interval, panels: int, nodes: int):
        if panels < 1 or nodes < 2:
            raise ValueError("need at least one panel and two nodes")
        self.interval = interval
        self.panels = panels
        self.nodes = nodes
        y, w = np.polynomial.legendre.leggauss(nodes)
        h = interval.length / panels
        edges = interval.t + h * np.arange(panels + 1)
        self.x = (edges[:-1, None] + (y[None, :] + 1.0) * (h / 2.0)).ravel()
        self.panel_weights = w * (h / 2.0)
        self.w = np.tile(self.panel_weights, panels)
        self._Q = (h / 2.0) * _reference_antiderivative(nodes)

    @property
    def size(self) -> int:
        return self.x.size

    def integrate(self, values):
        """Total integral over [t, T]; `values` has node values on the last axis."""
        return np.asarray(values) @ self.w

    def indefinite(self, values):
        """Running integral int_t^{x_q} f at every node, batched over leading axes."""
        v = np.asarray(values, dtype=float)
        shaped = v.reshape(v.shape[:-1] + (self.panels, self.nodes))
        partial = shaped @ self._Q.T
        totals = shaped @ self.panel_weights
        offsets = np.cumsum(totals, axis=-1) - totals
        return (partial + offsets[..., None]).reshape(v.shape)

    def remaining(self, values):
        """int_{x_q}^T f at every node."""
        v = np.asarray(values, dtype=float)
        total = self.integrate(v)
        return total[..., None] - self.indefinite(v)


def chain_grid(basis: BasisSystem, index_orders, poly_degree_extra: int = 0,
               min_nodes: int = 8) -> Grid:
    """Grid of sufficient resolution for a nested-antiderivative chain.

    `index_orders` lists the highest basis index used at each nesting level;
    `poly_degree_extra` accounts for polynomial weight factors plus the degree
    bumps from running integrals.
    """
    orders = [int(j) for j in index_orders]
    if basis.kind == LEGENDRE:
        degree = sum(orders) + poly_degree_extra + len(orders) + 2
        return Grid(basis.interval, 1, max(min_nodes, degree // 2 + 3))
    periods = sum(harmonic(j) for j in orders)
    panels = max(4, periods + 4)
    return Grid(basis.interval, panels, _TRIG_NODES)


def adaptive_chain_values(make_value, start_panels: int, nodes: int = _TRIG_NODES,
                          interval: Interval | None = None, tol: float = 1e-13,
                          max_refinements: int = 6):
    """Evaluate `make_value(grid) -> float` on successively refined grids.

    Returns the first value whose refinement changes it by less than `tol`.
    Used for weights without a known polynomial degree.
    """
    panels = max(1, start_panels)
    prev = None
    for _ in range(max_refinements + 1):
        grid = Grid(interval, panels, nodes)
        val = float(make_value(grid))
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        panels *= 2
    raise QuadratureError(
        f"nested quadrature did not converge to {tol:g} after "
        f"{max_refinements} refinements (last panels={panels // 2})")
