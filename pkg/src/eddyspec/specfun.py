"""Special functions and quadrature support for the coil kernel.

The forward model needs three numerical ingredients that have nothing to
do with any particular plate: the Bessel functions J0 and J1, the radial
coil integral P(a) = int_{a*r1}^{a*r2} x J1(x) dx, and a fixed quadrature
grid on the spatial-frequency axis.  They live here so the physics
modules stay free of quadrature bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import integrate, special

__all__ = [
    "QuadratureGrid",
    "bessel_j0",
    "bessel_j1",
    "p_integral",
    "build_grid",
]

# Gauss-Legendre points per panel of the composite grid.  16 keeps single
# panels exact for low-degree polynomials and converges spectrally for the
# smooth kernels integrated here.
_PANEL_ORDER = 16


def bessel_j0(x):
    """Bessel function of the first kind, order zero.

    Accepts scalars or arrays; finite input only.
    """
    return special.j0(x)


def bessel_j1(x):
    """Bessel function of the first kind, order one (odd in x)."""
    return special.j1(x)


def _xj1(x: float) -> float:
    return x * special.j1(x)


def p_integral(alpha: float, r1: float, r2: float, rel_tol: float = 1e-10) -> float:
    """Radial coil weighting integral int_{alpha*r1}^{alpha*r2} x J1(x) dx.

    Evaluated by adaptive panel quadrature to ``rel_tol`` relative
    accuracy.  For alpha -> 0 the integrand behaves like x^2/2, so the
    value falls off as alpha^3 (r2^3 - r1^3)/6; at alpha = 0 the window
    is empty and the integral is exactly zero.
    """
    if not 0.0 < r1 < r2:
        raise ValueError(f"coil radii must satisfy 0 < r1 < r2, got r1={r1}, r2={r2}")
    if alpha < 0.0:
        raise ValueError(f"alpha must be nonnegative, got {alpha}")
    if alpha == 0.0:
        return 0.0
    # Windows that straddle a zero of the integral cannot meet a purely
    # relative stopping rule; the absolute floor sits at the roundoff
    # scale of these O(1) integrands.
    val, _ = integrate.quad(
        _xj1, alpha * r1, alpha * r2, epsabs=1e-14, epsrel=rel_tol, limit=400
    )
    return val


@dataclass(frozen=True)
class QuadratureGrid:
    """Fixed nodes and weights for integrals over spatial frequency.

    Nodes are strictly increasing and strictly positive, weights strictly
    positive; together they integrate smooth functions over (0, alpha_max].
    """

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise ValueError("nodes and weights must be matching 1-d arrays")
        if nodes.size and nodes[0] <= 0.0:
            raise ValueError("quadrature nodes must be strictly positive")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if np.any(weights <= 0.0):
            raise ValueError("quadrature weights must be strictly positive")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.nodes.size

    def integrate(self, values: np.ndarray):
        """Weighted sum approximating the integral of sampled values."""
        return np.sum(self.weights * values, axis=-1)


@lru_cache(maxsize=64)
def _panel_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = leggauss(order)
    return x, w


def build_grid(alpha_max: float, n_nodes: int = 2048) -> QuadratureGrid:
    """Composite Gauss-Legendre grid on (0, alpha_max] with exactly n_nodes.

    The interval is split into uniform panels of 16-point rules; any
    remainder nodes are absorbed by enlarging the last panel's rule, so
    the total node count is exactly what was asked for.
    """
    if alpha_max <= 0.0:
        raise ValueError(f"alpha_max must be positive, got {alpha_max}")
    if n_nodes < _PANEL_ORDER:
        raise ValueError(f"n_nodes must be at least {_PANEL_ORDER}, got {n_nodes}")
    n_panels = n_nodes // _PANEL_ORDER
    orders = [_PANEL_ORDER] * n_panels
    orders[-1] += n_nodes % _PANEL_ORDER
    edges = np.linspace(0.0, alpha_max, n_panels + 1)
    nodes = np.empty(n_nodes)
    weights = np.empty(n_nodes)
    pos = 0
    for i, order in enumerate(orders):
        x, w = _panel_rule(order)
        half = 0.5 * (edges[i + 1] - edges[i])
        mid = 0.5 * (edges[i + 1] + edges[i])
        nodes[pos : pos + order] = mid + half * x
        weights[pos : pos + order] = half * w
        pos += order
    return QuadratureGrid(nodes=nodes, weights=weights)
