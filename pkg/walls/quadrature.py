"""Composite Gauss-Legendre quadrature with a panel-doubling error check."""

from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss


@lru_cache(maxsize=None)
def gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    nodes, weights = leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def panel_nodes(edges: np.ndarray, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the composite rule on consecutive panels ``edges``."""
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def refine(edges: np.ndarray) -> np.ndarray:
    """Split every panel in two."""
    edges = np.asarray(edges, dtype=float)
    mids = 0.5 * (edges[1:] + edges[:-1])
    out = np.empty(2 * edges.size - 1)
    out[0::2] = edges
    out[1::2] = mids
    return out


def integrate(f: Callable[[np.ndarray], np.ndarray], edges: np.ndarray, order: int = 16):
    nodes, weights = panel_nodes(edges, order)
    return np.dot(weights, f(nodes))


def integrate_checked(f: Callable[[np.ndarray], np.ndarray], edges: np.ndarray, order: int = 16):
    """Return (value on refined panels, |refined - coarse|)."""
    coarse = integrate(f, edges, order)
    fine = integrate(f, refine(edges), order)
    return fine, float(np.max(np.abs(fine - coarse)))


def uniform_edges(lo: float, hi: float, panels: int) -> np.ndarray:
    return np.linspace(lo, hi, max(int(panels), 1) + 1)
