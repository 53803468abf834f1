"""Tensor-product quadrature on S^3 and on arcs of S^1.

Gauss-Legendre nodes in chi and theta never touch the chart seams; the
periodic phi direction uses the trapezoidal rule.  Reductions use a fixed
block partition followed by a pairwise tree, so sums are bit-identical no
matter how many worker threads evaluate the blocks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .fields import ScalarField
from .operators import LinearOperator

BLOCK = 4096
MIN_GAUSS = 8
MIN_PHI = 4


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray  # (N, dim) chart points
    weights: np.ndarray  # (N,) volume weights, sqrt(g) included
    resolution: tuple[int, ...]
    R: float

    def __len__(self):
        return len(self.weights)


def _gauss_0_pi(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * np.pi * (x + 1.0), 0.5 * np.pi * w


def build_grid_s3(n_chi: int = 32, n_theta: int = 32, n_phi: int = 32, R: float = 1.0) -> QuadratureGrid:
    if n_chi < MIN_GAUSS or n_theta < MIN_GAUSS or n_phi < MIN_PHI:
        raise ConfigError(
            f"grid ({n_chi}, {n_theta}, {n_phi}) below minimum: "
            f"N_chi, N_theta >= {MIN_GAUSS} and N_phi >= {MIN_PHI}"
        )
    if not R > 0:
        raise DomainError(f"radius must be positive, got {R}")
    chi, wc = _gauss_0_pi(n_chi)
    theta, wt = _gauss_0_pi(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    wp = np.full(n_phi, 2.0 * np.pi / n_phi)
    C, T, P = np.meshgrid(chi, theta, phi, indexing="ij")
    W = (
        (wc * np.sin(chi) ** 2)[:, None, None]
        * (wt * np.sin(theta))[None, :, None]
        * wp[None, None, :]
        * R**3
    )
    nodes = np.column_stack([C.ravel(), T.ravel(), P.ravel()])
    return QuadratureGrid(nodes, W.ravel(), (n_chi, n_theta, n_phi), float(R))


def build_grid_arc(phi_start: float, width: float, rho: float = 1.0, n: int = 64) -> QuadratureGrid:
    """Gauss-Legendre nodes on [phi_start, phi_start + width] with arc-length weights."""
    if not 0 < width <= 2 * np.pi:
        raise DomainError(f"arc width must lie in (0, 2pi], got {width}")
    x, w = np.polynomial.legendre.leggauss(n)
    phi = phi_start + 0.5 * width * (x + 1.0)
    return QuadratureGrid(phi[:, None], 0.5 * width * w * rho, (n,), float(rho))


def bandwidth_violation(grid: QuadratureGrid, n_max: int) -> str | None:
    """Describe why ``grid`` cannot resolve states up to ``n_max``, or None."""
    n_chi, n_theta, n_phi = grid.resolution
    need_phi = 4 * (n_max + 1)
    need_gauss = 2 * (n_max + 4)
    if n_phi < need_phi:
        return f"bandwidth rule: N_phi={n_phi} < 4(n_max+1)={need_phi}"
    if min(n_chi, n_theta) < need_gauss:
        return f"bandwidth rule: N_chi, N_theta={n_chi}, {n_theta} < 2(n_max+4)={need_gauss}"
    return None


def pairwise_sum(values: np.ndarray, workers: int = 1) -> complex:
    """Deterministic sum: fixed blocks, then a pairwise tree over block sums."""
    values = np.asarray(values)
    starts = range(0, max(len(values), 1), BLOCK)
    blocks = [values[s : s + BLOCK] for s in starts]
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            partial = list(ex.map(np.sum, blocks))
    else:
        partial = [np.sum(b) for b in blocks]
    while len(partial) > 1:
        nxt = [partial[i] + partial[i + 1] for i in range(0, len(partial) - 1, 2)]
        if len(partial) % 2:
            nxt.append(partial[-1])
        partial = nxt
    return partial[0]


def _values(f, grid: QuadratureGrid) -> np.ndarray:
    if isinstance(f, ScalarField):
        return f(grid.nodes)
    if callable(f):
        return np.asarray(f(grid.nodes))
    return np.broadcast_to(np.asarray(f), grid.weights.shape)


def integrate(f, grid: QuadratureGrid, workers: int = 1):
    """Integral of a field, callable, sample array or constant over the grid."""
    return pairwise_sum(grid.weights * _values(f, grid), workers)


def _pair(a: np.ndarray, b: np.ndarray, grid: QuadratureGrid, workers: int) -> complex:
    # Real and imaginary parts are formed separately so that swapping a and b
    # yields the exact complex conjugate.
    a = np.broadcast_to(np.asarray(a, dtype=complex), grid.weights.shape)
    b = np.broadcast_to(np.asarray(b, dtype=complex), grid.weights.shape)
    re = a.real * b.real + a.imag * b.imag
    im = a.real * b.imag - a.imag * b.real
    return complex(pairwise_sum(grid.weights * re, workers), pairwise_sum(grid.weights * im, workers))


def inner_product(f, g, grid: QuadratureGrid, workers: int = 1) -> complex:
    """<f, g> = integral of conj(f) g, conjugate-linear in ``f``."""
    return _pair(_values(f, grid), _values(g, grid), grid, workers)


def norm(f, grid: QuadratureGrid, workers: int = 1) -> float:
    return float(np.sqrt(inner_product(f, f, grid, workers).real))


def gram_matrix(fields, grid: QuadratureGrid, workers: int = 1) -> np.ndarray:
    vals = [_values(f, grid) for f in fields]
    n = len(vals)
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            G[i, j] = _pair(vals[i], vals[j], grid, workers)
    return G


def hermiticity_defect(P: LinearOperator, f: ScalarField, g: ScalarField, grid: QuadratureGrid, workers: int = 1) -> complex:
    """<f, P g> - <P f, g>."""
    return inner_product(f, P(g), grid, workers) - inner_product(P(f), g, grid, workers)
