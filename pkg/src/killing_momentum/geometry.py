"""Charts, metrics and derived metric quantities.

Three manifolds are supported, selected by id:

``sphere3``
    S^3 of radius R in hyperspherical coordinates (chi, theta, phi).
``circle``
    S^1 of radius rho with angle coordinate phi.
``euclidean-plane``
    R^2 in polar coordinates (r, phi); a Cartesian chart is available
    for flat-space comparisons.

Batched points are ``(B, dim)`` arrays of chart coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import DegenerateChartError, DomainError
from .jets import Jet

EPS_CHART = 1e-6
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class ChartPoint:
    """A point of S^3 in hyperspherical coordinates."""

    chi: float
    theta: float
    phi: float

    def __post_init__(self):
        for name in ("chi", "theta"):
            v = getattr(self, name)
            if not (0.0 <= v <= np.pi):
                raise DomainError(f"{name}={v} outside [0, pi]")
        object.__setattr__(self, "phi", float(np.mod(self.phi, TWO_PI)))

    @property
    def regular(self) -> bool:
        return np.sin(self.chi) > EPS_CHART and np.sin(self.theta) > EPS_CHART

    def as_array(self) -> np.ndarray:
        return np.array([self.chi, self.theta, self.phi])


@dataclass(frozen=True)
class EmbeddedPoint:
    """A point of S^3 as a vector of R^4 with norm R."""

    x: np.ndarray
    R: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.shape != (4,):
            raise DomainError("embedded point must be a 4-vector")
        if abs(np.linalg.norm(x) - self.R) > 1e-12 * self.R:
            raise DomainError(f"|x| = {np.linalg.norm(x)} differs from R = {self.R}")
        object.__setattr__(self, "x", x)


@dataclass(frozen=True)
class Jet2:
    """Value with first and second partials at one point."""

    value: complex
    grad: np.ndarray
    hess: np.ndarray

    @classmethod
    def from_jet(cls, jet: Jet, index=0) -> "Jet2":
        return cls(
            value=complex(jet.value[index]),
            grad=jet.gradient()[:, index],
            hess=jet.hessian()[:, :, index],
        )


class Manifold:
    """A manifold with one fixed chart and a diagonal-or-general metric."""

    id: str = ""
    dim: int = 0
    coord_names: tuple[str, ...] = ()

    def metric(self, *q):
        """Metric components as expressions in the chart coordinates."""
        raise NotImplementedError

    def regular_mask(self, points: np.ndarray) -> np.ndarray:
        return np.ones(len(points), dtype=bool)

    def check_regular(self, points: np.ndarray) -> None:
        points = np.atleast_2d(points)
        if not np.all(self.regular_mask(points)):
            bad = points[~self.regular_mask(points)][0]
            raise DegenerateChartError(f"{self.id}: chart degenerates at {bad.tolist()}")

    def random_points(self, n: int, rng: np.random.Generator, margin: float = 1e-2) -> np.ndarray:
        raise NotImplementedError


class Sphere3(Manifold):
    id = "sphere3"
    dim = 3
    coord_names = ("chi", "theta", "phi")

    def __init__(self, R: float = 1.0):
        if not R > 0:
            raise DomainError(f"radius must be positive, got {R}")
        self.R = float(R)

    def metric(self, chi, theta, phi):
        R2 = self.R**2
        s1 = jets.sin(chi) ** 2
        return [
            [R2, 0.0, 0.0],
            [0.0, R2 * s1, 0.0],
            [0.0, 0.0, R2 * s1 * jets.sin(theta) ** 2],
        ]

    def regular_mask(self, points):
        points = np.atleast_2d(points)
        chi, theta = points[:, 0], points[:, 1]
        inside = (chi >= 0) & (chi <= np.pi) & (theta >= 0) & (theta <= np.pi)
        return inside & (np.sin(chi) > EPS_CHART) & (np.sin(theta) > EPS_CHART)

    def random_points(self, n, rng, margin=1e-2):
        """Uniform points on S^3 (by volume) kept ``margin`` away from the chart seams."""
        out = []
        while sum(len(o) for o in out) < n:
            x = rng.standard_normal((2 * n, 4))
            x /= np.linalg.norm(x, axis=1, keepdims=True)
            pts = embedding_to_chart_array(x * self.R, self.R)
            keep = (np.sin(pts[:, 0]) > margin) & (np.sin(pts[:, 1]) > margin)
            out.append(pts[keep])
        return np.concatenate(out)[:n]

    def __repr__(self):
        return f"Sphere3(R={self.R})"


class Circle(Manifold):
    id = "circle"
    dim = 1
    coord_names = ("phi",)

    def __init__(self, rho: float = 1.0):
        if not rho > 0:
            raise DomainError(f"radius must be positive, got {rho}")
        self.rho = float(rho)

    @property
    def R(self) -> float:
        return self.rho

    def metric(self, phi):
        return [[self.rho**2]]

    def random_points(self, n, rng, margin=0.0):
        return rng.uniform(0.0, TWO_PI, size=(n, 1))

    def __repr__(self):
        return f"Circle(rho={self.rho})"


class EuclideanPlane(Manifold):
    id = "euclidean-plane"
    dim = 2

    def __init__(self, chart: str = "polar"):
        if chart not in ("polar", "cartesian"):
            raise DomainError(f"unknown chart {chart!r}")
        self.chart = chart
        self.coord_names = ("r", "phi") if chart == "polar" else ("x", "y")

    R = 1.0

    def metric(self, a, b):
        if self.chart == "cartesian":
            return [[1.0, 0.0], [0.0, 1.0]]
        return [[1.0, 0.0], [0.0, a**2]]

    def regular_mask(self, points):
        points = np.atleast_2d(points)
        if self.chart == "cartesian":
            return np.ones(len(points), dtype=bool)
        return points[:, 0] > EPS_CHART

    def random_points(self, n, rng, margin=1e-2):
        if self.chart == "cartesian":
            return rng.uniform(-3.0, 3.0, size=(n, 2))
        r = rng.uniform(max(margin, 0.2), 3.0, size=n)
        return np.column_stack([r, rng.uniform(0.0, TWO_PI, size=n)])

    def __repr__(self):
        return f"EuclideanPlane(chart={self.chart!r})"


MANIFOLDS = {"sphere3": Sphere3, "circle": Circle, "euclidean-plane": EuclideanPlane}


def make_manifold(manifold_id: str, radius: float = 1.0) -> Manifold:
    """Build a manifold by id; ``radius`` is ignored for the plane."""
    if manifold_id == "euclidean-plane":
        return EuclideanPlane()
    try:
        cls = MANIFOLDS[manifold_id]
    except KeyError:
        raise DomainError(f"unknown manifold {manifold_id!r}; choose from {sorted(MANIFOLDS)}") from None
    return cls(radius)


def as_points(manifold: Manifold, p) -> np.ndarray:
    """Normalize a ChartPoint, 1-D or 2-D array to a ``(B, dim)`` array."""
    if isinstance(p, ChartPoint):
        return p.as_array()[None, :]
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.shape[0] == manifold.dim else arr.reshape(-1, 1)
    if arr.shape[1] != manifold.dim:
        raise DomainError(f"expected {manifold.dim} coordinates, got {arr.shape[1]}")
    return arr


# -- metric jets --------------------------------------------------------------


def metric_jets(manifold: Manifold, points: np.ndarray, order: int) -> list[list[Jet]]:
    coords = Jet.seed(points, order)
    g = manifold.metric(*coords)
    shape = (len(points),)
    return [[jets.as_jet(gij, manifold.dim, order, shape) for gij in row] for row in g]


def _det(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    if n == 3:
        return (
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        )
    raise NotImplementedError("metrics above dimension 3")


def _inverse(m):
    n = len(m)
    d = _det(m)
    if n == 1:
        return [[1.0 / d]]
    if n == 2:
        return [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
    inv = [[None] * 3 for _ in range(3)]
    for i in range(3):
        for j in range(3):
            rows = [r for r in range(3) if r != j]
            cols = [c for c in range(3) if c != i]
            minor = [[m[r][c] for c in cols] for r in rows]
            inv[i][j] = ((-1) ** (i + j)) * _det(minor) / d
    return inv


def sqrt_det_jet(manifold: Manifold, points: np.ndarray, order: int) -> Jet:
    return jets.sqrt(_det(metric_jets(manifold, points, order)))


def inverse_metric_jets(manifold: Manifold, points: np.ndarray, order: int) -> list[list[Jet]]:
    return _inverse(metric_jets(manifold, points, order))


def log_sqrt_det_gradient(manifold: Manifold, points: np.ndarray, order: int = 0) -> list[Jet]:
    """Jets of d_k log sqrt(g), computed by exact differentiation."""
    s = sqrt_det_jet(manifold, points, order + 1)
    return [s.diff(k) / s.truncate(order) for k in range(manifold.dim)]


@dataclass(frozen=True)
class MetricData:
    """Metric and derived quantities; arrays carry a leading batch axis."""

    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det: np.ndarray
    christoffel: np.ndarray  # [batch, a, b, c] = Gamma^a_bc
    contracted: np.ndarray  # [batch, k] = Gamma^j_jk

    def __getitem__(self, i) -> "MetricData":
        return MetricData(self.g[i], self.g_inv[i], self.sqrt_det[i], self.christoffel[i], self.contracted[i])


def metric_data(manifold: Manifold, points) -> MetricData:
    """Batched :func:`metric_at`."""
    points = as_points(manifold, points)
    manifold.check_regular(points)
    n = manifold.dim
    gj = metric_jets(manifold, points, 1)
    g = np.stack([np.stack([gj[a][b].value for b in range(n)], -1) for a in range(n)], -2)
    g = np.broadcast_to(g, (len(points), n, n)).astype(float)
    # dg[batch, d, b, c] = d_d g_bc
    dg = np.empty((len(points), n, n, n))
    for b in range(n):
        for c in range(n):
            dg[:, :, b, c] = gj[b][c].gradient().T
    g_inv = np.linalg.inv(g)
    sqrt_det = np.sqrt(np.linalg.det(g))
    lower = 0.5 * (np.einsum("zbdc->zdbc", dg) + np.einsum("zcdb->zdbc", dg) - dg)
    christoffel = np.einsum("zad,zdbc->zabc", g_inv, lower)
    contracted = np.einsum("zjjk->zk", christoffel)
    return MetricData(g, g_inv, sqrt_det, christoffel, contracted)


def metric_at(manifold: Manifold, p) -> MetricData:
    """Metric, inverse, sqrt(det g), Christoffel symbols and their contraction at ``p``."""
    points = as_points(manifold, p)
    if len(points) != 1:
        raise DomainError("metric_at expects a single point; use metric_data for batches")
    return metric_data(manifold, points)[0]


# -- embedding of S^3 ---------------------------------------------------------


def embedding_expr(chi, theta, phi, R: float = 1.0):
    """The embedding S^3 -> R^4 written over jets or arrays."""
    sc = jets.sin(chi)
    st = jets.sin(theta)
    return [
        R * jets.cos(chi),
        R * sc * jets.cos(theta),
        R * sc * st * jets.cos(phi),
        R * sc * st * jets.sin(phi),
    ]


def chart_to_embedding_array(points: np.ndarray, R: float = 1.0) -> np.ndarray:
    points = np.atleast_2d(points)
    return np.stack(embedding_expr(points[:, 0], points[:, 1], points[:, 2], R), axis=-1)


def chart_to_embedding(p: ChartPoint, R: float = 1.0) -> EmbeddedPoint:
    if not R > 0:
        raise DomainError(f"radius must be positive, got {R}")
    return EmbeddedPoint(chart_to_embedding_array(p.as_array(), R)[0], R)


def embedding_to_chart_array(x: np.ndarray, R: float = 1.0) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float)) / R
    chi = np.arccos(np.clip(x[:, 0], -1.0, 1.0))
    rho = np.hypot(x[:, 2], x[:, 3])
    theta = np.arctan2(rho, x[:, 1])
    phi = np.mod(np.arctan2(x[:, 3], x[:, 2]), TWO_PI)
    return np.column_stack([chi, theta, phi])


def embedding_to_chart(x: EmbeddedPoint) -> ChartPoint:
    """Inverse of :func:`chart_to_embedding`; check ``.regular`` on the result."""
    chi, theta, phi = embedding_to_chart_array(x.x, x.R)[0]
    return ChartPoint(chi, theta, phi)


def embedding_jacobian(points: np.ndarray, R: float = 1.0) -> np.ndarray:
    """d x^i / d q^a, shape ``(B, 4, 3)``."""
    points = np.atleast_2d(points)
    xs = embedding_expr(*Jet.seed(points, 1), R)
    return np.stack([x.gradient().T for x in xs], axis=1)
