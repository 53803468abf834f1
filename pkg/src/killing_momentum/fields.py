"""Scalar and vector fields, Killing frames, brackets and Killing residuals."""

from __future__ import annotations

import hashlib
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import jets
from .errors import DomainError, InconsistencyError, NonConstantStructureError
from .geometry import (
    ChartPoint,
    Circle,
    EuclideanPlane,
    Jet2,
    Manifold,
    Sphere3,
    as_points,
    chart_to_embedding_array,
    embedding_jacobian,
    metric_data,
    metric_jets,
    sqrt_det_jet,
)
from .jets import Jet

Evaluator = Callable[[np.ndarray, int], Jet]


def _points_key(points: np.ndarray) -> tuple:
    return points.shape, hashlib.blake2b(np.ascontiguousarray(points).tobytes(), digest_size=16).digest()


class _JetCache:
    """Small LRU of evaluations keyed by point set; a higher order serves lower ones."""

    def __init__(self, size: int = 4):
        self._entries: OrderedDict = OrderedDict()
        # Held while filling, so concurrent callers wait instead of duplicating work.
        # Field dependencies form a DAG, so nested fills cannot deadlock.
        self._lock = threading.RLock()
        self._size = size

    def get(self, points: np.ndarray, order: int, evaluate: Callable, truncate: Callable):
        key = _points_key(points)
        with self._lock:
            hit = self._entries.get(key)
            if hit is not None and hit[0] >= order:
                return truncate(hit[1], order)
            out = evaluate(points, order)
            self._entries[key] = (order, out)
            self._entries.move_to_end(key)
            while len(self._entries) > self._size:
                self._entries.popitem(last=False)
            return out


class ScalarField:
    """A complex function on a chart, evaluated as jets to any order.

    ``evaluator(points, order)`` receives a ``(B, dim)`` array of chart points
    and returns a :class:`Jet` of the requested order.
    """

    def __init__(self, dim: int, evaluator: Evaluator, label: str = "f", cache: bool = False):
        self.dim = dim
        self._evaluator = evaluator
        self.label = label
        self._cache = _JetCache() if cache else None

    @classmethod
    def from_expr(cls, dim: int, fn: Callable, label: str = "f") -> "ScalarField":
        """Field defined by an expression ``fn(*coords)`` over jets."""

        def evaluator(points, order):
            value = fn(*Jet.seed(points, order))
            return jets.as_jet(value, dim, order, (len(points),))

        return cls(dim, evaluator, label)

    @classmethod
    def constant(cls, dim: int, value: complex, label: str | None = None) -> "ScalarField":
        return cls(dim, lambda pts, k: Jet.constant(value, dim, k, (len(pts),)), label or repr(value))

    def jet(self, points, order: int = 0) -> Jet:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self._cache is None:
            return self._evaluator(points, order)
        return self._cache.get(points, order, self._evaluator, lambda j, k: j.truncate(k))

    def __call__(self, points) -> np.ndarray:
        return self.jet(points, 0).value

    def jet2(self, point) -> Jet2:
        return Jet2.from_jet(self.jet(np.atleast_2d(point), 2))

    def cached(self) -> "ScalarField":
        """A memoizing copy; higher-order results serve lower-order requests."""
        return ScalarField(self.dim, self._evaluator, self.label, cache=True)

    def relabel(self, label: str) -> "ScalarField":
        return ScalarField(self.dim, self._evaluator, label, cache=self._cache is not None)

    # arithmetic
    def _binary(self, other, op, sym):
        if isinstance(other, ScalarField):
            return ScalarField(
                self.dim,
                lambda pts, k: op(self.jet(pts, k), other.jet(pts, k)),
                f"({self.label} {sym} {other.label})",
            )
        return ScalarField(self.dim, lambda pts, k: op(self.jet(pts, k), other), f"({self.label} {sym} {other!r})")

    def __add__(self, other):
        return self._binary(other, lambda a, b: a + b, "+")

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda a, b: a - b, "-")

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        return self._binary(other, lambda a, b: a * b, "*")

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ScalarField):
            return self._binary(other, lambda a, b: a / b, "/")
        return self * (1.0 / other)

    def __neg__(self):
        return ScalarField(self.dim, lambda pts, k: -self.jet(pts, k), f"-{self.label}")

    def conj(self) -> "ScalarField":
        return ScalarField(self.dim, lambda pts, k: self.jet(pts, k).conj(), f"conj({self.label})")

    def __repr__(self):
        return f"ScalarField({self.label})"


class VectorField:
    """Contravariant components xi^a on a manifold chart, evaluated as jets."""

    def __init__(self, manifold: Manifold, evaluator: Callable[[np.ndarray, int], list[Jet]], label: str = "X", cache: bool = False):
        self.manifold = manifold
        self._evaluator = evaluator
        self.label = label
        self._cache = _JetCache() if cache else None

    @classmethod
    def from_expr(cls, manifold: Manifold, fn: Callable, label: str = "X") -> "VectorField":
        n = manifold.dim

        def evaluator(points, order):
            comps = fn(*Jet.seed(points, order))
            return [jets.as_jet(c, n, order, (len(points),)) for c in comps]

        return cls(manifold, evaluator, label)

    @property
    def dim(self) -> int:
        return self.manifold.dim

    def components(self, points, order: int = 0) -> list[Jet]:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if self._cache is None:
            return self._evaluator(points, order)
        return self._cache.get(points, order, self._evaluator, lambda cs, k: [c.truncate(k) for c in cs])

    def cached(self) -> "VectorField":
        """A memoizing copy, worthwhile when components are reused on one grid."""
        return VectorField(self.manifold, self._evaluator, self.label, cache=True)

    def values(self, points) -> np.ndarray:
        """Component values, shape ``(B, dim)``."""
        points = as_points(self.manifold, points)
        return np.stack([c.value for c in self.components(points, 0)], axis=-1)

    def apply(self, f: ScalarField) -> ScalarField:
        """The directional derivative ``X f`` as a new field."""

        def evaluator(points, order):
            xi = self.components(points, order)
            fj = f.jet(points, order + 1)
            out = xi[0] * fj.diff(0)
            for a in range(1, self.dim):
                out = out + xi[a] * fj.diff(a)
            return out

        return ScalarField(self.dim, evaluator, f"{self.label}({f.label})")

    def norm_squared(self, points) -> np.ndarray:
        points = as_points(self.manifold, points)
        md = metric_data(self.manifold, points)
        v = self.values(points)
        return np.einsum("za,zab,zb->z", np.conj(v), md.g, v).real

    def _combine(self, other, op, label):
        return VectorField(
            self.manifold,
            lambda pts, k: [op(a, b) for a, b in zip(self.components(pts, k), other.components(pts, k))],
            label,
        )

    def __add__(self, other: "VectorField"):
        return self._combine(other, lambda a, b: a + b, f"({self.label} + {other.label})")

    def __sub__(self, other: "VectorField"):
        return self._combine(other, lambda a, b: a - b, f"({self.label} - {other.label})")

    def __mul__(self, c):
        return VectorField(self.manifold, lambda pts, k: [x * c for x in self.components(pts, k)], f"{c!r}*{self.label}")

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"VectorField({self.label} on {self.manifold!r})"


@dataclass(frozen=True)
class Frame:
    """An ordered frame of vector fields; Killing frames are orthonormal."""

    fields: tuple[VectorField, ...]
    manifold: Manifold
    R: float

    def __iter__(self):
        return iter(self.fields)

    def __getitem__(self, i) -> VectorField:
        return self.fields[i]

    def __len__(self):
        return len(self.fields)

    def gram(self, points) -> np.ndarray:
        """``g(X_i, X_j)`` at each point, shape ``(B, n, n)``."""
        points = as_points(self.manifold, points)
        md = metric_data(self.manifold, points)
        v = np.stack([X.values(points) for X in self.fields], axis=1)  # (B, i, a)
        return np.einsum("zia,zab,zjb->zij", v, md.g, v)

    def with_field(self, i: int, field: VectorField) -> "Frame":
        fields = list(self.fields)
        fields[i] = field
        return Frame(tuple(fields), self.manifold, self.R)


# -- concrete frames ----------------------------------------------------------


def killing_frame_s3(R: float = 1.0) -> Frame:
    """The orthonormal Killing frame of S^3 in hyperspherical coordinates."""
    M = Sphere3(R)
    cot, csc, sin, cos = jets.cot, jets.csc, jets.sin, jets.cos

    def x1(chi, theta, phi):
        return [
            sin(theta) * cos(phi) / R,
            (cot(chi) * cos(theta) * cos(phi) - sin(phi)) / R,
            -(cot(chi) * csc(theta) * sin(phi) + cot(theta) * cos(phi)) / R,
        ]

    def x2(chi, theta, phi):
        return [
            sin(theta) * sin(phi) / R,
            (cot(chi) * cos(theta) * sin(phi) + cos(phi)) / R,
            (cot(chi) * csc(theta) * cos(phi) - cot(theta) * sin(phi)) / R,
        ]

    def x3(chi, theta, phi):
        return [cos(theta) / R, -cot(chi) * sin(theta) / R, 1.0 / R]

    fields = tuple(VectorField.from_expr(M, fn, f"X{i + 1}").cached() for i, fn in enumerate((x1, x2, x3)))
    return Frame(fields, M, M.R)


def killing_frame_s1(rho: float = 1.0) -> Frame:
    M = Circle(rho)
    return Frame((VectorField.from_expr(M, lambda phi: [1.0 / rho], "X1"),), M, M.rho)


def euclidean_plane_fields() -> tuple[VectorField, VectorField, VectorField]:
    """Translations d_x, d_y and rotation d_phi written in the polar chart."""
    M = EuclideanPlane("polar")
    sin, cos = jets.sin, jets.cos
    X1 = VectorField.from_expr(M, lambda r, phi: [cos(phi), -sin(phi) / r], "X1")
    X2 = VectorField.from_expr(M, lambda r, phi: [sin(phi), cos(phi) / r], "X2")
    X3 = VectorField.from_expr(M, lambda r, phi: [0.0, 1.0], "X3")
    return X1, X2, X3


def coordinate_field(manifold: Manifold, axis: int) -> VectorField:
    """The coordinate vector field d/dq^axis."""
    comps = [0.0] * manifold.dim
    comps[axis] = 1.0
    return VectorField.from_expr(manifold, lambda *q: list(comps), f"d_{manifold.coord_names[axis]}")


# -- brackets, residuals, divergence -----------------------------------------


def lie_bracket(X: VectorField, Y: VectorField) -> VectorField:
    """[X, Y]^b = X^a d_a Y^b - Y^a d_a X^b."""
    n = X.dim

    def evaluator(points, order):
        xi = X.components(points, order + 1)
        eta = Y.components(points, order + 1)
        xk = [c.truncate(order) for c in xi]
        ek = [c.truncate(order) for c in eta]
        out = []
        for b in range(n):
            acc = xk[0] * eta[b].diff(0) - ek[0] * xi[b].diff(0)
            for a in range(1, n):
                acc = acc + xk[a] * eta[b].diff(a) - ek[a] * xi[b].diff(a)
            out.append(acc)
        return out

    return VectorField(X.manifold, evaluator, f"[{X.label},{Y.label}]")


def killing_residuals(X: VectorField, points) -> np.ndarray:
    """Batched ``nabla_a X_b + nabla_b X_a``, shape ``(B, n, n)``."""
    M = X.manifold
    points = as_points(M, points)
    md = metric_data(M, points)
    n = M.dim
    g = metric_jets(M, points, 1)
    xi = X.components(points, 1)
    lowered = []
    for b in range(n):
        acc = g[b][0] * xi[0]
        for c in range(1, n):
            acc = acc + g[b][c] * xi[c]
        lowered.append(acc)
    # d[z, a, b] = d_a X_b
    d = np.stack([lj.gradient().T for lj in lowered], axis=-1)
    x_low = np.stack([lj.value for lj in lowered], axis=-1)
    cov = d - np.einsum("zcab,zc->zab", md.christoffel, x_low)
    out = cov + np.swapaxes(cov, 1, 2)
    return out


def killing_residual(X: VectorField, p) -> np.ndarray:
    """Covariant Killing residual ``(L_X g)_ab`` at a single point."""
    return killing_residuals(X, p)[0]


def divergence_field(X: VectorField) -> ScalarField:
    """(1/sqrt g) d_a (sqrt g xi^a) as a field."""
    M = X.manifold

    def evaluator(points, order):
        s = sqrt_det_jet(M, points, order + 1)
        xi = X.components(points, order + 1)
        acc = (s * xi[0]).diff(0)
        for a in range(1, M.dim):
            acc = acc + (s * xi[a]).diff(a)
        return acc / s.truncate(order)

    return ScalarField(M.dim, evaluator, f"div {X.label}")


def divergence(X: VectorField, p):
    points = as_points(X.manifold, p)
    X.manifold.check_regular(points)
    val = divergence_field(X)(points)
    return val[0] if len(val) == 1 else val


def covariant_self_derivative(X: VectorField, points) -> np.ndarray:
    """(nabla_X X)^a = X^b d_b X^a + Gamma^a_bc X^b X^c; zero along geodesic flows."""
    M = X.manifold
    points = as_points(M, points)
    md = metric_data(M, points)
    xi = X.components(points, 1)
    v = np.stack([c.value for c in xi], axis=-1)
    dxi = np.stack([c.gradient().T for c in xi], axis=-1)  # [z, b, a] = d_b xi^a
    return np.einsum("zb,zba->za", v, dxi) + np.einsum("zabc,zb,zc->za", md.christoffel, v, v)


# -- integral curves ----------------------------------------------------------


def integral_curve(X: VectorField, start, t_final: float, step: float = 1e-3) -> np.ndarray:
    """Fixed-step RK4 integral curve of ``X``; rows are chart points."""
    y = as_points(X.manifold, start)[0].astype(float)
    nsteps = int(round(abs(t_final) / step))
    h = np.copysign(step, t_final)
    out = np.empty((nsteps + 1, y.size))
    out[0] = y

    def f(q):
        return X.values(q[None, :])[0].real

    for i in range(nsteps):
        k1 = f(y)
        k2 = f(y + 0.5 * h * k1)
        k3 = f(y + 0.5 * h * k2)
        k4 = f(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
    return out


def curve_geodesic_defect(manifold: Manifold, curve: np.ndarray, step: float) -> np.ndarray:
    """Chart acceleration plus Christoffel term along a sampled curve.

    Velocities and accelerations come from central differences of the
    curve samples, so the result measures integration and difference error.
    """
    vel = (curve[2:] - curve[:-2]) / (2 * step)
    acc = (curve[2:] - 2 * curve[1:-1] + curve[:-2]) / step**2
    md = metric_data(manifold, curve[1:-1])
    return acc + np.einsum("zabc,zb,zc->za", md.christoffel, vel, vel)


# -- the embedded frame and its relation to the chart frame ---------------------


def embedding_frame_s3(R: float = 1.0) -> tuple[Callable, Callable, Callable]:
    """K_1, K_2, K_3 on R^4, scaled to unit Euclidean length on the sphere of radius R."""
    if not R > 0:
        raise DomainError(f"radius must be positive, got {R}")

    def k1(x):
        x = np.asarray(x, dtype=float)
        return np.stack([-x[..., 3], -x[..., 2], x[..., 1], x[..., 0]], axis=-1) / R

    def k2(x):
        x = np.asarray(x, dtype=float)
        return np.stack([x[..., 2], -x[..., 3], -x[..., 0], x[..., 1]], axis=-1) / R

    def k3(x):
        x = np.asarray(x, dtype=float)
        return np.stack([-x[..., 1], x[..., 0], -x[..., 3], x[..., 2]], axis=-1) / R

    return k1, k2, k3


def pushforward(X: VectorField, points) -> np.ndarray:
    """Embedding-space image of a chart field on S^3, shape ``(B, 4)``."""
    points = as_points(X.manifold, points)
    J = embedding_jacobian(points, X.manifold.R)
    return np.einsum("zia,za->zi", J, X.values(points))


def pushforward_match(frame: Frame, R: float, points=None, rng=None, tol: float = 1e-9) -> np.ndarray:
    """Constant matrix M with push(X_i) = sum_j M[i, j] K_j.

    M is fitted by least squares at the first sample point and then
    required to reproduce the pushforward everywhere else.
    """
    if points is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        points = frame.manifold.random_points(100, rng)
    points = as_points(frame.manifold, points)
    K = embedding_frame_s3(R)
    x = chart_to_embedding_array(points, R)
    kmat = np.stack([k(x) for k in K], axis=-1)  # (B, 4, j)
    push = np.stack([pushforward(X, points) for X in frame], axis=1)  # (B, i, 4)
    M = np.linalg.lstsq(kmat[0], push[0].T, rcond=None)[0].T
    resid = push - np.einsum("ij,zkj->zik", M, kmat)
    worst = float(np.max(np.abs(resid)))
    if worst > tol:
        raise InconsistencyError(f"pushforward coefficients vary across the sphere (residual {worst:.3e})")
    return M


# -- structure constants ----------------------------------------------------------


@dataclass(frozen=True)
class StructureConstants:
    """c[k, i, j] with [X_i, X_j] = c^k_ij X_k, plus the spread across sample points."""

    c: np.ndarray
    deviation: float


def structure_constants(frame: Frame, sample: Sequence, tol: float = 1e-8, strict: bool = True) -> StructureConstants:
    """Project every frame bracket onto the frame with the metric inner product."""
    M = frame.manifold
    if isinstance(sample, (list, tuple)) and sample and isinstance(sample[0], ChartPoint):
        sample = np.stack([p.as_array() for p in sample])
    points = as_points(M, sample)
    if len(points) < 1:
        raise DomainError("need at least one sample point")
    md = metric_data(M, points)
    n = len(frame)
    vals = np.stack([X.values(points) for X in frame], axis=1)  # (B, k, a)
    c = np.zeros((len(points), n, n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            br = lie_bracket(frame[i], frame[j]).values(points)
            c[:, :, i, j] = np.einsum("za,zab,zkb->zk", br, md.g, vals).real
    mean = c.mean(axis=0)
    dev = float(np.max(np.abs(c - mean)))
    if strict and dev > tol:
        raise NonConstantStructureError(f"structure coefficients vary by {dev:.3e} across sample points")
    return StructureConstants(mean, dev)


def levi_civita() -> np.ndarray:
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    return eps
