"""Geodesic normal coordinates on S^3 and position-momentum commutators."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InjectivityError
from .fields import Frame, ScalarField, killing_frame_s3, pushforward
from .geometry import (
    ChartPoint,
    Sphere3,
    as_points,
    chart_to_embedding_array,
    embedding_jacobian,
    embedding_to_chart_array,
    metric_data,
)
from .operators import momentum

FD_STEP = 1e-5


def geodesic_distance(x, y, R: float = 1.0) -> np.ndarray:
    """Great-circle distance between embedded points, stable at 0 and pi R."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    return 2.0 * R * np.arctan2(np.linalg.norm(x - y, axis=-1), np.linalg.norm(x + y, axis=-1))


def chart_distance(p, q, R: float = 1.0) -> np.ndarray:
    M = Sphere3(R)
    return geodesic_distance(chart_to_embedding_array(as_points(M, p), R), chart_to_embedding_array(as_points(M, q), R), R)


def exp_map(p, v, R: float = 1.0) -> np.ndarray:
    """exp_p(v) for chart tangent components ``v``; returns chart points ``(B, 3)``."""
    M = Sphere3(R)
    pts = as_points(M, p)
    v = np.atleast_2d(np.asarray(v, dtype=float))
    J = embedding_jacobian(pts, R)
    v_emb = np.einsum("zia,za->zi", J, v)
    speed = np.linalg.norm(v_emb, axis=-1)
    if np.any(speed >= np.pi * R):
        raise InjectivityError(f"|v| = {speed.max()} reaches the injectivity radius pi R = {np.pi * R}")
    x = chart_to_embedding_array(pts, R)
    angle = speed / R
    direction = np.divide(v_emb, speed[:, None], out=np.zeros_like(v_emb), where=speed[:, None] > 0)
    y = np.cos(angle)[:, None] * x + np.sin(angle)[:, None] * R * direction
    return embedding_to_chart_array(y, R)


def log_embedded(x: np.ndarray, y: np.ndarray, R: float = 1.0) -> np.ndarray:
    """Embedding-space tangent vector at x pointing along the geodesic to y, of length d(x, y)."""
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    d = geodesic_distance(x, y, R)
    if np.any(d >= np.pi * R * (1.0 - 1e-12)):
        raise InjectivityError("antipodal point: the logarithm is not unique")
    xhat = x / R
    perp = y - np.sum(y * xhat, axis=-1, keepdims=True) * xhat
    pn = np.linalg.norm(perp, axis=-1, keepdims=True)
    return np.divide(perp, pn, out=np.zeros_like(perp), where=pn > 0) * d[:, None]


def log_map(p, q, R: float = 1.0) -> np.ndarray:
    """Inverse of :func:`exp_map`: chart tangent components at ``p``."""
    M = Sphere3(R)
    pts = as_points(M, p)
    qs = as_points(M, q)
    v_emb = log_embedded(chart_to_embedding_array(pts, R), chart_to_embedding_array(qs, R), R)
    J = embedding_jacobian(pts, R)
    md = metric_data(M, pts)
    # J^T J = g, so g^-1 J^T inverts the pushforward on tangent vectors
    return np.einsum("zab,zib,zi->za", md.g_inv, J, v_emb)


@dataclass(frozen=True)
class NormalChart:
    """Geodesic normal coordinates q^k centred at ``center``, aligned with a frame."""

    center: ChartPoint
    frame_at_center: np.ndarray  # (3, 3): row i = chart components of X_i(p)
    frame_embedded: np.ndarray  # (3, 4): row i = X_i(p) in R^4
    R: float
    frame: Frame

    @classmethod
    def at(cls, center: ChartPoint, frame: Frame | None = None) -> "NormalChart":
        frame = frame if frame is not None else killing_frame_s3()
        if not center.regular:
            raise DomainError(f"normal chart centre {center} lies on a chart seam")
        pts = center.as_array()[None, :]
        chart_vecs = np.stack([X.values(pts)[0].real for X in frame])
        emb = np.stack([pushforward(X, pts)[0].real for X in frame])
        return cls(center, chart_vecs, emb, frame.R, frame)

    @property
    def center_embedded(self) -> np.ndarray:
        return chart_to_embedding_array(self.center.as_array(), self.R)[0]


def normal_coordinates(chart: NormalChart, x) -> np.ndarray:
    """q^i = <log_p(x), X_i(p)>; rows per input point."""
    xs = chart_to_embedding_array(as_points(Sphere3(chart.R), x), chart.R)
    v = log_embedded(np.broadcast_to(chart.center_embedded, xs.shape), xs, chart.R)
    return v @ chart.frame_embedded.T


def from_normal_coordinates(chart: NormalChart, q) -> np.ndarray:
    q = np.atleast_2d(q)
    v = q @ chart.frame_at_center
    return exp_map(np.broadcast_to(chart.center.as_array(), v.shape), v, chart.R)


def _flow_step(chart: NormalChart, j: int, h: float) -> np.ndarray:
    """One RK4 step of size h along the integral curve of X_j through the centre."""
    X = chart.frame[j]

    def f(q):
        return X.values(q[None, :])[0].real

    y = chart.center.as_array()
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def duality_matrix(chart: NormalChart, step: float = FD_STEP) -> np.ndarray:
    """D[k, j] = (X_j q^k)(p) by central differences along integral curves of X_j."""
    D = np.empty((3, 3))
    for j in range(3):
        fwd = normal_coordinates(chart, _flow_step(chart, j, step))[0]
        bwd = normal_coordinates(chart, _flow_step(chart, j, -step))[0]
        D[:, j] = (fwd - bwd) / (2 * step)
    return D


def canonical_commutator_check(chart: NormalChart, j: int, k: int, f: ScalarField, hbar: float = 1.0, step: float = FD_STEP) -> complex:
    """([Q^k, P_j] f)(p) / (i hbar f(p)); equals delta^k_j.

    ``j`` and ``k`` are zero-based frame indices.
    """
    p = chart.center.as_array()[None, :]
    if abs(f(p)[0]) < 1e-12:
        f = f + 1.0
    Pj = momentum(chart.frame[j], hbar)
    q_center = normal_coordinates(chart, p)[0, k]
    pts = np.stack([_flow_step(chart, j, step), _flow_step(chart, j, -step)])
    qf = normal_coordinates(chart, pts)[:, k] * f(pts)
    d_qf = (qf[0] - qf[1]) / (2 * step)
    value = q_center * Pj(f)(p)[0] - (-1j * hbar) * d_qf
    return complex(value / (1j * hbar * f(p)[0]))
