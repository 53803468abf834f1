"""Linear operators on scalar fields.

Operators act lazily: applying one to a :class:`ScalarField` returns a new
field whose jets are computed from higher-order jets of the input, so
arbitrarily nested compositions and commutators keep exact derivatives.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .fields import Frame, ScalarField, VectorField, divergence_field
from .geometry import Manifold, as_points, inverse_metric_jets, sqrt_det_jet

NORM_WARN_TOL = 1e-8


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise DomainError(f"hbar and mass must be positive, got {self.hbar}, {self.mass}")


class LinearOperator:
    """A composable linear map ScalarField -> ScalarField."""

    def __init__(self, apply: Callable[[ScalarField], ScalarField], label: str = "A"):
        self._apply = apply
        self.label = label

    def __call__(self, f: ScalarField) -> ScalarField:
        return self._apply(f)

    def __add__(self, other: "LinearOperator") -> "LinearOperator":
        def apply(f):
            f = f.cached()
            return self(f) + other(f)

        return LinearOperator(apply, f"({self.label} + {other.label})")

    def __sub__(self, other: "LinearOperator") -> "LinearOperator":
        return self + (-1.0) * other

    def __mul__(self, c) -> "LinearOperator":
        return LinearOperator(lambda f: self(f) * c, f"{c!r}*{self.label}")

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __matmul__(self, other: "LinearOperator") -> "LinearOperator":
        """Composition: ``(A @ B)(f) = A(B(f))``."""
        return LinearOperator(lambda f: self(other(f)), f"{self.label}{other.label}")

    def __pow__(self, k: int) -> "LinearOperator":
        if k < 0:
            raise DomainError("negative operator powers are undefined")
        if k == 0:
            return LinearOperator(lambda f: f, "I")

        def apply(f):
            for _ in range(k):
                f = self(f).cached()
            return f

        return LinearOperator(apply, f"{self.label}^{k}")

    def __repr__(self):
        return f"LinearOperator({self.label})"


def identity() -> LinearOperator:
    return LinearOperator(lambda f: f, "I")


def commutator(A: LinearOperator, B: LinearOperator) -> LinearOperator:
    def apply(f):
        f = f.cached()
        return A(B(f)) - B(A(f))

    return LinearOperator(apply, f"[{A.label},{B.label}]")


def _derivation(X: VectorField, coeff: complex, label: str) -> LinearOperator:
    return LinearOperator(lambda f: X.apply(f) * coeff, label)


def _warn_if_not_unit(X: VectorField) -> None:
    M = X.manifold
    pts = M.random_points(4, np.random.default_rng(0))
    norms = X.norm_squared(pts)
    if np.max(np.abs(norms - 1.0)) > NORM_WARN_TOL:
        warnings.warn(
            f"momentum({X.label}): field is not unit length (|X|^2 = {norms[0]:.6g}); "
            "the momentum operator presumes a Killing frame element",
            stacklevel=3,
        )


def momentum(X: VectorField, hbar: float = 1.0) -> LinearOperator:
    """P_X f = -i hbar X f."""
    _warn_if_not_unit(X)
    return _derivation(X, -1j * hbar, f"P[{X.label}]")


def generalized_momentum(X: VectorField, hbar: float = 1.0) -> LinearOperator:
    """-i hbar (X f + 1/2 (div X) f); equals :func:`momentum` for divergence-free X."""
    half_div = divergence_field(X) * 0.5

    def apply(f):
        f = f.cached()
        return (X.apply(f) + half_div * f) * (-1j * hbar)

    return LinearOperator(apply, f"Pgen[{X.label}]")


def contracted_christoffel_field(manifold: Manifold, k: int) -> ScalarField:
    """Gamma_k = d_k log sqrt(g)."""

    def evaluator(points, order):
        s = sqrt_det_jet(manifold, points, order + 1)
        return s.diff(k) / s.truncate(order)

    return ScalarField(manifold.dim, evaluator, f"Gamma_{manifold.coord_names[k]}")


def dewitt_momentum(manifold: Manifold, k: int, hbar: float = 1.0) -> LinearOperator:
    """-i hbar (d_k + Gamma_k), with ``k`` a zero-based chart axis."""
    if not 0 <= k < manifold.dim:
        raise DomainError(f"axis {k} out of range for {manifold.id}")
    gamma = contracted_christoffel_field(manifold, k)

    def partial(f):
        return ScalarField(f.dim, lambda pts, order: f.jet(pts, order + 1).diff(k), f"d{k}({f.label})")

    def apply(f):
        f = f.cached()
        return (partial(f) + gamma * f) * (-1j * hbar)

    return LinearOperator(apply, f"pDW[{manifold.coord_names[k]}]")


def laplacian(manifold: Manifold) -> LinearOperator:
    """Laplace-Beltrami: d_a(g^ab d_b f) + (d_a log sqrt g) g^ab d_b f."""
    n = manifold.dim

    def apply(f):
        def evaluator(points, order):
            fj = f.jet(points, order + 2)
            ginv = inverse_metric_jets(manifold, points, order + 1)
            s = sqrt_det_jet(manifold, points, order + 1)
            grad = [fj.diff(b) for b in range(n)]
            flux = []
            for a in range(n):
                acc = ginv[a][0] * grad[0]
                for b in range(1, n):
                    acc = acc + ginv[a][b] * grad[b]
                flux.append(acc)
            s0 = s.truncate(order)
            out = flux[0].diff(0) + s.diff(0) / s0 * flux[0].truncate(order)
            for a in range(1, n):
                out = out + flux[a].diff(a) + s.diff(a) / s0 * flux[a].truncate(order)
            return out

        return ScalarField(f.dim, evaluator, f"Lap({f.label})")

    return LinearOperator(apply, "Lap")


def laplace_beltrami(manifold: Manifold, f: ScalarField, p) -> complex:
    points = as_points(manifold, p)
    manifold.check_regular(points)
    val = laplacian(manifold)(f)(points)
    return complex(val[0]) if len(val) == 1 else val


def casimir_residual(frame: Frame, f: ScalarField, p):
    """sum_j X_j(X_j f) - Lap f at ``p``; vanishes for Killing frames."""
    M = frame.manifold
    points = as_points(M, p)
    M.check_regular(points)
    f = f.cached()
    total = frame[0].apply(frame[0].apply(f))
    for X in frame.fields[1:]:
        total = total + X.apply(X.apply(f))
    val = (total - laplacian(M)(f))(points)
    return complex(val[0]) if len(val) == 1 else val


def ladder(sign: int, frame: Frame, hbar: float = 1.0) -> LinearOperator:
    """P_+ = P_1 + i P_2 (``sign=+1``) or P_- = P_1 - i P_2 (``sign=-1``)."""
    if sign not in (1, -1):
        raise DomainError(f"ladder sign must be +1 or -1, got {sign}")
    if len(frame) != 3:
        raise DomainError("ladder operators need the three-field S^3 frame")
    X = frame[0] + frame[1] * (1j * sign)
    return _derivation(X, -1j * hbar, "P+" if sign > 0 else "P-")


def frame_momenta(frame: Frame, hbar: float = 1.0) -> list[LinearOperator]:
    return [momentum(X, hbar) for X in frame]


def hamiltonian(frame: Frame, constants: PhysicalConstants = PhysicalConstants(), form: str = "casimir") -> LinearOperator:
    """Free Hamiltonian, as (1/2m) sum P_i^2 or as -(hbar^2/2m) Lap."""
    hbar, m = constants.hbar, constants.mass
    if form == "laplacian":
        return laplacian(frame.manifold) * (-(hbar**2) / (2 * m))
    if form != "casimir":
        raise DomainError(f"unknown Hamiltonian form {form!r}")
    # P_i^2 = -hbar^2 X_i X_i
    def apply(f):
        f = f.cached()
        total = frame[0].apply(frame[0].apply(f))
        for X in frame.fields[1:]:
            total = total + X.apply(X.apply(f))
        return total * (-(hbar**2) / (2 * m))

    return LinearOperator(apply, "H")


def multiplication_operator(f: ScalarField) -> LinearOperator:
    """Q_f: multiplication by ``f``."""
    return LinearOperator(lambda g: f * g, f"Q[{f.label}]")
