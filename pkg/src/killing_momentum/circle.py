"""Momentum on the circle: Fourier spectrum and the arc uncertainty bound."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import DomainError
from .fields import ScalarField, killing_frame_s1
from .operators import momentum
from .quadrature import build_grid_arc, inner_product


@dataclass(frozen=True)
class Arc:
    """A compact arc of the circle of radius ``rho``."""

    center: float
    width: float
    rho: float = 1.0

    def __post_init__(self):
        if not 0 < self.width <= 2 * np.pi:
            raise DomainError(f"arc width must lie in (0, 2pi], got {self.width}")
        if not self.rho > 0:
            raise DomainError(f"radius must be positive, got {self.rho}")

    @property
    def start(self) -> float:
        return self.center - 0.5 * self.width

    @property
    def length(self) -> float:
        return self.rho * self.width


def fourier_mode(m: int) -> ScalarField:
    return ScalarField.from_expr(1, lambda phi: jets.exp(phi * (1j * m)), f"exp({m}i phi)")


def circle_spectrum(rho: float, m_range, hbar: float = 1.0, samples: int = 16) -> list[tuple[int, float]]:
    """Eigenvalues of P_phi on exp(i m phi), read off from the operator action.

    Each mode is applied to ``samples`` points; the ratio P f / f must be the
    same everywhere, otherwise the mode is not an eigenfunction.
    """
    frame = killing_frame_s1(rho)
    P = momentum(frame[0], hbar)
    pts = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)[:, None] + 0.1
    out = []
    for m in m_range:
        f = fourier_mode(m)
        ratio = P(f)(pts) / f(pts)
        if np.max(np.abs(ratio - ratio[0])) > 1e-12 * max(1.0, abs(ratio[0])) or np.max(np.abs(ratio.imag)) > 1e-12:
            raise DomainError(f"mode {m} is not an eigenfunction of P_phi")
        out.append((m, float(ratio[0].real)))
    return out


def sine_mode(arc: Arc, m: int) -> ScalarField:
    """Dirichlet mode sin(m pi (phi - phi_start) / width) on the arc."""
    k = m * np.pi / arc.width
    return ScalarField.from_expr(1, lambda phi: jets.sin((phi - arc.start) * k), f"sin mode {m}")


@dataclass(frozen=True)
class UncertaintyResult:
    sigma_p: float
    product: float  # sigma_p * arc length
    bound: float  # pi * hbar
    satisfied: bool


def arc_uncertainty_check(arc: Arc, m: int, hbar: float = 1.0, nodes: int = 96, rtol: float = 1e-10) -> UncertaintyResult:
    """Momentum spread of the m-th Dirichlet sine mode against sigma_p * L >= pi hbar."""
    if m < 1:
        raise DomainError(f"sine modes start at m = 1, got {m}")
    grid = build_grid_arc(arc.start, arc.width, arc.rho, nodes)
    P = momentum(killing_frame_s1(arc.rho)[0], hbar)
    f = sine_mode(arc, m)
    Pf = P(f)
    nn = inner_product(f, f, grid).real
    mean = inner_product(f, Pf, grid).real / nn
    second = inner_product(Pf, Pf, grid).real / nn
    sigma = float(np.sqrt(max(second - mean**2, 0.0)))
    bound = np.pi * hbar
    product = sigma * arc.length
    return UncertaintyResult(sigma, product, bound, product >= bound * (1.0 - rtol))
