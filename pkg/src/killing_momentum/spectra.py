"""Free-particle eigenstates on S^3 built with the ladder operators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import ConfigError, DomainError, LadderTruncation
from .fields import Frame, ScalarField, killing_frame_s3
from .operators import PhysicalConstants, ladder
from .quadrature import QuadratureGrid, bandwidth_violation, norm

ANNIHILATION_TOL = 1e-8


def branch_sign(branch) -> int:
    if branch in ("+", 1, +1):
        return 1
    if branch in ("-", -1):
        return -1
    raise DomainError(f"branch must be '+' or '-', got {branch!r}")


def branch_symbol(branch) -> str:
    return "+" if branch_sign(branch) > 0 else "-"


def double_factorial(n: int) -> int:
    """n!! with the convention (-1)!! = 0!! = 1."""
    if n < -1:
        raise DomainError(f"double factorial undefined for {n}")
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def normalization_constant(n: int) -> float:
    """C_n for the unit sphere: sqrt(2^(2n-1) (n+1))/pi * n! (2n-1)!! / (2n)!."""
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    ratio = math.factorial(n) * double_factorial(2 * n - 1) / math.factorial(2 * n)
    return math.sqrt(2.0 ** (2 * n - 1) * (n + 1)) / math.pi * ratio


def psi_n0(n: int, branch="+", R: float = 1.0) -> ScalarField:
    """C_n R^(-3/2) sin^n(chi) sin^n(theta) exp(-+ i n phi); unit norm on the sphere of radius R."""
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    s = branch_sign(branch)
    c = normalization_constant(n) / R**1.5

    def fn(chi, theta, phi):
        return c * (jets.sin(chi) * jets.sin(theta)) ** n * jets.exp(phi * (-1j * s * n))

    return ScalarField.from_expr(3, fn, f"psi[{n},0,{branch_symbol(branch)}]")


def energy(n: int, R: float = 1.0, constants: PhysicalConstants = PhysicalConstants()) -> float:
    """E_n = hbar^2 n(n+2) / (2 m R^2)."""
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    return constants.hbar**2 * n * (n + 2) / (2.0 * constants.mass * R**2)


def momentum_eigenvalue(n: int, k: int, R: float = 1.0, hbar: float = 1.0) -> float:
    """p_nk = (k - n/2) 2 hbar / R."""
    if not 0 <= k <= n:
        raise DomainError(f"k={k} outside 0..n={n}")
    return (k - n / 2.0) * 2.0 * hbar / R


def momentum_spacing(R: float = 1.0, hbar: float = 1.0) -> float:
    """Adjacent momentum gap 2 hbar / R, i.e. h / (pi R)."""
    return 2.0 * hbar / R


@dataclass(frozen=True)
class EigenState:
    n: int
    k: int
    branch: str
    field: ScalarField
    energy: float
    momentum: float  # eigenvalue of P_3: +p_nk on branch '+', -p_nk on branch '-'


def _normalized(raw: ScalarField, grid: QuadratureGrid, label: str) -> ScalarField:
    nrm = norm(raw, grid)
    if nrm < ANNIHILATION_TOL:
        raise LadderTruncation(f"{label}: ladder step annihilated the state (norm {nrm:.3e})")
    return (raw * (1.0 / nrm)).relabel(label).cached()


def ladder_step(state: ScalarField, branch, frame: Frame, grid: QuadratureGrid, hbar: float = 1.0, label: str = "psi") -> ScalarField:
    """Apply P_+ (branch '+') or P_- and renormalize; raises LadderTruncation on annihilation."""
    raw = ladder(branch_sign(branch), frame, hbar)(state).cached()
    return _normalized(raw, grid, label)


def build_eigenbasis(
    n: int,
    branch="+",
    R: float = 1.0,
    constants: PhysicalConstants = PhysicalConstants(),
    grid: QuadratureGrid | None = None,
    frame: Frame | None = None,
) -> list[EigenState]:
    """psi^{nk} = (P_+-)^k psi^{n0}, normalized after every step, k = 0..n."""
    if n < 0:
        raise DomainError(f"n must be nonnegative, got {n}")
    if grid is None:
        from .quadrature import build_grid_s3

        size = max(32, 4 * (n + 1), 2 * (n + 4))
        grid = build_grid_s3(size, size, size, R)
    why = bandwidth_violation(grid, n)
    if why:
        raise ConfigError(why)
    frame = frame if frame is not None else killing_frame_s3(R)
    sym = branch_symbol(branch)
    s = branch_sign(branch)
    E = energy(n, R, constants)

    field = psi_n0(n, sym, R).cached()
    field.jet(grid.nodes, n)  # one pass at full order feeds every ladder step
    states = [EigenState(n, 0, sym, field, E, s * momentum_eigenvalue(n, 0, R, constants.hbar))]
    for k in range(1, n + 1):
        field = ladder_step(field, sym, frame, grid, constants.hbar, f"psi[{n},{k},{sym}]")
        states.append(EigenState(n, k, sym, field, E, s * momentum_eigenvalue(n, k, R, constants.hbar)))
    return states


@dataclass(frozen=True)
class SpectrumRow:
    n: int
    k: int
    branch: str
    energy: float
    momentum: float
    spacing: float


def spectrum_table(
    n_max: int,
    R: float = 1.0,
    constants: PhysicalConstants = PhysicalConstants(),
    branches: tuple[str, ...] = ("+",),
) -> list[SpectrumRow]:
    """Closed-form (E_n, P_3 eigenvalue) rows; the n = 0 state is listed once."""
    rows = []
    dp = momentum_spacing(R, constants.hbar)
    for n in range(n_max + 1):
        for b in branches:
            if n == 0 and b != branches[0]:
                continue
            s = branch_sign(b)
            for k in range(n + 1):
                rows.append(SpectrumRow(n, k, b, energy(n, R, constants), s * momentum_eigenvalue(n, k, R, constants.hbar), dp))
    return rows


StateKey = tuple[int, int, str]


def propagate(coeffs: dict[StateKey, complex], t: float, R: float = 1.0, constants: PhysicalConstants = PhysicalConstants()) -> dict[StateKey, complex]:
    """Free evolution of eigenstate coefficients: c -> c exp(-i E_n t / hbar)."""
    out = {}
    for key, c in coeffs.items():
        n = key[0]
        out[key] = complex(c) * np.exp(-1j * energy(n, R, constants) * t / constants.hbar)
    return out


def coefficient_norm(coeffs: dict[StateKey, complex]) -> float:
    return math.sqrt(math.fsum(abs(c) ** 2 for c in coeffs.values()))
