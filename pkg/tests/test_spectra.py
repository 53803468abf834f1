import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from killing_momentum.errors import ConfigError, DomainError, LadderTruncation
from killing_momentum.fields import killing_frame_s3
from killing_momentum.geometry import Sphere3
from killing_momentum.operators import PhysicalConstants, hamiltonian, ladder, laplacian, momentum
from killing_momentum.quadrature import build_grid_s3, gram_matrix, inner_product, norm
from killing_momentum.spectra import (
    build_eigenbasis,
    coefficient_norm,
    double_factorial,
    energy,
    ladder_step,
    momentum_eigenvalue,
    momentum_spacing,
    normalization_constant,
    propagate,
    psi_n0,
    spectrum_table,
)

GRID = build_grid_s3(32, 32, 32)


def test_double_factorial():
    assert [double_factorial(k) for k in (-1, 0, 1, 5, 6)] == [1, 1, 1, 15, 48]


def test_normalization_constants_closed_form():
    assert normalization_constant(0) == pytest.approx(1 / (np.pi * np.sqrt(2)), rel=1e-15)
    assert normalization_constant(1) == pytest.approx(1 / np.pi, rel=1e-15)
    with pytest.raises(DomainError):
        normalization_constant(-1)


@pytest.mark.parametrize("n", range(7))
def test_normalization_by_independent_adaptive_quadrature(n):
    # separable integral of |psi_n0|^2 sin^2 chi sin theta over the unit sphere
    a = quad(lambda c: np.sin(c) ** (2 * n + 2), 0, np.pi, epsrel=1e-13)[0]
    b = quad(lambda t: np.sin(t) ** (2 * n + 1), 0, np.pi, epsrel=1e-13)[0]
    assert normalization_constant(n) ** 2 * a * b * 2 * np.pi == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("R", [1.0, 2.5])
def test_quadrature_norm_of_top_states(R):
    grid = build_grid_s3(32, 32, 32, R)
    for n in range(7):
        for b in "+-":
            assert abs(norm(psi_n0(n, b, R), grid) - 1) < 1e-8


def test_energy_examples():
    assert energy(0) == 0
    assert energy(1) == 1.5
    assert energy(3, 2.0) == pytest.approx(1.875)
    assert energy(2, 1.0, PhysicalConstants(hbar=2.0, mass=0.5)) == pytest.approx(4 * 8 / 1.0)


def test_momentum_eigenvalue_examples():
    assert momentum_eigenvalue(2, 1) == 0
    assert momentum_eigenvalue(1, 0) == -1
    for n in range(1, 6):
        for k in range(n):
            assert momentum_eigenvalue(n, k + 1) - momentum_eigenvalue(n, k) == pytest.approx(2.0)
    assert momentum_spacing(3.0, 1.0) == pytest.approx(2 * np.pi / (np.pi * 3.0))
    with pytest.raises(DomainError):
        momentum_eigenvalue(2, 3)


def test_eigenbasis_examples():
    states = build_eigenbasis(2, "+", grid=GRID)
    assert [s.momentum for s in states] == [-2.0, 0.0, 2.0]
    assert [s.energy for s in build_eigenbasis(1, "-", grid=GRID)] == [1.5, 1.5]


@pytest.mark.parametrize("R", [1.0, 2.5])
def test_eigenvalue_equations_up_to_n5(R, rng, basis_set):
    grid, frame, bases = basis_set(R)
    pts = Sphere3(R).random_points(100, rng)
    H, P3, lap = hamiltonian(frame), momentum(frame[2]), laplacian(frame.manifold)
    for (n, b), states in sorted(bases.items()):
        for s in states:
            psi = s.field(pts)
            amp = np.max(np.abs(psi))
            lam = -n * (n + 2) / R**2
            assert np.max(np.abs(lap(s.field)(pts) - lam * psi)) < 1e-7 * amp * max(abs(lam), 1 / R**2)
            assert np.max(np.abs(H(s.field)(pts) - s.energy * psi)) < 1e-7 * amp * max(s.energy, 1 / R**2)
            assert np.max(np.abs(P3(s.field)(pts) - s.momentum * psi)) < 1e-7 * amp * max(abs(s.momentum), 1 / R)


def test_gram_identity_and_branch_symmetry(basis_set):
    grid, _, bases = basis_set(1.0)
    for n in range(6):
        plus, minus = bases[(n, "+")], bases[(n, "-")]
        G = gram_matrix([s.field for s in plus], grid)
        assert np.max(np.abs(G - np.eye(n + 1))) < 1e-8
        for p, m in zip(plus, minus):
            assert abs(abs(inner_product(p.field.conj(), m.field, grid)) - 1) < 1e-8


def test_ladder_truncates_at_top_state(basis_set):
    grid, frame, bases = basis_set(1.0)
    for n in (1, 3):
        top = bases[(n, "+")][-1]
        with pytest.raises(LadderTruncation):
            ladder_step(top.field, "+", frame, grid)
        assert norm(ladder(1, frame)(top.field), grid) < 1e-8
    assert norm(ladder(-1, frame)(psi_n0(1, "+")), GRID) < 1e-8


def test_eigenbasis_rejects_underresolved_grid():
    with pytest.raises(ConfigError, match="bandwidth rule"):
        build_eigenbasis(5, "+", grid=build_grid_s3(32, 32, 16))


def test_spectrum_table():
    rows = spectrum_table(2)
    row = next(r for r in rows if (r.n, r.k) == (2, 0))
    assert (row.energy, row.momentum, row.branch) == (4.0, -2.0, "+")
    single = spectrum_table(0, branches=("+", "-"))
    assert len(single) == 1 and single[0].energy == 0 and single[0].momentum == 0
    assert {r.spacing for r in spectrum_table(4, 2.0)} == {1.0}
    both = spectrum_table(2, branches=("+", "-"))
    assert len(both) == 1 + 2 * (2 + 3)


def test_propagate_period_and_identity():
    c = {(1, 0, "+"): 0.6 + 0.8j}
    assert propagate(c, 0.0) == c
    T = 2 * np.pi / energy(1)
    assert abs(propagate(c, T)[(1, 0, "+")] - c[(1, 0, "+")]) < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(0.2, 5.0))
def test_propagate_preserves_norm(t, R):
    c = {(1, 0, "+"): 0.6, (3, 2, "-"): 0.8j}
    assert abs(coefficient_norm(propagate(c, t, R)) - coefficient_norm(c)) < 1e-14


def test_state_count_per_branch(basis_set):
    _, _, bases = basis_set(1.0)
    for (n, _), states in bases.items():
        assert len(states) == n + 1
