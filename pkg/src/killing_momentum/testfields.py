"""Analytic test fields on S^3 used by the verification suite.

Polynomials in the (normalized) embedding coordinates are band-limited and
smooth across the chart seams, so quadrature treats them exactly; the
transcendental ones exercise the full jet machinery.
"""

from __future__ import annotations

from . import jets
from .fields import ScalarField
from .geometry import embedding_expr


def _on_sphere(fn, label: str) -> ScalarField:
    def expr(chi, theta, phi):
        x1, x2, x3, x4 = embedding_expr(chi, theta, phi, 1.0)
        return fn(x1, x2, x3, x4)

    return ScalarField.from_expr(3, expr, label)


def band_limited_fields() -> list[ScalarField]:
    return [
        _on_sphere(lambda x1, x2, x3, x4: x3 - 1j * x4, "x3 - i x4"),
        _on_sphere(lambda x1, x2, x3, x4: x1 * x2 + 0.5j * x3**2, "x1 x2 + i/2 x3^2"),
        _on_sphere(lambda x1, x2, x3, x4: (x1 + 1j * x4) ** 2 * x2 - x3, "(x1 + i x4)^2 x2 - x3"),
        _on_sphere(lambda x1, x2, x3, x4: 0.3 + x4 * x2**2 - 2j * x1 * x3, "0.3 + x4 x2^2 - 2i x1 x3"),
    ]


def analytic_fields() -> list[ScalarField]:
    """Five analytically distinct fields (polynomial, exponential, trigonometric)."""
    return [
        ScalarField.from_expr(
            3, lambda c, t, p: jets.exp(p * -1j) * jets.sin(c) * jets.sin(t), "exp(-i phi) sin chi sin theta"
        ),
        _on_sphere(lambda x1, x2, x3, x4: x1 * x2 + 0.5j * x3**2, "x1 x2 + i/2 x3^2"),
        _on_sphere(lambda x1, x2, x3, x4: jets.exp(x1) * (x2 + 1j), "exp(x1)(x2 + i)"),
        _on_sphere(lambda x1, x2, x3, x4: jets.cos(2.0 * x3) + 1j * jets.sin(x1 + x2 * x4), "cos 2x3 + i sin(x1 + x2 x4)"),
        _on_sphere(lambda x1, x2, x3, x4: 1.0 / (2.0 + x2 - 0.5j * x3), "1 / (2 + x2 - i x3/2)"),
    ]
