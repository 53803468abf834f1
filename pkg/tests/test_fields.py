import numpy as np
import pytest

from killing_momentum import jets
from killing_momentum.errors import DomainError, InconsistencyError, NonConstantStructureError
from killing_momentum.fields import (
    Frame,
    ScalarField,
    VectorField,
    coordinate_field,
    covariant_self_derivative,
    curve_geodesic_defect,
    divergence,
    euclidean_plane_fields,
    integral_curve,
    killing_frame_s1,
    killing_frame_s3,
    killing_residual,
    killing_residuals,
    levi_civita,
    lie_bracket,
    pushforward_match,
    structure_constants,
)
from killing_momentum.geometry import ChartPoint, EuclideanPlane, Sphere3, chart_to_embedding_array, metric_data
from killing_momentum.position import geodesic_distance

H = 1e-5


def _fd_partials(fn, pts):
    """d[z, c, ...] = d_c fn at pts by central differences."""
    out = []
    for c in range(pts.shape[1]):
        e = np.zeros(pts.shape[1])
        e[c] = H
        out.append((fn(pts + e) - fn(pts - e)) / (2 * H))
    return np.stack(out, axis=1)


def _lie_derivative_metric_fd(X, pts):
    """(L_X g)_ab = X^c d_c g_ab + g_cb d_a X^c + g_ac d_b X^c, derivatives by finite differences."""
    M = X.manifold
    xi = X.values(pts).real
    g = metric_data(M, pts).g
    dg = _fd_partials(lambda q: metric_data(M, q).g, pts)  # (z, c, a, b)
    dxi = _fd_partials(lambda q: X.values(q).real, pts)  # (z, a, c)
    return np.einsum("zc,zcab->zab", xi, dg) + np.einsum("zcb,zac->zab", g, dxi) + np.einsum("zac,zbc->zab", g, dxi)


@pytest.mark.parametrize("R", [1.0, 2.5])
def test_killing_frame_is_orthonormal(R, rng):
    frame = killing_frame_s3(R)
    pts = frame.manifold.random_points(1000, rng)
    assert np.max(np.abs(frame.gram(pts) - np.eye(3))) < 1e-10


@pytest.mark.parametrize("R", [1.0, 2.5])
def test_killing_residual_agrees_with_lie_derivative_oracle(R, rng):
    frame = killing_frame_s3(R)
    pts = frame.manifold.random_points(50, rng, margin=0.2)
    for X in frame:
        res = killing_residuals(X, pts)
        assert np.max(np.abs(res)) < 1e-10
        assert np.max(np.abs(_lie_derivative_metric_fd(X, pts))) < 1e-7


def test_killing_residual_detects_non_killing_field(rng):
    M = Sphere3(1.0)
    X = coordinate_field(M, 0)  # d_chi
    pts = M.random_points(30, rng, margin=0.2)
    np.testing.assert_allclose(killing_residuals(X, pts), _lie_derivative_metric_fd(X, pts), atol=1e-7)
    # L_{d_chi} g = diag(0, 2 sin chi cos chi, 2 sin chi cos chi sin^2 theta)
    p = ChartPoint(0.7, 1.1, 0.2)
    expected = np.diag([0.0, np.sin(1.4), np.sin(1.4) * np.sin(1.1) ** 2])
    np.testing.assert_allclose(killing_residual(X, p), expected, atol=1e-13)


def test_divergences(rng):
    frame = killing_frame_s3(2.5)
    pts = frame.manifold.random_points(1000, rng)
    for X in frame:
        assert np.max(np.abs(divergence(X, pts))) < 1e-10
    d_chi = coordinate_field(Sphere3(1.0), 0)
    p = ChartPoint(0.9, 1.3, 0.4)
    assert divergence(d_chi, p) == pytest.approx(2 / np.tan(0.9), rel=1e-12)


def test_pushforward_matches_embedded_killing_fields():
    for R in (1.0, 2.5):
        M = pushforward_match(killing_frame_s3(R), R)
        np.testing.assert_allclose(M, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-12)


def test_pushforward_match_rejects_non_killing_frame():
    frame = killing_frame_s3(1.0)
    bad = frame.with_field(0, coordinate_field(frame.manifold, 0) * (1 / 1.0))
    with pytest.raises(InconsistencyError):
        pushforward_match(bad, 1.0)


@pytest.mark.parametrize("R", [1.0, 2.5])
def test_structure_constants(R, rng):
    frame = killing_frame_s3(R)
    pts = frame.manifold.random_points(100, rng)
    sc = structure_constants(frame, pts)
    expected = -(2.0 / R) * np.einsum("ijk->kij", levi_civita())
    np.testing.assert_allclose(sc.c, expected, atol=1e-12)
    assert sc.deviation < 1e-9


def test_structure_constants_accept_chart_points():
    frame = killing_frame_s3(1.0)
    sc = structure_constants(frame, [ChartPoint(1.0, 1.0, 0.5), ChartPoint(2.0, 0.5, 4.0)])
    assert sc.c[2, 0, 1] == pytest.approx(-2.0)


def test_structure_constants_reject_non_constant_coefficients(rng):
    M = EuclideanPlane("polar")
    e_r = VectorField.from_expr(M, lambda r, phi: [1.0, 0.0], "e_r")
    e_phi = VectorField.from_expr(M, lambda r, phi: [0.0, 1.0 / r], "e_phi")
    with pytest.raises(NonConstantStructureError):
        structure_constants(Frame((e_r, e_phi), M, 1.0), M.random_points(20, rng))


def test_lie_bracket_matches_finite_differences(rng):
    frame = killing_frame_s3(1.0)
    pts = frame.manifold.random_points(20, rng, margin=0.2)
    X, Y = frame[0], frame[2]
    dX = _fd_partials(lambda q: X.values(q).real, pts)
    dY = _fd_partials(lambda q: Y.values(q).real, pts)
    ref = np.einsum("za,zab->zb", X.values(pts).real, dY) - np.einsum("za,zab->zb", Y.values(pts).real, dX)
    np.testing.assert_allclose(lie_bracket(X, Y).values(pts).real, ref, atol=1e-7)


def test_frame_fields_are_geodesic(rng):
    frame = killing_frame_s3(1.0)
    pts = frame.manifold.random_points(50, rng, margin=0.2)
    for X in frame:
        assert np.max(np.abs(covariant_self_derivative(X, pts))) < 1e-12


def test_integral_curves_are_unit_speed_great_circles():
    R = 2.0
    frame = killing_frame_s3(R)
    start = ChartPoint(1.2, 1.0, 0.5)
    t = 0.25
    for X in frame:
        curve = integral_curve(X, start, t)
        assert np.max(np.abs(curve_geodesic_defect(frame.manifold, curve, 1e-3))) < 1e-5
        x = chart_to_embedding_array(curve, R)
        assert geodesic_distance(x[0], x[-1], R)[0] == pytest.approx(t, abs=1e-10)
        # great circle through x0 with tangent v0 spans a plane through the origin
        _, s, _ = np.linalg.svd(x)
        assert s[2] < 1e-9 * s[0]


def test_circle_and_plane_frames(rng):
    frame = killing_frame_s1(3.0)
    assert frame.gram(np.array([[0.2], [4.0]]))[:, 0, 0] == pytest.approx([1.0, 1.0])
    X1, X2, X3 = euclidean_plane_fields()
    pts = X1.manifold.random_points(50, rng)
    for X in (X1, X2, X3):
        assert np.max(np.abs(killing_residuals(X, pts))) < 1e-12
    np.testing.assert_allclose(X3.norm_squared(pts), pts[:, 0] ** 2)
    sc = structure_constants(Frame((X1, X2), X1.manifold, 1.0), pts)
    np.testing.assert_allclose(sc.c, 0.0, atol=1e-12)


def test_scalar_field_cache_serves_lower_orders():
    calls = []

    def ev(points, order):
        calls.append(order)
        return jets.as_jet(jets.sin(jets.Jet.seed(points, order)[0]), 1, order, (len(points),))

    f = ScalarField(1, ev).cached()
    pts = np.array([[0.1], [0.2]])
    f.jet(pts, 3)
    np.testing.assert_allclose(f.jet(pts, 1).partial((1,)), np.cos(pts[:, 0]))
    assert calls == [3]


def test_coordinate_field_axis_checked():
    with pytest.raises((DomainError, IndexError)):
        coordinate_field(Sphere3(), 5)


def test_jacobi_identity_and_antisymmetry(rng):
    X1, X2, X3 = killing_frame_s3(1.0)
    pts = X1.manifold.random_points(30, rng, margin=0.2)
    jac = (
        lie_bracket(lie_bracket(X1, X2), X3).values(pts)
        + lie_bracket(lie_bracket(X2, X3), X1).values(pts)
        + lie_bracket(lie_bracket(X3, X1), X2).values(pts)
    )
    assert np.max(np.abs(jac)) < 1e-9
    np.testing.assert_allclose(lie_bracket(X1, X2).values(pts), -lie_bracket(X2, X1).values(pts), atol=1e-14)
    np.testing.assert_allclose(lie_bracket(X1, X1).values(pts), 0.0, atol=1e-14)
    mix = lie_bracket(X1 * 2.0 + X3, X2).values(pts)
    np.testing.assert_allclose(mix, 2 * lie_bracket(X1, X2).values(pts) + lie_bracket(X3, X2).values(pts), atol=1e-12)


def test_frame_component_examples():
    p = np.array([[np.pi / 2, np.pi / 2, 1.3]])
    np.testing.assert_allclose(killing_frame_s3(1.0)[2].values(p)[0], [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(killing_frame_s3(2.0)[2].values(p)[0], [0, 0, 0.5], atol=1e-15)


def test_embedded_killing_fields(rng):
    from killing_momentum.fields import embedding_frame_s3

    K = embedding_frame_s3(1.0)
    np.testing.assert_allclose(K[0](np.array([1.0, 0, 0, 0])), [0, 0, 0, 1])
    x = chart_to_embedding_array(Sphere3(1.0).random_points(100, rng))
    kv = np.stack([k(x) for k in K], axis=1)
    np.testing.assert_allclose(np.einsum("zik,zk->zi", kv, x), 0.0, atol=1e-14)
    np.testing.assert_allclose(np.einsum("zik,zjk->zij", kv, kv), np.broadcast_to(np.eye(3), (100, 3, 3)), atol=1e-14)
    M = pushforward_match(killing_frame_s3(1.0), 1.0)
    np.testing.assert_allclose(M @ M.T, np.eye(3), atol=1e-12)
    assert np.linalg.det(M) == pytest.approx(1.0)


def test_unit_length_along_integral_curves():
    frame = killing_frame_s3(1.0)
    for X in frame:
        curve = integral_curve(X, ChartPoint(1.0, 1.2, 0.3), 0.2)
        np.testing.assert_allclose(X.norm_squared(curve), 1.0, atol=1e-12)


def test_plane_rotation_orbits_are_not_geodesics():
    _, _, X3 = euclidean_plane_fields()
    pts = np.array([[2.0, 0.4]])
    assert np.max(np.abs(killing_residuals(X3, pts))) < 1e-14
    assert np.max(np.abs(covariant_self_derivative(X3, pts))) > 1.0
