import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rissim.coords import (
    Direction,
    Frame,
    basis_vectors,
    direction_angles,
    direction_vector,
    global_to_local,
    lift_response,
    local_to_global,
    polarization_rotation,
    rotation_matrix,
    spherical_basis,
)

angles = st.tuples(st.floats(0.01, np.pi - 0.01), st.floats(0, 2 * np.pi - 1e-9))
unit3 = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 0.1)


@st.composite
def frames(draw):
    axis = np.array(draw(unit3))
    angle = draw(st.floats(-np.pi, np.pi))
    origin = draw(st.tuples(*[st.floats(-10, 10)] * 3))
    return Frame(origin, rotation_matrix(axis, angle))


def close_angles(a: Direction, b: Direction, tol=1e-12):
    return np.allclose(a.vector, b.vector, atol=tol)


def test_identity_frame_keeps_direction():
    d = Direction.from_degrees(60, 0)
    assert close_angles(global_to_local(Frame.identity(), d), d)


def test_azimuth_rotation_removes_azimuth():
    f = Frame((0, 0, 0), rotation_matrix((0, 0, 1), np.pi / 2))
    loc = global_to_local(f, Direction.from_degrees(60, 90))
    assert loc.theta == pytest.approx(np.radians(60), abs=1e-12)
    assert np.cos(loc.phi) == pytest.approx(1.0, abs=1e-12)


def test_tilted_frame_broadside():
    # frame tilted 60 degrees about global x; rotate the global z axis into
    # the local frame by hand: R_x(-60) z = (0, sin 60, cos 60)
    f = Frame((0, 0, 0), rotation_matrix((1, 0, 0), np.radians(60)))
    loc = global_to_local(f, Direction(0.0, 0.0))
    expected = np.array([0.0, np.sin(np.radians(60)), np.cos(np.radians(60))])
    assert np.allclose(loc.vector, expected, atol=1e-12)
    assert loc.theta == pytest.approx(np.radians(60), abs=1e-12)
    assert loc.phi == pytest.approx(np.pi / 2, abs=1e-12)


@pytest.mark.parametrize(
    "theta, phi, th_hat, ph_hat",
    [
        (90, 0, (0, 0, -1), (0, 1, 0)),
        (0, 0, (1, 0, 0), (0, 1, 0)),
        (45, 45, (0.5, 0.5, -np.sqrt(0.5)), (-np.sqrt(0.5), np.sqrt(0.5), 0)),
    ],
)
def test_spherical_basis_examples(theta, phi, th_hat, ph_hat):
    t, p = spherical_basis(Direction.from_degrees(theta, phi))
    assert np.allclose(t, th_hat, atol=1e-12)
    assert np.allclose(p, ph_hat, atol=1e-12)


@given(angles)
def test_basis_is_right_handed(a):
    r = direction_vector(*a)
    t, p = basis_vectors(*a)
    assert np.linalg.norm(r) == pytest.approx(1.0, abs=1e-12)
    assert abs(np.dot(t, p)) < 1e-12
    assert np.allclose(np.cross(t, p), r, atol=1e-12)


def test_pole_azimuth_convention():
    th, ph = direction_angles(np.array([0.0, 0.0, 2.0]))
    assert th == 0.0 and ph == 0.0
    th, ph = direction_angles(np.array([0.0, 0.0, -1.0]))
    assert th == pytest.approx(np.pi) and ph == 0.0


@settings(max_examples=200)
@given(frames(), angles)
def test_round_trip(frame, a):
    d = Direction(*a)
    assert close_angles(local_to_global(frame, global_to_local(frame, d)), d)


def _rotation_oracle(frame, d):
    """Solve for P from two transverse fields expressed in both bases."""
    r = d.vector
    tg, pg = spherical_basis(d)
    loc = frame.to_local_vector(r)
    tl, pl = basis_vectors(*direction_angles(loc))
    fields = np.stack([tg + 0.3 * pg, pg - 0.7 * tg])
    g = np.stack([fields @ tg, fields @ pg], -1)
    fl = frame.to_local_vector(fields)
    l = np.stack([fl @ tl, fl @ pl], -1)
    # g_k = P l_k for both fields
    return np.linalg.solve(l, g).T


def test_rotation_identity_frame():
    P = polarization_rotation(Frame.identity(), Direction.from_degrees(37, 211)).matrix
    assert np.allclose(P, np.eye(2), atol=1e-12)


def test_rotation_half_turn_matches_projection_oracle():
    f = Frame((0, 0, 0), rotation_matrix((0, 0, 1), np.pi))
    d = Direction.from_degrees(90, 30)
    P = polarization_rotation(f, d).matrix
    assert np.allclose(P, _rotation_oracle(f, d), atol=1e-12)
    assert np.allclose(P, np.eye(2), atol=1e-12)


def test_rotation_tilted_frame_matches_oracle():
    f = Frame((0, 0, 0), rotation_matrix((1, 2, 0.5), 1.1))
    d = Direction.from_degrees(70, 200)
    assert np.allclose(polarization_rotation(f, d).matrix, _rotation_oracle(f, d), atol=1e-12)


@settings(max_examples=300)
@given(frames(), angles)
def test_rotation_is_orthogonal(frame, a):
    P = polarization_rotation(frame, Direction(*a)).matrix
    assert np.allclose(P.T @ P, np.eye(2), atol=1e-10)


def test_rotation_inverse_is_transpose():
    f = Frame((0, 0, 0), rotation_matrix((0.2, -1, 0.4), 0.8))
    P = polarization_rotation(f, Direction.from_degrees(50, 10))
    assert np.allclose(P.inverse.matrix @ P.matrix, np.eye(2), atol=1e-12)


complex_entries = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


@given(frames(), angles, st.lists(complex_entries, min_size=4, max_size=4))
def test_lift_preserves_similarity_invariants(frame, a, g):
    G = np.array(g).reshape(2, 2)
    P = polarization_rotation(frame, Direction(*a))
    out = lift_response(P, G)
    assert np.trace(out) == pytest.approx(np.trace(G), abs=1e-10)
    assert np.linalg.det(out) == pytest.approx(np.linalg.det(G), abs=1e-9)
    ev, ref = np.linalg.eigvals(out), np.linalg.eigvals(G)
    err = min(np.abs(ev - ref).max(), np.abs(ev[::-1] - ref).max())
    assert err < 1e-6


def test_lift_trivial_cases():
    G = np.array([[1 + 2j, 0.5], [-0.1j, 3]])
    assert np.allclose(lift_response(np.eye(2), G), G)
    P = polarization_rotation(Frame((0, 0, 0), rotation_matrix((1, 1, 0), 0.4)), Direction.from_degrees(20, 80))
    assert np.allclose(lift_response(P, np.eye(2)), np.eye(2), atol=1e-12)


def test_frame_rejects_bad_axes():
    with pytest.raises(ValueError):
        Frame((0, 0, 0), np.diag([1.0, 1.0, 2.0]))
    with pytest.raises(ValueError):
        Frame((0, 0, 0), np.diag([1.0, 1.0, -1.0]))


def test_frame_from_normal_up():
    f = Frame.from_normal_up((1, 2, 3), (-0.5, -np.sqrt(3) / 2, 0), (0, 0, 1))
    x, y, z = f.axes.T
    assert np.allclose(z, (-0.5, -np.sqrt(3) / 2, 0))
    assert np.allclose(y, (0, 0, 1))
    assert np.allclose(x, (np.sqrt(3) / 2, -0.5, 0))
    assert np.linalg.det(f.axes) == pytest.approx(1.0)
    p = np.array([4.0, -1.0, 2.5])
    assert np.allclose(f.to_global_point(f.to_local_point(p)), p)
    with pytest.raises(ValueError):
        Frame.from_normal_up((0, 0, 0), (0, 0, 1), (0, 0, 2))
