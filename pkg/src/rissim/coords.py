"""Coordinate frames, spherical polarisation bases and local/global rotation.

Conventions
-----------
A direction ``(theta, phi)`` is the zenith/azimuth of the unit vector

    r = (sin(theta) cos(phi), sin(theta) sin(phi), cos(theta)).

The spherical basis at that direction is

    theta_hat = (cos(theta) cos(phi), cos(theta) sin(phi), -sin(theta))
    phi_hat   = (-sin(phi), cos(phi), 0)

so that ``(r, theta_hat, phi_hat)`` is right handed and
``theta_hat x phi_hat = r``.  For a wave *arriving* from direction ``r`` the
propagation vector is ``k = -r`` and hence ``theta_hat x phi_hat = -k``.
At the poles (``sin(theta) < 1e-12``) the azimuth is taken as 0.

All angles are radians.  Arrays of directions use a trailing axis of size 3.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

POLE_EPS = 1e-12


def direction_vector(theta, phi):
    """Unit vector(s) for zenith ``theta`` and azimuth ``phi``."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack(
        np.broadcast_arrays(st * np.cos(phi), st * np.sin(phi), np.cos(theta)), axis=-1
    )


def direction_angles(v):
    """Inverse of :func:`direction_vector`; ``v`` need not be normalised.

    Returns ``(theta, phi)`` with ``phi`` in ``[0, 2 pi)`` and ``phi = 0`` at
    the poles.
    """
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1)
    x, y, z = v[..., 0] / n, v[..., 1] / n, v[..., 2] / n
    rho = np.hypot(x, y)
    theta = np.arctan2(rho, z)
    phi = np.where(rho < POLE_EPS, 0.0, np.mod(np.arctan2(y, x), 2 * np.pi))
    return theta, phi


def basis_vectors(theta, phi):
    """``(theta_hat, phi_hat)`` arrays at the given angles."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    ct, st = np.cos(theta), np.sin(theta)
    cp, sp = np.cos(phi), np.sin(phi)
    th = np.stack(np.broadcast_arrays(ct * cp, ct * sp, -st), axis=-1)
    ph = np.stack(np.broadcast_arrays(-sp, cp, np.zeros_like(ct * cp)), axis=-1)
    return th, ph


def basis_of_vector(v):
    """Spherical basis at the direction of (unnormalised) vector(s) ``v``."""
    return basis_vectors(*direction_angles(v))


@dataclass(frozen=True)
class Direction:
    """Zenith/azimuth pair in radians."""

    theta: float
    phi: float

    @classmethod
    def from_degrees(cls, theta_deg, phi_deg=0.0):
        return cls(float(np.radians(theta_deg)), float(np.mod(np.radians(phi_deg), 2 * np.pi)))

    @classmethod
    def from_vector(cls, v):
        theta, phi = direction_angles(v)
        return cls(float(theta), float(phi))

    @property
    def vector(self):
        return direction_vector(self.theta, self.phi)

    def basis(self):
        return basis_vectors(self.theta, self.phi)


def spherical_basis(d: Direction):
    """Unit ``(theta_hat, phi_hat)`` at direction ``d``."""
    return basis_vectors(d.theta, d.phi)


def rotation_matrix(axis, angle):
    """Right-handed rotation by ``angle`` about ``axis`` (Rodrigues)."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    x, y, z = axis
    k = np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


@dataclass(frozen=True, eq=False)
class Frame:
    """Local coordinate frame.

    ``axes`` holds the local x, y, z unit vectors as *columns*, expressed in
    global coordinates, so ``v_global = axes @ v_local``.
    """

    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    axes: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=float).reshape(3)
        axes = np.asarray(self.axes, dtype=float).reshape(3, 3)
        if not np.allclose(axes.T @ axes, np.eye(3), atol=1e-10):
            raise ValueError("frame axes are not orthonormal")
        if abs(np.linalg.det(axes) - 1.0) > 1e-10:
            raise ValueError("frame axes are not right handed")
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "axes", axes)

    @classmethod
    def identity(cls):
        return cls(np.zeros(3), np.eye(3))

    @classmethod
    def from_normal_up(cls, origin, normal, up=(0.0, 0.0, 1.0)):
        """Frame with local z along ``normal`` and local y along the projection of ``up``.

        Local x completes the right-handed triad (``x = y cross z``).
        """
        z = np.asarray(normal, dtype=float)
        z = z / np.linalg.norm(z)
        up = np.asarray(up, dtype=float)
        y = up - np.dot(up, z) * z
        ny = np.linalg.norm(y)
        if ny < 1e-12:
            raise ValueError("'up' vector is parallel to the normal")
        y = y / ny
        x = np.cross(y, z)
        return cls(origin, np.column_stack([x, y, z]))

    @classmethod
    def from_rotation(cls, rot, origin=(0.0, 0.0, 0.0)):
        return cls(origin, rot)

    def to_local_vector(self, v):
        return np.asarray(v, dtype=float) @ self.axes

    def to_global_vector(self, v):
        return np.asarray(v, dtype=float) @ self.axes.T

    def to_local_point(self, p):
        return (np.asarray(p, dtype=float) - self.origin) @ self.axes

    def to_global_point(self, p):
        return np.asarray(p, dtype=float) @ self.axes.T + self.origin


def global_to_local(frame: Frame, d_global: Direction) -> Direction:
    return Direction.from_vector(frame.to_local_vector(d_global.vector))


def local_to_global(frame: Frame, d_local: Direction) -> Direction:
    return Direction.from_vector(frame.to_global_vector(d_local.vector))


@dataclass(frozen=True, eq=False)
class PolRotation:
    """2x2 map from local ``(theta, phi)`` field components to global ones."""

    matrix: np.ndarray

    @property
    def inverse(self):
        return PolRotation(np.swapaxes(self.matrix, -1, -2))


def rotation_matrices(axes, v_global):
    """Vectorised polarisation rotation for direction(s) ``v_global``.

    Returns an array of shape ``v_global.shape[:-1] + (2, 2)``; entry
    ``[i, j]`` is the projection of local basis vector ``j`` onto global
    basis vector ``i``.
    """
    v_global = np.asarray(v_global, dtype=float)
    th_g, ph_g = basis_of_vector(v_global)
    th_l, ph_l = basis_of_vector(v_global @ axes)
    th_l = th_l @ axes.T
    ph_l = ph_l @ axes.T
    out = np.empty(v_global.shape[:-1] + (2, 2))
    out[..., 0, 0] = np.sum(th_g * th_l, axis=-1)
    out[..., 0, 1] = np.sum(th_g * ph_l, axis=-1)
    out[..., 1, 0] = np.sum(ph_g * th_l, axis=-1)
    out[..., 1, 1] = np.sum(ph_g * ph_l, axis=-1)
    return out


def polarization_rotation(frame: Frame, d_global: Direction) -> PolRotation:
    return PolRotation(rotation_matrices(frame.axes, d_global.vector))


def lift_response(P, G_local, P_in=None):
    """Express a local-frame response in global polarisation bases.

    ``P`` rotates the departure basis.  If ``P_in`` (rotation at the
    incidence direction) is omitted the same rotation is used on both sides,
    giving the similarity transform ``P G P^-1``.
    """
    P = P.matrix if isinstance(P, PolRotation) else np.asarray(P)
    if P_in is None:
        P_in = P
    elif isinstance(P_in, PolRotation):
        P_in = P_in.matrix
    return P @ np.asarray(G_local) @ np.linalg.inv(P_in)
