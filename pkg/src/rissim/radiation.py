"""Secondary radiation of a RIS element and its 2x2 polarimetric response.

The surface fields implied by the actual coefficients are replaced by
equivalent electric and magnetic surface currents.  The currents inherit the
tangential phase progression of the incident wave, so over a rectangular
``a x b`` element the far-field potential integral reduces to

    AF(q) = a b sinc(q_x a / 2) sinc(q_y b / 2),   q = k r_out,t - k_i,t

with ``sinc(x) = sin(x) / x``.  The radiated field is

    E_s = -j omega A - (1/eps0) curl F
        = exp(-jkr) / (4 pi r) AF [ -j omega mu0 J + j k r_out x M ]

using ``curl -> -j k r_out`` on the far-field potential.  The element
response multiplies by ``(4 pi / lambda) r exp(jkr)``, which removes ``r``
exactly in the closed form.  :func:`far_field_quadrature` evaluates the
potential integrals numerically (optionally with the exact distance) and
serves as the test oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rissim.constants import EPS0, ETA0, MU0, wavelength, wavenumber
from rissim.coords import Direction, basis_of_vector, direction_vector
from rissim.errors import HalfSpaceMismatch, NonTransversal
from rissim.gstc import (
    ActualCoefficients,
    actual_coefficients,
    coefficient_basis,
    ideal_coefficients,
    local_geometry,
    synthesize_impedance,
)

HALF_SPACE_TOL = 1e-12
_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class PlaneWave:
    """Plane wave ``E exp(-j k . r)``; ``k`` in rad/m, ``E`` in V/m.

    Arrays with a trailing axis of 3 are allowed for batches.
    """

    E: np.ndarray
    k: np.ndarray

    def __post_init__(self):
        E = np.asarray(self.E, dtype=complex)
        k = np.asarray(self.k, dtype=float)
        kn = np.linalg.norm(k, axis=-1)
        En = np.linalg.norm(E, axis=-1)
        dot = np.abs(np.sum(k * E, axis=-1))
        scale = kn * np.where(En > 0, En, 1.0)
        if np.any(dot > 1e-10 * scale):
            raise NonTransversal("E is not perpendicular to k")
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "k", k)

    @property
    def H(self):
        # free-space impedance, consistent with mu0/eps0 in the potentials
        kn = np.linalg.norm(self.k, axis=-1, keepdims=True)
        return np.cross(self.k, self.E) / (kn * ETA0)

    @property
    def k_hat(self):
        return self.k / np.linalg.norm(self.k, axis=-1, keepdims=True)


def incident_wave(theta_in, phi_in, pol, frequency, amplitude=1.0) -> PlaneWave:
    """Unit ``pol``-polarised wave arriving from local direction ``(theta_in, phi_in)``."""
    e_i = coefficient_basis(theta_in, phi_in, pol)[0]
    k_i = local_geometry(theta_in, phi_in)["k_i"]
    return PlaneWave(amplitude * e_i, wavenumber(frequency) * k_i)


@dataclass(frozen=True, eq=False)
class EquivalentCurrents:
    """Uniform surface currents of one element face.

    ``k_t`` is the tangential wave vector of the exciting field, which sets
    the linear phase progression of the currents across the element.
    """

    J: np.ndarray
    M: np.ndarray
    half_space: str
    k_t: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.half_space not in ("reflective", "transmissive"):
            raise ValueError(f"unknown half space {self.half_space!r}")
        object.__setattr__(self, "J", np.asarray(self.J, dtype=complex))
        object.__setattr__(self, "M", np.asarray(self.M, dtype=complex))
        object.__setattr__(self, "k_t", np.asarray(self.k_t, dtype=float))


def _split_actual(actual):
    if isinstance(actual, ActualCoefficients):
        return {actual.pol: actual}
    out = {}
    for a in actual:
        out[a.pol] = a
    return out


def surface_fields(incident: PlaneWave, actual, type_tag=None):
    """Reflected and transmitted plane waves on the element surface.

    Parameters
    ----------
    incident : PlaneWave
        Wave travelling downward (``k_z < 0``) in the element frame.
    actual : ActualCoefficients or sequence of them
        Coefficients for the incident polarisation(s) present in
        ``incident``.  A component of the incident field along a
        polarisation with no coefficients is an error.
    type_tag : optional
        Accepted for symmetry with the element types; the coefficient basis
        already carries all type-specific structure.

    Returns
    -------
    reflected, transmitted : PlaneWave
    """
    k = incident.k
    if np.any(k[..., 2] >= 0):
        raise ValueError("incident wave must travel toward -z")
    kn = np.linalg.norm(k, axis=-1)
    r_in = -k / kn[..., None]
    theta_in = np.arccos(np.clip(r_in[..., 2], -1.0, 1.0))
    phi_in = np.mod(np.arctan2(r_in[..., 1], r_in[..., 0]), 2 * np.pi)
    g = local_geometry(theta_in, phi_in)
    coeffs = _split_actual(actual)

    E_r = np.zeros(np.broadcast_shapes(incident.E.shape, g["k_r"].shape), complex)
    E_t = np.zeros_like(E_r)
    for pol in ("theta", "phi"):
        e_i, co_r, cr_r, co_t, cr_t = coefficient_basis(theta_in, phi_in, pol)
        amp = np.sum(incident.E * e_i, axis=-1)
        if pol not in coeffs:
            if np.any(np.abs(amp) > 1e-10 * np.maximum(np.linalg.norm(incident.E, axis=-1), 1e-300)):
                raise ValueError(f"incident field has a {pol} component but no coefficients were given")
            continue
        a = coeffs[pol]
        E_r = E_r + amp[..., None] * (a.co_R[..., None] * co_r + a.cross_R[..., None] * cr_r)
        E_t = E_t + amp[..., None] * (a.co_T[..., None] * co_t + a.cross_T[..., None] * cr_t)
    kmag = kn[..., None]
    return PlaneWave(E_r, kmag * g["k_r"]), PlaneWave(E_t, kmag * g["k_t"])


def equivalent_currents(incident: PlaneWave, reflected: PlaneWave, transmitted: PlaneWave, half_space):
    """Equivalent currents on the reflective or transmissive face.

    Each face uses its own outward normal ``n``: ``J = n x H``,
    ``M = -n x E``.  The reflective face (``n = +z``) sees the incident plus
    reflected field and the transmissive face (``n = -z``) the transmitted
    field.
    """
    k_t = incident.k.copy()
    k_t[..., 2] = 0.0
    if half_space == "reflective":
        E = incident.E + reflected.E
        H = incident.H + reflected.H
        n = _Z
    elif half_space == "transmissive":
        E, H = transmitted.E, transmitted.H
        n = -_Z
    else:
        raise ValueError(f"unknown half space {half_space!r}")
    n = np.broadcast_to(n, np.shape(E))
    return EquivalentCurrents(np.cross(n, H), -np.cross(n, E), half_space, k_t)


def _out_vector(out):
    if isinstance(out, Direction):
        return out.vector
    return np.asarray(out, dtype=float)


def _check_half_space(half_space, r_hat):
    z = r_hat[..., 2]
    if half_space == "reflective" and np.any(z < -HALF_SPACE_TOL):
        raise HalfSpaceMismatch("observation below the element for reflective currents")
    if half_space == "transmissive" and np.any(z > HALF_SPACE_TOL):
        raise HalfSpaceMismatch("observation above the element for transmissive currents")


def aperture_factor(q, element_dims):
    """``integral exp(j q . r') ds'`` over a centred ``a x b`` rectangle."""
    a, b = element_dims
    return a * b * np.sinc(q[..., 0] * a / (2 * np.pi)) * np.sinc(q[..., 1] * b / (2 * np.pi))


def _radiate(J, M, r_hat, af, k, omega):
    """Bracketed far-field vector ``AF [-j w mu0 J + j k r x M]`` (without spreading)."""
    return af[..., None] * (-1j * omega * MU0 * J + 1j * k * np.cross(r_hat, M))


def far_field(currents: EquivalentCurrents, element_dims, frequency, out, r):
    """Radiated electric field at distance ``r`` along ``out``.

    ``out`` is a :class:`Direction` or unit vector(s) in the element frame.

    Raises
    ------
    HalfSpaceMismatch
        If ``out`` lies on the other side of the element.
    ValueError
        If ``r < 100 max(a, b)``.
    """
    if r < 100 * max(element_dims):
        raise ValueError("observation distance is not in the element far field")
    r_hat = _out_vector(out)
    _check_half_space(currents.half_space, r_hat)
    k = wavenumber(frequency)
    q = k * r_hat - currents.k_t
    af = aperture_factor(q, element_dims)
    vec = _radiate(currents.J, currents.M, r_hat, af, k, 2 * np.pi * frequency)
    return np.exp(-1j * k * r) / (4 * np.pi * r) * vec


def far_field_quadrature(currents: EquivalentCurrents, element_dims, frequency, out, r, n=64, exact=False):
    """Oracle: radiated field from Gauss-Legendre quadrature of the potentials.

    With ``exact=False`` the integrand uses the far-field phase
    ``R = r - r_out . r'`` and ``1/R = 1/r``; with ``exact=True`` the true
    distance is used in both.  The curl is always taken in the radiation
    approximation.
    """
    r_hat = _out_vector(out)
    _check_half_space(currents.half_space, r_hat)
    a, b = element_dims
    k = wavenumber(frequency)
    omega = 2 * np.pi * frequency
    x, w = np.polynomial.legendre.leggauss(n)
    xs, wx = 0.5 * a * x, 0.5 * a * w
    ys, wy = 0.5 * b * x, 0.5 * b * w
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    W = np.outer(wx, wy)
    src_phase = np.exp(-1j * (currents.k_t[..., 0, None, None] * X + currents.k_t[..., 1, None, None] * Y))
    if exact:
        P = r * r_hat
        R = np.sqrt((P[..., 0, None, None] - X) ** 2 + (P[..., 1, None, None] - Y) ** 2 + P[..., 2, None, None] ** 2)
        kern = np.exp(-1j * k * R) / R
    else:
        proj = r_hat[..., 0, None, None] * X + r_hat[..., 1, None, None] * Y
        kern = np.exp(-1j * k * (r - proj)) / r
    integral = np.sum(W * src_phase * kern, axis=(-1, -2))
    A = MU0 / (4 * np.pi) * currents.J * integral[..., None]
    F = EPS0 / (4 * np.pi) * currents.M * integral[..., None]
    return -1j * omega * A + 1j * k / EPS0 * np.cross(r_hat, F)


# ---------------------------------------------------------------------------
# element response
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ElementResponse:
    """2x2 polarimetric gain; rows = outgoing (theta, phi), columns = incident (theta, phi)."""

    G: np.ndarray
    theta_in: float
    phi_in: float
    theta_out: float
    phi_out: float


@dataclass(frozen=True, eq=False)
class CurrentBundle:
    """Currents of unit theta- and phi-polarised excitation for a batch of elements.

    ``J_r``, ``M_r``, ``J_t``, ``M_t`` have shape ``(..., 2, 3)`` with the
    second-to-last axis indexing the incident polarisation (theta, phi).
    """

    J_r: np.ndarray
    M_r: np.ndarray
    J_t: np.ndarray
    M_t: np.ndarray
    k_t: np.ndarray


def element_currents(desired, theta_in, phi_in, frequency, mode="actual", imp=None) -> CurrentBundle:
    """Currents on both faces for unit theta/phi incidence from ``(theta_in, phi_in)``.

    ``mode="actual"`` uses the impedance model; ``mode="ideal"`` applies the
    desired coefficients at every angle.
    """
    if mode == "actual" and imp is None:
        imp = synthesize_impedance(desired)
    Jr, Mr, Jt, Mt = [], [], [], []
    k_t = None
    for pol in ("theta", "phi"):
        if mode == "actual":
            act = actual_coefficients(desired, theta_in, phi_in, pol, imp=imp)
        elif mode == "ideal":
            act = ideal_coefficients(desired, theta_in, phi_in, pol)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        inc = incident_wave(theta_in, phi_in, pol, frequency)
        refl, trans = surface_fields(inc, act)
        cr = equivalent_currents(inc, refl, trans, "reflective")
        ct = equivalent_currents(inc, refl, trans, "transmissive")
        Jr.append(cr.J)
        Mr.append(cr.M)
        Jt.append(ct.J)
        Mt.append(ct.M)
        k_t = cr.k_t
    return CurrentBundle(
        np.stack(Jr, -2), np.stack(Mr, -2), np.stack(Jt, -2), np.stack(Mt, -2), k_t
    )


def radiate_response(bundle: CurrentBundle, out_vec, element_dims, frequency):
    """Element responses ``G`` of shape ``(..., 2, 2)`` toward unit vector(s) ``out_vec``.

    ``bundle`` and ``out_vec`` broadcast against each other (``out_vec``
    has a trailing axis of 3).  The face is chosen per direction from the
    sign of its z component.
    """
    out_vec = np.asarray(out_vec, dtype=float)
    out_vec = out_vec / np.linalg.norm(out_vec, axis=-1, keepdims=True)
    k = wavenumber(frequency)
    lam = wavelength(frequency)
    omega = 2 * np.pi * frequency
    refl = out_vec[..., 2] >= 0
    u = out_vec[..., None, :]
    J = np.where(refl[..., None, None], bundle.J_r, bundle.J_t)
    M = np.where(refl[..., None, None], bundle.M_r, bundle.M_t)
    q = k * out_vec - bundle.k_t
    af = aperture_factor(q, element_dims)
    vec = _radiate(J, M, u, af[..., None], k, omega) / lam
    th, ph = basis_of_vector(out_vec)
    G = np.empty(vec.shape[:-2] + (2, 2), complex)
    G[..., 0, :] = np.sum(vec * th[..., None, :], axis=-1)
    G[..., 1, :] = np.sum(vec * ph[..., None, :], axis=-1)
    return G


def element_response(
    desired,
    d_in: Direction,
    d_out: Direction,
    element_dims,
    frequency,
    mode="actual",
    r=None,
    method="closed",
) -> ElementResponse:
    """2x2 response of one element for incidence from ``d_in`` toward ``d_out``.

    Column ``q`` is the response to unit ``q``-polarised incidence; row ``p``
    is the ``p`` component of the normalised radiated field.

    Parameters
    ----------
    method : {"closed", "quadrature", "exact"}
        ``closed`` uses the sinc aperture factor (r-independent by
        construction).  ``quadrature`` and ``exact`` integrate the
        potentials numerically at radius ``r`` (default ``1e4`` wavelengths),
        the latter with the exact source-observer distance.
    """
    lam = wavelength(frequency)
    if method == "closed":
        bundle = element_currents(desired, d_in.theta, d_in.phi, frequency, mode)
        G = radiate_response(bundle, d_out.vector, element_dims, frequency)
        return ElementResponse(G, d_in.theta, d_in.phi, d_out.theta, d_out.phi)

    if r is None:
        r = 1e4 * lam
    exact = method == "exact"
    if method not in ("quadrature", "exact"):
        raise ValueError(f"unknown method {method!r}")
    bundle = element_currents(desired, d_in.theta, d_in.phi, frequency, mode)
    u = d_out.vector
    face = "reflective" if u[2] >= 0 else "transmissive"
    J = bundle.J_r if face == "reflective" else bundle.J_t
    M = bundle.M_r if face == "reflective" else bundle.M_t
    th, ph = basis_of_vector(u)
    k = wavenumber(frequency)
    G = np.empty((2, 2), complex)
    for q in range(2):
        cur = EquivalentCurrents(J[q], M[q], face, bundle.k_t)
        E = far_field_quadrature(cur, element_dims, frequency, u, r, exact=exact)
        E = (4 * np.pi / lam) * r * np.exp(1j * k * r) * E
        G[0, q] = np.dot(E, th)
        G[1, q] = np.dot(E, ph)
    return ElementResponse(G, d_in.theta, d_in.phi, d_out.theta, d_out.phi)


def specular_direction(d_in: Direction) -> Direction:
    """Mirror direction of incidence from ``d_in`` (reflective side)."""
    return Direction(d_in.theta, float(np.mod(d_in.phi + np.pi, 2 * np.pi)))


def forward_direction(d_in: Direction) -> Direction:
    """Straight-through direction of incidence from ``d_in`` (transmissive side)."""
    v = -direction_vector(d_in.theta, d_in.phi)
    return Direction.from_vector(v)
