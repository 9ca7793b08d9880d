"""Impedance-sheet model of a RIS element.

Desired (normal-incidence) reflection/transmission coefficients are mapped to
effective electric admittance and magnetic impedance tensors of a zero
thickness sheet.  Oblique-incidence ("actual") coefficients then follow from
the generalized sheet transition conditions

    [E-_y - E+_y, E+_x - E-_x] = -Z_m . H_av,t
    [H-_y - H+_y, H+_x - H-_x] =  Y_e . E_av,t

where ``+`` denotes the illuminated side (z > 0), ``-`` the shadow side and
``av`` the mean of both sides.

Local geometry
--------------
A wave arriving from direction ``(theta, phi)`` (the direction pointing back
at the source) propagates along ``k_i = -r``.  The specular reflection
travels along ``k_r = (-s cos(phi), -s sin(phi), c)`` and the transmitted
wave continues along ``k_t = k_i`` with ``s, c = sin(theta), cos(theta)``.

Coefficient basis
-----------------
All ``ActualCoefficients`` are referenced to the incident polarisation:

=========  ==================  ==================  ==================  ==============
incident   co (reflected)      cross (reflected)   co (transmitted)    cross (trans.)
=========  ==================  ==================  ==================  ==============
phi        phi_i               -p_r                phi_i               -theta_i
theta      p_r                 phi_i               theta_i             phi_i
=========  ==================  ==================  ==================  ==============

with ``p_r = (c cos(phi), c sin(phi), s)`` the TM unit vector of the
reflected wave.  At normal incidence this basis reproduces the desired
tensors exactly; for a Type 1 sheet and phi-polarised incidence it reduces to
``E_r = R E_i``, ``E_t = T E_i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from rissim.constants import ETA
from rissim.errors import IllConditioned, NonCardinalAzimuth, SingularAngle, SingularSynthesis

POLE_TOL = 1e-12
COND_MAX = 1e12
# 90 degrees in float64 leaves cos() at ~6e-17; snap that to an exact zero
_COS_SNAP = 1e-15

_J = np.array([[0.0, -1.0], [1.0, 0.0]])


def _c(x):
    return np.asarray(x, dtype=complex)


def _check_magnitudes(*vals):
    for v in vals:
        if np.any(np.abs(v) > 1 + 1e-12):
            raise ValueError("coefficient magnitude exceeds 1")


def _first_index(mask):
    flat = np.flatnonzero(np.asarray(mask))
    return int(flat[0]) if flat.size else None


# ---------------------------------------------------------------------------
# desired coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Type1:
    """Dual-polarised unified control: ``R_bar = R I``, ``T_bar = T I``.

    Fields may be scalars or equal-shaped arrays (one entry per element).
    """

    R: complex
    T: complex
    kind = "type1"

    def __post_init__(self):
        object.__setattr__(self, "R", _c(self.R))
        object.__setattr__(self, "T", _c(self.T))
        _check_magnitudes(self.R, self.T)

    @property
    def shape(self):
        return np.broadcast_shapes(self.R.shape, self.T.shape)

    def values(self):
        return (self.R, self.T)

    def tensors(self):
        eye = np.eye(2)
        return self.R[..., None, None] * eye, self.T[..., None, None] * eye

    def __getitem__(self, idx):
        return Type1(self.R[idx], self.T[idx])


@dataclass(frozen=True, eq=False)
class Type2:
    """Dual-polarised independent control: ``R_bar = diag(Rx, Ry)``, ``T_bar = diag(Tx, Ty)``."""

    Rx: complex
    Ry: complex
    Tx: complex
    Ty: complex
    kind = "type2"

    def __post_init__(self):
        for name in ("Rx", "Ry", "Tx", "Ty"):
            object.__setattr__(self, name, _c(getattr(self, name)))
        _check_magnitudes(*self.values())

    @property
    def shape(self):
        return np.broadcast_shapes(*(v.shape for v in self.values()))

    def values(self):
        return (self.Rx, self.Ry, self.Tx, self.Ty)

    def tensors(self):
        shape = self.shape
        R = np.zeros(shape + (2, 2), complex)
        T = np.zeros(shape + (2, 2), complex)
        R[..., 0, 0], R[..., 1, 1] = self.Rx, self.Ry
        T[..., 0, 0], T[..., 1, 1] = self.Tx, self.Ty
        return R, T

    def __getitem__(self, idx):
        return Type2(*(v[idx] for v in self.values()))


@dataclass(frozen=True, eq=False)
class Type3:
    """Polarisation rotating element: ``R_bar = [[R_co, -R_cro], [R_cro, R_co]]`` (same for T)."""

    Rco: complex
    Rcro: complex
    Tco: complex
    Tcro: complex
    kind = "type3"

    def __post_init__(self):
        for name in ("Rco", "Rcro", "Tco", "Tcro"):
            object.__setattr__(self, name, _c(getattr(self, name)))
        _check_magnitudes(*self.values())

    @property
    def shape(self):
        return np.broadcast_shapes(*(v.shape for v in self.values()))

    def values(self):
        return (self.Rco, self.Rcro, self.Tco, self.Tcro)

    def tensors(self):
        eye = np.eye(2)
        R = self.Rco[..., None, None] * eye + self.Rcro[..., None, None] * _J
        T = self.Tco[..., None, None] * eye + self.Tcro[..., None, None] * _J
        return R, T

    def __getitem__(self, idx):
        return Type3(*(v[idx] for v in self.values()))


DesiredCoefficients = Type1 | Type2 | Type3


@dataclass(frozen=True, eq=False)
class ImpedanceTensors:
    """Tangential blocks of the sheet admittance ``Ye`` (S) and impedance ``Zm`` (ohm).

    Both have shape ``(..., 2, 2)``; the z row and column are identically zero.
    """

    Ye: np.ndarray
    Zm: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Ye", _c(self.Ye))
        object.__setattr__(self, "Zm", _c(self.Zm))

    def __getitem__(self, idx):
        return ImpedanceTensors(self.Ye[idx], self.Zm[idx])


@dataclass(frozen=True, eq=False)
class ActualCoefficients:
    """Oblique-incidence coefficients on the incident-referenced basis (see module notes)."""

    pol: str
    co_R: np.ndarray
    cross_R: np.ndarray
    co_T: np.ndarray
    cross_T: np.ndarray

    def __post_init__(self):
        if self.pol not in ("theta", "phi"):
            raise ValueError(f"unknown polarisation {self.pol!r}")
        for name in ("co_R", "cross_R", "co_T", "cross_T"):
            object.__setattr__(self, name, _c(getattr(self, name)))

    def as_array(self):
        """Stack as ``(..., 4)`` in the order co_R, cross_R, co_T, cross_T."""
        return np.stack(np.broadcast_arrays(self.co_R, self.cross_R, self.co_T, self.cross_T), axis=-1)

    def power(self):
        return np.sum(np.abs(self.as_array()) ** 2, axis=-1)


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------


def _guard(den, what):
    bad = np.abs(den) < POLE_TOL
    if np.any(bad):
        raise SingularSynthesis(f"{what} denominator vanishes", index=_first_index(bad))


def synthesize_impedance(desired) -> ImpedanceTensors:
    """Impedance tensors realising ``desired`` at normal incidence.

    Raises
    ------
    SingularSynthesis
        If a synthesis denominator is below 1e-12 in magnitude, e.g.
        ``R + T = -1`` for a Type 1 element.
    """
    if isinstance(desired, Type1):
        R, T = desired.R, desired.T
        dy, dz = 1 + R + T, 1 - R + T
        _guard(dy, "admittance")
        _guard(dz, "impedance")
        y = 2 / ETA * (1 - R - T) / dy
        z = 2 * ETA * (1 + R - T) / dz
        eye = np.eye(2)
        return ImpedanceTensors(y[..., None, None] * eye, z[..., None, None] * eye)

    if isinstance(desired, Type2):
        Rx, Ry, Tx, Ty = np.broadcast_arrays(*desired.values())
        for d in (1 + Rx + Tx, 1 + Ry + Ty):
            _guard(d, "admittance")
        for d in (1 - Rx + Tx, 1 - Ry + Ty):
            _guard(d, "impedance")
        Y = np.zeros(Rx.shape + (2, 2), complex)
        Z = np.zeros_like(Y)
        Y[..., 0, 0] = 2 / ETA * (1 - Rx - Tx) / (1 + Rx + Tx)
        Y[..., 1, 1] = 2 / ETA * (1 - Ry - Ty) / (1 + Ry + Ty)
        # the magnetic sheet couples E_x to H_y, hence the swapped axes
        Z[..., 0, 0] = 2 * ETA * (1 + Ry - Ty) / (1 - Ry + Ty)
        Z[..., 1, 1] = 2 * ETA * (1 + Rx - Tx) / (1 - Rx + Tx)
        return ImpedanceTensors(Y, Z)

    if isinstance(desired, Type3):
        Rco, Rcro, Tco, Tcro = np.broadcast_arrays(*desired.values())
        a, b = Rco + Tco, Rcro + Tcro
        c, d = Rco - Tco, Rcro - Tcro
        dy = (1 + a) ** 2 + b**2
        dz = (1 - c) ** 2 + d**2
        _guard(dy, "admittance")
        _guard(dz, "impedance")
        yd = 2 / ETA * (1 - a**2 - b**2) / dy
        yo = 4 / ETA * b / dy
        zd = 2 * ETA * (1 - c**2 - d**2) / dz
        zo = 4 * ETA * d / dz
        Y = np.stack([np.stack([yd, yo], -1), np.stack([-yo, yd], -1)], -2)
        Z = np.stack([np.stack([zd, -zo], -1), np.stack([zo, zd], -1)], -2)
        return ImpedanceTensors(Y, Z)

    raise TypeError(f"unsupported desired coefficients {type(desired).__name__}")


def is_lossless_impedance(imp: ImpedanceTensors, tol=1e-9):
    """True where both tensors are anti-Hermitian (purely reactive sheet).

    The residuals are scaled by ``eta`` so both tensors are dimensionless.
    """
    Y = imp.Ye * ETA
    Z = imp.Zm / ETA
    ry = np.abs(Y + np.conj(np.swapaxes(Y, -1, -2))).max(axis=(-1, -2))
    rz = np.abs(Z + np.conj(np.swapaxes(Z, -1, -2))).max(axis=(-1, -2))
    return (ry < tol) & (rz < tol)


# ---------------------------------------------------------------------------
# closed-form actual coefficients (phi-polarised incidence)
# ---------------------------------------------------------------------------


def _cos(theta):
    c = np.cos(np.asarray(theta, dtype=float))
    return np.where(np.abs(c) < _COS_SNAP, 0.0, c)


def _angle_guard(*dens):
    for den in dens:
        bad = np.abs(den) < POLE_TOL
        if np.any(bad):
            raise SingularAngle("actual-coefficient denominator vanishes", index=_first_index(bad))


def _te_pair(y, z, c):
    """Reflection/transmission of one tangential axis for TE incidence."""
    dy = 2 * c + ETA * y
    dz = z * c + 2 * ETA
    _angle_guard(dy, dz / ETA)
    R = -ETA * y / dy + z * c / dz
    T = 2 * c / dy - z * c / dz
    # eta y / eta y can round to 1 - 2**-53; pin the grazing limit
    grazing = c == 0
    return np.where(grazing, -1.0 + 0j, R), np.where(grazing, 0j, T)


def actual_type1(imp: ImpedanceTensors, theta_in) -> ActualCoefficients:
    """Actual coefficients of a Type 1 sheet for phi-polarised incidence.

    Valid for any azimuth.  At ``cos(theta_in) = 0`` the result is exactly
    ``(-1, 0)``.
    """
    c = _cos(theta_in)
    R, T = _te_pair(imp.Ye[..., 0, 0], imp.Zm[..., 0, 0], c)
    zero = np.zeros_like(R)
    return ActualCoefficients("phi", R, zero, T, zero)


def type2_axis_coefficients(imp: ImpedanceTensors, theta_in):
    """Per-axis TE coefficients ``(R_x, R_y, T_x, T_y)`` of a Type 2 sheet.

    ``R_x`` applies when the incident E field lies along local x, which for
    phi-polarised incidence happens at azimuth pi/2 or 3 pi/2.
    """
    c = _cos(theta_in)
    Y, Z = imp.Ye, imp.Zm
    Rx, Tx = _te_pair(Y[..., 0, 0], Z[..., 1, 1], c)
    Ry, Ty = _te_pair(Y[..., 1, 1], Z[..., 0, 0], c)
    return Rx, Ry, Tx, Ty


def _cardinal_index(phi_in, tol=1e-9):
    q = np.asarray(phi_in, dtype=float) / (np.pi / 2)
    n = np.round(q)
    if np.any(np.abs(q - n) * (np.pi / 2) > tol):
        raise NonCardinalAzimuth("Type 2 closed form needs phi_in in {0, pi/2, pi, 3pi/2}")
    return n.astype(int) % 4


def actual_type2(imp: ImpedanceTensors, theta_in, phi_in) -> ActualCoefficients:
    """Actual coefficients of a Type 2 sheet for phi-polarised incidence at a cardinal azimuth."""
    n = _cardinal_index(phi_in)
    Rx, Ry, Tx, Ty = type2_axis_coefficients(imp, theta_in)
    along_y = (n % 2) == 0
    R = np.where(along_y, Ry, Rx)
    T = np.where(along_y, Ty, Tx)
    zero = np.zeros_like(R)
    return ActualCoefficients("phi", R, zero, T, zero)


def appendix_terms(Yxx, Yxy, Zxx, Zxy, c):
    """Numerators ``D1..D4`` and denominator ``D0`` of the rotating-sheet solution.

    The quantities are referenced to each outgoing wave's own spherical
    basis; :func:`actual_type3` converts them.
    """
    e = ETA
    c2, c3, c4 = c**2, c**3, c**4
    D0 = -(4 * c + 2 * Yxx * e + 2 * Yxx * e * c2 + Yxx**2 * e**2 * c + Yxy**2 * e**2 * c) * (
        4 * e**2 * c + 2 * Zxx * e + Zxx**2 * c + Zxy**2 * c + 2 * Zxx * e * c2
    )
    D1 = 2 * (
        2 * Zxx**2 * c2
        + 2 * Zxy**2 * c2
        - 2 * Yxx**2 * e**4 * c2
        - 2 * Yxy**2 * e**4 * c2
        - 4 * Yxx * e**3 * c
        + 4 * Zxx * e * c3
        - 2 * Yxx * Zxx * e**2
        + Yxx * Zxx**2 * e * c3
        - Yxx**2 * Zxx * e**3 * c
        + 2 * Yxx * Zxx * e**2 * c4
        + Yxx * Zxy**2 * e * c3
        - Yxy**2 * Zxx * e**3 * c
    )
    D2 = 2 * e * c * (
        4 * Zxy * c
        - Yxy * Zxx**2 * c
        - Yxy * Zxy**2 * c
        - 4 * Yxy * e**2 * c
        + 2 * Yxx * Zxy * e
        - 2 * Yxy * Zxx * e
        + Yxx**2 * Zxy * e**2 * c
        + Yxy**2 * Zxy * e**2 * c
        + 2 * Yxx * Zxy * e * c2
        - 2 * Yxy * Zxx * e * c2
    )
    D3 = -e * c * (
        2 * Yxx * Zxx**2
        - 8 * Zxx
        + 2 * Yxx * Zxy**2
        - 16 * e * c
        - 8 * Yxx * e**2 * c2
        + Yxx**2 * Zxx**2 * e * c
        + Yxx**2 * Zxy**2 * e * c
        + Yxy**2 * Zxx**2 * e * c
        + Yxy**2 * Zxy**2 * e * c
        + 2 * Yxx**2 * Zxx * e**2 * c2
        + 2 * Yxy**2 * Zxx * e**2 * c2
    )
    D4 = 2 * e * c * (
        4 * Zxy * c
        + Yxy * Zxx**2 * c
        + Yxy * Zxy**2 * c
        + 4 * Yxy * e**2 * c
        + 2 * Yxx * Zxy * e
        + 2 * Yxy * Zxx * e
        + Yxx**2 * Zxy * e**2 * c
        + Yxy**2 * Zxy * e**2 * c
        + 2 * Yxx * Zxy * e * c2
        + 2 * Yxy * Zxx * e * c2
    )
    return D0, D1, D2, D3, D4


def actual_type3(imp: ImpedanceTensors, theta_in) -> ActualCoefficients:
    """Actual coefficients of a rotating (Type 3) sheet for phi-polarised incidence.

    The sheet is rotationally symmetric so the result does not depend on the
    azimuth.  At ``cos(theta_in) = 0`` the form reduces to total reflection
    ``(-1, 0, 0, 0)`` unless the diagonal admittance or impedance vanishes,
    in which case it is a pole.
    """
    c = _cos(theta_in)
    Y, Z = imp.Ye, imp.Zm
    D0, D1, D2, D3, D4 = appendix_terms(Y[..., 0, 0], Y[..., 0, 1], Z[..., 0, 0], Z[..., 0, 1], c)
    _angle_guard(D0 / ETA**2)
    # own-basis -> incident-referenced basis: (co_R, cross_R, co_T, cross_T) signs (-, +, -, -)
    return ActualCoefficients("phi", -D1 / D0, D2 / D0, -D3 / D0, -D4 / D0)


# ---------------------------------------------------------------------------
# boundary-system oracle
# ---------------------------------------------------------------------------


def local_geometry(theta_in, phi_in):
    """Unit wave vectors and basis vectors for incidence from ``(theta_in, phi_in)``.

    Returns a dict of ``(..., 3)`` arrays: ``k_i``, ``k_r``, ``k_t``,
    ``theta_i``, ``phi_i``, ``p_r``, ``p_t``.
    """
    th = np.asarray(theta_in, dtype=float)
    ph = np.asarray(phi_in, dtype=float)
    th, ph = np.broadcast_arrays(th, ph)
    s, c = np.sin(th), _cos(th)
    cp, sp = np.cos(ph), np.sin(ph)
    z = np.zeros_like(s)
    k_i = np.stack([-s * cp, -s * sp, -c], -1)
    k_r = np.stack([-s * cp, -s * sp, c], -1)
    theta_i = np.stack([c * cp, c * sp, -s], -1)
    phi_i = np.stack([-sp, cp, z], -1)
    p_r = np.stack([c * cp, c * sp, s], -1)
    return {
        "k_i": k_i,
        "k_r": k_r,
        "k_t": k_i.copy(),
        "theta_i": theta_i,
        "phi_i": phi_i,
        "p_r": p_r,
        "p_t": theta_i.copy(),
    }


def coefficient_basis(theta_in, phi_in, pol):
    """Unit field vectors ``(E_i, co_r, cross_r, co_t, cross_t)`` for the given incidence."""
    g = local_geometry(theta_in, phi_in)
    if pol == "phi":
        return g["phi_i"], g["phi_i"], -g["p_r"], g["phi_i"], -g["p_t"]
    if pol == "theta":
        return g["theta_i"], g["p_r"], g["phi_i"], g["p_t"], g["phi_i"]
    raise ValueError(f"unknown polarisation {pol!r}")


def _gstc_residual(E_up, E_dn, H_up, H_dn, Y, Z):
    """Linear GSTC residual; magnetic rows are scaled by ``eta`` for balance."""
    E_av = 0.5 * (E_up + E_dn)
    H_av = 0.5 * (H_up + H_dn)
    r1 = np.stack([E_dn[..., 1] - E_up[..., 1], E_up[..., 0] - E_dn[..., 0]], -1)
    r1 = r1 + np.einsum("...ij,...j->...i", Z, H_av[..., :2])
    r2 = np.stack([H_dn[..., 1] - H_up[..., 1], H_up[..., 0] - H_dn[..., 0]], -1)
    r2 = r2 - np.einsum("...ij,...j->...i", Y, E_av[..., :2])
    return np.concatenate([r1, ETA * r2], -1)


def solve_boundary_system(imp: ImpedanceTensors, theta_in, phi_in, pol) -> ActualCoefficients:
    """Solve the transition conditions directly for the four outgoing amplitudes.

    Works for any tensors, azimuth and incident polarisation, and is
    vectorised over broadcastable ``imp`` / angle shapes.

    Raises
    ------
    IllConditioned
        If the 4x4 system has condition number above 1e12.
    """
    e_i, co_r, cr_r, co_t, cr_t = coefficient_basis(theta_in, phi_in, pol)
    g = local_geometry(theta_in, phi_in)
    k_i, k_r, k_t = g["k_i"], g["k_r"], g["k_t"]
    Y, Z = imp.Ye, imp.Zm
    shape = np.broadcast_shapes(Y.shape[:-2], k_i.shape[:-1])
    Y = np.broadcast_to(Y, shape + (2, 2))
    Z = np.broadcast_to(Z, shape + (2, 2))

    def h(k, e):
        return np.cross(k, e) / ETA

    zero = np.zeros(shape + (3,), complex)

    def up(e, k):
        return _gstc_residual(e + zero, zero, h(k, e) + zero, zero, Y, Z)

    def dn(e, k):
        return _gstc_residual(zero, e + zero, zero, h(k, e) + zero, Y, Z)

    b = up(e_i, k_i)
    A = np.stack([up(co_r, k_r), up(cr_r, k_r), dn(co_t, k_t), dn(cr_t, k_t)], -1)
    cond = np.linalg.cond(A)
    bad = ~np.isfinite(cond) | (cond > COND_MAX)
    if np.any(bad):
        raise IllConditioned("boundary-condition system is singular", index=_first_index(bad))
    u = np.linalg.solve(A, -b[..., None])[..., 0]
    return ActualCoefficients(pol, u[..., 0], u[..., 1], u[..., 2], u[..., 3])


def actual_coefficients(desired, theta_in, phi_in, pol, imp=None) -> ActualCoefficients:
    """Route to the closed form where one exists, otherwise to the boundary solve."""
    if imp is None:
        imp = synthesize_impedance(desired)
    if pol == "phi":
        if isinstance(desired, Type1):
            return actual_type1(imp, theta_in)
        if isinstance(desired, Type3):
            return actual_type3(imp, theta_in)
        if isinstance(desired, Type2):
            try:
                return actual_type2(imp, theta_in, phi_in)
            except NonCardinalAzimuth:
                pass
    return solve_boundary_system(imp, theta_in, phi_in, pol)


def ideal_coefficients(desired, theta_in, phi_in, pol) -> ActualCoefficients:
    """Coefficients obtained by applying the desired values regardless of angle.

    Type 1 and Type 3 reuse the desired co/cross values on the coefficient
    basis.  Type 2 applies ``diag(Rx, Ry)`` to the tangential incident field
    and completes the normal component from transversality, so the result is
    re-expressed on the same basis.
    """
    if isinstance(desired, Type1):
        R, T = np.broadcast_arrays(desired.R, desired.T)
        z = np.zeros_like(R)
        return ActualCoefficients(pol, R, z, T, z)
    if isinstance(desired, Type3):
        return ActualCoefficients(pol, *np.broadcast_arrays(*desired.values()))
    if isinstance(desired, Type2):
        e_i, co_r, cr_r, co_t, cr_t = coefficient_basis(theta_in, phi_in, pol)
        Rb, Tb = desired.tensors()
        et = e_i[..., :2]
        er = np.einsum("...ij,...j->...i", Rb, et)
        etx = np.einsum("...ij,...j->...i", Tb, et)
        br = np.stack([co_r[..., :2], cr_r[..., :2]], -1)
        bt = np.stack([co_t[..., :2], cr_t[..., :2]], -1)
        shape = np.broadcast_shapes(br.shape[:-2], er.shape[:-1])
        ur = np.linalg.solve(np.broadcast_to(br, shape + (2, 2)), np.broadcast_to(er, shape + (2,))[..., None])[..., 0]
        ut = np.linalg.solve(np.broadcast_to(bt, shape + (2, 2)), np.broadcast_to(etx, shape + (2,))[..., None])[..., 0]
        return ActualCoefficients(pol, ur[..., 0], ur[..., 1], ut[..., 0], ut[..., 1])
    raise TypeError(f"unsupported desired coefficients {type(desired).__name__}")


# ---------------------------------------------------------------------------
# passive-lossless conditions
# ---------------------------------------------------------------------------


def wrap_pi(x):
    """Wrap angle(s) to ``[-pi, pi)``."""
    return np.mod(np.asarray(x, dtype=float) + np.pi, 2 * np.pi) - np.pi


def _pair_phase(a, b, offset, zero_tol=1e-12):
    """Residual and branch of ``angle(a) - angle(b) = offset + v pi`` (v in {0, 1})."""
    diff = wrap_pi(np.angle(a) - np.angle(b))
    r0 = np.abs(wrap_pi(diff - offset))
    r1 = np.abs(wrap_pi(diff - offset - np.pi))
    v = np.where(r1 < r0, 1, 0)
    res = np.minimum(r0, r1)
    skip = (np.abs(a) < zero_tol) | (np.abs(b) < zero_tol)
    return np.where(skip, 0.0, res), np.where(skip, 0, v)


def scattering_matrix(desired):
    """Block matrix ``[[R, T], [T, R]]`` of shape ``(..., 4, 4)``."""
    R, T = desired.tensors()
    top = np.concatenate([R, T], -1)
    bot = np.concatenate([T, R], -1)
    return np.concatenate([top, bot], -2)


def unitarity_residual(desired):
    """Max-abs deviation of ``M^H M`` from the identity."""
    M = scattering_matrix(desired)
    P = np.conj(np.swapaxes(M, -1, -2)) @ M
    return np.abs(P - np.eye(4)).max(axis=(-1, -2))


@dataclass(frozen=True, eq=False)
class PLReport:
    """Outcome of :func:`check_passive_lossless`.

    ``branches`` maps a pair label (e.g. ``"R-T"`` or ``"Rco-Tcro"``) to the
    selected branch integer(s).  For Type 3 ``table_ok`` records whether the
    case-split phase table is met; ``ok`` follows the unitarity test.
    """

    ok: np.ndarray
    magnitude_residual: np.ndarray
    phase_residual: np.ndarray
    branches: dict = field(default_factory=dict)
    unitary_residual: np.ndarray = None
    table_ok: np.ndarray = None

    def __bool__(self):
        return bool(np.all(self.ok))


def check_passive_lossless(desired, tol=1e-9) -> PLReport:
    """Check the passive and lossless conditions on desired coefficients."""
    unit = unitarity_residual(desired)
    if isinstance(desired, Type1):
        mag = np.abs(np.abs(desired.R) ** 2 + np.abs(desired.T) ** 2 - 1)
        ph, v = _pair_phase(desired.R, desired.T, np.pi / 2)
        ok = (mag < tol) & (ph < tol)
        return PLReport(ok, mag, ph, {"R-T": v}, unit)

    if isinstance(desired, Type2):
        mx = np.abs(np.abs(desired.Rx) ** 2 + np.abs(desired.Tx) ** 2 - 1)
        my = np.abs(np.abs(desired.Ry) ** 2 + np.abs(desired.Ty) ** 2 - 1)
        px, vx = _pair_phase(desired.Rx, desired.Tx, np.pi / 2)
        py, vy = _pair_phase(desired.Ry, desired.Ty, np.pi / 2)
        mag, ph = np.maximum(mx, my), np.maximum(px, py)
        ok = (mag < tol) & (ph < tol)
        return PLReport(ok, mag, ph, {"Rx-Tx": vx, "Ry-Ty": vy}, unit)

    if isinstance(desired, Type3):
        vals = dict(zip(("Rco", "Rcro", "Tco", "Tcro"), desired.values()))
        mag = np.abs(sum(np.abs(x) ** 2 for x in vals.values()) - 1)
        pairs = [
            ("Rco", "Tco", np.pi / 2),
            ("Rcro", "Tcro", np.pi / 2),
            ("Rco", "Rcro", np.pi),
            ("Tco", "Tcro", np.pi),
            ("Rco", "Tcro", np.pi),
            ("Rcro", "Tco", np.pi),
        ]
        branches = {}
        table = np.zeros(np.shape(mag))
        for a, b, off in pairs:
            res, v = _pair_phase(vals[a], vals[b], off)
            branches[f"{a}-{b}"] = v
            table = np.maximum(table, res)
        # the table is sufficient but not necessary; decide on unitarity
        ok = (mag < tol) & (unit < tol)
        return PLReport(ok, mag, table, branches, unit, table_ok=(mag < tol) & (table < tol))

    raise TypeError(f"unsupported desired coefficients {type(desired).__name__}")


def project_table1(angle_R, angle_T):
    """Move ``(angle_R, angle_T)`` to the nearest pair meeting the phase condition.

    Both phases are moved symmetrically about their mean so that the
    difference becomes ``+-pi/2`` or ``+-3pi/2`` depending on the interval
    of the original difference.
    """
    aR = np.asarray(angle_R, dtype=float)
    aT = np.asarray(angle_T, dtype=float)
    dif = aR - aT
    # the branches are consistent modulo 2 pi; fold stray differences back in
    aR = np.where(dif >= 2 * np.pi, aR - 2 * np.pi, np.where(dif < -2 * np.pi, aR + 2 * np.pi, aR))
    dif = aR - aT
    mean = 0.5 * (aR + aT)
    q = np.select(
        [dif >= np.pi, dif >= 0, dif >= -np.pi],
        [3 * np.pi / 4, np.pi / 4, -np.pi / 4],
        -3 * np.pi / 4,
    )
    out_R, out_T = mean + q, mean - q
    if out_R.ndim == 0:
        return float(out_R), float(out_T)
    return out_R, out_T


def phase_deviation(desired: Type1, theta_in):
    """Phase error ``(dev_R, dev_T)`` of the actual Type 1 coefficients, in ``[0, pi]``."""
    if not isinstance(desired, Type1):
        raise TypeError("phase deviation is defined for Type 1 elements")
    act = actual_type1(synthesize_impedance(desired), theta_in)
    dR = np.abs(wrap_pi(np.angle(act.co_R) - np.angle(desired.R)))
    dT = np.abs(wrap_pi(np.angle(act.co_T) - np.angle(desired.T)))
    # normal incidence recovers the desired values; drop the synthesis round-off
    normal = np.asarray(theta_in) == 0
    return np.where(normal, 0.0, dR), np.where(normal, 0.0, dT)
