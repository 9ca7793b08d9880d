"""Phase codebooks and per-type panel configurations.

Phases are chosen so that the contributions of all elements arrive
co-phased at the target.  With ``p_n`` the element centre relative to the
panel origin and ``u`` unit vectors pointing *away* from the panel:

* beamforming, plane-wave source along ``u_src``:
  ``psi_n = -k (u_src + u_tgt) . p_n``
* beamforming, point source at distance ``d_n`` from element ``n``:
  ``psi_n = k (d_n - d_0) - k u_tgt . p_n``
* beamfocusing at ``F``: ``psi_n = k [(d_n - d_0) + (|F - p_n| - |F|)]``

where ``d_0`` is measured from the panel origin.  All phases are wrapped to
``[0, 2 pi)``.
"""

from __future__ import annotations

import numpy as np

from rissim.constants import wavenumber
from rissim.coords import Direction
from rissim.gstc import Type1, Type2, Type3, check_passive_lossless, project_table1

SQRT_HALF = np.sqrt(0.5)


def _as_unit(d):
    if isinstance(d, Direction):
        return d.vector
    v = np.asarray(d, dtype=float)
    return v / np.linalg.norm(v)


def _rel(panel):
    return panel.centers - panel.frame.origin


def _source_term(panel, source, k):
    """Per-element incident phase compensation ``k (d_n - d_0)``."""
    p = _rel(panel)
    if isinstance(source, Direction):
        return -k * p @ source.vector
    src = np.asarray(source, dtype=float)
    d_n = np.linalg.norm(src - panel.centers, axis=-1)
    d_0 = np.linalg.norm(src - panel.frame.origin)
    return k * (d_n - d_0)


def _wrap(psi, quantizer=None):
    psi = np.mod(psi, 2 * np.pi)
    if quantizer is not None:
        psi = np.mod(np.asarray(quantizer(psi), dtype=float), 2 * np.pi)
    return psi


def beamform_phases(panel, source, target: Direction, quantizer=None):
    """Element phases steering the panel response toward direction ``target``.

    ``source`` is either a :class:`Direction` (global, pointing from the
    panel toward a distant transmitter) or a 3-D point.  ``quantizer`` is an
    optional callable applied to the wrapped phases.
    """
    k = wavenumber(panel.frequency)
    psi = _source_term(panel, source, k) - k * _rel(panel) @ _as_unit(target)
    return _wrap(psi, quantizer)


def beamfocus_phases(panel, source, focal_point, quantizer=None):
    """Element phases focusing the panel response at ``focal_point``.

    Raises
    ------
    ValueError
        If the focal point lies in the panel plane.
    """
    F = np.asarray(focal_point, dtype=float)
    if abs(panel.frame.to_local_point(F)[2]) < 1e-9:
        raise ValueError("focal point lies in the panel plane")
    k = wavenumber(panel.frequency)
    d_n = np.linalg.norm(F - panel.centers, axis=-1)
    d_0 = np.linalg.norm(F - panel.frame.origin)
    psi = _source_term(panel, source, k) + k * (d_n - d_0)
    return _wrap(psi, quantizer)


def steer(panel, source, target, quantizer=None):
    """Beamforming phases for a :class:`Direction` target, beamfocusing phases for a point."""
    if isinstance(target, Direction):
        return beamform_phases(panel, source, target, quantizer)
    return beamfocus_phases(panel, source, target, quantizer)


def arrival_phase_spread(panel, source, target, psi):
    """Max deviation of per-element arrival phases from their circular mean (radians)."""
    k = wavenumber(panel.frequency)
    p = _rel(panel)
    if isinstance(target, Direction):
        out = -k * p @ target.vector
    else:
        F = np.asarray(target, dtype=float)
        out = k * (np.linalg.norm(F - panel.centers, axis=-1) - np.linalg.norm(F - panel.frame.origin))
    total = psi - _source_term(panel, source, k) - out
    z = np.exp(1j * total)
    ref = np.angle(np.mean(z))
    return float(np.max(np.abs(np.angle(z * np.exp(-1j * ref)))))


# ---------------------------------------------------------------------------
# configurations
# ---------------------------------------------------------------------------


def configure_type1_star(panel, source, reflect_target, transmit_target, project=True, quantizer=None):
    """Simultaneous transmit/reflect Type 1 configuration with ``|R| = |T| = sqrt(1/2)``.

    With ``project=False`` the independently steered phases are kept, which
    generally violates the lossless phase condition.
    """
    aR = steer(panel, source, reflect_target, quantizer)
    aT = steer(panel, source, transmit_target, quantizer)
    if project:
        aR, aT = project_table1(aR, aT)
    return Type1(SQRT_HALF * np.exp(1j * aR), SQRT_HALF * np.exp(1j * aT))


def configure_type2_split(panel, source, reflect_target, transmit_target, quantizer=None):
    """x-polarised field fully reflected toward one target, y-polarised fully transmitted."""
    aR = steer(panel, source, reflect_target, quantizer)
    aT = steer(panel, source, transmit_target, quantizer)
    zero = np.zeros_like(aR, dtype=complex)
    return Type2(np.exp(1j * aR), zero, zero, np.exp(1j * aT))


def configure_type3_rotation(panel, source, target, mode, quantizer=None):
    """Reflect-only rotating configuration.

    ``mode`` is ``"none"`` (``|R_co| = 1``), ``"partial"``
    (``|R_co| = |R_cro| = sqrt(1/2)``, ``angle(R_cro) = angle(R_co) + pi``)
    or ``"complete"`` (``|R_cro| = 1``).
    """
    psi = steer(panel, source, target, quantizer)
    e = np.exp(1j * psi)
    zero = np.zeros_like(e)
    if mode == "none":
        return Type3(e, zero, zero, zero)
    if mode == "partial":
        return Type3(SQRT_HALF * e, -SQRT_HALF * e, zero, zero)
    if mode == "complete":
        return Type3(zero, e, zero, zero)
    raise ValueError(f"unknown rotation mode {mode!r}")


def configure_type1_reflect(panel, source, target, quantizer=None):
    """Fully reflecting Type 1 panel (``|R| = 1``, ``T = 0``)."""
    psi = steer(panel, source, target, quantizer)
    return Type1(np.exp(1j * psi), np.zeros_like(psi, dtype=complex))


def all_passive_lossless(desired):
    return bool(check_passive_lossless(desired))
