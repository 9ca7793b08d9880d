"""Physical constants (SI)."""

import math

C0 = 299_792_458.0
MU0 = 4e-7 * math.pi
EPS0 = 1.0 / (MU0 * C0**2)
# GSTC wave impedance; kept at the rounded 120*pi used by the impedance model.
ETA = 120.0 * math.pi
# sqrt(mu0/eps0), used by the radiation integrals
ETA0 = MU0 * C0


def wavelength(frequency):
    return C0 / frequency


def wavenumber(frequency):
    return 2.0 * math.pi * frequency / C0
