"""Phase deviation of actual Type 1 coefficients against incidence angle.

For each reflection phase, prints the deviation of R and T at a few
incidence angles.  With angle(R) = 0 the actual R stays real, so its
deviation is either 0 or 180 degrees.
"""

import numpy as np

from rissim.gstc import Type1, phase_deviation

ANGLES = (0, 20, 40, 60, 70, 80)


def main():
    th = np.radians(ANGLES)
    print("angle(R)  " + "  ".join(f"{t:>11d}" for t in ANGLES))
    for ang in (0, 30, 60, 90, 120, 150):
        r = np.sqrt(0.5) * np.exp(1j * np.radians(ang))
        dR, dT = np.degrees(phase_deviation(Type1(r, 1j * r), th))
        print(f"{ang:7d}   " + "  ".join(f"{x:5.1f}/{y:5.1f}" for x, y in zip(dR, dT)))


if __name__ == "__main__":
    main()
