"""Polarisation-rotation sweep: mirror gap and curve flatness.

Prints, per alpha, the none/partial/complete curves with the mirror gap
``P_complete(alpha) - P_none(1 - alpha)``, then the peak-to-peak summary
with and without the ``alpha = 0`` endpoint (where the none curve is an
exact zero and sits on the -300 dB floor).
"""

import numpy as np

from rissim.scenarios import bundled_configs, load_config, run_scenario


def main():
    cfg = load_config(next(p for p in bundled_configs() if p.stem == "alpha_sweep"))
    c = run_scenario(cfg).columns["rx"]
    a, none, part, comp = c["alpha"], c["none_actual_db"], c["partial_actual_db"], c["complete_actual_db"]
    gap = comp - none[::-1]
    print(f"{'alpha':>6s} {'none':>9s} {'partial':>9s} {'complete':>9s} {'gap':>9s}")
    for row in zip(a, none, part, comp, gap):
        print("{:6.2f} {:9.3f} {:9.3f} {:9.3f} {:9.3f}".format(*row))
    print(f"mirror gap, interior alphas: max {np.abs(gap[1:-1]).max():.2f} dB")
    print(f"ptp partial {np.ptp(part):.2f} dB, none {np.ptp(none):.2f} dB, none without alpha=0 {np.ptp(none[1:]):.2f} dB")


if __name__ == "__main__":
    main()
