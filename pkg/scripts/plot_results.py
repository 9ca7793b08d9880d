"""Plot every CSV written by ``rissim run`` in a results directory.

    python3 scripts/plot_results.py results/free_space_far

Needs matplotlib (the ``plot`` extra).
"""

import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_csv(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    names = data.dtype.names
    x = names[0]
    curves = [n for n in names if n.endswith("_db") or n.startswith("deviation_")]
    if x == "rx":
        # grid receivers: plot against receiver index
        xs = np.arange(len(data))
    else:
        xs = data[x]
    fig, ax = plt.subplots(figsize=(7, 4))
    for n in curves:
        ax.plot(xs, np.maximum(data[n], -200) if n.endswith("_db") else data[n], label=n)
    ax.set_xlabel(x)
    ax.set_ylabel("dB" if curves and curves[0].endswith("_db") else "deg")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    out = path.with_suffix(".png")
    fig.savefig(out, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return out


def main():
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    for path in sorted(Path(sys.argv[1]).glob("*.csv")):
        print(plot_csv(path))


if __name__ == "__main__":
    main()
