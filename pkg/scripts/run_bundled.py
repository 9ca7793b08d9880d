"""Run every bundled scenario and write its outputs under one directory.

    python3 scripts/run_bundled.py [--out results] [--threads 4]
"""

import argparse
import time
from pathlib import Path

from rissim.scenarios import bundled_configs, load_config, run_scenario


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()
    for path in bundled_configs():
        t = time.perf_counter()
        res = run_scenario(load_config(path), threads=args.threads)
        written = res.write(args.out / path.stem)
        print(f"{path.stem:<18s} {time.perf_counter() - t:6.1f} s  {len(written)} files")


if __name__ == "__main__":
    main()
