"""Run every 3D Euler check through the CLI and collect the verdict files.

    python3 scripts/euler_checks.py --out runs/euler3d
"""

import argparse
from pathlib import Path

from serfati_flows.harness import cli

CHECKS = ["bs", "stream", "pressure", "serfati", "ibp", "gronwall"]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("runs/euler3d"))
    ap.add_argument("--grid", type=int, default=32)
    args = ap.parse_args()
    codes = {}
    for name in CHECKS:
        print(f"== {name}")
        codes[name] = cli.main(["euler3d-check", "--suite", name, "--grid", str(args.grid), "--out", str(args.out)])
    bad = [n for n, c in codes.items() if c != 0]
    print("all checks passed" if not bad else f"failed: {', '.join(bad)}")
    raise SystemExit(1 if bad else 0)


if __name__ == "__main__":
    main()
