"""Recompute the frozen monitor constants from the calibration corpus.

    python3 scripts/calibrate_constants.py            # writes the package data file
    python3 scripts/calibrate_constants.py --dry-run  # print only
"""

import argparse
import json
import time
from dataclasses import asdict
from pathlib import Path

from serfati_flows.harness import corpus

OUT = Path(__file__).resolve().parents[1] / "src" / "serfati_flows" / "data" / "frozen_constants.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--dry-run", action="store_true")
    ap.add_argument("--out", type=Path, default=OUT)
    args = ap.parse_args()
    t0 = time.time()
    table, per_seed = corpus.calibrate(detail=True)
    payload = {
        "version": 1,
        "seeds": list(corpus.CALIBRATION_SEEDS),
        "settings": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(corpus.DEFAULT).items()},
        "constants": table,
        "per_seed": {str(k): v for k, v in per_seed.items()},
    }
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(json.dumps(table, indent=2, sort_keys=True))
    print(f"calibration took {time.time() - t0:.1f}s")
    if not args.dry_run:
        args.out.write_text(text + "\n")
        print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
