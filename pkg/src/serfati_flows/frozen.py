"""Calibrated constants shipped with the package.

The values in ``data/frozen_constants.json`` are written by
``scripts/calibrate_constants.py`` from a fixed calibration corpus and are
never edited by hand.  Monitors compare measured LHS/RHS ratios against them.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

_MISSING = object()


@lru_cache(maxsize=1)
def load() -> dict:
    path = resources.files("serfati_flows") / "data" / "frozen_constants.json"
    if not path.is_file():
        return {}
    data = json.loads(path.read_text())
    return dict(data.get("constants", {}))


def get(name: str, default=_MISSING) -> float:
    table = load()
    if name in table:
        return float(table[name])
    if default is _MISSING:
        raise KeyError(f"no frozen constant {name!r}; run scripts/calibrate_constants.py")
    return default
