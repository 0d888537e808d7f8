from __future__ import annotations

import json
from dataclasses import dataclass


@dataclass(frozen=True)
class Verdict:
    """Outcome of one check.  ``passed`` is derived, never stored independently."""

    suite: str
    anchor: str
    measured: float
    threshold: float
    runtime: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.measured <= self.threshold)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "anchor": self.anchor,
            "passed": self.passed,
            "measured": self.measured,
            "threshold": self.threshold,
            "runtime": self.runtime,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Verdict":
        return cls(d["suite"], d["anchor"], float(d["measured"]), float(d["threshold"]), float(d.get("runtime", 0.0)))

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.suite:<14} {self.anchor:<44} measured={self.measured:.3e} threshold={self.threshold:.3e}"


def write_verdicts(path, verdicts) -> None:
    with open(path, "w") as fh:
        json.dump([v.to_dict() for v in verdicts], fh, indent=2)
        fh.write("\n")


def read_verdicts(path) -> list:
    with open(path) as fh:
        return [Verdict.from_dict(d) for d in json.load(fh)]
