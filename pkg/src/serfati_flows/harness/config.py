"""Run configuration: strict JSON with a versioned schema."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import jsonschema

CONFIG_VERSION = 1

INIT_PATTERN = r"^(sine|radial|shear|taylor-green|random(:[0-9]+)?|file:.+)$"

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "experiment"],
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "experiment": {"enum": ["sqg", "euler3d", "verify"]},
        "dim": {"enum": [2, 3]},
        "N": {"type": "integer", "enum": [16, 32, 64, 128, 256, 512]},
        "L": {"type": "number", "exclusiveMinimum": 0},
        "T": {"type": "number", "minimum": 0},
        "dt": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
        "lam": {"type": "number", "exclusiveMinimum": 0},
        "r": {"type": "number", "exclusiveMinimum": 0},
        "s": {"type": "integer", "minimum": 0, "maximum": 6},
        "init": {"type": "string", "pattern": INIT_PATTERN},
        "seed": {"type": "integer", "minimum": 0},
        "mode": {"enum": ["spectral", "serfati"]},
        "output_every": {"type": "integer", "minimum": 1},
        "halt": {"type": "boolean"},
        "out_dir": {"type": ["string", "null"]},
        "suites": {"type": "array", "items": {"type": "string"}},
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    version: int = CONFIG_VERSION
    experiment: str = "sqg"
    dim: int = 2
    N: int = 128
    L: float = 25.132741228718345  # 8 pi
    T: float = 0.5
    dt: float = 1.0 / 64
    lam: float = 1.0
    r: float = 1.5
    s: int = 3
    init: str = "random"
    seed: int = 0
    mode: str = "spectral"
    output_every: int = 8
    halt: bool = True
    out_dir: str | None = None
    suites: list | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["suites"] is None:
            d.pop("suites")
        return d


def _locate(text: str, path) -> str:
    """Best-effort line number of the offending key in the source text."""
    if not path:
        return ""
    key = f'"{path[-1]}"'
    for n, line in enumerate(text.splitlines(), 1):
        if key in line:
            return f" (line {n})"
    return ""


def parse_config(text: str) -> RunConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.path))
    if errors:
        msgs = []
        for e in errors:
            field = "/".join(str(p) for p in e.path) or "<root>"
            where = _locate(text, list(e.path))
            if e.validator == "additionalProperties":
                extra = sorted(set(data) - set(SCHEMA["properties"]))
                where = _locate(text, extra[:1])
                field = ",".join(extra)
            msgs.append(f"field {field}{where}: {e.message}")
        raise ConfigError("invalid config: " + "; ".join(msgs))
    want = {"sqg": 2, "euler3d": 3}.get(data["experiment"])
    if want is not None:
        dim = data.setdefault("dim", want)
        if dim != want:
            raise ConfigError(f"field dim{_locate(text, ['dim'])}: {data['experiment']} runs need dim={want}, got {dim}")
    known = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in data.items() if k in known})


def emit_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
