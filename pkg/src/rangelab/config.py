"""Line-oriented experiment configs: ``section.key = value``.

Blank lines and ``#`` comments are ignored, lists are comma separated and
vertex lists are separated by ``;``.  Every key is validated against the
schema below, so typos fail loudly with the offending field named.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, InvalidVertexError
from .graphs import Vertex, parse_vertex

EXACT_OPS = {
    "return-series", "first-return", "last-exit-check", "expected-range", "scaled-range-exact",
    "hit-bound", "killed-green", "exit-time", "r-bounds", "regularity", "isoradial",
}
MC_OPS = {"range-mc", "intersections", "paired-difference", "lamplighter", "pathwise-last-exit"}
OPERATIONS = EXACT_OPS | MC_OPS

# key -> (type, required)
SCHEMA = {
    "graph.kind": ("str", True),
    "graph.base": ("str", False),
    "graph.patch": ("str", False),
    "graph.patch_file": ("path", False),
    "graph.lattice": ("str", False),
    "graph.schedule_base": ("int", False),
    "graph.radii": ("intlist", False),
    "compare.kind": ("str", False),
    "compare.base": ("str", False),
    "compare.patch": ("str", False),
    "compare.patch_file": ("path", False),
    "run.operations": ("strlist", True),
    "run.n": ("int", False),
    "run.n_grid": ("intlist", False),
    "run.replicas": ("int", False),
    "run.seed": ("int", False),
    "run.vertices": ("vertices", False),
    "run.method": ("str", False),
    "run.radius": ("int", False),
    "run.r_grid": ("intlist", False),
    "run.radius_rule": ("str", False),
    "run.threshold": ("float", False),
    "run.workers": ("int", False),
    "run.extent": ("int", False),
    "run.tilings": ("strlist", False),
    "run.window_upper": ("str", False),
    "guards.max_ball": ("int", False),
    "guards.max_memory_mb": ("int", False),
    "output.dir": ("path", False),
    "output.formats": ("strlist", False),
    "output.prefix": ("str", False),
}


def _convert(key: str, kind: str, raw: str, base: Path):
    try:
        if kind == "str":
            if not raw:
                raise ValueError("empty value")
            return raw
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "path":
            p = Path(raw)
            return p if p.is_absolute() else base / p
        if kind == "strlist":
            return [s.strip() for s in raw.split(",") if s.strip()]
        if kind == "intlist":
            return [int(float(s)) if "e" in s.lower() else int(s) for s in (t.strip() for t in raw.split(",")) if s]
        if kind == "vertices":
            return [parse_vertex(s.strip()) for s in raw.split(";") if s.strip()]
    except (ValueError, InvalidVertexError) as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} ({exc})") from None
    raise AssertionError(kind)


@dataclass
class ExperimentConfig:
    values: dict
    source: bytes = b""
    path: Path | None = None
    overrides: dict = field(default_factory=dict)

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    @property
    def operations(self) -> list[str]:
        return self.values["run.operations"]

    @property
    def seed(self) -> int | None:
        return self.overrides.get("run.seed", self.values.get("run.seed"))

    @property
    def n_grid(self) -> list[int]:
        if "run.n_grid" in self.values:
            return self.values["run.n_grid"]
        if "run.n" in self.values:
            return [self.values["run.n"]]
        return []

    @property
    def vertices(self) -> list[Vertex]:
        return self.values.get("run.vertices") or [Vertex(0, 0)]

    @property
    def hash(self) -> str:
        return config_hash(self.source)

    def graph_params(self, section: str = "graph") -> tuple[str, dict]:
        kind = self.values.get(f"{section}.kind")
        params = {}
        for key, value in self.values.items():
            sec, _, name = key.partition(".")
            if sec == section and name != "kind":
                params[name] = str(value) if isinstance(value, Path) else value
        return kind, params

    def echo(self) -> dict:
        out = {k: (str(v) if isinstance(v, Path) else [str(x) for x in v] if k == "run.vertices" else v)
               for k, v in sorted(self.values.items())}
        if self.overrides:
            out["overrides"] = dict(self.overrides)
        return out


def config_hash(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def parse_config(text: str, base: Path | None = None, source: bytes | None = None,
                 overrides: dict | None = None) -> ExperimentConfig:
    base = base or Path.cwd()
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value'")
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown field {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate field {key!r}")
        values[key] = _convert(key, SCHEMA[key][0], value, base)
    cfg = ExperimentConfig(values, source if source is not None else text.encode(), overrides=dict(overrides or {}))
    validate(cfg)
    return cfg


def load_config(path, seed_override: int | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        raise ConfigError(f"{path} is not UTF-8 text") from None
    overrides = {} if seed_override is None else {"run.seed": seed_override}
    cfg = parse_config(text, path.parent, data, overrides)
    cfg.path = path
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    for key, (_, required) in SCHEMA.items():
        if required and key not in cfg.values:
            raise ConfigError(f"missing required field {key!r}")
    ops = cfg.operations
    if not ops:
        raise ConfigError("run.operations: no operations listed")
    for op in ops:
        if op not in OPERATIONS:
            raise ConfigError(f"run.operations: unknown operation {op!r}")
    if any(op in MC_OPS for op in ops) and cfg.seed is None:
        raise ConfigError("missing required field 'run.seed' (needed by Monte Carlo operations)")
    if cfg.seed is not None and cfg.seed < 0:
        raise ConfigError("run.seed must be nonnegative")
    grid = cfg.n_grid
    if "run.n" in cfg.values and "run.n_grid" in cfg.values:
        raise ConfigError("run.n and run.n_grid are mutually exclusive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("run.n_grid must be strictly increasing")
    if any(n < 0 for n in grid):
        raise ConfigError("run.n_grid: values must be nonnegative")
    if cfg.get("run.replicas") is not None and cfg.get("run.replicas") < 1:
        raise ConfigError("run.replicas must be positive")
    if "paired-difference" in ops and "compare.kind" not in cfg.values:
        raise ConfigError("missing required field 'compare.kind' (needed by paired-difference)")
