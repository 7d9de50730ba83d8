"""Run configuration: strict YAML/JSON schema with defaults and --param overrides.

Schema (every section optional except ``problem``)::

    problem:
      family: chafee_infante      # see problem.FAMILIES
      params: {lambda: 2.0}
      a_bracket: [-2.0, 2.0]      # optional
    shooting:
      n_init: 64
      rtol: 1.0e-9                # any ShootOptions tolerance
    sim:
      m: 257
      t_max: 500.0
      eps: 1.0e-2
      delta_match: 1.0e-4
      delta_rest: 1.0e-3
      lower_correction: false
      probes: auto                # or [{source: 3, mode: 1, sign: 1}, ...]
      dropping: {pairs: 20, t_end: 20.0, pool: 8, seed: 0}   # pairs: 0 skips
      initial: [0.1, 0.3]         # cosine coefficients for `simulate`
      t_end: 20.0
      snap_dt: 0.1
    output:
      directory: out
      formats: [json, csv, dot]
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Optional

import yaml

from .errors import ConfigError
from .problem import FAMILIES, ProblemSpec, build_family
from .shooting import DEFAULT_OPTIONS, ShootOptions

FORMATS = ("json", "csv", "dot")

_SHOOT_FLOATS = {f.name for f in fields(ShootOptions) if f.type in ("float", float)}
_SHOOT_INTS = {f.name for f in fields(ShootOptions) if f.type in ("int", int)}


@dataclass(frozen=True)
class ProbeSpec:
    source: int
    mode: int
    sign: int


@dataclass(frozen=True)
class DroppingSpec:
    pairs: int = 20
    t_end: float = 20.0
    pool: int = 8
    seed: int = 0


@dataclass(frozen=True)
class SimConfig:
    m: int = 257
    t_max: float = 500.0
    eps: float = 1e-2
    delta_match: float = 1e-4
    delta_rest: float = 1e-3
    lower_correction: bool = False
    probes: Optional[tuple] = None  # None means every (source, mode < i, sign)
    dropping: DroppingSpec = DroppingSpec()
    initial: tuple = (0.1, 0.3)
    t_end: float = 20.0
    snap_dt: float = 0.1


@dataclass(frozen=True)
class RunConfig:
    family: str
    params: dict
    a_bracket: Optional[tuple] = None
    n_init: int = 64
    shoot: ShootOptions = DEFAULT_OPTIONS
    sim: Optional[SimConfig] = None
    out_dir: str = "out"
    formats: tuple = FORMATS
    source: str = field(default="<dict>", compare=False)

    def spec(self) -> ProblemSpec:
        try:
            return build_family(self.family, self.params, self.a_bracket)
        except ValueError as ex:
            raise ConfigError(f"problem: {ex}") from None

    def wants(self, fmt: str) -> bool:
        return fmt in self.formats


def _check_keys(section: str, d: Any, allowed) -> dict:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ConfigError(f"{section}: expected a mapping, got {type(d).__name__}")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"{section}: unknown key {unknown[0]!r} (allowed: {sorted(allowed)})")
    return d


def _num(section: str, key: str, v, kind=float, positive=True):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {v!r}")
    if kind is int and float(v) != int(v):
        raise ConfigError(f"{section}.{key}: expected an integer, got {v!r}")
    v = kind(v)
    if positive and not v > 0:
        raise ConfigError(f"{section}.{key}: must be positive, got {v!r}")
    return v


def _parse_probes(raw) -> Optional[tuple]:
    if raw is None or raw == "auto":
        return None
    if not isinstance(raw, list):
        raise ConfigError("sim.probes: expected 'auto' or a list of {source, mode, sign}")
    out = []
    for n, p in enumerate(raw):
        p = _check_keys(f"sim.probes[{n}]", p, {"source", "mode", "sign"})
        missing = {"source", "mode", "sign"} - set(p)
        if missing:
            raise ConfigError(f"sim.probes[{n}]: missing key {sorted(missing)[0]!r}")
        src = _num(f"sim.probes[{n}]", "source", p["source"], int)
        mode = _num(f"sim.probes[{n}]", "mode", p["mode"], int, positive=False)
        sign = _num(f"sim.probes[{n}]", "sign", p["sign"], int, positive=False)
        if mode < 0:
            raise ConfigError(f"sim.probes[{n}].mode: must be >= 0")
        if sign not in (1, -1):
            raise ConfigError(f"sim.probes[{n}].sign: must be +1 or -1")
        out.append(ProbeSpec(src, mode, sign))
    return tuple(out)


def parse_config(raw: dict, source: str = "<dict>") -> RunConfig:
    """Validate a decoded config mapping and fill in defaults."""
    raw = _check_keys("config", raw, {"problem", "shooting", "sim", "output"})
    if "problem" not in raw:
        raise ConfigError("config: missing required section 'problem'")
    prob = _check_keys("problem", raw["problem"], {"family", "params", "a_bracket"})
    family = prob.get("family", "chafee_infante")
    if family not in FAMILIES:
        raise ConfigError(f"problem.family: unknown family {family!r} (known: {sorted(FAMILIES)})")
    params = prob.get("params", {}) or {}
    if not isinstance(params, dict):
        raise ConfigError("problem.params: expected a mapping")
    a_bracket = prob.get("a_bracket")
    if a_bracket is not None:
        if not (isinstance(a_bracket, list) and len(a_bracket) == 2):
            raise ConfigError("problem.a_bracket: expected [lo, hi]")
        lo, hi = (_num("problem", "a_bracket", v, positive=False) for v in a_bracket)
        if not lo < hi:
            raise ConfigError("problem.a_bracket: need lo < hi")
        a_bracket = (lo, hi)

    shoot_raw = _check_keys("shooting", raw.get("shooting"), {"n_init"} | _SHOOT_FLOATS | _SHOOT_INTS)
    n_init = _num("shooting", "n_init", shoot_raw.get("n_init", 64), int)
    over = {}
    for k, v in shoot_raw.items():
        if k == "n_init":
            continue
        over[k] = _num("shooting", k, v, int if k in _SHOOT_INTS else float)
    shoot = replace(DEFAULT_OPTIONS, **over)

    sim = None
    if raw.get("sim") is not None:
        s = _check_keys("sim", raw["sim"], {f.name for f in fields(SimConfig)})
        kw = {}
        for k in ("t_max", "eps", "delta_match", "delta_rest", "t_end", "snap_dt"):
            if k in s:
                kw[k] = _num("sim", k, s[k])
        if "m" in s:
            kw["m"] = _num("sim", "m", s["m"], int)
            if kw["m"] < 3:
                raise ConfigError("sim.m: need at least 3 grid points")
        if "lower_correction" in s:
            if not isinstance(s["lower_correction"], bool):
                raise ConfigError("sim.lower_correction: expected true or false")
            kw["lower_correction"] = s["lower_correction"]
        if "probes" in s:
            kw["probes"] = _parse_probes(s["probes"])
        if "dropping" in s:
            d = _check_keys("sim.dropping", s["dropping"], {"pairs", "t_end", "pool", "seed"})
            kw["dropping"] = DroppingSpec(
                pairs=_num("sim.dropping", "pairs", d.get("pairs", 20), int, positive=False),
                t_end=_num("sim.dropping", "t_end", d.get("t_end", 20.0)),
                pool=_num("sim.dropping", "pool", d.get("pool", 8), int),
                seed=_num("sim.dropping", "seed", d.get("seed", 0), int, positive=False),
            )
            if kw["dropping"].pairs < 0:
                raise ConfigError("sim.dropping.pairs: must be >= 0 (0 skips the trials)")
        if "initial" in s:
            ini = s["initial"]
            if not isinstance(ini, list) or not ini:
                raise ConfigError("sim.initial: expected a non-empty list of cosine coefficients")
            kw["initial"] = tuple(_num("sim", "initial", v, positive=False) for v in ini)
        sim = SimConfig(**kw)

    out = _check_keys("output", raw.get("output"), {"directory", "formats"})
    formats = out.get("formats", list(FORMATS))
    if not isinstance(formats, list) or any(f not in FORMATS for f in formats):
        raise ConfigError(f"output.formats: expected a subset of {list(FORMATS)}, got {formats!r}")
    cfg = RunConfig(
        family=family,
        params=dict(params),
        a_bracket=a_bracket,
        n_init=n_init,
        shoot=shoot,
        sim=sim,
        out_dir=str(out.get("directory", "out")),
        formats=tuple(formats),
        source=source,
    )
    cfg.spec()  # surface parameter errors at load time
    return cfg


def _parse_value(text: str):
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """Apply ``key=value`` overrides; bare keys go to problem.params, dotted keys to sections."""
    raw = copy.deepcopy(raw) if raw else {}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"--param: expected key=value, got {item!r}")
        key, val = item.split("=", 1)
        key = key.strip()
        if key in ("λ", "lam"):
            key = "lambda"
        path = key.split(".") if "." in key else ["problem", "params", key]
        node = raw
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--param: {key!r} does not address a mapping")
        node[path[-1]] = _parse_value(val)
    return raw


def load_raw(path) -> dict:
    text = Path(path).read_text()
    try:
        if str(path).endswith(".json"):
            raw = json.loads(text)
        else:
            raw = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as ex:
        raise ConfigError(f"{path}: cannot parse: {ex}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return raw


def load_config(path, overrides=()) -> RunConfig:
    return parse_config(apply_overrides(load_raw(path), overrides), str(path))
