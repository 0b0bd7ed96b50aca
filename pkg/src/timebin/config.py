"""Per-subcommand run configuration resolved from TOML, ``--set`` pairs and flags.

Precedence, lowest first: dataclass defaults, the ``[<subcommand>]`` table of
the config file, ``--set key=value`` pairs, explicit ``--key`` flags.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


def parse_grid(value: Any, key: str = "grid") -> list[float]:
    """A number, a list of numbers, or ``"start:stop:num"`` (inclusive linspace)."""
    if isinstance(value, bool):
        raise ConfigError(f"{key}: expected number, list or 'start:stop:num', got {value!r}")
    if isinstance(value, (int, float)):
        return [float(value)]
    if isinstance(value, (list, tuple)):
        try:
            out = [float(v) for v in value]
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: non-numeric entry in {value!r}") from None
        if not out:
            raise ConfigError(f"{key}: empty grid")
        return out
    if isinstance(value, str):
        parts = value.split(":")
        try:
            if len(parts) == 3:
                a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
                if n < 1:
                    raise ConfigError(f"{key}: grid needs at least one point")
                return [a] if n == 1 else [a + (b - a) * k / (n - 1) for k in range(n)]
            return [float(v) for v in value.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"{key}: cannot parse grid {value!r}") from None
    raise ConfigError(f"{key}: expected number, list or 'start:stop:num', got {value!r}")


def _int_list(value: Any, key: str) -> list[int]:
    vals = parse_grid(value, key)
    if any(v != int(v) for v in vals):
        raise ConfigError(f"{key}: expected integers, got {value!r}")
    return [int(v) for v in vals]


def _choice(*options):
    def check(value, key):
        if value not in options:
            raise ConfigError(f"{key}: {value!r} is not one of {options}")
        return value
    return check


def _number(kind=float, lo=-math.inf, hi=math.inf):
    def check(value, key):
        if isinstance(value, bool):
            raise ConfigError(f"{key}: expected a number, got {value!r}")
        try:
            v = kind(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}") from None
        if kind is int and float(value) != v:
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        if not lo <= v <= hi:
            raise ConfigError(f"{key}: {v} outside [{lo}, {hi}]")
        return v
    return check


def _optional(check):
    def wrapped(value, key):
        if value is None or value == "" or value == "none":
            return None
        return check(value, key)
    return wrapped


def _boolean(value, key):
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("true", "false", "1", "0", "yes", "no"):
        return value.lower() in ("true", "1", "yes")
    raise ConfigError(f"{key}: expected true/false, got {value!r}")


def _string(value, key):
    if not isinstance(value, str):
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    return value


def _paths(value, key):
    if isinstance(value, str) and value.strip():
        return [v.strip() for v in value.split(",") if v.strip()]
    if isinstance(value, (list, tuple)) and value and all(isinstance(v, str) for v in value):
        return list(value)
    raise ConfigError(f"{key}: expected a path or list of paths, got {value!r}")


def opt(default, check, help: str = ""):
    return field(default=default, metadata={"check": check, "help": help})


def _grid(value, key):
    return parse_grid(value, key)


@dataclass
class LandscapeConfig:
    model: str = opt("single_mzi", _choice("single_mzi", "dual_hom"), "single_mzi or dual_hom")
    theta_pi: list = opt("0:1:21", _grid, "pulse areas in units of pi")
    phi_pi: list = opt("0:2:41", _grid, "phases in units of pi")
    out: str = opt("landscape.csv", _string, "output CSV")


@dataclass
class CorrelationsConfig:
    theta_pi: list = opt(0.25, _grid, "pulse areas in units of pi (must be > 0)")
    phi_pi: list = opt("0:2:41", _grid, "phases in units of pi")
    delta: list = opt((0, 1, 2), _int_list, "bin offsets")
    out: str = opt("correlations.csv", _string, "output CSV")


@dataclass
class SimulateConfig:
    theta_pi: float = opt(0.25, _number(float, 0.0, 1.0), "pulse area in units of pi")
    phi_pi: float = opt(0.87, _number(float), "interferometer phase in units of pi")
    purity: float = opt(1.0, _number(float, 0.0, 1.0), "vacuum/one-photon coherence factor")
    indistinguishability: float = opt(1.0, _number(float, 0.0, 1.0), "recorded only; does not enter the state")
    r1: float = opt(0.5, _number(float, 0.0, 1.0), "first splitter reflectivity")
    r2: float = opt(0.5, _number(float, 0.0, 1.0), "second splitter (or HOM splitter) reflectivity")
    repetition_period_s: float = opt(13e-9, _number(float, 0.0), "pulse period, recorded only")
    source: str = opt("single_mzi", _choice("single_mzi", "dual_hom"), "single_mzi or dual_hom")
    n_bins: int = opt(100000, _number(int, 1), "simulated bins including warmup")
    warmup_bins: int = opt(2, _number(int, 0), "leading bins dropped from the stream")
    seed: int = opt(0, _number(int, 0, 2 ** 64 - 1), "64-bit RNG seed; chain k uses seed+k")
    chains: int = opt(1, _number(int, 1), "independent streams")
    efficiency: float = opt(1.0, _number(float, 0.0, 1.0), "detector efficiency")
    dark_count_prob: float = opt(0.0, _number(float, 0.0, 1.0), "dark count probability per bin")
    pnr: bool = opt(False, _boolean, "photon-number-resolving detectors")
    topology: str = opt("none", _choice("none", "hbt", "extended_hbt"), "splitter tree")
    port: str = opt("e", _choice("e", "f"), "output feeding the splitter tree")
    format: str = opt("csv", _choice("csv", "binary"), "tag file format")
    out: str = opt("tags.csv", _string, "output tag file (chains add .chainK before the suffix)")


@dataclass
class CorrelateConfig:
    tags: list = opt(("tags.csv",), _paths, "tag file(s), merged as independent runs")
    order: int = opt(2, _number(int, 2, 3), "2 or 3")
    detectors: list = opt((0, 1), _int_list, "detector ids (A,B or 0,1,2)")
    max_delta: int = opt(20, _number(int, 2), "largest |delta| histogrammed")
    window: list = opt((2, 20), _int_list, "side-peak window lo,hi")
    normalize: bool = opt(True, _boolean, "add g column and baseline footer")
    out: str = opt("histogram.csv", _string, "output histogram CSV")


@dataclass
class ExtractConfig:
    counts_per_second: Optional[float] = opt(None, _optional(_number(float, 0.0)), "detected rate N_e [1/s]")
    repetition_period: float = opt(13e-9, _number(float, 0.0), "pulse period [s]")
    efficiency: float = opt(1.0, _number(float, 0.0, 1.0), "total detection efficiency")
    n: Optional[float] = opt(None, _optional(_number(float, 0.0)), "mean photon number (overrides the rate)")
    g2_zero: float = opt(1.0, _number(float, 0.0), "normalized g2(0)")
    g3_zero: Optional[float] = opt(None, _optional(_number(float, 0.0)), "normalized g3(0,0)")
    out: str = opt("extract.csv", _string, "output CSV")


@dataclass
class VerifyConfig:
    theta_pi: list = opt((0.25, 0.5, 0.75, 1.0), _grid, "pulse areas in units of pi")
    phi_pi: list = opt((0.0, 0.12, 0.5, 0.87, 1.0), _grid, "phases in units of pi")
    delta: list = opt((0, 1, 2), _int_list, "bin offsets")
    purity: float = opt(1.0, _number(float, 0.0, 1.0), "seed purity (< 1 gives exact-only rows)")
    tolerance: float = opt(1e-10, _number(float, 0.0), "maximum allowed deviation")
    threads: Optional[int] = opt(None, _optional(_number(int, 1)), "worker processes")
    out: str = opt("verify.csv", _string, "output report CSV")


@dataclass
class RangesConfig:
    model: list = opt(("single_mzi", "dual_hom"), lambda v, k: [_choice("single_mzi", "dual_hom")(m, k)
                                                                for m in ([v] if isinstance(v, str) else v)],
                      "models")
    resolution: int = opt(201, _number(int, 100), "grid points per axis before refinement")
    out: str = opt("ranges.csv", _string, "output CSV")


# alternative spellings accepted in files and --set
ALIASES = {"theta_pi_units": "theta_pi", "phase_pi_units": "phi_pi", "phase_pi": "phi_pi"}

SUBCOMMANDS = {
    "landscape": LandscapeConfig,
    "correlations": CorrelationsConfig,
    "simulate": SimulateConfig,
    "correlate": CorrelateConfig,
    "extract": ExtractConfig,
    "verify": VerifyConfig,
    "ranges": RangesConfig,
}


def load_file(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None


def parse_set(pair: str) -> tuple[str, Any]:
    if "=" not in pair:
        raise ConfigError(f"--set expects key=value, got {pair!r}")
    key, raw = (s.strip() for s in pair.split("=", 1))
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key, value


def _canonical(key: str, known) -> str:
    target = ALIASES.get(key)
    return target if target in known else key


def resolve(name: str, file_table: dict, sets: list[str], flags: dict):
    cls = SUBCOMMANDS[name]
    known = {f.name: f for f in fields(cls)}
    raw: dict[str, tuple[Any, str]] = {}
    section = file_table.get(name, {})
    if not isinstance(section, dict):
        raise ConfigError(f"[{name}] must be a table")
    for k, v in section.items():
        raw[_canonical(k, known)] = (v, f"[{name}].{k}")
    for pair in sets:
        k, v = parse_set(pair)
        raw[_canonical(k, known)] = (v, f"--set {k}")
    for k, v in flags.items():
        if v is not None:
            raw[k] = (v, f"--{k.replace('_', '-')}")
    unknown = sorted(k for k in raw if k not in known)
    if unknown:
        _, where = raw[unknown[0]]
        raise ConfigError(f"{where}: unknown key for '{name}' (valid: {', '.join(known)})")
    values = {}
    for k, f in known.items():
        v, where = raw.get(k, (f.default, f"default {k}"))
        values[k] = f.metadata["check"](v, where)
    return cls(**values)


def snapshot(cfg) -> dict:
    return dataclasses.asdict(cfg)


def field_help(cls) -> list[tuple[str, str, Any]]:
    return [(f.name, f.metadata.get("help", ""), f.default) for f in fields(cls)]


def output_paths(base: str, count: int) -> list[Path]:
    p = Path(base)
    if count == 1:
        return [p]
    return [p.with_name(f"{p.stem}.chain{k}{p.suffix}") for k in range(count)]
