"""Experiment configuration: INI files, validation, canonical text and hash."""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field, replace

SWEEP_AXES = ("M", "P_T", "N", "B", "K")
BASE_SCHEMES = ("ideal", "continuous", "sdr", "random-phase", "no-irs", "oma",
                "noma-random-order", "noma-exhaustive", "one-bit-srocr")
_DISCRETE = re.compile(r"^discrete\((\d+)\)$")
OUTPUT_ENV = "IRSNOMA_OUTPUT"
DEFAULT_OUTPUT = "results"


class ConfigError(ValueError):
    pass


def parse_scheme(name: str) -> tuple[str, int | None]:
    """``'discrete(2)' -> ('discrete', 2)``; ``'discrete'`` uses the config's B."""
    name = name.strip()
    m = _DISCRETE.match(name)
    if m:
        bits = int(m.group(1))
        if bits < 1:
            raise ConfigError("discrete schemes need at least one bit")
        return "discrete", bits
    if name == "discrete":
        return "discrete", None
    if name not in BASE_SCHEMES:
        raise ConfigError(f"unknown scheme {name!r}")
    return name, None


def default_output() -> str:
    return os.environ.get(OUTPUT_ENV, DEFAULT_OUTPUT)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    N: int = 2
    M: int = 30
    K: int = 4
    p_dbm: float = 10.0
    bits: int = 2
    schemes: tuple = ("ideal",)
    trials: int = 10
    base_seed: int = 0
    sweep: str = "M"
    values: tuple = (30,)
    order_irs: str = "continuous"  # IRS model used by the decoding-order schemes
    output: str = field(default_factory=default_output)

    def __post_init__(self):
        if self.sweep not in SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
        if not self.values:
            raise ConfigError("sweep value list is empty")
        if not self.schemes:
            raise ConfigError("scheme list is empty")
        for s in self.schemes:
            parse_scheme(s)
        if self.trials < 1:
            raise ConfigError("need at least one trial")
        if self.order_irs not in ("ideal", "continuous"):
            raise ConfigError("order_irs must be 'ideal' or 'continuous'")
        if self.N < 1 or self.K < 1 or self.M < 0 or self.bits < 1:
            raise ConfigError("N, K, B must be positive and M non-negative")

    def point(self, value) -> dict:
        """Instance parameters at one sweep value."""
        p = {"N": self.N, "M": self.M, "K": self.K, "P_T": self.p_dbm, "B": self.bits}
        p[self.sweep] = value
        for k in ("N", "M", "K", "B"):
            p[k] = int(p[k])
        p["P_T"] = float(p["P_T"])
        return p

    def with_output(self, output: str) -> "ExperimentConfig":
        return replace(self, output=output)

    def canonical(self) -> str:
        """Key-value text with sorted keys; the output directory is excluded
        so relocating results does not change the hash."""
        items = {
            "name": self.name, "N": self.N, "M": self.M, "K": self.K,
            "p_dbm": repr(float(self.p_dbm)), "bits": self.bits,
            "schemes": ", ".join(self.schemes), "trials": self.trials,
            "base_seed": self.base_seed, "sweep": self.sweep,
            "values": ", ".join(_fmt(v) for v in self.values), "order_irs": self.order_irs,
        }
        return "".join(f"{k} = {items[k]}\n" for k in sorted(items))

    def hash(self) -> str:
        return f"{fnv1a64(self.canonical().encode()):016x}"

    def to_ini(self) -> str:
        return "[experiment]\n" + self.canonical() + f"output = {self.output}\n"


def _fmt(v) -> str:
    f = float(v)
    return str(int(f)) if f.is_integer() else repr(f)


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def _split(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _number(text: str):
    f = float(text)
    return int(f) if f.is_integer() and "." not in text and "e" not in text.lower() else f


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_string(text)
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    sec = cp["experiment"]
    known = {"name", "N", "M", "K", "p_dbm", "bits", "schemes", "trials", "base_seed",
             "sweep", "values", "order_irs", "output"}
    extra = set(sec) - known
    if extra:
        raise ConfigError(f"unknown keys: {sorted(extra)}")
    kw = {}
    try:
        for k in ("N", "M", "K", "bits", "trials", "base_seed"):
            if k in sec:
                kw[k] = int(sec[k])
        if "p_dbm" in sec:
            kw["p_dbm"] = float(sec["p_dbm"])
        if "values" in sec:
            kw["values"] = tuple(_number(v) for v in _split(sec["values"]))
    except ValueError as e:
        raise ConfigError(str(e)) from e
    for k in ("name", "sweep", "order_irs", "output"):
        if k in sec:
            kw[k] = sec[k].strip()
    if "schemes" in sec:
        kw["schemes"] = tuple(_split(sec["schemes"]))
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
