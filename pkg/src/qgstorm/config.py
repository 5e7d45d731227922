"""Run configuration: flat ``key=value`` files overridden by command-line flags."""
from __future__ import annotations

import math
import re
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import spectral
from .dynamics import SCHEMES, ModelParams
from .ensemble import default_workers
from .noise import MU_RULES, NoiseSpec


class ConfigError(Exception):
    exit_code = 2


class MissingConfigFile(ConfigError):
    pass


class MalformedLine(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class InvalidValue(ConfigError):
    pass


_IC = re.compile(r"^(random|zero|mode:(\d+),(\d+))$")


@dataclass(frozen=True)
class RunConfig:
    nu: float = 1e-2
    r: float = 0.1
    beta: float = 1.0
    gamma: float = 0.5
    mu_rule: str = "power"
    mu_exponent: float = 1.0
    mu_band: int = 10
    mu_scale: float = 1.0
    seed: int = 0
    modes: tuple[int, int] = (32, 32)
    dealias: float = 1.5
    dt: float = 1e-3
    T: float = 1.0
    scheme: str = "split"
    stride: int = 10
    snapshots: bool = False
    n_traj: int = 100
    workers: int = field(default_factory=default_workers)
    out: str = "qgstorm_out"
    ic: str = "random"
    ic_amplitude: float = 1.0
    ic_seed: int = 0
    blowup_cap: float = 1e8

    def model_params(self) -> ModelParams:
        return ModelParams(nu=self.nu, r=self.r, beta=self.beta, modes=self.modes,
                           dealias=self.dealias, blowup_cap=self.blowup_cap)

    def noise_spec(self) -> NoiseSpec:
        return NoiseSpec(gamma=self.gamma, mu_rule=self.mu_rule, mu_exponent=self.mu_exponent,
                         mu_band=self.mu_band, mu_scale=self.mu_scale, seed=self.seed)

    def initial_field(self) -> np.ndarray:
        M, N = self.modes
        match = _IC.match(self.ic)
        if self.ic == "zero":
            return np.zeros((M, N))
        if self.ic == "random":
            rng = np.random.default_rng(self.ic_seed)
            return spectral.random_field(M, N, rng, decay=1.0, l2=self.ic_amplitude)
        m, n = int(match.group(2)), int(match.group(3))
        return spectral.mode_field(M, N, m, n, self.ic_amplitude)

    def to_text(self) -> str:
        return "".join(f"{k} = {_render(v)}\n" for k, v in asdict(self).items())


KEYS = tuple(f.name for f in fields(RunConfig))
_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _render(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return "x".join(str(x) for x in v)
    return str(v)


def _convert(key: str, raw: str, where: str):
    kind = _TYPES[key]
    raw = raw.strip()
    try:
        if kind == "float":
            return float(raw)
        if kind == "int":
            return int(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "tuple[int, int]":
            parts = re.split(r"[x,]", raw.lower())
            vals = tuple(int(p) for p in parts if p.strip())
            if len(vals) == 1:
                vals = vals * 2
            if len(vals) != 2:
                raise ValueError(raw)
            return vals
        return raw
    except ValueError:
        raise InvalidValue(f"{where}: cannot parse {key}={raw!r} as {kind}") from None


def validate(cfg: RunConfig, where: dict[str, str] | None = None) -> RunConfig:
    """Range-check every field; the message names the key and where it was set."""
    where = where or {}

    def fail(key, msg):
        src = where.get(key, "default")
        raise InvalidValue(f"{src}: {msg}")

    finite = {k: getattr(cfg, k) for k in KEYS if _TYPES[k] == "float"}
    for k, v in finite.items():
        if not math.isfinite(v):
            fail(k, f"{k} must be finite")
    if not cfg.nu > 0:
        fail("nu", "nu must be positive")
    if cfg.r < 0:
        fail("r", "r must be >= 0")
    if cfg.beta < 0:
        fail("beta", "beta must be >= 0")
    if not 0 < cfg.gamma < 1:
        fail("gamma", "gamma must lie in (0,1)")
    if cfg.mu_rule not in MU_RULES:
        fail("mu_rule", f"mu_rule must be one of {', '.join(MU_RULES)}")
    if cfg.mu_band < 0:
        fail("mu_band", "mu_band must be >= 0")
    if cfg.mu_scale < 0:
        fail("mu_scale", "mu_scale must be >= 0")
    if not 0 <= cfg.seed < 2**64:
        fail("seed", "seed must be a 64-bit unsigned integer")
    if min(cfg.modes) < 1:
        fail("modes", "modes must be >= 1")
    if cfg.dealias < 1:
        fail("dealias", "dealias must be >= 1")
    if not cfg.dt > 0:
        fail("dt", "dt must be positive")
    if not cfg.T > 0:
        fail("T", "T must be positive")
    if cfg.dt > cfg.T:
        fail("dt", "dt must not exceed T")
    if abs(round(cfg.T / cfg.dt) * cfg.dt - cfg.T) > 1e-9 * cfg.T:
        fail("T", "T must be a multiple of dt")
    if cfg.scheme not in SCHEMES:
        fail("scheme", f"scheme must be one of {', '.join(SCHEMES)}")
    if cfg.stride < 1:
        fail("stride", "stride must be >= 1")
    if cfg.n_traj < 1:
        fail("n_traj", "n_traj must be >= 1")
    if cfg.workers < 1:
        fail("workers", "workers must be >= 1")
    match = _IC.match(cfg.ic)
    if not match:
        fail("ic", "ic must be 'random', 'zero' or 'mode:m,n'")
    if match.group(2):
        m, n = int(match.group(2)), int(match.group(3))
        if not (1 <= m <= cfg.modes[0] and 1 <= n <= cfg.modes[1]):
            fail("ic", f"ic mode ({m},{n}) outside truncation {cfg.modes[0]}x{cfg.modes[1]}")
    if cfg.ic_amplitude < 0:
        fail("ic_amplitude", "ic_amplitude must be >= 0")
    if not cfg.blowup_cap > 0:
        fail("blowup_cap", "blowup_cap must be positive")
    return cfg


def parse_text(text: str, source: str = "<config>") -> tuple[dict, dict[str, str]]:
    """Parse ``key=value`` lines into raw typed values plus their locations."""
    values, where = {}, {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        loc = f"{source}:{lineno}"
        if "=" not in body:
            raise MalformedLine(f"{loc}: expected key=value, got {line.strip()!r}")
        key, raw = (s.strip() for s in body.split("=", 1))
        if not key:
            raise MalformedLine(f"{loc}: missing key in {line.strip()!r}")
        if key not in _TYPES:
            raise UnknownKey(f"{loc}: unknown key {key!r}")
        values[key] = _convert(key, raw, loc)
        where[key] = loc
    return values, where


def parse_config(path: str | Path | None = None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Defaults, then the file at ``path``, then string ``overrides`` (from flags)."""
    values, where = {}, {}
    if path is not None:
        p = Path(path)
        try:
            text = p.read_text()
        except FileNotFoundError:
            raise MissingConfigFile(f"config file not found: {p}") from None
        except OSError as exc:
            raise MissingConfigFile(f"cannot read config file {p}: {exc.strerror}") from None
        values, where = parse_text(text, str(p))
    for key, raw in (overrides or {}).items():
        if key not in _TYPES:
            raise UnknownKey(f"flag --{key.replace('_', '-')}: unknown key {key!r}")
        loc = f"flag --{key.replace('_', '-')}"
        values[key] = _convert(key, raw, loc)
        where[key] = loc
    try:
        cfg = replace(RunConfig(), **values)
    except TypeError as exc:  # pragma: no cover - keys are checked above
        raise UnknownKey(str(exc)) from None
    return validate(cfg, where)
