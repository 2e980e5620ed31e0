"""Run configuration: TOML parsing with strict key validation.

Example config:

    [grid]
    d = 3
    N = 64
    L = 16.0

    [physics]
    sigma1 = 1.0
    sigma2 = 0.8
    sigma3 = 0.8
    a = { kind = "plateau", amplitude = 1.0, r1 = 4.0, r2 = 6.0 }
    V = { kind = "gaussian", amplitude = 0.3, width = 1.0, sign = -1.0 }

    [initial]
    kind = "gaussian"
    amplitude = 1.0
    width = 2.0

    [integrator]
    dt = 2e-3
    T = 1.0
"""

from __future__ import annotations

import difflib
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from dnls.profiles import ProfileSpec, spec_from_dict, zero


class ConfigError(ValueError):
    pass


@dataclass
class GridConfig:
    d: int = 3
    N: int = 64
    L: float = 16.0


@dataclass
class PhysicsConfig:
    sigma1: float = 1.0
    sigma2: float = 0.8
    sigma3: float = 0.8
    a: ProfileSpec = field(default_factory=zero)
    V: ProfileSpec = field(default_factory=zero)


@dataclass
class InitialConfig:
    kind: str = "gaussian"     # gaussian, plateau, or file
    amplitude: float = 1.0
    width: float = 2.0
    center: tuple[float, ...] = ()
    r1: float = 1.0
    r2: float = 2.0
    k: tuple[float, ...] = ()  # plane-wave phase factor exp(i k.x)
    file: str = ""             # DNLSFLD1 snapshot path (kind = "file")


@dataclass
class IntegratorConfig:
    dt: float = 1e-2
    T: float = 1.0
    cadence: int = 10
    dealias: bool = False


@dataclass
class DiagnosticsConfig:
    virial: bool = True
    interaction_b: bool = False
    snapshots: int = 0              # field-snapshot stride in steps; 0 = off
    dyadic_scattering: bool = False
    scattering_t0: float = 0.0      # first dyadic time; 0 = T/8
    leak_tol: float = 1e-8
    c_mon: float = 10.0


@dataclass
class OutputConfig:
    directory: str = "out"
    csv: bool = True
    json: bool = True
    fields: bool = False
    figures: bool = True


@dataclass
class OverridesConfig:
    eta: float | None = None
    lam: float | None = None


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    diagnostics: DiagnosticsConfig = field(default_factory=DiagnosticsConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    overrides: OverridesConfig = field(default_factory=OverridesConfig)
    seed: int = 0


def _take(table: dict, section: str, allowed: dict) -> dict:
    """Pop recognized keys, converting types; unknown keys are hard errors
    with close-match suggestions."""
    out = {}
    for key, conv in allowed.items():
        if key in table:
            out[key] = conv(table.pop(key))
    if table:
        bad = sorted(table)[0]
        hint = difflib.get_close_matches(bad, allowed.keys(), n=3)
        suffix = f"; did you mean one of {hint}?" if hint else f"; allowed: {sorted(allowed)}"
        raise ConfigError(f"unknown key {bad!r} in [{section}]{suffix}")
    return out


def _profile(what):
    def conv(value):
        try:
            return spec_from_dict(value, what)
        except ValueError as exc:
            raise ConfigError(f"bad profile for {what}: {exc}") from exc
    return conv


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a TOML run configuration."""
    return _config_from_doc(_load_toml(text))


def parse_sweep(text: str) -> tuple[RunConfig, dict[str, list], int]:
    """Parse a sweep configuration: a base run config plus a [sweep] section.

    [sweep.axes] maps dotted config paths (quoted TOML keys) to value lists,
    e.g. "physics.sigma2" = [0.6, 0.8]; [sweep] may also set cap."""
    doc = _load_toml(text)
    sweep = doc.pop("sweep", None)
    if sweep is None:
        raise ConfigError("sweep config needs a [sweep] section with an axes table")
    if not isinstance(sweep, dict):
        raise ConfigError("[sweep] must be a table")
    cap = int(sweep.pop("cap", 64))
    axes = sweep.pop("axes", None)
    if sweep:
        raise ConfigError(f"unknown key {sorted(sweep)[0]!r} in [sweep]; allowed: axes, cap")
    if not isinstance(axes, dict) or not axes:
        raise ConfigError("[sweep.axes] must be a nonempty table of dotted-path = value-list")
    flat: dict[str, list] = {}
    _flatten_axes(axes, "", flat)
    return _config_from_doc(doc), flat, cap


def _flatten_axes(table: dict, prefix: str, out: dict) -> None:
    # unquoted dotted keys parse as nested tables; fold them back
    for key, value in table.items():
        path = f"{prefix}{key}"
        if isinstance(value, dict):
            _flatten_axes(value, path + ".", out)
        elif isinstance(value, list) and value:
            out[path] = value
        else:
            raise ConfigError(f"sweep axis {path!r} must map to a nonempty list")


def _load_toml(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc


def _config_from_doc(doc: dict) -> RunConfig:
    cfg = RunConfig()
    sections = {
        "grid": (cfg.grid, {"d": int, "N": int, "L": float}),
        "physics": (cfg.physics, {
            "sigma1": float, "sigma2": float, "sigma3": float,
            "a": _profile("physics.a"), "V": _profile("physics.V"),
        }),
        "initial": (cfg.initial, {
            "kind": str, "amplitude": float, "width": float,
            "center": tuple, "r1": float, "r2": float, "k": tuple, "file": str,
        }),
        "integrator": (cfg.integrator, {
            "dt": float, "T": float, "cadence": int, "dealias": bool,
        }),
        "diagnostics": (cfg.diagnostics, {
            "virial": bool, "interaction_b": bool, "snapshots": int,
            "dyadic_scattering": bool, "scattering_t0": float,
            "leak_tol": float, "c_mon": float,
        }),
        "output": (cfg.output, {
            "directory": str, "csv": bool, "json": bool, "fields": bool, "figures": bool,
        }),
        "overrides": (cfg.overrides, {"eta": float, "lam": float}),
    }
    top_allowed = set(sections) | {"seed"}
    for key in doc:
        if key not in top_allowed:
            hint = difflib.get_close_matches(key, top_allowed, n=3)
            suffix = f"; did you mean one of {hint}?" if hint else ""
            raise ConfigError(f"unknown section or key {key!r}{suffix}")
    if "seed" in doc:
        cfg.seed = int(doc["seed"])
    for name, (target, allowed) in sections.items():
        if name in doc:
            table = doc[name]
            if not isinstance(table, dict):
                raise ConfigError(f"[{name}] must be a table")
            for key, value in _take(dict(table), name, allowed).items():
                setattr(target, key, value)

    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    g, p, it = cfg.grid, cfg.physics, cfg.integrator
    if g.d not in (1, 2, 3):
        raise ConfigError(f"grid.d must be 1, 2 or 3, got {g.d}")
    if g.N < 8 or g.N % 2:
        raise ConfigError(f"grid.N must be even and >= 8, got {g.N}")
    if g.L <= 0:
        raise ConfigError("grid.L must be positive")
    if not (0 < p.sigma1 < 2 and 0 < p.sigma2 <= p.sigma1 and 0 < p.sigma3 < p.sigma1):
        raise ConfigError(
            "exponent ordering violated: need 0<sigma2<=sigma1, 0<sigma3<sigma1 "
            f"(and 0<sigma1<2); got sigma1={p.sigma1}, sigma2={p.sigma2}, sigma3={p.sigma3}"
        )
    if it.dt <= 0:
        raise ConfigError("integrator.dt must be positive")
    if it.T < 0:
        raise ConfigError("integrator.T must be nonnegative")
    if it.T > 0 and it.dt > it.T:
        raise ConfigError("integrator.dt must not exceed T")
    if it.cadence < 1:
        raise ConfigError("integrator.cadence must be >= 1")
    if cfg.initial.kind not in ("gaussian", "plateau", "file"):
        raise ConfigError(f"initial.kind must be gaussian, plateau or file, got {cfg.initial.kind!r}")
    if cfg.initial.kind == "file" and not cfg.initial.file:
        raise ConfigError("initial.kind = 'file' requires initial.file")
    if cfg.diagnostics.leak_tol <= 0:
        raise ConfigError("diagnostics.leak_tol must be positive")
