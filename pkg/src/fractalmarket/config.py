"""Experiment configuration: JSON schema, defaults, exhaustive validation.

Validation collects every violation before failing so a bad config is
fixed in one round trip. Defaults are documented here and echoed into the
run report.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

from .calculus import PHI_FUNCTIONS, PhiFunction, affine_phi
from .errors import ConfigError
from .market import MarketParams
from .strategy import StrategyParams
from .volatility import (
    ConstantVol,
    FunctionOfModulatorVol,
    HestonVol,
    HullWhiteVol,
    SteinSteinVol,
    VolatilityModel,
)

__all__ = [
    "ExperimentConfig",
    "ModulatorConfig",
    "TimeChangeConfig",
    "Thresholds",
    "load_config",
    "parse_config",
    "config_echo",
    "preset_path",
    "available_presets",
]

DEFAULTS = {
    "market": {"nu": 0.1, "r": 0.05, "y0": 100.0, "horizon": 1.0},
    "strategy": {"c": 1.0},
    "modulator": {"kind": "fbm", "hurst": 0.7},
    "volatility": {"kind": "constant", "level": 0.2},
    "grid_levels": [8, 9, 10, 11, 12],
    "num_seeds": 100,
    "master_seed": 2024,
    "output_dir": "runs",
}


@dataclass(frozen=True)
class Thresholds:
    """Statistical pass/fail knobs; defaults match the acceptance suite."""

    qv_slope_tol: float = 0.1
    monotone_violations_allowed: int = 1
    qv_integral_ratio_max: float = 0.25
    cert_pass_rate_min: float = 1.0
    exact_identity_tol: float = 1e-12
    degenerate_residual_tol: float = 1e-12
    integrability_mu_bound: float = 1e12
    integrability_sigma2_bound: float = 1e12


@dataclass(frozen=True)
class TimeChangeConfig:
    kind: str  # identity | power | integrated_cir
    p: Optional[float] = None
    v0: Optional[float] = None
    kappa: Optional[float] = None
    theta: Optional[float] = None
    xi: Optional[float] = None


@dataclass(frozen=True)
class ModulatorConfig:
    kind: str  # fbm | time_changed
    hurst: float
    time_change: Optional[TimeChangeConfig] = None


@dataclass(frozen=True)
class ExperimentConfig:
    market: MarketParams
    strategy: StrategyParams
    modulator: ModulatorConfig
    volatility: VolatilityModel
    grid_levels: list
    num_seeds: int
    master_seed: int
    output_dir: str
    thresholds: Thresholds = field(default_factory=Thresholds)
    volatility_raw: dict = field(default_factory=dict)


def _check_keys(section: dict, allowed: set, where: str, errors: list):
    for key in section:
        if key not in allowed:
            errors.append(f"{where}: unknown field '{key}'")


def _num(section, key, where, errors, default=None, required=False):
    if key not in section:
        if required:
            errors.append(f"{where}.{key}: required field missing")
        return default
    value = section[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{where}.{key}: expected a number, got {value!r}")
        return default
    return float(value)


def _parse_phi(raw, errors) -> Optional[PhiFunction]:
    if isinstance(raw, str):
        if raw in PHI_FUNCTIONS:
            return PHI_FUNCTIONS[raw]
        errors.append(
            f"volatility.phi: unknown function '{raw}', choose one of "
            f"{sorted(PHI_FUNCTIONS)} or {{'name': 'affine', 'a': .., 'b': ..}}"
        )
        return None
    if isinstance(raw, dict):
        name = raw.get("name")
        if name == "affine":
            a = _num(raw, "a", "volatility.phi", errors, required=True)
            b = _num(raw, "b", "volatility.phi", errors, required=True)
            if a is None or b is None:
                return None
            return affine_phi(a, b)
        if name in PHI_FUNCTIONS:
            return PHI_FUNCTIONS[name]
        errors.append(f"volatility.phi: unknown function {name!r}")
        return None
    errors.append(f"volatility.phi: expected a name or object, got {raw!r}")
    return None


def _parse_volatility(section: dict, errors: list) -> Optional[VolatilityModel]:
    kind = section.get("kind")
    known = {"constant", "heston", "hull_white", "stein_stein", "function_of_modulator"}
    if kind not in known:
        errors.append(f"volatility.kind: expected one of {sorted(known)}, got {kind!r}")
        return None
    try:
        if kind == "constant":
            _check_keys(section, {"kind", "level"}, "volatility", errors)
            level = _num(section, "level", "volatility", errors, required=True)
            return ConstantVol(level) if level is not None else None
        if kind == "heston":
            _check_keys(section, {"kind", "v0", "kappa", "theta", "xi"}, "volatility", errors)
            vals = [_num(section, k, "volatility", errors, required=True)
                    for k in ("v0", "kappa", "theta", "xi")]
            if any(v is None for v in vals):
                return None
            return HestonVol(*vals)
        if kind == "hull_white":
            _check_keys(section, {"kind", "sigma0", "mu", "nu_vol"}, "volatility", errors)
            vals = [_num(section, k, "volatility", errors, required=True)
                    for k in ("sigma0", "mu", "nu_vol")]
            if any(v is None for v in vals):
                return None
            return HullWhiteVol(*vals)
        if kind == "stein_stein":
            _check_keys(section, {"kind", "sigma0", "kappa", "theta", "beta"},
                        "volatility", errors)
            vals = [_num(section, k, "volatility", errors, required=True)
                    for k in ("sigma0", "kappa", "theta", "beta")]
            if any(v is None for v in vals):
                return None
            return SteinSteinVol(*vals)
        _check_keys(section, {"kind", "phi"}, "volatility", errors)
        if "phi" not in section:
            errors.append("volatility.phi: required field missing")
            return None
        phi = _parse_phi(section["phi"], errors)
        return FunctionOfModulatorVol(phi) if phi is not None else None
    except (ValueError, TypeError) as exc:
        errors.append(f"volatility: {exc}")
        return None


def _parse_time_change(section: dict, errors: list) -> Optional[TimeChangeConfig]:
    kind = section.get("kind")
    known = {"identity", "power", "integrated_cir"}
    if kind not in known:
        errors.append(
            f"modulator.time_change.kind: expected one of {sorted(known)}, got {kind!r}"
        )
        return None
    if kind == "identity":
        _check_keys(section, {"kind"}, "modulator.time_change", errors)
        return TimeChangeConfig(kind="identity")
    if kind == "power":
        _check_keys(section, {"kind", "p"}, "modulator.time_change", errors)
        p = _num(section, "p", "modulator.time_change", errors, required=True)
        if p is not None and p <= 0:
            errors.append(f"modulator.time_change.p: must be > 0, got {p}")
            return None
        return TimeChangeConfig(kind="power", p=p) if p is not None else None
    _check_keys(section, {"kind", "v0", "kappa", "theta", "xi"},
                "modulator.time_change", errors)
    vals = {k: _num(section, k, "modulator.time_change", errors, required=True)
            for k in ("v0", "kappa", "theta", "xi")}
    if any(v is None for v in vals.values()):
        return None
    if vals["v0"] <= 0:
        errors.append(f"modulator.time_change.v0: must be > 0, got {vals['v0']}")
        return None
    return TimeChangeConfig(kind="integrated_cir", **vals)


def _parse_modulator(section: dict, errors: list) -> Optional[ModulatorConfig]:
    kind = section.get("kind")
    if kind not in ("fbm", "time_changed"):
        errors.append(
            f"modulator.kind: expected 'fbm' or 'time_changed', got {kind!r}"
        )
        return None
    _check_keys(section, {"kind", "hurst", "time_change"}, "modulator", errors)
    hurst = _num(section, "hurst", "modulator", errors, required=True)
    if hurst is None:
        return None
    if not 0.0 < hurst < 1.0:
        errors.append(f"modulator.hurst: must lie in (0, 1), got {hurst}")
        return None
    tc = None
    if kind == "time_changed":
        raw_tc = section.get("time_change")
        if not isinstance(raw_tc, dict):
            errors.append("modulator.time_change: required object missing")
            return None
        tc = _parse_time_change(raw_tc, errors)
        if tc is None:
            return None
    elif "time_change" in section:
        errors.append("modulator.time_change: only valid for kind 'time_changed'")
        return None
    return ModulatorConfig(kind=kind, hurst=hurst, time_change=tc)


def parse_config(raw: dict) -> ExperimentConfig:
    """Validate a raw config dict, applying documented defaults.

    Raises ConfigError carrying every violation found.
    """
    if not isinstance(raw, dict):
        raise ConfigError(["config root must be a JSON object"])
    errors: list = []
    top_allowed = {
        "market", "strategy", "modulator", "volatility",
        "grid_levels", "num_seeds", "master_seed", "output_dir", "thresholds",
    }
    _check_keys(raw, top_allowed, "config", errors)

    market_raw = {**DEFAULTS["market"], **raw.get("market", {})}
    _check_keys(market_raw, {"nu", "r", "y0", "horizon"}, "market", errors)
    market = None
    nu = _num(market_raw, "nu", "market", errors)
    r = _num(market_raw, "r", "market", errors)
    y0 = _num(market_raw, "y0", "market", errors)
    horizon = _num(market_raw, "horizon", "market", errors)
    if None not in (nu, r, y0, horizon):
        if y0 <= 0:
            errors.append(f"market.y0: must be > 0, got {y0}")
        if horizon <= 0:
            errors.append(f"market.horizon: must be > 0, got {horizon}")
        if not errors:
            market = MarketParams(nu=nu, r=r, y0=y0, horizon=horizon)

    strategy_raw = {**DEFAULTS["strategy"], **raw.get("strategy", {})}
    _check_keys(strategy_raw, {"c"}, "strategy", errors)
    c = _num(strategy_raw, "c", "strategy", errors)
    strategy = None
    if c is not None:
        if c <= 0:
            errors.append(f"strategy.c: must be > 0, got {c}")
        else:
            strategy = StrategyParams(c=c)

    modulator = _parse_modulator(dict(raw.get("modulator", DEFAULTS["modulator"])), errors)
    volatility_raw = dict(raw.get("volatility", DEFAULTS["volatility"]))
    volatility = _parse_volatility(volatility_raw, errors)

    grid_levels = raw.get("grid_levels", DEFAULTS["grid_levels"])
    if (not isinstance(grid_levels, list) or len(grid_levels) == 0
            or not all(isinstance(k, int) and not isinstance(k, bool) for k in grid_levels)):
        errors.append(f"grid_levels: expected a nonempty list of integers, got {grid_levels!r}")
    else:
        if any(b <= a for a, b in zip(grid_levels, grid_levels[1:])):
            errors.append(f"grid_levels: must be strictly increasing, got {grid_levels}")
        if any(k < 1 or k > 24 for k in grid_levels):
            errors.append("grid_levels: dyadic exponents must lie in [1, 24]")

    num_seeds = raw.get("num_seeds", DEFAULTS["num_seeds"])
    if not isinstance(num_seeds, int) or isinstance(num_seeds, bool) or num_seeds < 1:
        errors.append(f"num_seeds: expected a positive integer, got {num_seeds!r}")

    master_seed = raw.get("master_seed", DEFAULTS["master_seed"])
    if (not isinstance(master_seed, int) or isinstance(master_seed, bool)
            or master_seed < 0 or master_seed >= 2**64):
        errors.append(f"master_seed: expected an unsigned 64-bit integer, got {master_seed!r}")

    output_dir = raw.get("output_dir", DEFAULTS["output_dir"])
    if not isinstance(output_dir, str) or not output_dir:
        errors.append(f"output_dir: expected a nonempty string, got {output_dir!r}")

    thresholds_raw = raw.get("thresholds", {})
    thresholds = Thresholds()
    if not isinstance(thresholds_raw, dict):
        errors.append("thresholds: expected an object")
    else:
        allowed = set(Thresholds.__dataclass_fields__)
        _check_keys(thresholds_raw, allowed, "thresholds", errors)
        kwargs = {}
        for key in allowed & set(thresholds_raw):
            value = thresholds_raw[key]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                errors.append(f"thresholds.{key}: expected a number, got {value!r}")
            else:
                kwargs[key] = (
                    int(value) if key == "monotone_violations_allowed" else float(value)
                )
        thresholds = Thresholds(**kwargs)

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(
        market=market,
        strategy=strategy,
        modulator=modulator,
        volatility=volatility,
        grid_levels=list(grid_levels),
        num_seeds=num_seeds,
        master_seed=master_seed,
        output_dir=output_dir,
        thresholds=thresholds,
        volatility_raw=volatility_raw,
    )


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path) as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ConfigError([f"cannot read config file: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            [f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}"]
        ) from exc
    return parse_config(raw)


def config_echo(config: ExperimentConfig) -> dict:
    """The fully resolved config as plain JSON-serializable data."""
    echo = {
        "market": asdict(config.market),
        "strategy": asdict(config.strategy),
        "modulator": {
            "kind": config.modulator.kind,
            "hurst": config.modulator.hurst,
        },
        "volatility": dict(config.volatility_raw),
        "grid_levels": list(config.grid_levels),
        "num_seeds": config.num_seeds,
        "master_seed": config.master_seed,
        "output_dir": config.output_dir,
        "thresholds": asdict(config.thresholds),
    }
    if config.modulator.time_change is not None:
        tc = {
            k: v
            for k, v in asdict(config.modulator.time_change).items()
            if v is not None
        }
        echo["modulator"]["time_change"] = tc
    return echo


def preset_path(name: str):
    """Path of a packaged preset config."""
    from importlib.resources import files

    return files("fractalmarket") / "presets" / f"{name}.json"


def available_presets() -> list:
    from importlib.resources import files

    directory = files("fractalmarket") / "presets"
    return sorted(p.name[:-5] for p in directory.iterdir() if p.name.endswith(".json"))
