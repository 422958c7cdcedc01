"""Run configuration: YAML schema, validation and model construction.

Schema (all keys required unless a default is noted):

    model:
      initial_state: 0            # chain state at t = 0 (default 0)
      regimes:                    # one entry (replicated) or two
        - r: 0.045                # money-account rate
          mu: -0.05               # stock drift between events
          lam: 1.0                # event intensity = chain exit rate
          transform: exponential  # or identity (default exponential)
          margin:                 # default {variant: frictionless}
            variant: differential_rates   # frictionless | differential_rates | short_rebate
            R: 0.05               # borrowing rate (differential_rates)
            # rL: 0.05            # stock loan fee (short_rebate)
          distribution:
            variant: exponential_positive # exponential_positive | exponential_negative
            rate: 10.0                    # | two_point {y_lo,y_hi,p_hi} | tabulated {grid,density}
    utility:
      variant: log                # log | power
      # gamma: 0.5                # required for power
    constraint:                   # default: canonical set of regime 0's margin
      lower: 0.0                  # may be -.inf
      upper: .inf
    horizon: 1.0
    initial_wealth: 1.0
    mc:
      n_paths: 100000
      seed: 12345
    output_dir: "."               # default "." or $JUMPFOLIO_OUTPUT_DIR

Unknown keys anywhere raise ConfigError naming the dotted field path.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass

import yaml

from .distributions import (
    ExponentialNegative,
    ExponentialPositive,
    Tabulated,
    TwoPoint,
)
from .errors import ConfigError
from .frictions import (
    ConstraintSet,
    DifferentialRates,
    Frictionless,
    ShortRebate,
)
from .market import MarketModel, RegimeMarketParams
from .mpp import GeneratorMatrix
from .policy import Utility

OUTPUT_DIR_ENV = "JUMPFOLIO_OUTPUT_DIR"


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration; ``market`` and friends are built objects."""

    market: MarketModel
    initial_state: int
    utility: Utility
    horizon: float
    initial_wealth: float
    n_paths: int
    seed: int
    output_dir: str
    raw: dict  # normalised dict form, round-trips through YAML


def _require(mapping, key, path, cast=None):
    if not isinstance(mapping, dict):
        raise ConfigError(f"expected a mapping at {path}", field=path)
    if key not in mapping:
        raise ConfigError(f"missing required key {path}.{key}", field=f"{path}.{key}")
    value = mapping[key]
    if cast is not None:
        try:
            value = cast(value)
        except (TypeError, ValueError):
            raise ConfigError(
                f"cannot interpret {path}.{key} = {value!r}", field=f"{path}.{key}"
            )
    return value


def _reject_unknown(mapping, allowed, path):
    if not isinstance(mapping, dict):
        raise ConfigError(f"expected a mapping at {path}", field=path)
    for key in mapping:
        if key not in allowed:
            raise ConfigError(f"unknown key {path}.{key}", field=f"{path}.{key}")


def _float(value):
    if isinstance(value, str):
        if value in ("inf", ".inf", "+inf"):
            return math.inf
        if value in ("-inf", "-.inf"):
            return -math.inf
    return float(value)


def _parse_distribution(node, path):
    variant = _require(node, "variant", path)
    if variant == "exponential_positive":
        _reject_unknown(node, {"variant", "rate"}, path)
        return ExponentialPositive(rate=_require(node, "rate", path, float))
    if variant == "exponential_negative":
        _reject_unknown(node, {"variant", "rate"}, path)
        return ExponentialNegative(rate=_require(node, "rate", path, float))
    if variant == "two_point":
        _reject_unknown(node, {"variant", "y_lo", "y_hi", "p_hi"}, path)
        return TwoPoint(
            y_lo=_require(node, "y_lo", path, float),
            y_hi=_require(node, "y_hi", path, float),
            p_hi=_require(node, "p_hi", path, float),
        )
    if variant == "tabulated":
        _reject_unknown(node, {"variant", "grid", "density"}, path)
        return Tabulated(
            grid=_require(node, "grid", path),
            density=_require(node, "density", path),
        )
    raise ConfigError(
        f"unknown distribution variant {variant!r} at {path}.variant",
        field=f"{path}.variant",
    )


def _parse_margin(node, r, path):
    if node is None:
        return Frictionless()
    variant = _require(node, "variant", path)
    if variant == "frictionless":
        _reject_unknown(node, {"variant"}, path)
        return Frictionless()
    if variant == "differential_rates":
        _reject_unknown(node, {"variant", "R"}, path)
        R = _require(node, "R", path, float)
        if R < r:
            raise ConfigError(
                f"borrowing rate {path}.R = {R} is below the lending rate r = {r}",
                field=f"{path}.R",
            )
        return DifferentialRates(r=r, R=R)
    if variant == "short_rebate":
        _reject_unknown(node, {"variant", "rL"}, path)
        rL = _require(node, "rL", path, float)
        if rL < r:
            raise ConfigError(
                f"stock loan fee {path}.rL = {rL} is below the rate r = {r}",
                field=f"{path}.rL",
            )
        return ShortRebate(r=r, rL=rL)
    raise ConfigError(
        f"unknown margin variant {variant!r} at {path}.variant",
        field=f"{path}.variant",
    )


def _parse_regime(node, path):
    _reject_unknown(
        node, {"r", "mu", "lam", "transform", "margin", "distribution"}, path
    )
    r = _require(node, "r", path, float)
    return RegimeMarketParams(
        r=r,
        mu=_require(node, "mu", path, float),
        lam=_require(node, "lam", path, float),
        dist=_parse_distribution(
            _require(node, "distribution", path), f"{path}.distribution"
        ),
        transform=node.get("transform", "exponential"),
        margin=_parse_margin(node.get("margin"), r, f"{path}.margin"),
    )


def parse_config(data: dict, overrides: dict | None = None) -> RunConfig:
    """Validate a config mapping (plus CLI overrides) into a RunConfig."""
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a mapping")
    data = dict(data)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        _apply_override(data, key, value)

    _reject_unknown(
        data,
        {
            "model",
            "utility",
            "constraint",
            "horizon",
            "initial_wealth",
            "mc",
            "output_dir",
        },
        "config",
    )

    model = _require(data, "model", "config")
    _reject_unknown(model, {"initial_state", "regimes"}, "config.model")
    initial_state = int(model.get("initial_state", 0))
    if initial_state not in (0, 1):
        raise ConfigError(
            "config.model.initial_state must be 0 or 1",
            field="config.model.initial_state",
        )
    regimes_node = _require(model, "regimes", "config.model")
    if not isinstance(regimes_node, list) or len(regimes_node) not in (1, 2):
        raise ConfigError(
            "config.model.regimes must list one or two regimes",
            field="config.model.regimes",
        )
    regimes = [
        _parse_regime(node, f"config.model.regimes[{i}]")
        for i, node in enumerate(regimes_node)
    ]
    if len(regimes) == 1:
        regimes = [regimes[0], regimes[0]]

    util_node = _require(data, "utility", "config")
    variant = _require(util_node, "variant", "config.utility")
    if variant == "log":
        _reject_unknown(util_node, {"variant", "gamma"}, "config.utility")
        if util_node.get("gamma") not in (None, 0, 0.0):
            raise ConfigError(
                "log utility does not take a nonzero gamma",
                field="config.utility.gamma",
            )
        utility = Utility.log()
    elif variant == "power":
        _reject_unknown(util_node, {"variant", "gamma"}, "config.utility")
        utility = Utility.power(_require(util_node, "gamma", "config.utility", float))
    else:
        raise ConfigError(
            f"unknown utility variant {variant!r}", field="config.utility.variant"
        )

    if "constraint" in data:
        cnode = data["constraint"]
        _reject_unknown(cnode, {"lower", "upper"}, "config.constraint")
        constraint = ConstraintSet(
            lower=_float(cnode.get("lower", -math.inf)),
            upper=_float(cnode.get("upper", math.inf)),
        )
    else:
        constraint = regimes[0].margin.canonical_constraint()

    market = MarketModel(
        gen=GeneratorMatrix(regimes[0].lam, regimes[1].lam),
        regimes=tuple(regimes),
        constraint=constraint,
    )

    horizon = _require(data, "horizon", "config", float)
    if horizon <= 0:
        raise ConfigError("config.horizon must be positive", field="config.horizon")
    x = _require(data, "initial_wealth", "config", float)
    if x <= 0:
        raise ConfigError(
            "config.initial_wealth must be positive", field="config.initial_wealth"
        )

    mc = _require(data, "mc", "config")
    _reject_unknown(mc, {"n_paths", "seed"}, "config.mc")
    n_paths = _require(mc, "n_paths", "config.mc", int)
    if n_paths <= 0:
        raise ConfigError("config.mc.n_paths must be positive", field="config.mc.n_paths")
    seed = _require(mc, "seed", "config.mc", int)

    output_dir = data.get("output_dir") or os.environ.get(OUTPUT_DIR_ENV, ".")

    return RunConfig(
        market=market,
        initial_state=initial_state,
        utility=utility,
        horizon=horizon,
        initial_wealth=x,
        n_paths=n_paths,
        seed=seed,
        output_dir=str(output_dir),
        raw=_normalise(data, output_dir),
    )


def _apply_override(data, dotted, value):
    """Set a dotted path like 'utility.gamma' or 'mc.seed' in the raw mapping."""
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override through non-mapping {key}", field=dotted)
    node[keys[-1]] = value


def _normalise(data, output_dir):
    out = json.loads(json.dumps(data, default=_json_default))
    out["output_dir"] = str(output_dir)
    return out


def _json_default(obj):
    try:
        return obj.tolist()
    except AttributeError:
        return str(obj)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return parse_config(data, overrides)


def dump_config(config: RunConfig) -> str:
    """Serialise back to YAML; re-parsing yields an identical structure."""
    return yaml.safe_dump(config.raw, sort_keys=True)


def config_hash(config: RunConfig) -> str:
    """Short content hash for CSV provenance headers."""
    canonical = json.dumps(config.raw, sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:12]
