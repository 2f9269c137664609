"""Run configuration read from a TOML file, one table per concern.

Example::

    seed = 1

    [model]
    variant = "DoubleGamma"   # or "BayesianLasso", "InvertedGamma"
    sv = false
    standardize = true
    add_intercept = false

    [prior]
    b_xi = 10.0

    [sampler]
    n_burnin = 5000
    n_draws = 10000

Unknown keys are rejected with their full dotted name.
"""

from __future__ import annotations

import sys
from dataclasses import MISSING, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .model import PriorConfig, PriorVariant, SvPrior
from .sampler import SamplerSettings


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSection:
    variant: str = "DoubleGamma"
    sv: bool = False
    multivariate: bool = False
    response: str | None = None
    standardize: bool = True
    add_intercept: bool = False


@dataclass(frozen=True)
class SimulateSection:
    d: int = 3
    T: int = 200
    beta: tuple = (1.5, -0.3, 0.0)
    theta: tuple = (0.02, 0.0, 0.0)
    sigma2: float = 1.0
    n_series: int = 1


@dataclass(frozen=True)
class ForecastSection:
    t0: int | None = None
    methods: tuple = ("kalman",)
    warm_start: bool = False
    warm_burnin: int | None = None


@dataclass(frozen=True)
class SimstudySection:
    priors: tuple = ("DoubleGamma", "BayesianLasso")


@dataclass(frozen=True)
class OutputSection:
    format: str = "csv"


@dataclass(frozen=True)
class RunConfig:
    seed: int | None = None
    model: ModelSection = field(default_factory=ModelSection)
    prior: PriorConfig = field(default_factory=PriorConfig)
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    simulate: SimulateSection = field(default_factory=SimulateSection)
    forecast: ForecastSection = field(default_factory=ForecastSection)
    simstudy: SimstudySection = field(default_factory=SimstudySection)
    output: OutputSection = field(default_factory=OutputSection)
    raw: dict = field(default_factory=dict, compare=False)

    def prior_for(self, variant: str | PriorVariant | None = None) -> PriorConfig:
        """The configured prior switched to another variant (used by the simulation study)."""
        v = PriorVariant(variant) if variant is not None else self.prior.variant
        fixed = {}
        if v is PriorVariant.BAYESIAN_LASSO:
            fixed = {"fixed_a_xi": 1.0, "fixed_a_tau": 1.0}
        elif self.prior.variant is PriorVariant.BAYESIAN_LASSO:
            fixed = {"fixed_a_xi": None, "fixed_a_tau": None}
        return replace(self.prior, variant=v, **fixed)


_SAMPLER_KEYS = ("n_burnin", "n_draws", "thin", "c_tau", "c_xi", "sqrt_theta_floor",
                 "adapt_mh", "target_accept", "interweave", "sign_switch")
_PRIOR_KEYS = tuple(f.name for f in fields(PriorConfig) if f.name not in ("variant", "sv"))
_SV_KEYS = tuple(f.name for f in fields(SvPrior))


def _check_keys(section: str, table: dict, allowed) -> None:
    if not isinstance(table, dict):
        raise ConfigError(f"[{section}] must be a table")
    for key in table:
        if key not in allowed:
            raise ConfigError(f"unknown configuration key '{section}.{key}'")


def _check_types(section: str, cls, table: dict) -> None:
    # the default value fixes the expected type; None defaults accept anything
    for f in fields(cls):
        if f.name not in table or f.default is MISSING or f.default is None:
            continue
        v, default = table[f.name], f.default
        if isinstance(default, bool):
            ok = isinstance(v, bool)
        elif isinstance(default, (int, float)):
            ok = isinstance(v, (int, float)) and not isinstance(v, bool)
            if isinstance(default, int) and not isinstance(default, bool) and not isinstance(v, int):
                ok = False
        elif isinstance(default, str):
            ok = isinstance(v, str)
        elif isinstance(default, tuple):
            ok = isinstance(v, (list, tuple))
        else:
            ok = True
        if not ok:
            raise ConfigError(f"'{section}.{f.name}' has the wrong type ({type(v).__name__})")


def _build(section: str, cls, table: dict, allowed=None):
    allowed = allowed or tuple(f.name for f in fields(cls))
    _check_keys(section, table, allowed)
    _check_types(section, cls, table)
    kw = {k: tuple(v) if isinstance(v, list) else v for k, v in table.items()}
    try:
        return cls(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{section}] settings: {exc}") from exc


def parse_config(data: dict) -> RunConfig:
    top = {"seed", "model", "prior", "sv", "sampler", "simulate", "forecast", "simstudy", "output"}
    for key in data:
        if key not in top:
            raise ConfigError(f"unknown configuration key '{key}'")
    seed = data.get("seed")
    if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
        raise ConfigError("'seed' must be a non-negative integer")
    model = _build("model", ModelSection, data.get("model", {}))
    try:
        variant = PriorVariant(model.variant)
    except ValueError as exc:
        raise ConfigError(f"'model.variant' must be one of {[v.value for v in PriorVariant]}") from exc
    sv_table = data.get("sv", {})
    _check_keys("sv", sv_table, _SV_KEYS)
    sv = None
    if model.sv or model.multivariate:
        sv = _build("sv", SvPrior, sv_table)
    prior_table = data.get("prior", {})
    _check_keys("prior", prior_table, _PRIOR_KEYS)
    _check_types("prior", PriorConfig, prior_table)
    try:
        prior = PriorConfig(variant=variant, sv=sv, **prior_table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [prior] settings: {exc}") from exc
    sampler = _build("sampler", SamplerSettings, data.get("sampler", {}), _SAMPLER_KEYS)
    out = _build("output", OutputSection, data.get("output", {}))
    if out.format not in ("csv", "bin"):
        raise ConfigError("'output.format' must be 'csv' or 'bin'")
    sampler = replace(sampler, store_paths=True)
    return RunConfig(
        seed=seed,
        model=model,
        prior=prior,
        sampler=sampler,
        simulate=_build("simulate", SimulateSection, data.get("simulate", {})),
        forecast=_build("forecast", ForecastSection, data.get("forecast", {})),
        simstudy=_build("simstudy", SimstudySection, data.get("simstudy", {})),
        output=out,
        raw=data,
    )


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return parse_config({})
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return parse_config(data)
