"""Config-file parsing for the command-line tools.

One INI-style file drives every subcommand.  Sections: ``[dgp]`` for the
simulator, ``[rules]`` for the network scaling rules, ``[train]`` for the
optimizer, ``[inference]`` for interval settings, ``[study]`` for Monte
Carlo studies, ``[data]`` to point at a saved dataset instead of
simulating, and ``[ortho]`` for the orthogonality diagnostic.  Unknown
keys are rejected.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

from .dgp import PlrDgpConfig
from .harness import ExperimentConfig
from .orthogonality import Direction
from .registry import parse_function
from .sieve import ScalingRule, TrainConfig

__all__ = ["AppConfig", "ConfigError", "OrthoSettings", "load_config"]


class ConfigError(Exception):
    """The config file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class OrthoSettings:
    direction: Direction
    lambdas: tuple[float, ...]
    mc_n: int
    theta: float | None  # None: use the simulator's true coefficient
    seed: int
    fd_step: float = 1e-3


@dataclass(frozen=True)
class AppConfig:
    dgp: PlrDgpConfig | None
    rule_t: ScalingRule
    rule_y: ScalingRule
    train: TrainConfig
    level: float
    bandwidth: int | None
    replications: int
    n_grid: tuple[int, ...]
    base_seed: int
    oracle_nuisances: bool
    dataset: str | None
    ortho: OrthoSettings | None

    def experiment(self) -> ExperimentConfig:
        if self.dgp is None:
            raise ConfigError("this command needs a [dgp] section")
        return ExperimentConfig(
            dgp=self.dgp,
            rule_t=self.rule_t,
            rule_y=self.rule_y,
            train=self.train,
            level=self.level,
            bandwidth=self.bandwidth,
            replications=self.replications,
            n_grid=self.n_grid,
            base_seed=self.base_seed,
            oracle_nuisances=self.oracle_nuisances,
        )


_KNOWN_KEYS = {
    "dgp": {
        "theta0",
        "f0t",
        "g0",
        "rho_x",
        "noise_sd_u",
        "noise_sd_v",
        "n",
        "d",
        "burn_in",
        "seed",
        "noise_dist_u",
    },
    "rules": {
        "smoothness_t",
        "smoothness_y",
        "bound_rate",
        "c_depth",
        "c_width",
        "c_bound",
    },
    "train": {
        "epochs",
        "batch",
        "step_size",
        "restarts",
        "seed",
        "stop_tol",
        "stop_patience",
    },
    "inference": {"level", "bandwidth"},
    "study": {"replications", "n_grid", "base_seed", "oracle_nuisances"},
    "data": {"dataset"},
    "ortho": {"h_treat", "h_out", "lambdas", "mc_n", "theta", "seed", "fd_step"},
}


def _check_keys(parser: configparser.ConfigParser) -> None:
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")


def _get(parser, section, key, conv, default):
    if not parser.has_section(section) or key not in parser[section]:
        return default
    raw = parser[section][key]
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for [{section}] {key} = {raw!r}: {exc}") from exc


def _bool(raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _int_list(raw: str) -> tuple[int, ...]:
    return tuple(int(v.strip()) for v in raw.split(",") if v.strip())


def _float_list(raw: str) -> tuple[float, ...]:
    return tuple(float(v.strip()) for v in raw.split(",") if v.strip())


def load_config(path) -> AppConfig:
    """Read and validate a config file; raises ConfigError on any problem."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config file {path}: {exc}") from exc
    _check_keys(parser)

    dgp = None
    if parser.has_section("dgp"):
        if "theta0" not in parser["dgp"]:
            raise ConfigError("[dgp] requires theta0")
        try:
            dgp = PlrDgpConfig(
                theta0=_get(parser, "dgp", "theta0", float, 0.0),
                f0t=_get(parser, "dgp", "f0t", parse_function, parse_function("tanh_scaled(scale=0.8)")),
                g0=_get(parser, "dgp", "g0", parse_function, parse_function("sin")),
                rho_x=_get(parser, "dgp", "rho_x", float, 0.5),
                noise_sd_u=_get(parser, "dgp", "noise_sd_u", float, 0.5),
                noise_sd_v=_get(parser, "dgp", "noise_sd_v", float, 0.5),
                n=_get(parser, "dgp", "n", int, 1000),
                d=_get(parser, "dgp", "d", int, 1),
                burn_in=_get(parser, "dgp", "burn_in", int, 500),
                seed=_get(parser, "dgp", "seed", int, 0),
                noise_dist_u=_get(parser, "dgp", "noise_dist_u", str, "gaussian"),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid [dgp] settings: {exc}") from exc

    d = dgp.d if dgp is not None else _get(parser, "dgp", "d", int, 1)
    try:
        common = dict(
            input_dim=d,
            c_depth=_get(parser, "rules", "c_depth", float, 1.0),
            c_width=_get(parser, "rules", "c_width", float, 1.0),
            c_bound=_get(parser, "rules", "c_bound", float, 1.0),
        )
        rule_t = ScalingRule(
            smoothness=_get(parser, "rules", "smoothness_t", int, 2),
            role="treatment",
            **common,
        )
        rule_y = ScalingRule(
            smoothness=_get(parser, "rules", "smoothness_y", int, 2),
            bound_rate=_get(parser, "rules", "bound_rate", float, 0.0),
            role="outcome",
            **common,
        )
        train = TrainConfig(
            epochs=_get(parser, "train", "epochs", int, 200),
            batch_size=_get(parser, "train", "batch", int, 64),
            step_size=_get(parser, "train", "step_size", float, 1e-3),
            restarts=_get(parser, "train", "restarts", int, 3),
            seed=_get(parser, "train", "seed", int, 0),
            stop_tol=_get(parser, "train", "stop_tol", float, 1e-9),
            stop_patience=_get(parser, "train", "stop_patience", int, 10),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid rule/train settings: {exc}") from exc

    level = _get(parser, "inference", "level", float, 0.95)
    bandwidth = _get(parser, "inference", "bandwidth", int, None)
    if not 0.0 < level < 1.0:
        raise ConfigError("inference level must lie strictly between 0 and 1")

    ortho = None
    if parser.has_section("ortho"):
        try:
            direction = Direction(
                h_treat=_get(parser, "ortho", "h_treat", parse_function, parse_function("zero")),
                h_out=_get(parser, "ortho", "h_out", parse_function, parse_function("zero")),
            )
            ortho = OrthoSettings(
                direction=direction,
                lambdas=_get(
                    parser, "ortho", "lambdas", _float_list,
                    (-0.2, -0.1, -0.05, 0.05, 0.1, 0.2),
                ),
                mc_n=_get(parser, "ortho", "mc_n", int, 100_000),
                theta=_get(parser, "ortho", "theta", float, None),
                seed=_get(parser, "ortho", "seed", int, 0),
                fd_step=_get(parser, "ortho", "fd_step", float, 1e-3),
            )
        except ValueError as exc:
            raise ConfigError(f"invalid [ortho] settings: {exc}") from exc

    try:
        return AppConfig(
            dgp=dgp,
            rule_t=rule_t,
            rule_y=rule_y,
            train=train,
            level=level,
            bandwidth=bandwidth,
            replications=_get(parser, "study", "replications", int, 1),
            n_grid=_get(parser, "study", "n_grid", _int_list, (1000,)),
            base_seed=_get(parser, "study", "base_seed", int, 0),
            oracle_nuisances=_get(parser, "study", "oracle_nuisances", _bool, False),
            dataset=_get(parser, "data", "dataset", str, None),
            ortho=ortho,
        )
    except ValueError as exc:
        raise ConfigError(f"invalid study settings: {exc}") from exc
