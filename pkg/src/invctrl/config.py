"""Run configuration: flat key=value sections, schema-checked at startup.

Defaults reproduce the two benchmark studies, so a bare ``--plant`` flag
without a config file runs the full experiment.  A config file only needs
the keys it overrides.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, replace
from typing import Tuple

__all__ = ["ConfigError", "RunConfig", "default_config", "load_config"]


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration (CLI exit code 2)."""


@dataclass
class RunConfig:
    plant: str
    order: int
    delay: int
    kernel_family: str
    sigma_f: float
    sigma_l: Tuple[float, ...]
    lam: float
    lip_f: float
    lip_c: float
    rkhs_bound: float
    eta_mode: str
    gamma_mode: str
    gamma_slope: float
    deltas: Tuple[float, ...]
    depth: int
    initial_conditions: Tuple[Tuple[float, ...], ...]
    horizon: int
    sigma_d: float
    sigma: float
    noisy: bool
    seed: int
    outdir: str

    def validate(self):
        if self.plant not in ("numerical", "pendulum"):
            raise ConfigError(f"unknown plant {self.plant!r}")
        if self.delay not in (1, 2):
            raise ConfigError("delay must be 1 or 2")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.depth < 1:
            raise ConfigError("depth must be >= 1")
        if not self.deltas:
            raise ConfigError("empty accuracy menu")
        if any(d <= 0 for d in self.deltas):
            raise ConfigError("accuracies must be positive")
        if list(self.deltas) != sorted(set(self.deltas)):
            raise ConfigError("accuracies must be strictly ascending")
        if self.lam < 0:
            raise ConfigError("lambda must be >= 0")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.sigma_d < 0 or self.sigma < 0:
            raise ConfigError("noise standard deviations must be >= 0")
        dim = 2 * self.order - 1
        for ic in self.initial_conditions:
            if len(ic) != dim:
                raise ConfigError(
                    f"initial condition {ic} has dimension {len(ic)}, "
                    f"expected {dim}")
        return self


_NUMERICAL = RunConfig(
    plant="numerical",
    order=2,
    delay=1,
    kernel_family="squared_exponential",
    sigma_f=1.0,
    sigma_l=(2.8284271247461903,),  # 2*sqrt(2)
    lam=0.0,
    lip_f=6.5,
    lip_c=0.22,
    rkhs_bound=1.0,
    eta_mode="profile",
    gamma_mode="composed",
    gamma_slope=0.0,
    deltas=(0.1, 0.2, 0.3, 0.4, 0.5, 1.0, 1.5, 2.0, 3.0),
    depth=20,
    initial_conditions=((-1.0, -1.0, 0.0), (-0.5, -0.5, 0.0), (0.0, 0.0, 0.0),
                        (0.5, 0.5, 0.0), (1.0, 1.0, 0.0)),
    horizon=10,
    sigma_d=0.0,
    sigma=0.0,
    noisy=False,
    seed=1,
    outdir="runs/numerical",
)

# Pendulum kernel scales: half the per-dimension standard deviation of the
# noise-free training features (frozen numerically for reproducibility).
_PEND_SIGMA_L = (0.057, 0.058, 0.058, 0.97)

_PENDULUM = RunConfig(
    plant="pendulum",
    order=2,
    delay=2,
    kernel_family="ard_matern52",
    sigma_f=2.0,
    sigma_l=_PEND_SIGMA_L,
    lam=0.0,
    lip_f=3.59,          # closed-form gradient bound of the two-step map
    lip_c=336000.0,      # closed-form gradient bound of the inverse model
    rkhs_bound=20.0,     # safety-scaled interpolant norm estimate (~8.1)
    eta_mode="profile",
    gamma_mode="linear",
    gamma_slope=1.005,
    deltas=(0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.08, 0.1, 0.3, 0.6),
    depth=100,
    initial_conditions=((0.1, 0.1, 0.0), (-0.1, -0.1, 0.0),
                        (0.05, 0.05, 0.0), (-0.05, -0.05, 0.0)),
    horizon=500,
    sigma_d=0.01,
    sigma=0.01,
    noisy=False,
    seed=0,
    outdir="runs/pendulum",
)

# ridge weight used when the pendulum pipeline runs on noisy data
PENDULUM_NOISY_LAM = 0.4


def default_config(plant) -> RunConfig:
    if plant == "numerical":
        return replace(_NUMERICAL)
    if plant == "pendulum":
        return replace(_PENDULUM)
    raise ConfigError(f"unknown plant {plant!r}")


_SCHEMA = {
    "plant": {"id": str, "n": int, "nu": int},
    "kernel": {"family": str, "sigma_f": float, "sigma_l": "floats"},
    "interpolant": {"lambda": float},
    "bounds": {"L_f": float, "L_c": float, "Gamma": float, "eta_mode": str,
               "gamma_mode": str, "gamma_slope": float},
    "levels": {"deltas": "floats", "kappa_bar": int},
    "simulate": {"initial_conditions": "vectors", "horizon": int},
    "noise": {"sigma_d": float, "sigma": float},
    "run": {"seed": int, "out": str},
}

_KEYMAP = {
    ("plant", "id"): "plant", ("plant", "n"): "order", ("plant", "nu"): "delay",
    ("kernel", "family"): "kernel_family", ("kernel", "sigma_f"): "sigma_f",
    ("kernel", "sigma_l"): "sigma_l",
    ("interpolant", "lambda"): "lam",
    ("bounds", "L_f"): "lip_f", ("bounds", "L_c"): "lip_c",
    ("bounds", "Gamma"): "rkhs_bound", ("bounds", "eta_mode"): "eta_mode",
    ("bounds", "gamma_mode"): "gamma_mode",
    ("bounds", "gamma_slope"): "gamma_slope",
    ("levels", "deltas"): "deltas", ("levels", "kappa_bar"): "depth",
    ("simulate", "initial_conditions"): "initial_conditions",
    ("simulate", "horizon"): "horizon",
    ("noise", "sigma_d"): "sigma_d", ("noise", "sigma"): "sigma",
    ("run", "seed"): "seed", ("run", "out"): "outdir",
}


def _parse_value(kind, raw):
    if kind is str:
        return raw
    if kind is int:
        return int(raw)
    if kind is float:
        return float(raw)
    if kind == "floats":
        return tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())
    if kind == "vectors":
        vecs = []
        for chunk in raw.split(";"):
            chunk = chunk.strip()
            if chunk:
                vecs.append(tuple(float(v) for v in chunk.split(",")))
        return tuple(vecs)
    raise AssertionError(kind)


def load_config(path, base_plant=None) -> RunConfig:
    """Parse a config file on top of the plant defaults.

    The plant id comes from the file's [plant] section or ``base_plant``;
    unknown sections or keys, and type errors, raise ConfigError.
    """
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    plant = base_plant
    if parser.has_option("plant", "id"):
        plant = parser.get("plant", "id")
    if plant is None:
        raise ConfigError("plant id missing (set [plant] id or pass --plant)")
    cfg = default_config(plant)
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            try:
                value = _parse_value(_SCHEMA[section][key], raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc
            setattr(cfg, _KEYMAP[(section, key)], value)
    if isinstance(cfg.sigma_l, float):
        cfg.sigma_l = (cfg.sigma_l,)
    return cfg.validate()
