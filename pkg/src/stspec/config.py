"""Run configuration: a single YAML file in reduced units.

Lengths are quoted in units of the block period L0, times in units of the
model correlation time t_c, wavenumbers in units of k_d = 2 pi / L0 and
frequencies in units of 2 pi / t_c.  The loader validates every section up
front and converts to internal (absolute) units.

Sections::

    model:    type, nu_s, nu_t, xc, tc, ks, ws
    register: positions (units of L0)  |  kind, N0, gamma, sigma, seed
    sweep:    k0 [k_d], omega0 [2 pi / t_c], ns {min,max}, nt {min,max},
              m_c, l_c, strategy, cond_limit
    engine:   method, realizations, seed, m_max, l_max,
              fit_min_points, fit_threshold
    schedule: omega_p [2 pi / t_c], k_p [k_d], nt      (for `stspec schedule`)
    output:   dir
"""

import dataclasses
import hashlib
import json

import numpy as np
import yaml

from .errors import ConfigError
from .register import RegisterLayout, make_layout
from .spectra import LorentzianFactorizedModel

__all__ = ["RunConfig", "load_config", "parse_config", "config_hash"]

TWO_PI = 2.0 * np.pi


def config_hash(raw):
    """Short stable hash of the raw configuration mapping."""
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:12]


def _require(section, key, path, types=None):
    if key not in section:
        raise ConfigError(f"missing required key {path}.{key}")
    value = section[key]
    if types is not None and not isinstance(value, types):
        raise ConfigError(f"{path}.{key} has invalid type {type(value).__name__}")
    return value


def _positive(value, path):
    if not (isinstance(value, (int, float)) and np.isfinite(value) and value > 0):
        raise ConfigError(f"{path} must be a positive finite number")
    return float(value)


def _int_range(section, path):
    lo = _require(section, "min", path, int)
    hi = _require(section, "max", path, int)
    if lo < 1 or hi < lo:
        raise ConfigError(f"{path} must satisfy 1 <= min <= max")
    return list(range(lo, hi + 1))


@dataclasses.dataclass(frozen=True)
class RunConfig:
    """Validated configuration with physical quantities in internal units."""

    raw: dict
    hash: str
    model: LorentzianFactorizedModel
    layout: RegisterLayout
    k0_values: tuple          # physical wavenumbers
    omega0_values: tuple      # physical angular frequencies
    ns_values: tuple
    nt_values: tuple
    m_c: int
    l_c: int
    strategy: str
    cond_limit: float
    method: str
    realizations: int
    seed: "int | None"
    m_max: int
    l_max: int
    fit_min_points: int
    fit_threshold: float
    schedule: "dict | None"
    output_dir: str

    @property
    def kd(self):
        return self.layout.kd

    @property
    def tc(self):
        return self.model.tc

    def groups(self):
        """Primary settings (index, k0, omega0) in physical units."""
        out = []
        gi = 0
        for k0 in self.k0_values:
            for w0 in self.omega0_values:
                out.append((gi, k0, w0))
                gi += 1
        return out

    def harmonic_settings(self, k0, omega0):
        """Filter settings (m, l, k_p, omega_p) the sweep requires for one
        primary pair: omega_p = m omega0, k_p = m (k0 + l k_d)."""
        out = []
        for m in range(1, self.m_c + 1, 2):
            for l in range(0, self.l_c + 1):
                out.append((m, l, m * (k0 + l * self.kd), m * omega0))
        return out


def parse_config(raw):
    """Validate a configuration mapping and build the run objects."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration root must be a mapping")

    model_sec = _require(raw, "model", "", dict)
    mtype = _require(model_sec, "type", "model", str)
    if mtype != "lorentzian":
        raise ConfigError(f"model.type {mtype!r} is not supported "
                          "(expected 'lorentzian')")
    tc = _positive(_require(model_sec, "tc", "model"), "model.tc")
    xc = _positive(_require(model_sec, "xc", "model"), "model.xc")

    register_sec = _require(raw, "register", "", dict)
    period = float(register_sec.get("period", 1.0))
    if period <= 0:
        raise ConfigError("register.period must be positive")
    kd = TWO_PI / period

    try:
        model = LorentzianFactorizedModel(
            nu_s=float(model_sec.get("nu_s", 1.0)),
            nu_t=float(model_sec.get("nu_t", 1.0)),
            xc=xc * period,
            tc=tc,
            ks=float(_require(model_sec, "ks", "model")) * kd,
            ws=float(_require(model_sec, "ws", "model")) * TWO_PI / tc,
        )
    except Exception as err:
        raise ConfigError(f"invalid model parameters: {err}") from err

    try:
        if "positions" in register_sec:
            positions = [float(p) * period for p in register_sec["positions"]]
            layout = RegisterLayout(tuple(positions), period)
        else:
            kind = _require(register_sec, "kind", "register", str)
            layout = make_layout(
                kind, _require(register_sec, "N0", "register", int), period,
                gamma=register_sec.get("gamma"),
                sigma=(register_sec.get("sigma") * period
                       if register_sec.get("sigma") is not None else None),
                seed=register_sec.get("seed"))
    except ConfigError:
        raise
    except Exception as err:
        raise ConfigError(f"invalid register section: {err}") from err

    sweep = _require(raw, "sweep", "", dict)
    k0_list = _require(sweep, "k0", "sweep", list)
    w0_list = _require(sweep, "omega0", "sweep", list)
    if not k0_list or not w0_list:
        raise ConfigError("sweep.k0 and sweep.omega0 must be non-empty lists")
    k0_values = tuple(float(v) * kd for v in k0_list)
    omega0_values = tuple(_positive(v, "sweep.omega0") * TWO_PI / tc
                          for v in w0_list)
    for v in k0_values:
        if v < 0:
            raise ConfigError("sweep.k0 entries must be non-negative")
    ns_values = tuple(_int_range(_require(sweep, "ns", "sweep", dict), "sweep.ns"))
    nt_values = tuple(_int_range(_require(sweep, "nt", "sweep", dict), "sweep.nt"))
    m_c = _require(sweep, "m_c", "sweep", int)
    if m_c < 1 or m_c % 2 == 0:
        raise ConfigError("sweep.m_c must be a positive odd integer")
    l_c = _require(sweep, "l_c", "sweep", int)
    if l_c < 0:
        raise ConfigError("sweep.l_c must be non-negative")
    strategy = sweep.get("strategy", "centered")
    if strategy not in ("centered", "largest_weights"):
        raise ConfigError(f"unknown sweep.strategy {strategy!r}")
    cond_limit = float(sweep.get("cond_limit", 1e8))

    engine = raw.get("engine", {})
    method = engine.get("method", "quadrature")
    if method not in ("quadrature", "monte_carlo"):
        raise ConfigError(f"unknown engine.method {method!r}")
    seed = engine.get("seed")
    if method == "monte_carlo" and seed is None:
        raise ConfigError("engine.seed is mandatory for monte_carlo runs")
    realizations = int(engine.get("realizations", 10000))

    schedule_sec = raw.get("schedule")
    if schedule_sec is not None:
        schedule_sec = {
            "omega_p": _positive(_require(schedule_sec, "omega_p", "schedule"),
                                 "schedule.omega_p") * TWO_PI / tc,
            "k_p": float(_require(schedule_sec, "k_p", "schedule")) * kd,
            "nt": _require(schedule_sec, "nt", "schedule", int),
        }

    output = raw.get("output", {})
    return RunConfig(
        raw=raw, hash=config_hash(raw), model=model, layout=layout,
        k0_values=k0_values, omega0_values=omega0_values,
        ns_values=ns_values, nt_values=nt_values,
        m_c=m_c, l_c=l_c, strategy=strategy, cond_limit=cond_limit,
        method=method, realizations=realizations,
        seed=None if seed is None else int(seed),
        m_max=int(engine.get("m_max", 41)),
        l_max=int(engine.get("l_max", 200)),
        fit_min_points=int(engine.get("fit_min_points", 4)),
        fit_threshold=float(engine.get("fit_threshold", 1e-4)),
        schedule=schedule_sec,
        output_dir=str(output.get("dir", "out")),
    )


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError as err:
        raise ConfigError(f"configuration file not found: {path}") from err
    except yaml.YAMLError as err:
        raise ConfigError(f"configuration is not valid YAML: {err}") from err
    return parse_config(raw)
