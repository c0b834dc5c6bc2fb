"""Run configuration: YAML/JSON text with explicit sections, validated on load.

Every error names the offending key.  ``RunConfig.to_dict()`` is the resolved
form stored in run.json; feeding that file back reproduces the run.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError, DimensionError
from .lp_analysis import DyadicPartition, FNNorm, NormParams, theorem_violations
from .spectral_core import Grid, SpectralField, read_snapshot
from .symbols import CouplingSymbol, builtin_symbol

DEFAULTS = {
    "seed": 0,
    "model": {"n": 2, "gamma": 0.8, "kappa": 1.0},
    "symbol": {"name": "gsqg", "beta": 0.5},
    "grid": {"N": 128, "L": 2 * math.pi},
    "norm": {"p": 4.0, "mu": 1.0, "q": math.inf, "s": "auto", "stride": 4, "strict": True},
    "time": {"T": 1.0, "dt": 1e-3, "scheme": "etd_rk2", "dealias": True, "record_every": 10,
             "snapshot_every": 0},
    "picard": {"enabled": False, "nodes": 32, "node_kind": "cubic", "max_iter": 60, "rel_tol": 1e-10, "interp": "linear",
               "epsilon": "auto", "K_bound": "auto", "theorem_mode": True},
    "estimate_k": {"trials": 20},
    "ic": {"type": "truncated_homogeneous", "delta": 1.0, "R1": "auto", "mode": "lowpass", "angular": 0.0,
           "scale_to_epsilon": None},
    "perturbation": None,
    "selfsim": {"pairs": [[0.05, 1], [0.1, 1]], "band": [3.0, 12.0], "allow_nonhomogeneous": False},
    "stability": {"T": "auto", "fraction": 0.1, "ratio_bound": 10.0, "nodes": 24},
    "output": {"directory": "runs"},
}

IC_KEYS = {
    "truncated_homogeneous": {"type", "delta", "R1", "mode", "angular", "scale_to_epsilon"},
    "gaussian": {"type", "amplitude", "width", "center", "zero_mean", "scale_to_epsilon"},
    "single_mode": {"type", "k", "amplitude", "scale_to_epsilon"},
    "file": {"type", "path", "scale_to_epsilon"},
}
IC_DEFAULTS = {
    "gaussian": {"amplitude": 1.0, "width": 0.3, "center": None, "zero_mean": True},
    "single_mode": {"k": [1], "amplitude": 1.0},
}


def _number(section: str, key: str, value, allow=()):
    if isinstance(value, str):
        v = value.strip().lower()
        if v in allow:
            return v
        if v in ("inf", "+inf", "infinity"):
            return math.inf
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{section}.{key} must be a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{section}.{key} must be a number, got {value!r}")
    return float(value)


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        where = f"{path}{k}"
        if k not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[k], dict) and k not in ("ic", "perturbation", "symbol"):
            if not isinstance(v, dict):
                raise ConfigError(f"config key {where!r} must be a section")
            out[k] = _merge(base[k], v, where + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_text(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as err:
        raise ConfigError(f"cannot parse config {path}: {err}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must contain a mapping")
    # a saved run.json carries the resolved config under params.config
    if "params" in data and isinstance(data["params"], dict) and "config" in data["params"]:
        data = data["params"]["config"]
    return data


@dataclass
class RunConfig:
    data: dict
    source: str | None = None

    @classmethod
    def from_dict(cls, raw: dict, source: str | None = None) -> "RunConfig":
        merged = _merge(DEFAULTS, raw)
        cfg = cls(merged, source)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path, seed: int | None = None) -> "RunConfig":
        raw = load_text(path)
        if seed is not None:
            raw = dict(raw, seed=seed)
        return cls.from_dict(raw, str(path))

    # ------------------------------------------------------------------
    def validate(self) -> None:
        d = self.data
        m = d["model"]
        if m["n"] not in (1, 2, 3):
            raise DimensionError(f"model.n must be 1, 2 or 3, got {m['n']}")
        m["gamma"] = _number("model", "gamma", m["gamma"])
        if not m["gamma"] > 0.5:
            raise ConfigError(f"model.gamma must exceed 1/2, got {m['gamma']}")
        if _number("model", "kappa", m["kappa"]) != 1.0:
            raise ConfigError("model.kappa is fixed to 1")
        if not isinstance(d["seed"], int) or isinstance(d["seed"], bool):
            raise ConfigError(f"seed must be an integer, got {d['seed']!r}")
        g = d["grid"]
        g["L"] = _number("grid", "L", g["L"])
        self.grid  # noqa: B018  (constructs and validates)
        nm = d["norm"]
        for k in ("p", "mu", "q"):
            nm[k] = _number("norm", k, nm[k])
        nm["s"] = _number("norm", "s", nm["s"], allow=("auto",))
        if not isinstance(nm["stride"], int) or nm["stride"] < 1:
            raise ConfigError(f"norm.stride must be a positive integer, got {nm['stride']!r}")
        t = d["time"]
        for k in ("T", "dt"):
            t[k] = _number("time", k, t[k])
        pc = d["picard"]
        for k in ("epsilon", "K_bound"):
            pc[k] = _number("picard", k, pc[k], allow=("auto",))
        if pc["interp"] not in ("constant", "linear"):
            raise ConfigError(f"picard.interp must be constant or linear, got {pc['interp']!r}")
        for section in ("ic", "perturbation"):
            if d[section] is not None:
                d[section] = self._check_ic(section, d[section])
        self.symbol  # noqa: B018
        self.norm_params  # noqa: B018

    def _check_ic(self, section: str, ic: dict) -> dict:
        if not isinstance(ic, dict) or "type" not in ic:
            raise ConfigError(f"{section}.type is required")
        kind = ic["type"]
        if kind not in IC_KEYS:
            raise ConfigError(f"{section}.type={kind!r} unknown; choose from {sorted(IC_KEYS)}")
        extra = set(ic) - IC_KEYS[kind]
        if extra:
            raise ConfigError(f"unknown config key {section}.{sorted(extra)[0]} for {section}.type={kind}")
        base = dict(DEFAULTS["ic"]) if kind == "truncated_homogeneous" else {"scale_to_epsilon": None}
        base = {k: v for k, v in base.items() if k in IC_KEYS[kind]}
        base.update(IC_DEFAULTS.get(kind, {}))
        base.update(ic)
        return base

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    # ------------------------------------------------------------------
    @property
    def n(self) -> int:
        return self.data["model"]["n"]

    @property
    def gamma(self) -> float:
        return self.data["model"]["gamma"]

    @property
    def seed(self) -> int:
        return self.data["seed"]

    @cached_property
    def grid(self) -> Grid:
        g = self.data["grid"]
        try:
            return Grid(self.n, int(g["N"]), g["L"])
        except ConfigError as err:
            raise type(err)(f"grid: {err}") from None

    @cached_property
    def symbol(self) -> CouplingSymbol:
        s = dict(self.data["symbol"])
        name = s.pop("name", None)
        if name is None:
            raise ConfigError("symbol.name is required")
        if name == "custom":
            paths = s.pop("paths", None)
            if not paths or len(paths) != self.n:
                raise ConfigError(f"symbol.paths must list {self.n} snapshot files for symbol.name=custom")
            base = Path(self.source).parent if self.source else Path(".")
            comps = []
            for p in paths:
                f, _ = read_snapshot(base / p)
                if f.grid != self.grid:
                    raise DimensionError(f"symbol.paths entry {p} is on {f.grid}, config grid is {self.grid}")
                comps.append(f.coeffs)
            s["values"] = np.stack(comps)
        return builtin_symbol(name, s, n=self.n, grid=self.grid)

    @property
    def beta(self) -> float:
        return self.symbol.beta

    @cached_property
    def norm_params(self) -> NormParams:
        nm = self.data["norm"]
        if nm["s"] == "auto":
            bad = theorem_violations(self.n, self.gamma, self.beta, nm["p"], nm["mu"])
            if bad and nm["strict"]:
                raise ConfigError("norm.s=auto: parameters outside the admissible region: " + "; ".join(bad))
            return NormParams.theorem(self.n, self.gamma, self.beta, nm["p"], nm["mu"], nm["q"], strict=False)
        return NormParams(nm["p"], nm["mu"], nm["q"], nm["s"])

    @cached_property
    def partition(self) -> DyadicPartition:
        return DyadicPartition(self.grid)

    @cached_property
    def norm(self) -> FNNorm:
        return FNNorm(self.partition, self.norm_params, self.data["norm"]["stride"])

    # ------------------------------------------------------------------
    def build_field(self, section: str = "ic") -> SpectralField:
        from . import experiments as ex  # local import: experiments depends on solver

        ic = self.data[section]
        if ic is None:
            raise ConfigError(f"config section {section!r} is required for this command")
        grid, kind = self.grid, ic["type"]
        if kind == "truncated_homogeneous":
            R = 0.6 * grid.nyquist if ic["R1"] == "auto" else _number(section, "R1", ic["R1"])
            try:
                f = ex.make_truncated_homogeneous_data(
                    _number(section, "delta", ic["delta"]), R, ic["mode"], grid, self.gamma, self.beta,
                    _number(section, "angular", ic["angular"]),
                )
            except ConfigError as err:
                raise ConfigError(str(err).replace("ic.", f"{section}.")) from None
        elif kind == "gaussian":
            f = ex.gaussian_bump(grid, _number(section, "amplitude", ic["amplitude"]),
                                 _number(section, "width", ic["width"]), ic["center"], bool(ic["zero_mean"]))
        elif kind == "single_mode":
            k = list(ic["k"])
            if len(k) != self.n:
                raise DimensionError(f"{section}.k needs {self.n} integer components, got {k}")
            f = ex.single_mode(grid, k, _number(section, "amplitude", ic["amplitude"]))
        else:
            base = Path(self.source).parent if self.source else Path(".")
            f, _ = read_snapshot(base / ic["path"])
            if f.grid != grid:
                raise DimensionError(f"{section}.path snapshot is on {f.grid}, config grid is {grid}")
            f = SpectralField(grid, f.coeffs, 0.0)
        frac = ic.get("scale_to_epsilon")
        if frac is not None:
            frac = _number(section, "scale_to_epsilon", frac)
            f = ex.scale_to_norm(f, self.norm, frac * self.epsilon_and_K()[0])
        return f

    def initial_data(self) -> SpectralField:
        return self.build_field("ic")

    def perturbed_data(self) -> SpectralField:
        return self.initial_data() + self.build_field("perturbation")

    def estimate_K(self, trials: int | None = None) -> dict:
        from .experiments import estimate_K

        trials = self.data["estimate_k"]["trials"] if trials is None else trials
        key = ("K", trials)
        cache = self.__dict__.setdefault("_k_cache", {})
        if key not in cache:
            cache[key] = estimate_K(self.symbol, self.gamma, self.norm_params, trials, self.seed, self.grid,
                                    self.data["norm"]["stride"], self.data["time"]["dealias"])
        return cache[key]

    def epsilon_and_K(self) -> tuple[float, float]:
        pc = self.data["picard"]
        K = pc["K_bound"]
        if K == "auto":
            K = self.estimate_K()["K_est"]
        eps = pc["epsilon"]
        if eps == "auto":
            eps = 0.2 / (4 * K) if K > 0 else 1.0
        return float(eps), float(K)
