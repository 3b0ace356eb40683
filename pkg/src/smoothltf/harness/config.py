"""Experiment configuration in TOML.

Schema (every table except ``[data]`` and ``[learn]`` is optional)::

    [experiment]
    name = "majority-rcn"
    seed = 0                # master seed
    test_size = 20000       # fresh samples for the test error

    [data]
    n = 10
    marginal = { kind = "uniform" }
    # marginal = { kind = "product", flip_probs = [0.3, 0.5, ...] }
    # marginal = { kind = "mixture", weights = [0.5, 0.5], components = [[...], [...]] }
    planted = { kind = "majority" }
    # planted = { w = [1.0, 2.0, ...], theta = 0.5 }
    noise = { kind = "rcn", eta = 0.1 }     # kind: none | rcn | boundary (with width)

    [learn]
    degree = 3
    epsilon = 0.1
    delta = 0.1
    N = 5000                # samples per repetition
    # reps = 10             # overrides ceil(4 ln(2/delta) / epsilon)
    # val_size = 2000       # overrides ceil(8 ln(4 r / delta) / epsilon^2)

    [benchmark]
    sigma = 0.02
    mode = "exact"          # or "mc"
    budget = 100000

    [sweep]                 # each list multiplies the grid
    degree = [1, 2, 3]
    # N = [500, 1000]
    # sigma = [0.0, 0.02]
    # seed = [0, 1, 2]
"""

from __future__ import annotations

import copy
import itertools
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..cube import (
    ConfigurationError,
    LabelNoise,
    LinearThresholdFunction,
    MixtureDistribution,
    PlantedDataConfig,
    ProductDistribution,
)
from ..regression import LearnConfig, MonomialBasis

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SWEEP_KEYS = ("degree", "N", "sigma", "seed")


def _table(raw, key, required=False):
    val = raw.get(key, None)
    if val is None:
        if required:
            raise ConfigurationError(f"missing [{key}] table")
        return {}
    if not isinstance(val, dict):
        raise ConfigurationError(f"[{key}] must be a table")
    return val


def _unknown(table, name, allowed):
    extra = set(table) - set(allowed)
    if extra:
        raise ConfigurationError(f"unknown keys in [{name}]: {sorted(extra)}")


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict  # normalized table tree (after defaults)

    @property
    def name(self) -> str:
        return self.raw["experiment"]["name"]

    @property
    def seed(self) -> int:
        return self.raw["experiment"]["seed"]

    def points(self) -> list[dict]:
        """One fully resolved configuration per sweep grid point, in grid order."""
        sweep = self.raw["sweep"]
        keys = [k for k in SWEEP_KEYS if k in sweep]
        out = []
        for values in itertools.product(*(sweep[k] for k in keys)):
            point = copy.deepcopy(self.raw)
            del point["sweep"]
            for k, v in zip(keys, values):
                if k == "degree":
                    point["learn"]["degree"] = v
                elif k == "N":
                    point["learn"]["N"] = v
                elif k == "sigma":
                    point["benchmark"]["sigma"] = v
                else:
                    point["experiment"]["seed"] = v
            point["sweep_point"] = dict(zip(keys, values))
            validate_point(point)
            out.append(point)
        return out


def build_marginal(n: int, spec: dict):
    kind = spec.get("kind", "uniform")
    if kind == "uniform":
        return ProductDistribution.uniform(n)
    if kind == "bitflip":
        return ProductDistribution.bitflip(n, float(spec["sigma"]))
    if kind == "product":
        return ProductDistribution(np.array(spec["flip_probs"], dtype=np.float64))
    if kind == "mixture":
        comps = [ProductDistribution(np.array(c, dtype=np.float64)) for c in spec["components"]]
        return MixtureDistribution(np.array(spec["weights"], dtype=np.float64), tuple(comps))
    raise ConfigurationError(f"unknown marginal kind {kind!r}")


def build_planted(n: int, spec: dict) -> LinearThresholdFunction:
    if spec.get("kind") == "majority":
        return LinearThresholdFunction.majority(n)
    if "w" not in spec:
        raise ConfigurationError("planted needs kind = 'majority' or an explicit w")
    return LinearThresholdFunction(np.array(spec["w"], dtype=np.float64), float(spec.get("theta", 0.0)))


def build_data_config(data: dict) -> PlantedDataConfig:
    n = int(data["n"])
    noise = data.get("noise", {})
    return PlantedDataConfig(n, build_marginal(n, data.get("marginal", {})),
                             build_planted(n, data.get("planted", {"kind": "majority"})),
                             LabelNoise(noise.get("kind", "none"), float(noise.get("eta", 0.0)),
                                        float(noise.get("width", 0.0))))


def build_learn_config(learn: dict) -> LearnConfig:
    return LearnConfig.from_targets(int(learn["degree"]), float(learn["epsilon"]), float(learn["delta"]),
                                    int(learn["N"]), learn.get("reps"), learn.get("val_size"))


def validate_point(point: dict) -> None:
    """Check a resolved point without doing any sampling or fitting."""
    data_cfg = build_data_config(point["data"])
    lc = build_learn_config(point["learn"])
    size = math.fsum(math.comb(data_cfg.n, k) for k in range(min(lc.d, data_cfg.n) + 1))
    if lc.N < size:
        raise ConfigurationError(f"learn.N={lc.N} is below the basis size {int(size)} "
                                 f"(n={data_cfg.n}, degree={lc.d})")
    MonomialBasis(data_cfg.n, lc.d)
    sigma = point["benchmark"]["sigma"]
    if not 0.0 <= sigma <= 1.0:
        raise ConfigurationError("benchmark.sigma must lie in [0, 1]")
    if point["benchmark"]["mode"] not in ("exact", "mc"):
        raise ConfigurationError("benchmark.mode must be 'exact' or 'mc'")


def normalize(raw: dict) -> ExperimentConfig:
    _unknown(raw, "top level", ("experiment", "data", "learn", "benchmark", "sweep"))
    exp = dict(_table(raw, "experiment"))
    _unknown(exp, "experiment", ("name", "seed", "test_size"))
    exp.setdefault("name", "experiment")
    exp.setdefault("seed", 0)
    exp.setdefault("test_size", 20_000)
    if int(exp["seed"]) < 0 or int(exp["test_size"]) < 1:
        raise ConfigurationError("seed must be >= 0 and test_size >= 1")
    data = dict(_table(raw, "data", required=True))
    _unknown(data, "data", ("n", "marginal", "planted", "noise"))
    if "n" not in data:
        raise ConfigurationError("[data] needs n")
    learn = dict(_table(raw, "learn", required=True))
    _unknown(learn, "learn", ("degree", "epsilon", "delta", "N", "reps", "val_size"))
    for key in ("degree", "epsilon", "delta", "N"):
        if key not in learn:
            raise ConfigurationError(f"[learn] needs {key}")
    bench = dict(_table(raw, "benchmark"))
    _unknown(bench, "benchmark", ("sigma", "mode", "budget"))
    bench.setdefault("sigma", 0.0)
    bench.setdefault("mode", "exact")
    bench.setdefault("budget", 100_000)
    sweep = dict(_table(raw, "sweep"))
    _unknown(sweep, "sweep", SWEEP_KEYS)
    for k, v in sweep.items():
        if not isinstance(v, list) or not v:
            raise ConfigurationError(f"sweep.{k} must be a non-empty list")
    cfg = ExperimentConfig({"experiment": exp, "data": data, "learn": learn, "benchmark": bench,
                            "sweep": sweep})
    cfg.points()  # validates every grid point up front
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        raw = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return normalize(raw)
