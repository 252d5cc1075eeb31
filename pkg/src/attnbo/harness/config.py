"""Experiment configuration: a YAML (or JSON) file with four sections.

Schema::

    objective:
      name: exemplar1d | twin | twin-noisefree
      days_train: 2        # twin only
      days_test: 3         # twin only
      noise_seed: 0        # twin only
    bbo:
      n_init: 1000
      rounds: 200
      batch_size: 5
      n_targets: 5000
      delta: 0.01
      beta: 3.0
      no_target_penalization: false
      no_retrain: false
      seed: 0
      scramble_init: true
    anp:
      initial: {steps: 5000, lr: 1.0e-5, milestones: [[1000, 2], [2500, 5]], minibatch: 32}
      round:   {steps: 750,  lr: 5.0e-5, milestones: [[250, 2], [500, 5]],   minibatch: 32}
      set_sizes: [8, 64]
    output:
      dir: runs
      workers: 1
      repeats: 3

Every key is optional; omitted keys take the defaults above.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from ..anp.train import INITIAL_SCHEDULE, ROUND_SCHEDULE, TrainingSchedule
from ..bbo.engine import BboConfig
from ..errors import ConfigurationError

OBJECTIVES = ("exemplar1d", "twin", "twin-noisefree")

_BBO_KEYS = {
    "n_init": int,
    "rounds": int,
    "batch_size": int,
    "n_targets": int,
    "delta": float,
    "beta": float,
    "no_target_penalization": bool,
    "no_retrain": bool,
    "seed": int,
    "scramble_init": bool,
}
_SCHEDULE_KEYS = {"steps": int, "lr": float, "milestones": list, "minibatch": int}
_OBJECTIVE_KEYS = {"name": str, "days_train": int, "days_test": int, "noise_seed": int}
_OUTPUT_KEYS = {"dir": str, "workers": int, "repeats": int}


class ConfigError(ConfigurationError):
    """Invalid configuration; ``problems`` lists one message per bad field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass(frozen=True)
class ObjectiveSpec:
    name: str = "exemplar1d"
    days_train: int = 2
    days_test: int = 3
    noise_seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    bbo: BboConfig = field(default_factory=BboConfig)
    out_dir: str = "runs"
    workers: int = 1
    repeats: int = 3

    def with_seed(self, seed):
        return dataclasses.replace(self, bbo=self.bbo.with_(seed=int(seed)))

    def as_dict(self):
        bbo = self.bbo.as_dict()
        anp = {
            "initial": bbo.pop("initial_schedule"),
            "round": bbo.pop("round_schedule"),
            "set_sizes": bbo.pop("set_sizes"),
        }
        return {
            "objective": dataclasses.asdict(self.objective),
            "bbo": bbo,
            "anp": anp,
            "output": {"dir": self.out_dir, "workers": self.workers, "repeats": self.repeats},
        }


def _typed(section, key, value, kind, problems):
    """Coerce ``value`` to ``kind`` or record a diagnostic and return None."""
    where = f"{section}.{key}"
    if kind is bool:
        if isinstance(value, bool):
            return value
        problems.append(f"{where}: expected true/false, got {value!r}")
    elif kind is int:
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        problems.append(f"{where}: expected an integer, got {value!r}")
    elif kind is float:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        try:  # yaml reads "1e-5" (no dot) as a string
            return float(value)
        except (TypeError, ValueError):
            problems.append(f"{where}: expected a number, got {value!r}")
    elif kind is str:
        if isinstance(value, str):
            return value
        problems.append(f"{where}: expected a string, got {value!r}")
    elif kind is list:
        if isinstance(value, (list, tuple)):
            return list(value)
        problems.append(f"{where}: expected a list, got {value!r}")
    return None


def _section(raw, name, keys, problems):
    block = raw.get(name) or {}
    if not isinstance(block, dict):
        problems.append(f"{name}: expected a mapping")
        return {}
    out = {}
    for key, value in block.items():
        if key not in keys:
            problems.append(f"{name}.{key}: unknown key")
            continue
        v = _typed(name, key, value, keys[key], problems)
        if v is not None:
            out[key] = v
    return out


def _schedule(raw, name, default, problems):
    where = f"anp.{name}"
    block = raw.get(name)
    if block is None:
        return default
    if not isinstance(block, dict):
        problems.append(f"{where}: expected a mapping")
        return default
    values = {}
    for key, value in block.items():
        if key not in _SCHEDULE_KEYS:
            problems.append(f"{where}.{key}: unknown key")
            continue
        v = _typed(where, key, value, _SCHEDULE_KEYS[key], problems)
        if v is not None:
            values[key] = v
    merged = dataclasses.asdict(default) | values
    if not merged["steps"] >= 0:
        problems.append(f"{where}.steps: must be >= 0")
    if not merged["lr"] > 0:
        problems.append(f"{where}.lr: must be > 0")
    if not merged["minibatch"] >= 1:
        problems.append(f"{where}.minibatch: must be >= 1")
    try:
        return TrainingSchedule(**merged)
    except (ConfigurationError, TypeError, ValueError) as exc:
        problems.append(f"{where}: {exc}")
        return default


def parse_config(raw):
    """Build an :class:`ExperimentConfig` from a parsed mapping.

    All problems are collected before raising so that one pass reports
    every bad field.
    """
    problems = []
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(["top level: expected a mapping"])
    for key in raw:
        if key not in ("objective", "bbo", "anp", "output"):
            problems.append(f"{key}: unknown section")

    obj = _section(raw, "objective", _OBJECTIVE_KEYS, problems)
    if obj.get("name", "exemplar1d") not in OBJECTIVES:
        problems.append(f"objective.name: must be one of {', '.join(OBJECTIVES)}, got {obj['name']!r}")
    if obj.get("days_train", 2) < 1:
        problems.append("objective.days_train: must be >= 1")
    if obj.get("days_test", 3) < 0:
        problems.append("objective.days_test: must be >= 0")

    bbo = _section(raw, "bbo", _BBO_KEYS, problems)
    for key in ("n_init", "rounds", "batch_size", "n_targets"):
        if key in bbo and bbo[key] < 1:
            problems.append(f"bbo.{key}: must be >= 1")
    if "delta" in bbo and not bbo["delta"] > 0:
        problems.append("bbo.delta: must be > 0")
    if "beta" in bbo and not bbo["beta"] >= 0:
        problems.append("bbo.beta: must be >= 0")

    anp_raw = raw.get("anp") or {}
    if not isinstance(anp_raw, dict):
        problems.append("anp: expected a mapping")
        anp_raw = {}
    for key in anp_raw:
        if key not in ("initial", "round", "set_sizes"):
            problems.append(f"anp.{key}: unknown key")
    initial = _schedule(anp_raw, "initial", INITIAL_SCHEDULE, problems)
    rnd = _schedule(anp_raw, "round", ROUND_SCHEDULE, problems)
    set_sizes = anp_raw.get("set_sizes", [8, 64])
    if not (
        isinstance(set_sizes, (list, tuple))
        and len(set_sizes) == 2
        and all(isinstance(s, int) and not isinstance(s, bool) for s in set_sizes)
        and 1 <= set_sizes[0] <= set_sizes[1]
    ):
        problems.append(f"anp.set_sizes: expected [min, max] with 1 <= min <= max, got {set_sizes!r}")
        set_sizes = [8, 64]

    out = _section(raw, "output", _OUTPUT_KEYS, problems)
    if out.get("workers", 1) < 1:
        problems.append("output.workers: must be >= 1")
    if out.get("repeats", 3) < 1:
        problems.append("output.repeats: must be >= 1")

    if problems:
        raise ConfigError(problems)
    bbo_cfg = BboConfig(initial_schedule=initial, round_schedule=rnd, set_sizes=tuple(set_sizes), **bbo)
    return ExperimentConfig(
        objective=ObjectiveSpec(**obj),
        bbo=bbo_cfg,
        out_dir=out.get("dir", "runs"),
        workers=out.get("workers", 1),
        repeats=out.get("repeats", 3),
    )


def load_config(path):
    """Read and validate a config file (YAML; JSON parses as YAML too)."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read ({exc.strerror})"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: not valid YAML ({exc})"]) from exc
    return parse_config(raw)


def build_objective(spec):
    """Instantiate the evaluator selected by ``spec``."""
    from ..objectives import ExemplarObjective, make_calibration_objective

    if spec.name == "exemplar1d":
        return ExemplarObjective()
    return make_calibration_objective(
        days_train=spec.days_train,
        seed=spec.noise_seed,
        days_test=spec.days_test,
        noise_free=spec.name == "twin-noisefree",
    )
