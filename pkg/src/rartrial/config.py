"""Run-configuration document: JSON with fixed sections, strict validation.

Unknown keys anywhere are rejected.  Defaults live in the section parsers so
a minimal config only needs a scenario, a spending block, and a seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .allocation import ComparatorConfig
from .outcome import ArmModel, ScenarioSpec, SCENARIO_LABELS, build_scenario
from .posterior import McmcConfig
from .stopping import SPENDING_FUNCTIONS, CalibrationConfig


class ConfigError(ValueError):
    """Schema violation in a run configuration."""


@dataclass(frozen=True)
class SpendingSource:
    name: str
    gamma: float
    boundary_file: str | None
    calibration: CalibrationConfig | None


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioSpec
    total_n: int
    num_stages: int
    delta: float
    hypothesis_r: int
    stage1_exact_split: bool
    rule: str
    comparator: ComparatorConfig
    mcmc: McmcConfig
    spending: SpendingSource
    r_total: int
    seed: int
    out_dir: str
    force: bool


def _take(section: dict, path: str, allowed: dict) -> dict:
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    merged = dict(allowed)
    merged.update(section)
    return merged


def _require(doc: dict, key: str) -> dict:
    if key not in doc:
        raise ConfigError(f"missing required section {key!r}")
    if not isinstance(doc[key], dict):
        raise ConfigError(f"section {key!r} must be an object")
    return doc[key]


def _parse_arm(obj: dict, path: str) -> ArmModel:
    fields = _take(obj, path, {"lambda": None, "omega": None, "mu": None, "sigma2": None})
    for name, val in fields.items():
        if not isinstance(val, (int, float)) or isinstance(val, bool):
            raise ConfigError(f"{path}.{name}: expected a number, got {val!r}")
    try:
        return ArmModel(fields["lambda"], fields["omega"], fields["mu"], fields["sigma2"])
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _parse_scenario(obj: dict) -> ScenarioSpec:
    sec = _take(obj, "scenario", {"name": None, "omega": 0.3, "arms": None})
    name = sec["name"]
    if name in SCENARIO_LABELS:
        try:
            return build_scenario(name, sec["omega"])
        except ValueError as exc:
            raise ConfigError(f"scenario: {exc}") from exc
    if name == "custom":
        if not sec["arms"]:
            raise ConfigError("scenario: custom scenarios need an 'arms' list")
        arms = tuple(_parse_arm(a, f"scenario.arms[{i}]") for i, a in enumerate(sec["arms"]))
        return ScenarioSpec("custom", sec["omega"], arms)
    raise ConfigError(f"scenario.name: {name!r} is not one of "
                      f"{SCENARIO_LABELS + ('custom',)}")


def load_config(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    unknown = set(doc) - {"scenario", "trial", "rule", "mcmc", "spending",
                          "replication", "output"}
    if unknown:
        raise ConfigError(f"unknown top-level sections {sorted(unknown)}")

    scenario = _parse_scenario(_require(doc, "scenario"))

    trial = _take(doc.get("trial", {}), "trial",
                  {"total_n": 2000, "num_stages": 10, "delta": 0.65,
                   "hypothesis_r": 2, "stage1_exact_split": False})

    rule = _take(doc.get("rule", {}), "rule",
                 {"name": "rule3", "cap": 0.8, "suspension_threshold": 0.05})
    if rule["name"] not in ("rule1", "rule2", "rule3", "fr", "ts", "tp"):
        raise ConfigError(f"rule.name: unknown rule {rule['name']!r}")
    try:
        comparator = ComparatorConfig(rule2_cap=rule["cap"],
                                      suspension_threshold=rule["suspension_threshold"])
    except ValueError as exc:
        raise ConfigError(f"rule: {exc}") from exc

    mcmc_sec = _take(doc.get("mcmc", {}), "mcmc",
                     {"iterations": 2000, "burn_in": 500, "thin": 10})
    try:
        mcmc = McmcConfig(**mcmc_sec)
    except ValueError as exc:
        raise ConfigError(f"mcmc: {exc}") from exc

    spend = _take(_require(doc, "spending"), "spending",
                  {"name": None, "gamma": 1.0, "boundary_file": None,
                   "calibrate": None})
    if spend["name"] not in SPENDING_FUNCTIONS:
        raise ConfigError(f"spending.name: expected one of {SPENDING_FUNCTIONS}")
    calibration = None
    if spend["calibrate"] is not None:
        cal = _take(spend["calibrate"], "spending.calibrate",
                    {"n_rep": 10_000, "stage_size": 200, "alpha": 0.025,
                     "null_arm": None})
        if cal["null_arm"] is None:
            raise ConfigError("spending.calibrate: missing null_arm block")
        try:
            calibration = CalibrationConfig(
                null_arm=_parse_arm(cal["null_arm"], "spending.calibrate.null_arm"),
                n_rep=cal["n_rep"],
                stage_size=cal["stage_size"],
                num_stages=trial["num_stages"],
                alpha=cal["alpha"],
                spending=spend["name"],
                power_gamma=spend["gamma"],
                delta=trial["delta"],
            )
        except ValueError as exc:
            raise ConfigError(f"spending.calibrate: {exc}") from exc
    spending = SpendingSource(spend["name"], spend["gamma"],
                              spend["boundary_file"], calibration)

    repl = _take(doc.get("replication", {}), "replication",
                 {"r_total": 1, "seed": 0})
    output = _take(doc.get("output", {}), "output",
                   {"directory": "rartrial-out", "force": False})

    return RunConfig(
        scenario=scenario,
        total_n=trial["total_n"],
        num_stages=trial["num_stages"],
        delta=trial["delta"],
        hypothesis_r=trial["hypothesis_r"],
        stage1_exact_split=trial["stage1_exact_split"],
        rule=rule["name"],
        comparator=comparator,
        mcmc=mcmc,
        spending=spending,
        r_total=repl["r_total"],
        seed=repl["seed"],
        out_dir=output["directory"],
        force=output["force"],
    )
