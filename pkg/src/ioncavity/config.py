"""INI-style run configuration: parsing, validation, canonical echo.

Grammar: UTF-8 ``key = value`` pairs under ``[section]`` headers.
Sections ``run``, ``model``, ``scenario``, ``sweep``, ``scaling`` and
``output`` are recognized, plus ``[curve.<name>]`` sections whose keys
are dotted overrides (``model.kappa``, ``scenario.t_max``) defining
additional curves of a simulate run.  Unknown sections or keys are
rejected with the offending name.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .experiments import INITIAL_STATES, SWEEP_AXES, Engine, Model, Scenario, SweepSpec
from .params import ModelParams, ParameterError
from .reduction import beta_from_target_r1, resonant_laser_detuning


class ConfigParseError(ValueError):
    """Malformed configuration: syntax, unknown key, bad literal."""


class ConfigValidationError(ValueError):
    """Well-formed configuration with out-of-domain values."""


_MODEL_KEYS = {
    "omega_rabi": float,
    "g_cavity": float,
    "gamma_s": float,
    "gamma_d": float,
    "delta_raman": float,
    "kappa": float,
    "delta_laser": "laser",  # float or the literal "resonant"
    "r1": float,
    "beta1": float,
    "beta2": float,
}
_SCENARIO_KEYS = {
    "model": str,
    "engine": str,
    "initial_state": str,
    "t_max": float,
    "n_points": int,
    "n_traj": int,
    "seed": int,
    "n_max": int,
}
_SWEEP_KEYS = {"axis": str, "start": float, "stop": float, "step": float, "values": str}
_SCALING_KEYS = {"delta_min": float, "delta_max": float, "n_points": int}
_OUTPUT_KEYS = {"emit": str, "plot_columns": str}
_RUN_KEYS = {"kind": str, "label": str}

_SECTION_KEYS = {
    "run": _RUN_KEYS,
    "model": _MODEL_KEYS,
    "scenario": _SCENARIO_KEYS,
    "sweep": _SWEEP_KEYS,
    "scaling": _SCALING_KEYS,
    "output": _OUTPUT_KEYS,
}

KINDS = ("simulate", "sweep", "scaling")


@dataclass
class RunConfig:
    """Validated configuration of one command invocation."""

    kind: str
    label: str
    model: dict
    scenario: dict
    sweep: dict = field(default_factory=dict)
    scaling: dict = field(default_factory=dict)
    emit: tuple[str, ...] = ("csv",)
    plot_columns: str = "concurrence"
    curves: list[tuple[str, dict]] = field(default_factory=list)


def _convert(section: str, key: str, raw: str):
    table = _SECTION_KEYS[section]
    if key not in table:
        raise ConfigParseError(f"unknown key {key!r} in section [{section}]")
    conv = table[key]
    raw = raw.strip()
    try:
        if conv == "laser":
            return "resonant" if raw == "resonant" else float(raw)
        if conv is float:
            return float(raw)
        if conv is int:
            return int(raw)
        return raw
    except ValueError as exc:
        raise ConfigParseError(f"bad value for {section}.{key}: {raw!r}") from exc


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigParseError(f"config syntax error: {exc}") from exc

    sections: dict[str, dict] = {}
    curves: list[tuple[str, dict]] = []
    for name in parser.sections():
        if name.startswith("curve."):
            curve_name = name.removeprefix("curve.")
            if not curve_name:
                raise ConfigParseError("empty curve name")
            overrides = {}
            for key, raw in parser.items(name):
                if "." not in key:
                    raise ConfigParseError(
                        f"curve key {key!r} must be section.key, e.g. model.kappa"
                    )
                sec, sub = key.split(".", 1)
                if sec not in ("model", "scenario"):
                    raise ConfigParseError(
                        f"curve overrides may only touch model/scenario, got {key!r}"
                    )
                overrides[key] = _convert(sec, sub, raw)
            curves.append((curve_name, overrides))
            continue
        if name not in _SECTION_KEYS:
            raise ConfigParseError(f"unknown section [{name}]")
        sections[name] = {
            key: _convert(name, key, raw) for key, raw in parser.items(name)
        }

    run = sections.get("run", {})
    kind = run.get("kind", "simulate")
    if kind not in KINDS:
        raise ConfigParseError(f"unknown run kind {kind!r}")
    config = RunConfig(
        kind=kind,
        label=run.get("label", kind),
        model=sections.get("model", {}),
        scenario=sections.get("scenario", {}),
        sweep=sections.get("sweep", {}),
        scaling=sections.get("scaling", {}),
        curves=curves,
    )
    output = sections.get("output", {})
    if "emit" in output:
        emit = tuple(part.strip() for part in output["emit"].split(",") if part.strip())
        for part in emit:
            if part not in ("csv", "plot"):
                raise ConfigParseError(f"unknown emit target {part!r}")
        config.emit = emit
    config.plot_columns = output.get("plot_columns", "concurrence")
    if config.plot_columns not in ("concurrence", "populations", "coherences", "jumps"):
        raise ConfigParseError(f"unknown plot_columns {config.plot_columns!r}")

    _validate_structure(config)
    return config


def _validate_structure(config: RunConfig) -> None:
    if config.kind == "sweep" and "axis" not in config.sweep:
        raise ConfigValidationError("sweep runs need sweep.axis")
    if config.kind != "simulate" and config.curves:
        raise ConfigValidationError("curve sections are only valid for simulate runs")
    if "r1" in config.model and ("beta1" in config.model or "beta2" in config.model):
        raise ConfigValidationError("give either r1 or beta1/beta2, not both")
    if ("beta1" in config.model) != ("beta2" in config.model):
        raise ConfigValidationError("beta1 and beta2 must be given together")


def build_model_params(model: dict) -> ModelParams:
    """Instantiate the physical parameters, resolving placements and the
    resonant laser detuning."""
    kwargs = {
        k: model[k]
        for k in ("omega_rabi", "g_cavity", "gamma_s", "gamma_d", "delta_raman", "kappa")
        if k in model
    }
    if "r1" in model:
        kwargs["beta"] = beta_from_target_r1(model["r1"])
    elif "beta1" in model:
        kwargs["beta"] = (model["beta1"], model["beta2"])
    delta_laser = model.get("delta_laser", 0.0)
    try:
        params = ModelParams(**kwargs)
        if delta_laser == "resonant":
            params = params.replace(delta_laser=resonant_laser_detuning(params))
        else:
            params = params.replace(delta_laser=delta_laser)
    except ParameterError as exc:
        raise ConfigValidationError(str(exc)) from exc
    return params


def build_scenario(config: RunConfig, name: str | None = None,
                   overrides: dict | None = None) -> Scenario:
    """Scenario from the base config, optionally with curve overrides."""
    model_cfg = dict(config.model)
    scenario_cfg = dict(config.scenario)
    for key, value in (overrides or {}).items():
        section, sub = key.split(".", 1)
        if section == "model":
            model_cfg[sub] = value
        else:
            scenario_cfg[sub] = value
    params = build_model_params(model_cfg)
    try:
        model = Model(scenario_cfg.get("model", "effective"))
        engine = Engine(scenario_cfg.get("engine", "lindblad"))
    except ValueError as exc:
        raise ConfigValidationError(str(exc)) from exc
    initial = scenario_cfg.get("initial_state", "10")
    if initial not in INITIAL_STATES:
        raise ConfigValidationError(f"unknown initial state {initial!r}")
    if "t_max" not in scenario_cfg:
        raise ConfigValidationError("scenario.t_max is required")
    try:
        return Scenario(
            name=name or config.label,
            model=model,
            params=params,
            t_max=scenario_cfg["t_max"],
            initial_state=initial,
            n_points=scenario_cfg.get("n_points", 400),
            engine=engine,
            n_traj=scenario_cfg.get("n_traj", 1000),
            seed=scenario_cfg.get("seed", 0),
            n_max=scenario_cfg.get("n_max", 2),
        )
    except ParameterError as exc:
        raise ConfigValidationError(str(exc)) from exc


def build_sweep(config: RunConfig) -> SweepSpec:
    axis = config.sweep["axis"]
    if axis not in SWEEP_AXES:
        raise ConfigValidationError(f"unknown sweep axis {axis!r}")
    if "values" in config.sweep:
        try:
            values = tuple(
                float(v) for v in config.sweep["values"].split(",") if v.strip()
            )
        except ValueError as exc:
            raise ConfigParseError(f"bad sweep values list: {exc}") from exc
    else:
        for key in ("start", "stop", "step"):
            if key not in config.sweep:
                raise ConfigValidationError(f"sweep.{key} is required without values")
        start, stop, step = (config.sweep[k] for k in ("start", "stop", "step"))
        if step <= 0 or stop < start:
            raise ConfigValidationError("sweep range must have step > 0, stop >= start")
        count = int(round((stop - start) / step)) + 1
        values = tuple(round(start + i * step, 12) for i in range(count))
    resonant = config.model.get("delta_laser") == "resonant"
    if axis == "delta_laser" and resonant:
        raise ConfigValidationError(
            "cannot sweep delta_laser while pinning it to the resonance"
        )
    template = build_scenario(config)
    try:
        return SweepSpec(axis, values, template, resonant_laser=resonant)
    except ParameterError as exc:
        raise ConfigValidationError(str(exc)) from exc


def echo_config(config: RunConfig) -> str:
    """Canonical INI text that reproduces this configuration exactly."""
    lines = ["[run]", f"kind = {config.kind}", f"label = {config.label}", ""]

    def emit_section(name, data, key_order):
        if not data:
            return
        lines.append(f"[{name}]")
        for key in key_order:
            if key in data:
                lines.append(f"{key} = {_format(data[key])}")
        lines.append("")

    emit_section("model", config.model, _MODEL_KEYS)
    emit_section("scenario", config.scenario, _SCENARIO_KEYS)
    emit_section("sweep", config.sweep, _SWEEP_KEYS)
    emit_section("scaling", config.scaling, _SCALING_KEYS)
    lines.append("[output]")
    lines.append(f"emit = {','.join(config.emit)}")
    lines.append(f"plot_columns = {config.plot_columns}")
    lines.append("")
    for name, overrides in config.curves:
        lines.append(f"[curve.{name}]")
        for key in sorted(overrides):
            lines.append(f"{key} = {_format(overrides[key])}")
        lines.append("")
    return "\n".join(lines)


def _format(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)
