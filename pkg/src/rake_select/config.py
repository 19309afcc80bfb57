"""TOML experiment configuration.

Layout (every key optional when a preset supplies it)::

    [scenario]
    preset = "fig3"          # fig3 | fig4 | fig5; other keys override it
    name = "my-run"

    [system]
    K = 5
    L = 15
    M = 5
    N_c = 20
    energies = [1.0, 1.0, 1.0, 1.0, 1.0]   # or one number for all users
    sigma_n2 = 0.01          # or ebn0_db = 20.0 (E1 / sigma_n2 in dB), not both
    decay_lambda = 0.1
    lognormal_sigma2 = 0.5
    seed = 1

    [sweep]
    param = "ebn0_db"        # ebn0_db | M | none
    values = [0, 4, 8]

    [run]
    trials = 500
    selectors = ["conventional", "hybrid_sphere"]
    exhaustive_budget = 2000000

Unknown sections or keys are errors. Overrides of the form ``key=value`` or
``section.key=value`` are applied after the file; bare keys must be unique
across sections.
"""

from __future__ import annotations

import logging
import re
import sys
from typing import Any, Optional, Sequence

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .channel import ConfigError, SystemConfig
from .montecarlo import (
    DEFAULT_TRIALS,
    PRESETS,
    SWEEP_EBN0,
    SWEEP_PARAMS,
    ExperimentPlan,
    sigma_for_ebn0,
)
from .selectors import DEFAULT_BUDGET, SelectorKind

log = logging.getLogger(__name__)

SCHEMA = {
    "scenario": ("preset", "name"),
    "system": ("K", "L", "M", "N_c", "energies", "sigma_n2", "ebn0_db", "decay_lambda", "lognormal_sigma2", "seed"),
    "sweep": ("param", "values"),
    "run": ("trials", "selectors", "exhaustive_budget"),
}

DEFAULTS = {
    ("scenario", "name"): "custom",
    ("system", "decay_lambda"): 0.1,
    ("system", "lognormal_sigma2"): 0.5,
    ("system", "seed"): 1,
    ("sweep", "param"): "none",
    ("sweep", "values"): [],
    ("run", "trials"): DEFAULT_TRIALS,
    ("run", "selectors"): [
        "conventional", "sphere", "hypercube", "hybrid_sphere", "hybrid_hypercube",
    ],
    ("run", "exhaustive_budget"): DEFAULT_BUDGET,
}

_REQUIRED = (("system", "K"), ("system", "L"), ("system", "M"), ("system", "N_c"))


class ConfigParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = "<config>"):
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)
        self.line = line


def _key_lines(text: str) -> dict:
    """Map (section, key) to the 1-based line that sets it."""
    lines, section = {}, None
    for n, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        m = re.match(r"^\[\s*([A-Za-z0-9_\-]+)\s*\]", s)
        if m:
            section = m.group(1)
            lines.setdefault((section, None), n)
            continue
        m = re.match(r"^([A-Za-z0-9_\-]+)\s*=", s)
        if m:
            lines[(section, m.group(1))] = n
    return lines


def _load_toml(text: str, source: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigParseError(f"invalid TOML: {exc}", int(m.group(1)) if m else None, source) from None


def _check_schema(doc: dict, lines: dict, source: str):
    for section, body in doc.items():
        if section not in SCHEMA:
            raise ConfigParseError(
                f"unknown section [{section}]; expected one of {sorted(SCHEMA)}", lines.get((section, None)), source
            )
        if not isinstance(body, dict):
            raise ConfigParseError(f"{section} must be a table", lines.get((None, section)), source)
        for key in body:
            if key not in SCHEMA[section]:
                raise ConfigParseError(
                    f"unknown key {section}.{key}; expected one of {list(SCHEMA[section])}",
                    lines.get((section, key)),
                    source,
                )


def _parse_value(raw: str) -> Any:
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_override(values: dict, override: str):
    """Apply one ``key=value`` override to a flat {(section, key): value} map."""
    if "=" not in override:
        raise ConfigParseError(f"override {override!r} is not of the form key=value", source="--set")
    key, raw = (s.strip() for s in override.split("=", 1))
    if "." in key:
        section, name = key.split(".", 1)
        if section not in SCHEMA or name not in SCHEMA[section]:
            raise ConfigParseError(f"unknown override key {key!r}", source="--set")
    else:
        owners = [s for s, keys in SCHEMA.items() if key in keys]
        if not owners:
            raise ConfigParseError(f"unknown override key {key!r}", source="--set")
        section, name = owners[0], key
    values[(section, name)] = _parse_value(raw)


def _preset_values(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}")
    return plan_values(PRESETS[name]())


def plan_values(plan: ExperimentPlan) -> dict:
    """Flat (section, key) map that reproduces ``plan`` exactly."""
    b = plan.base
    return {
        ("scenario", "name"): plan.scenario_name,
        ("system", "K"): b.K,
        ("system", "L"): b.L,
        ("system", "M"): b.M,
        ("system", "N_c"): b.N_c,
        ("system", "energies"): list(b.energies),
        ("system", "sigma_n2"): b.sigma_n2,
        ("system", "decay_lambda"): b.decay_lambda,
        ("system", "lognormal_sigma2"): b.lognormal_sigma2,
        ("system", "seed"): b.seed,
        ("sweep", "param"): plan.sweep_param or "none",
        ("sweep", "values"): list(plan.sweep_values),
        ("run", "trials"): plan.trials,
        ("run", "selectors"): [s.value for s in plan.selectors],
        ("run", "exhaustive_budget"): plan.exhaustive_budget,
    }


def _as_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or float(value) != int(value):
        raise ConfigError(f"{what} must be an integer, got {value!r}")
    return int(value)


def _as_float(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number, got {value!r}")
    return float(value)


def build_plan(values: dict) -> ExperimentPlan:
    """Validate a flat value map and construct the plan."""
    v = dict(values)
    for key, default in DEFAULTS.items():
        if key not in v:
            v[key] = default
            log.info("default %s.%s = %r", key[0], key[1], default)
    missing = [f"{s}.{k}" for s, k in _REQUIRED if k not in {kk for ss, kk in v if ss == s}]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")

    K = _as_int(v["system", "K"], "system.K")
    L = _as_int(v["system", "L"], "system.L")
    M = _as_int(v["system", "M"], "system.M")
    N_c = _as_int(v["system", "N_c"], "system.N_c")
    if M > L:
        raise ConfigError(f"M must not exceed L, got M={M}, L={L}")

    energies = v.get(("system", "energies"))
    if energies is None:
        energies = [1.0] * K
        log.info("default system.energies = %r", energies)
    elif isinstance(energies, (int, float)) and not isinstance(energies, bool):
        energies = [float(energies)] * K
    energies = [_as_float(e, "system.energies entry") for e in energies]

    sweep_param = v["sweep", "param"]
    if sweep_param == "none":
        sweep_param = None
    elif sweep_param not in SWEEP_PARAMS:
        raise ConfigError(f"sweep.param must be one of {SWEEP_PARAMS + ('none',)}, got {sweep_param!r}")
    raw_values = v["sweep", "values"]
    if not isinstance(raw_values, list):
        raw_values = [raw_values]
    if sweep_param == SWEEP_EBN0:
        sweep_values = tuple(_as_float(x, "sweep.values entry") for x in raw_values)
    else:
        sweep_values = tuple(_as_int(x, "sweep.values entry") for x in raw_values)

    has_sigma = ("system", "sigma_n2") in v
    has_ebn0 = ("system", "ebn0_db") in v
    if has_sigma and has_ebn0:
        raise ConfigError("give either system.sigma_n2 or system.ebn0_db, not both")
    if has_sigma:
        sigma_n2 = _as_float(v["system", "sigma_n2"], "system.sigma_n2")
    elif has_ebn0:
        sigma_n2 = sigma_for_ebn0(energies[0], _as_float(v["system", "ebn0_db"], "system.ebn0_db"))
    elif sweep_param == SWEEP_EBN0 and sweep_values:
        # overwritten at every sweep point
        sigma_n2 = sigma_for_ebn0(energies[0], sweep_values[0])
        log.info("default system.sigma_n2 = %r (first Eb/N0 point)", sigma_n2)
    else:
        raise ConfigError("system.sigma_n2 or system.ebn0_db is required")

    base = SystemConfig(
        K=K,
        L=L,
        M=M,
        N_c=N_c,
        energies=tuple(energies),
        sigma_n2=sigma_n2,
        decay_lambda=_as_float(v["system", "decay_lambda"], "system.decay_lambda"),
        lognormal_sigma2=_as_float(v["system", "lognormal_sigma2"], "system.lognormal_sigma2"),
        seed=_as_int(v["system", "seed"], "system.seed"),
    )
    selectors = v["run", "selectors"]
    if isinstance(selectors, str):
        selectors = [s.strip() for s in selectors.split(",") if s.strip()]
    try:
        kinds = tuple(SelectorKind(s) for s in selectors)
    except ValueError as exc:
        raise ConfigError(f"{exc}; expected one of {[k.value for k in SelectorKind]}") from None
    try:
        return ExperimentPlan(
            base=base,
            trials=_as_int(v["run", "trials"], "run.trials"),
            selectors=kinds,
            scenario_name=str(v["scenario", "name"]),
            sweep_param=sweep_param,
            sweep_values=sweep_values,
            exhaustive_budget=_as_int(v["run", "exhaustive_budget"], "run.exhaustive_budget"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(text: str, overrides: Sequence[str] = (), source: str = "<config>") -> ExperimentPlan:
    """Parse TOML text (or a bare preset name) into a validated plan."""
    stripped = text.strip()
    if stripped in PRESETS:
        text = f'[scenario]\npreset = "{stripped}"\n'
    doc = _load_toml(text, source)
    lines = _key_lines(text)
    _check_schema(doc, lines, source)

    given = {(s, k): val for s, body in doc.items() for k, val in body.items()}
    for o in overrides:
        apply_override(given, o)

    values = {}
    preset = given.pop(("scenario", "preset"), None)
    if preset is not None:
        values.update(_preset_values(str(preset)))
    if ("system", "ebn0_db") in given:
        values.pop(("system", "sigma_n2"), None)
    if ("system", "sigma_n2") in given:
        values.pop(("system", "ebn0_db"), None)
    values.update(given)
    try:
        return build_plan(values)
    except ConfigError as exc:
        line = _blame_line(str(exc), given, lines)
        raise ConfigParseError(str(exc), line, source) from None


def _blame_line(message: str, given: dict, lines: dict) -> Optional[int]:
    """Line of the config key mentioned earliest in an error message, if any."""
    best = None
    for (section, key) in given:
        m = re.search(rf"(?<![\w.]){re.escape(key)}\b", message) if key else None
        if m and (section, key) in lines and (best is None or m.start() < best[0]):
            best = (m.start(), lines[(section, key)])
    return best[1] if best else None


def load_config(path_or_preset: str, overrides: Sequence[str] = ()) -> ExperimentPlan:
    if path_or_preset in PRESETS:
        return parse_config(path_or_preset, overrides, source=path_or_preset)
    with open(path_or_preset, encoding="utf-8") as fh:
        text = fh.read()
    return parse_config(text, overrides, source=path_or_preset)


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in value) + "]"
    raise TypeError(f"cannot encode {value!r}")


def emit_config(plan: ExperimentPlan) -> str:
    """Canonical TOML for a plan; every key is written out, no preset reference."""
    values = plan_values(plan)
    out = []
    for section, keys in SCHEMA.items():
        out.append(f"[{section}]")
        for key in keys:
            if (section, key) in values:
                out.append(f"{key} = {_toml_value(values[section, key])}")
        out.append("")
    return "\n".join(out)
