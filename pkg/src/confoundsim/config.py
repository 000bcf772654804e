"""TOML run configuration.

A config names the baseline, the seed and the scenarios. Scenarios come from
a ``[grid]`` table (full cross product) and/or explicit ``[[scenario]]``
entries. Example::

    seed = 894539
    iters = 200
    methods = ["twfe", "ar", "ascm", "csa"]

    [baseline]
    seed = 20230101            # or: path = "baseline.csv"

    [grid]
    bias_type = ["linear", "nonlinear"]
    prior_control = ["trend", "level"]
    bias_size = ["small", "medium", "large"]
    effect_direction = ["null"]

    [[scenario]]
    bias_type = "linear"
    prior_control = "level"
    bias_size = "none"
    effect_direction = "nonnull"
    coefficients = { b0 = -4.5 }

    [coefficients.linear.level.small]   # merged over the shipped set
    b2 = 0.08

Unknown keys anywhere are errors.
"""

from __future__ import annotations

import re
from dataclasses import fields
from itertools import product
from pathlib import Path
from typing import Any, Optional

import tomli
import tomli_w

from .baseline import BaselineGenParams
from .defaults import BASELINE_SEED, EFFECTS, FORMS, MAGNITUDES, MASTER_SEED, METHODS, MODES
from .dgp import CoefficientSet, ScenarioConfig, default_coefficients
from .errors import ConfigError, InconsistentScenario, InvalidParams, ParseError, UnknownKey
from .harness import RunManifest

TOP_KEYS = {"seed", "iters", "workers", "out", "methods", "baseline", "grid", "scenario", "coefficients"}
BASELINE_KEYS = {"path", "seed", "params"}
GRID_KEYS = {"bias_type", "prior_control", "bias_size", "effect_direction"}
SCENARIO_KEYS = GRID_KEYS | {"iters", "methods", "coefficients", "alpha"}
COEF_KEYS = {f.name for f in fields(CoefficientSet)}
PARAM_KEYS = {f.name for f in fields(BaselineGenParams)}


def _line_of(text: str, key: str) -> Optional[int]:
    pat = re.compile(rf"^\s*(\[+\s*)?[\w.\"]*\b{re.escape(key)}\b")
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.match(line):
            return i
    return None


class _Ctx:
    """Carries the source text so errors can point at a line."""

    def __init__(self, text: str):
        self.text = text

    def unknown(self, keys, where: str, allowed) -> None:
        extra = sorted(set(keys) - set(allowed))
        if extra:
            k = extra[0]
            raise UnknownKey(f"unknown key in {where}; allowed: {sorted(allowed)}", line=_line_of(self.text, k), key=k)

    def bad(self, msg: str, key: str, cls=ParseError):
        if issubclass(cls, ParseError):
            return cls(msg, line=_line_of(self.text, key), key=key)
        line = _line_of(self.text, key)
        return cls(f"{msg} (key {key!r}" + (f", line {line})" if line else ")"))


def _as_list(v, key, ctx) -> list:
    if isinstance(v, str):
        return [v]
    if isinstance(v, list) and all(isinstance(x, str) for x in v):
        return list(v)
    raise ctx.bad("expected a string or a list of strings", key)


def _check_choice(values, allowed, key, ctx):
    for v in values:
        if v not in allowed:
            raise ctx.bad(f"{v!r} is not one of {list(allowed)}", key, InconsistentScenario)


def _int(v, key, ctx, minimum=None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ctx.bad("expected an integer", key)
    if minimum is not None and v < minimum:
        raise ctx.bad(f"must be >= {minimum}", key)
    return v


def _coef_dict(d, where, ctx) -> dict:
    if not isinstance(d, dict):
        raise ctx.bad("expected a table of coefficients", where)
    ctx.unknown(d, where, COEF_KEYS)
    out = {}
    for k, v in d.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ctx.bad("coefficient must be a number", k)
        out[k] = float(v)
    return out


def _global_overrides(table, ctx) -> dict:
    """``[coefficients.<form>.<mode>.<magnitude>]`` tables."""
    out = {}
    if not isinstance(table, dict):
        raise ctx.bad("expected a table", "coefficients")
    ctx.unknown(table, "coefficients", FORMS)
    for form, modes in table.items():
        ctx.unknown(modes, f"coefficients.{form}", MODES)
        for mode, mags in modes.items():
            ctx.unknown(mags, f"coefficients.{form}.{mode}", MAGNITUDES)
            for mag, coefs in mags.items():
                out[(form, mode, mag)] = _coef_dict(coefs, f"coefficients.{form}.{mode}.{mag}", ctx)
    return out


def _build_scenario(form, mode, mag, effect, *, iters, methods, master_seed, overrides, local=None,
                    alpha=None, ctx=None) -> ScenarioConfig:
    base = default_coefficients(form, mode, mag).to_dict()
    base.update(overrides.get((form, mode, mag), {}))
    base.update(local or {})
    kw = dict(form=form, confounder_mode=mode, magnitude=mag, effect=effect,
              coefficients=CoefficientSet.from_dict(base), iters=iters, master_seed=master_seed,
              methods=tuple(methods))
    if alpha is not None:
        kw["alpha"] = float(alpha)
    try:
        return ScenarioConfig(**kw)
    except InconsistentScenario as exc:
        raise InconsistentScenario(f"scenario {form}-{mode}-{mag}-{effect}: {exc}") from None


def manifest_from_dict(doc: dict, text: str = "", base_dir: Path | None = None) -> RunManifest:
    ctx = _Ctx(text)
    ctx.unknown(doc, "top level", TOP_KEYS)
    seed = _int(doc.get("seed", MASTER_SEED), "seed", ctx)
    iters = _int(doc.get("iters", 200), "iters", ctx, minimum=1)
    workers = _int(doc.get("workers", 1), "workers", ctx, minimum=1)
    methods = _as_list(doc.get("methods", list(METHODS)), "methods", ctx)
    _check_choice(methods, METHODS, "methods", ctx)
    out = doc.get("out")
    if out is not None and not isinstance(out, str):
        raise ctx.bad("expected a path string", "out")

    bl = doc.get("baseline", {})
    if not isinstance(bl, dict):
        raise ctx.bad("expected a table", "baseline")
    ctx.unknown(bl, "baseline", BASELINE_KEYS)
    path = bl.get("path")
    if path is not None:
        if not isinstance(path, str):
            raise ctx.bad("expected a path string", "path")
        if base_dir is not None and not Path(path).is_absolute():
            path = str(base_dir / path)
    params = bl.get("params", {})
    if not isinstance(params, dict):
        raise ctx.bad("expected a table", "params")
    ctx.unknown(params, "baseline.params", PARAM_KEYS)
    try:
        gen = BaselineGenParams.from_dict(params)
        gen.validate()
    except (InvalidParams, TypeError) as exc:
        raise ConfigError(f"baseline.params: {exc}") from None
    bseed = _int(bl.get("seed", BASELINE_SEED), "seed", ctx)

    overrides = _global_overrides(doc.get("coefficients", {}), ctx)
    common = dict(iters=iters, methods=methods, master_seed=seed, overrides=overrides, ctx=ctx)
    scenarios: list[ScenarioConfig] = []

    grid = doc.get("grid")
    if grid is not None:
        if not isinstance(grid, dict):
            raise ctx.bad("expected a table", "grid")
        ctx.unknown(grid, "grid", GRID_KEYS)
        forms = _as_list(grid.get("bias_type", list(FORMS)), "bias_type", ctx)
        modes = _as_list(grid.get("prior_control", list(MODES)), "prior_control", ctx)
        mags = _as_list(grid.get("bias_size", ["small", "medium", "large"]), "bias_size", ctx)
        effects = _as_list(grid.get("effect_direction", ["null"]), "effect_direction", ctx)
        for key, vals, allowed in (("bias_type", forms, FORMS), ("prior_control", modes, MODES),
                                   ("bias_size", mags, MAGNITUDES), ("effect_direction", effects, EFFECTS)):
            _check_choice(vals, allowed, key, ctx)
        for form, mode, mag, eff in product(forms, modes, mags, effects):
            scenarios.append(_build_scenario(form, mode, mag, eff, **common))

    entries = doc.get("scenario", [])
    if not isinstance(entries, list):
        raise ctx.bad("expected an array of tables ([[scenario]])", "scenario")
    for entry in entries:
        ctx.unknown(entry, "[[scenario]]", SCENARIO_KEYS)
        vals = {}
        for key, default, allowed in (("bias_type", "linear", FORMS), ("prior_control", "level", MODES),
                                      ("bias_size", "none", MAGNITUDES), ("effect_direction", "null", EFFECTS)):
            v = entry.get(key, default)
            if not isinstance(v, str):
                raise ctx.bad("expected a string", key)
            _check_choice([v], allowed, key, ctx)
            vals[key] = v
        kw = dict(common)
        if "iters" in entry:
            kw["iters"] = _int(entry["iters"], "iters", ctx, minimum=1)
        if "methods" in entry:
            kw["methods"] = _as_list(entry["methods"], "methods", ctx)
            _check_choice(kw["methods"], METHODS, "methods", ctx)
        local = _coef_dict(entry["coefficients"], "coefficients", ctx) if "coefficients" in entry else None
        alpha = entry.get("alpha")
        if alpha is not None and (isinstance(alpha, bool) or not isinstance(alpha, (int, float))):
            raise ctx.bad("alpha must be a number", "alpha")
        scenarios.append(_build_scenario(vals["bias_type"], vals["prior_control"], vals["bias_size"],
                                         vals["effect_direction"], local=local, alpha=alpha, **kw))

    if not scenarios:
        raise ConfigError("config defines no scenarios (add a [grid] table or [[scenario]] entries)")
    return RunManifest(scenarios=tuple(scenarios), master_seed=seed, baseline_path=path,
                       baseline_params=gen, baseline_seed=bseed, workers=workers, out_dir=out)


def parse_config_text(text: str, base_dir: Path | None = None) -> RunManifest:
    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ParseError(f"malformed config: {exc}", line=int(m.group(1)) if m else None) from None
    return manifest_from_dict(doc, text, base_dir)


def parse_config(path) -> RunManifest:
    """Read and validate a TOML config into a :class:`RunManifest`.

    A relative ``baseline.path`` is resolved against the config's directory.
    """
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc}") from None
    return parse_config_text(text, base_dir=p.parent)


def manifest_to_dict(m: RunManifest) -> dict[str, Any]:
    """Explicit form of a manifest: every scenario written out in full."""
    doc: dict[str, Any] = {"seed": m.master_seed, "workers": m.workers}
    if m.out_dir is not None:
        doc["out"] = str(m.out_dir)
    bl: dict[str, Any] = {"seed": m.baseline_seed, "params": m.baseline_params.to_dict()}
    if m.baseline_path is not None:
        bl["path"] = str(m.baseline_path)
    doc["baseline"] = bl
    rows = []
    for s in m.scenarios:
        rows.append({
            "bias_type": s.form,
            "prior_control": s.confounder_mode,
            "bias_size": s.magnitude,
            "effect_direction": s.effect,
            "iters": int(s.iters),
            "methods": list(s.methods),
            "alpha": float(s.alpha),
            "coefficients": s.coefficients.to_dict(),
        })
    doc["scenario"] = rows
    return doc


def serialize_config(m: RunManifest) -> str:
    return tomli_w.dumps(manifest_to_dict(m))
