"""Monte Carlo performance metrics and the results table.

Per scenario and method, with ``K`` successful iterations:

* std_bias   = mean(|a_k - alpha| / sd_k(Y*))
* std_mean_bias = mean((a_k - alpha) / sd_k(Y*)), signed; its absolute value
  is the absolute standardized bias of the mean estimate
* mc_variance = mean((a_k - mean(a))**2)        (divisor K)
* rmse       = sqrt(mean((a_k - alpha)**2))
* coverage   = share of normal 95% intervals that contain alpha
* model_based_variance = mean(se_k**2)

``sd_k(Y*)`` is the SD of the simulated outcome over every cell of iteration
``k``. Iterations whose SE is undefined still count toward the bias, variance
and RMSE but are left out of coverage and model-based variance.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .defaults import EFFECTS, FORMS, MAGNITUDES, METHODS
from .errors import TooFewIterations
from .estimators.records import EstimateRecord

CSV_COLUMNS = (
    "method", "confounding_type", "functional_form", "bias_size", "std_bias", "mc_variance",
    "rmse", "coverage", "model_based_variance", "n_iters", "n_failed",
)
# appended after the fixed columns so null and non-null runs can share a table
EXTRA_CSV_COLUMNS = ("effect_direction", "std_mean_bias")

CONFOUNDING_TYPES = ("levels", "trends")
_MODE_TO_TYPE = {"level": "levels", "trend": "trends"}
TYPE_TO_MODE = {v: k for k, v in _MODE_TO_TYPE.items()}


def confounding_type(mode: str) -> str:
    """``level``/``trend`` confounder mode to the table's ``levels``/``trends``."""
    if mode in CONFOUNDING_TYPES:
        return mode
    return _MODE_TO_TYPE[mode]


@dataclass(frozen=True)
class MetricsRow:
    method: str
    confounding_type: str
    functional_form: str
    bias_size: str
    std_bias: float
    mc_variance: float
    rmse: float
    coverage: float
    model_based_variance: float
    n_iters: int
    n_failed: int
    effect_direction: str = "null"
    std_mean_bias: float = math.nan
    # raw-scale extras (JSON only)
    mean_estimate: float = math.nan
    raw_bias: float = math.nan
    n_se_missing: int = 0

    def sort_key(self):
        return (
            METHODS.index(self.method) if self.method in METHODS else len(METHODS), self.method,
            CONFOUNDING_TYPES.index(self.confounding_type),
            FORMS.index(self.functional_form),
            MAGNITUDES.index(self.bias_size),
            EFFECTS.index(self.effect_direction),
        )

    def to_dict(self) -> dict:
        return asdict(self)


def _scenario_labels(scenario) -> dict:
    if scenario is None:
        return {"confounding_type": "levels", "functional_form": "linear", "bias_size": "none",
                "effect_direction": "null"}
    return {
        "confounding_type": confounding_type(scenario.confounder_mode),
        "functional_form": scenario.form,
        "bias_size": scenario.magnitude,
        "effect_direction": scenario.effect,
    }


def summarize(estimates: Sequence[Optional[EstimateRecord]], truths: Sequence[tuple[float, float]],
              scenario=None, method: Optional[str] = None, n_failed: int = 0,
              min_iters: int = 2) -> MetricsRow:
    """Aggregate one method's iterations into a :class:`MetricsRow`.

    ``truths[k]`` is ``(alpha, sd(Y*))`` for iteration ``k``. A ``None``
    estimate marks a failed iteration; it is excluded and counted in
    ``n_failed`` on top of the ``n_failed`` passed in.
    """
    if len(estimates) != len(truths):
        raise ValueError(f"{len(estimates)} estimates but {len(truths)} truths")
    ok = [(e, t) for e, t in zip(estimates, truths) if e is not None and math.isfinite(e.alpha_hat)]
    failed = n_failed + len(estimates) - len(ok)
    if len(ok) < min_iters:
        raise TooFewIterations(f"{len(ok)} successful iterations, need {min_iters}")
    if method is None:
        method = ok[0][0].method

    a = np.array([e.alpha_hat for e, _ in ok])
    truth = np.array([t[0] for _, t in ok], dtype=float)
    sd = np.array([t[1] for _, t in ok], dtype=float)
    err = a - truth
    with_se = [(e, t[0]) for e, t in ok if e.se_available]
    if with_se:
        coverage = float(np.mean([e.covers(alpha) for e, alpha in with_se]))
        model_var = float(np.mean([e.model_se ** 2 for e, _ in with_se]))
    else:
        coverage = model_var = math.nan
    return MetricsRow(
        method=method,
        std_bias=float(np.mean(np.abs(err) / sd)),
        std_mean_bias=float(np.mean(err / sd)),
        mc_variance=float(np.mean((a - a.mean()) ** 2)),
        rmse=float(np.sqrt(np.mean(err ** 2))),
        coverage=coverage,
        model_based_variance=model_var,
        n_iters=len(ok),
        n_failed=failed,
        mean_estimate=float(a.mean()),
        raw_bias=float(err.mean()),
        n_se_missing=len(ok) - len(with_se),
        **_scenario_labels(scenario),
    )


def failed_row(scenario, method: str, n_ok: int, n_failed: int) -> MetricsRow:
    """Placeholder row for a method with too few successful iterations."""
    nan = math.nan
    return MetricsRow(method=method, std_bias=nan, mc_variance=nan, rmse=nan, coverage=nan,
                      model_based_variance=nan, n_iters=n_ok, n_failed=n_failed,
                      **_scenario_labels(scenario))


def sort_rows(rows: Iterable[MetricsRow]) -> list[MetricsRow]:
    return sorted(rows, key=MetricsRow.sort_key)


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_csv(rows: Iterable[MetricsRow]) -> str:
    cols = CSV_COLUMNS + EXTRA_CSV_COLUMNS
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in sort_rows(rows):
        w.writerow([_fmt(getattr(r, c)) for c in cols])
    return buf.getvalue()


def results_json(rows: Iterable[MetricsRow], metadata: Optional[dict] = None) -> str:
    payload = {
        "metadata": dict(sorted((metadata or {}).items())),
        "rows": [_json_safe(r.to_dict()) for r in sort_rows(rows)],
    }
    return json.dumps(payload, indent=2, sort_keys=False, allow_nan=False) + "\n"


def _json_safe(d: dict) -> dict:
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


def emit_tables(rows: Sequence[MetricsRow], out_dir=None, metadata: Optional[dict] = None,
                stem: str = "results") -> tuple[str, str]:
    """CSV and JSON renderings of the result set, written to ``out_dir`` if given."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to emit")
    csv_text = results_csv(rows)
    json_text = results_json(rows, metadata)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{stem}.csv").write_text(csv_text)
        (out / f"{stem}.json").write_text(json_text)
    return csv_text, json_text


def read_results_csv(path_or_text) -> list[MetricsRow]:
    """Parse a results CSV (a path or the CSV text itself) back into rows."""
    text = str(path_or_text)
    if "\n" not in text:
        text = Path(text).read_text()
    reader = csv.DictReader(io.StringIO(text))
    missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"results CSV lacks columns {missing}")
    kinds = {f.name: f.type for f in fields(MetricsRow)}
    rows = []
    for rec in reader:
        kw = {}
        for k, v in rec.items():
            if k not in kinds:
                continue
            if k in ("n_iters", "n_failed", "n_se_missing"):
                kw[k] = int(v)
            elif k in ("method", "confounding_type", "functional_form", "bias_size", "effect_direction"):
                kw[k] = v
            elif v == "":
                continue
            else:
                kw[k] = float(v)
        rows.append(MetricsRow(**kw))
    return rows
