"""Figure data: per-metric JSON series projected from the results table.

Each figure file looks like::

    {
      "figure": "bias",
      "metric": "std_bias",
      "groups": [
        {"method": "ar", "functional_form": "linear", "confounding_type": "levels",
         "effect_direction": "null",
         "points": [{"bias_size": "small", "value": 0.01}, ...]},
        ...
      ]
    }

Points are ordered none < small < medium < large and values are copied from
the table unchanged (NaN becomes ``null``).
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable

from .defaults import MAGNITUDES
from .errors import EmptyResults
from .metrics import MetricsRow, sort_rows

FIGURES = {
    "bias": "std_bias",
    "variance": "mc_variance",
    "rmse": "rmse",
    "coverage": "coverage",
    "model_variance": "model_based_variance",
}


def _value(v):
    return None if isinstance(v, float) and not math.isfinite(v) else v


def figure_series(rows: Iterable[MetricsRow], figure: str) -> dict:
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {list(FIGURES)}")
    rows = sort_rows(rows)
    if not rows:
        raise EmptyResults("no result rows")
    metric = FIGURES[figure]
    groups: dict[tuple, list] = {}
    for r in rows:
        key = (r.method, r.functional_form, r.confounding_type, r.effect_direction)
        groups.setdefault(key, []).append(r)
    out = []
    for (method, form, ctype, eff), members in groups.items():
        members.sort(key=lambda r: MAGNITUDES.index(r.bias_size))
        points = []
        for r in members:
            pt = {"bias_size": r.bias_size, "value": _value(getattr(r, metric))}
            if figure == "bias":
                pt["std_mean_bias"] = _value(r.std_mean_bias)
            points.append(pt)
        out.append({"method": method, "functional_form": form, "confounding_type": ctype,
                    "effect_direction": eff, "points": points})
    return {"figure": figure, "metric": metric, "groups": out}


def emit_figure_data(rows: Iterable[MetricsRow], out_dir=None) -> dict[str, str]:
    """JSON text for each of the five figures, written to ``out_dir`` if given."""
    rows = list(rows)
    if not rows:
        raise EmptyResults("no result rows")
    texts = {}
    for fig in FIGURES:
        texts[fig] = json.dumps(figure_series(rows, fig), indent=2, allow_nan=False) + "\n"
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for fig, text in texts.items():
            (out / f"figure_{fig}.json").write_text(text)
    return texts
