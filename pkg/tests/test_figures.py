import json

import pytest

from confoundsim.defaults import FORMS, METHODS, MODES
from confoundsim.dgp import ScenarioConfig
from confoundsim.errors import EmptyResults
from confoundsim.estimators import EstimateRecord
from confoundsim.figures import FIGURES, emit_figure_data
from confoundsim.metrics import read_results_csv, results_csv, summarize


def row(method, mode, form, mag, cover=True):
    sc = ScenarioConfig(form=form, confounder_mode=mode, magnitude=mag)
    se = 10.0 if cover else 1e-3
    return summarize([EstimateRecord(method, 0.2, se)] * 2, [(0.0, 1.0)] * 2, scenario=sc)


def grid_rows():
    return [row(m, mode, form, mag, cover=(m == "ascm" or mag == "small"))
            for m in METHODS for mode in MODES for form in FORMS for mag in ("small", "medium", "large")]


def test_single_row(tmp_path):
    texts = emit_figure_data([row("ar", "level", "linear", "small")], tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(f"figure_{f}.json" for f in FIGURES)
    for fig, text in texts.items():
        doc = json.loads(text)
        assert doc["figure"] == fig
        (group,) = doc["groups"]
        assert len(group["points"]) == 1


def test_full_grid_has_sixteen_lines():
    for text in emit_figure_data(grid_rows()).values():
        assert len(json.loads(text)["groups"]) == 16


def test_ascm_coverage_line_flat():
    doc = json.loads(emit_figure_data(grid_rows())["coverage"])
    for g in doc["groups"]:
        if g["method"] == "ascm" and g["confounding_type"] == "levels" and g["functional_form"] == "linear":
            assert [p["value"] for p in g["points"]] == [1.0, 1.0, 1.0]
            assert [p["bias_size"] for p in g["points"]] == ["small", "medium", "large"]


def test_figures_are_projections_of_the_csv():
    rows = grid_rows()
    from_rows = emit_figure_data(rows)
    from_csv = emit_figure_data(read_results_csv(results_csv(rows[::-1])))
    assert from_rows == from_csv


def test_empty():
    with pytest.raises(EmptyResults):
        emit_figure_data([])
