import csv
import io
import json

import pytest

from gibbslab.harness import (
    DEFECT_COLUMNS,
    ExperimentSpec,
    SpecError,
    Table,
    cell_seed,
    emit,
    run_experiment,
)

DECIMATION = """
[experiment]
name = decimation_1d
seed = 3
engine = enum

[grid]
beta = 0.5, 1.0
ell = 2, 3
"""


def test_from_text_merges_defaults():
    spec = ExperimentSpec.from_text(DECIMATION)
    assert spec.seed == 3
    assert spec.grid["beta"] == "0.5, 1.0"
    assert spec.grid["margin"] == "0"


@pytest.mark.parametrize(
    "text, match",
    [
        ("[grid]\nbeta = 1\n", "experiment"),
        ("[experiment]\nname = decimation_1d\n", "seed"),
        ("[experiment]\nname = decimation_1d\nseed = x\n", "integer"),
        ("[experiment]\nname = percolation\nseed = 1\n", "unknown experiment"),
        ("[experiment]\nname = decimation_1d\nseed = 1\nengine = mc\n", "unknown engine"),
        ("[experiment]\nname = decimation_1d\nseed = 1\n[grid]\ngamma = 2\n", "unknown grid keys"),
        ("[experiment\nname = x", "syntax"),
    ],
)
def test_grammar_errors(text, match):
    with pytest.raises(SpecError, match=match):
        ExperimentSpec.from_text(text)


def test_empty_grid_rejected_before_running():
    spec = ExperimentSpec("decimation_1d", 1, "enum", grid={"beta": ""})
    with pytest.raises(SpecError, match="empty"):
        run_experiment(spec, 1)


def test_capacity_rejected_before_running():
    spec = ExperimentSpec("heating", 1, "strip", grid={"width": "30", "beta": "0.2", "t": "1"})
    with pytest.raises(SpecError, match="capacity"):
        run_experiment(spec, 1)


def test_missing_config_file(tmp_path):
    with pytest.raises(SpecError, match="cannot read"):
        ExperimentSpec.from_file(tmp_path / "nope.cfg")


def test_cell_seed_distinct():
    seeds = {cell_seed(5, i) for i in range(100)}
    assert len(seeds) == 100
    assert cell_seed(5, 0) == cell_seed(5, 0)


def test_table_csv_formatting():
    t = Table(("a", "b", "c"), [(1, 0.1 + 0.2, None), (2, float("nan"), True)])
    assert t.csv_text() == "a,b,c\n1,0.3,\n2,nan,true\n"


def test_decimation_run_rows_and_json_roundtrip(tmp_path):
    spec = ExperimentSpec.from_text(DECIMATION)
    report = run_experiment(spec, 1)
    (table,) = report.tables.values()
    assert len(table.rows) == 4
    assert all(r[-1] <= 1e-10 for r in table.rows)
    paths = emit(report, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ["decimation_1d.csv", "decimation_1d.json"]
    rows = list(csv.reader(io.StringIO((tmp_path / "decimation_1d.csv").read_text())))
    assert len(rows) == 5
    body = json.loads((tmp_path / "decimation_1d.json").read_text())
    assert body["metadata"]["seed"] == 3
    assert body["metadata"]["spec"] == spec.as_dict()
    assert len(body["tables"]["decimation_1d"]["rows"]) == 4
    assert not list(tmp_path.glob(".*"))


def test_heating_beta_zero_all_defects_zero():
    spec = ExperimentSpec("heating", 2, "strip", grid={"beta": "0", "t": "0.5, 1", "width": "4", "n": "0..3", "N": "4"})
    report = run_experiment(spec, 1)
    table = report.tables["heating"]
    assert tuple(table.columns) == DEFECT_COLUMNS
    assert len(table.rows) == 2 * 4
    assert all(r[DEFECT_COLUMNS.index("delta")] == 0.0 for r in table.rows)


def test_runs_byte_identical_across_workers():
    spec = ExperimentSpec("entropy_vp", 4, "strip", grid={"n": "1, 2, 4"})
    a = run_experiment(spec, 1)
    b = run_experiment(spec, 3)
    assert {k: t.csv_text() for k, t in a.tables.items()} == {k: t.csv_text() for k, t in b.tables.items()}


def test_emit_rejects_unknown_format(tmp_path):
    report = run_experiment(ExperimentSpec.from_text(DECIMATION), 1)
    with pytest.raises(ValueError):
        emit(report, tmp_path, ("xml",))
