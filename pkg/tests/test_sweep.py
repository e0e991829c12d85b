import dataclasses

import pytest

from owcrf_aloha.engine import run_simulation
from owcrf_aloha.scenario import Scenario, ScenarioParseError
from owcrf_aloha.sweep import (SCHEMA_LINE, STAT_COLUMNS, CapExceededError, MissingAxisError,
                               SweepSpec, build_adaptive_m_table, parse_sweep_spec,
                               rows_from_csv, rows_from_json, rows_to_csv, rows_to_json,
                               run_sweep)

BASE = Scenario(num_owc_slots=2000, replications=3, master_seed=5)

SPEC_TEXT = """
num_cells = 3
users_per_cell = 4
num_owc_slots = 1500
master_seed = 11

[sweep]
replications = 2

[sweep.axes]
M = [1, 3]
p_a = [0.1, 0.5]
"""


def test_single_point_matches_run_simulation():
    spec = SweepSpec(BASE, axes=(("p_a", [0.3]),), replications=1)
    rows = run_sweep(spec)
    st_ = run_simulation(dataclasses.replace(BASE, activation_prob=0.3, replications=1))
    assert rows[0]["throughput_mean"] == st_.throughput_mean
    assert rows[0]["throughput_ci95"] == st_.throughput_ci95
    assert rows[0]["decoded"] == st_.decoded


def test_zero_activity_rows():
    spec = SweepSpec(BASE, axes=(("p_a", [0.0]), ("M", [1, 2, 3])))
    assert all(r["throughput_mean"] == 0.0 for r in run_sweep(spec))


def test_row_major_order_and_columns():
    spec = SweepSpec(BASE, axes=(("M", [1, 2]), ("p_a", [0.1, 0.2, 0.3])))
    rows = run_sweep(spec)
    assert [(r["M"], r["p_a"]) for r in rows] == [
        (1, 0.1), (1, 0.2), (1, 0.3), (2, 0.1), (2, 0.2), (2, 0.3)]
    assert list(rows[0]) == ["M", "p_a", *STAT_COLUMNS]


def test_axis_aliases_are_canonicalised():
    spec = SweepSpec(BASE, axes=(("activation_prob", [0.1]), ("multirate_factor", [2]),
                                 ("sf", [9])))
    assert spec.axis_names == ["p_a", "M", "SF"]


def test_cap_exceeded():
    spec = SweepSpec(BASE, axes=(("p_a", [0.1] * 5), ("M", [1] * 5)), max_points=10)
    with pytest.raises(CapExceededError):
        run_sweep(spec)


def test_bad_point_reports_context():
    spec = SweepSpec(BASE, axes=(("M", [1, 0]),))
    with pytest.raises(ValueError, match="M=0"):
        run_sweep(spec)


def test_csv_and_json_round_trip():
    rows = run_sweep(SweepSpec(BASE, axes=(("SF", [7, 11]), ("p_a", [0.2]))))
    text = rows_to_csv(rows)
    assert text.splitlines()[0] == SCHEMA_LINE
    assert rows_from_csv(text) == rows
    assert rows_from_json(rows_to_json(rows)) == rows


def test_seed_override_changes_results():
    spec = SweepSpec(BASE, axes=(("p_a", [0.4]),))
    assert run_sweep(spec, seed=1) != run_sweep(spec, seed=2)
    assert run_sweep(spec, seed=1) == run_sweep(spec, seed=1)


def test_parse_spec_text():
    spec = parse_sweep_spec(SPEC_TEXT, is_text=True)
    assert spec.axis_names == ["M", "p_a"]
    assert spec.base.num_cells == 3 and spec.replications == 2
    rows = run_sweep(spec)
    assert len(rows) == 4


def test_parse_spec_requires_axes():
    with pytest.raises(ScenarioParseError):
        parse_sweep_spec("num_cells = 2\n", is_text=True)
    with pytest.raises(ScenarioParseError):
        parse_sweep_spec("[sweep]\nbogus = 1\n[sweep.axes]\nM = [1]\n", is_text=True)


def test_worker_count_does_not_change_output():
    spec = parse_sweep_spec(SPEC_TEXT, is_text=True)
    assert rows_to_csv(run_sweep(spec, workers=1)) == rows_to_csv(run_sweep(spec, workers=3))


def _row(M, mean, **key):
    return {**key, "M": M, "throughput_mean": mean, "throughput_ci95": 0.01,
            "activated": 0, "captured": 0, "forwarded": 0, "decoded": 0}


def test_adaptive_m_single_value():
    table = build_adaptive_m_table([_row(2, 0.3, p_a=0.1), _row(2, 0.4, p_a=0.2)])
    assert [r.best_M for r in table.rows] == [2, 2]


def test_adaptive_m_tie_goes_to_smaller():
    rows = [_row(3, 0.25, SF=7, p_a=0.1), _row(1, 0.25, SF=7, p_a=0.1),
            _row(2, 0.2, SF=7, p_a=0.1)]
    (only,) = build_adaptive_m_table(rows).rows
    assert only.best_M == 1 and dict(only.key) == {"SF": 7, "p_a": 0.1}


def test_adaptive_m_picks_argmax():
    rows = [_row(m, v, SF=7, p_a=0.5) for m, v in [(1, 0.2), (2, 0.4), (3, 0.45), (4, 0.41)]]
    assert build_adaptive_m_table(rows).rows[0].best_M == 3


def test_adaptive_m_needs_m_axis():
    with pytest.raises(MissingAxisError):
        build_adaptive_m_table([{"p_a": 0.1, "throughput_mean": 0.1}])


def test_adaptive_table_csv():
    text = build_adaptive_m_table([_row(1, 0.3, SF=7, p_a=0.05)]).to_csv()
    assert text.splitlines()[0] == "SF,p_a,best_M,throughput_mean,throughput_ci95"
