import json

import pytest

from rnmh.diagnostics import CSV_COLUMNS
from rnmh.evolution import evolve_mode, mode_initial_data
from rnmh.geometry import RadialGrid, RNBackground
from rnmh.records import history_from_csv, history_from_json, history_to_csv, history_to_json, load_history


@pytest.fixture(scope="module")
def hist():
    grid = RadialGrid(RNBackground(1.0, 0.5), -60, 60, 241)
    h, _ = evolve_mode(mode_initial_data(grid, 2), grid, 10.0)
    return h


def test_csv_header_and_rows(hist):
    text = history_to_csv(hist)
    lines = text.splitlines()
    assert lines[0] == "t,E,E_C,E_l,E_gamma,constraint_l2,linf_phi_loc,linf_A_loc,h4_phi_loc,h4_A_loc"
    assert len(lines) == len(hist.reports) + 1
    ts = [float(l.split(",")[0]) for l in lines[1:]]
    assert all(b > a for a, b in zip(ts, ts[1:]))


def test_csv_round_trip_exact(hist):
    back = history_from_csv(history_to_csv(hist))
    for a, b in zip(hist.reports, back.reports):
        assert a.csv_row() == b.csv_row()
    assert back.meta["has_l2"] is False


def test_shortest_round_trip_floats(hist):
    row = history_to_csv(hist).splitlines()[2].split(",")
    for field in row:
        assert repr(float(field)) == field


def test_csv_errors():
    with pytest.raises(ValueError):
        history_from_csv("a,b\n1,2\n")
    with pytest.raises(ValueError):
        history_from_csv(",".join(CSV_COLUMNS) + "\n1,2\n")
    with pytest.raises(ValueError):
        history_from_csv(",".join(CSV_COLUMNS) + "\n" + ",".join(["x"] * 10) + "\n")
    with pytest.raises(ValueError):
        history_from_csv(",".join(CSV_COLUMNS) + "\n1" + ",0" * 9 + "\n0" + ",0" * 9 + "\n")


def test_json_round_trip(hist):
    text = history_to_json(hist)
    back = history_from_json(text)
    assert [r.__dict__ for r in back.reports] == [r.__dict__ for r in hist.reports]
    assert len(back.snapshots) == len(hist.snapshots)
    assert back.snapshots[3].integrands == hist.snapshots[3].integrands
    assert back.meta["multiplier"] == (1.0, 1.0)
    json.loads(text)


def test_load_history_detects_format(hist):
    assert len(load_history(history_to_csv(hist)).reports) == len(hist.reports)
    assert len(load_history(history_to_json(hist)).snapshots) == len(hist.snapshots)
    with pytest.raises(ValueError):
        load_history("", fmt="xml")
