import json

import pytest

from nemskit.tables import (
    FixtureError, evaluate_row, find_row, format_value, load_fixture, regression_report,
)


@pytest.mark.parametrize("table", [1, 2, 3])
def test_fixtures_load(table):
    doc = load_fixture(table)
    assert doc["table"] == table
    assert doc["rows"]
    for row in doc["rows"]:
        assert {"quantity", "preset", "kind", "reference"} <= set(row)


def test_table3_passes():
    rows, ok = regression_report(3)
    assert ok, [r for r in rows if not r.passed]


def test_informational_rows_do_not_decide(tmp_path):
    doc = {"rows": [
        {"quantity": "omega", "preset": "table3-nems4", "kind": "omega", "reference": 7.14, "rel_tol": 0.01},
        {"quantity": "kerr", "preset": "table1-nems3", "kind": "budget", "key": "kerr",
         "reference": 1.0, "informational": True},
    ]}
    path = tmp_path / "f.json"
    path.write_text(json.dumps(doc))
    rows, ok = regression_report(path=path)
    assert ok
    assert not rows[1].passed and rows[1].informational


def test_tampered_fixture_fails_the_named_row(tmp_path):
    doc = load_fixture(3)
    target = next(r for r in doc["rows"] if r["kind"] == "omega")
    target["reference"] *= 1.5
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    rows, ok = regression_report(path=path)
    assert not ok
    bad = [r for r in rows if not r.passed]
    assert len(bad) == 1
    assert (bad[0].column, bad[0].quantity) == (target["column"], target["quantity"])


def test_zero_reference_uses_absolute_error():
    row = {"quantity": "c2", "preset": "table3-nems4", "kind": "c_driven_zero", "n": 2, "reference": 0.0,
           "abs_tol": 1e-9}
    r = evaluate_row(row)
    assert r.mode == "absolute" and r.rel_error is None and r.passed


def test_magnitude_rows_ignore_sign():
    row = {"quantity": "g1", "preset": "table1-nems3", "kind": "g_driven", "n": 1, "reference": 0.0173,
           "magnitude": True}
    r = evaluate_row(row)
    assert r.computed < 0 and r.passed
    signed = evaluate_row({**row, "magnitude": False})
    assert not signed.passed


def test_bad_fixtures_rejected(tmp_path):
    with pytest.raises(FixtureError):
        load_fixture(7)
    with pytest.raises(FixtureError):
        load_fixture(path=tmp_path / "missing.json")
    p = tmp_path / "x.json"
    p.write_text("[1, 2]")
    with pytest.raises(FixtureError):
        load_fixture(path=p)
    with pytest.raises(FixtureError):
        evaluate_row({"quantity": "q", "preset": "nems3", "kind": "mystery", "reference": 1})
    with pytest.raises(FixtureError):
        evaluate_row({"preset": "nems3", "kind": "omega"})


def test_find_row_and_formatting():
    rows, _ = regression_report(3)
    r = find_row(rows, rows[0].column, rows[0].quantity)
    assert r is rows[0]
    with pytest.raises(KeyError):
        find_row(rows, "nowhere", "nothing")
    assert format_value(float("nan")) == "nan"
    assert format_value(1234567.0) == "1.23457e+06"
