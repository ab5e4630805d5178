import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hjsr import InputError, MatrixSet, NonNegMatrix
from hjsr.io import (
    deterministic_part,
    digest,
    dumps,
    inputs_document,
    load_document,
    parse_document,
    parse_range,
    report_document,
    serialize_document,
)

from conftest import FIXTURES


def doc_text(entries, **extra):
    return json.dumps({"version": 1, "entries": entries, **extra}, indent=1)


def test_fixtures_parse():
    for path in sorted(FIXTURES.glob("*.json")):
        if path.name in ("malformed.json", "negative_entry.json"):
            continue
        load_document(path)


def test_two_shift_contents():
    doc = load_document(FIXTURES / "two_shift.json")
    S = doc.as_set("S")
    assert len(S) == 2 and S.dim == 2
    assert doc.as_set("I")[0] == NonNegMatrix.identity(2)
    assert doc.names("matrix_set") == ["S", "Z"]


def test_round_trip_fixtures():
    for name in ("two_shift.json", "all_chains.json", "kernels.json", "campaign.json", "c2_example.json"):
        text = serialize_document(load_document(FIXTURES / name))
        assert serialize_document(parse_document(text)) == text


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(0, 1e300, allow_subnormal=True), min_size=4, max_size=4),
       st.lists(st.floats(0, 1e-300), min_size=4, max_size=4))
def test_round_trip_numbers_exact(big, small):
    vals = big + small
    members = [[vals[0:2], vals[2:4]], [vals[4:6], vals[6:8]]]
    text = doc_text([{"name": "S", "kind": "matrix_set", "payload": {"dim": 2, "members": members}}])
    doc = parse_document(text)
    again = parse_document(serialize_document(doc))
    for a, b in zip(doc.as_set("S"), again.as_set("S")):
        assert np.array_equal(a.entries, b.entries)
    got = [x for m in again.as_set("S") for x in m.entries.ravel().tolist()]
    assert got == vals


def test_weights_and_params_round_trip():
    text = doc_text(
        [{"name": "w", "kind": "weights", "payload": {"weights": [0.25, 0.75]}},
         {"name": "A", "kind": "matrix", "payload": {"dim": 1, "entries": [[2]]}}],
        chains=[{"id": "C16", "params": {"m": 2, "k": 3, "weights": "w"}, "roles": {"Psi1": "A", "Psi2": "A"}}],
    )
    doc = parse_document(text)
    assert doc.chains[0].params["weights"] == (Fraction(1, 4), Fraction(3, 4))
    assert parse_document(serialize_document(doc)).chains[0].params == doc.chains[0].params


def test_negative_entry_diagnostic():
    with pytest.raises(InputError) as err:
        load_document(FIXTURES / "negative_entry.json")
    msg = str(err.value)
    assert "entry 'bad'" in msg and "negative" in msg
    assert "$.entries[1].payload.entries[0][1]" in msg
    assert err.value.line is not None


def test_malformed_json_has_position():
    with pytest.raises(InputError) as err:
        load_document(FIXTURES / "malformed.json")
    assert (err.value.line, err.value.column) == (4, 49)


@pytest.mark.parametrize("text, where", [
    ('{"version": 2, "entries": []}', "$.version"),
    ('[1]', "$"),
    ('{"version": 1, "entries": [{"name": "a", "kind": "tensor", "payload": {}}]}', "$.entries[0]"),
    ('{"version": 1, "entries": [{"name": "a", "kind": "matrix", "payload": {"dim": 3, "entries": [[1]]}}]}',
     "$.entries[0]"),
    ('{"version": 1, "entries": [], "chains": [{"id": "C1", "roles": {"A": "nope"}}]}', "$.chains[0].roles.A"),
    ('{"version": 1, "entries": [], "campaign": {"trials": 0}}', "$.campaign.trials"),
])
def test_field_errors_name_the_path(text, where):
    with pytest.raises(InputError) as err:
        parse_document(text)
    assert where in str(err.value)


def test_duplicate_names_rejected():
    e = {"name": "A", "kind": "matrix", "payload": {"dim": 1, "entries": [[1]]}}
    with pytest.raises(InputError, match="duplicate"):
        parse_document(doc_text([e, e]))


def test_set_members_by_name():
    text = doc_text([
        {"name": "A", "kind": "matrix", "payload": {"dim": 2, "entries": [[1, 0], [0, 1]]}},
        {"name": "S", "kind": "matrix_set", "payload": {"dim": 2, "members": ["A", [[0, 1], [1, 0]]]}},
    ])
    S = parse_document(text).as_set("S")
    assert S[0] == NonNegMatrix.identity(2) and len(S) == 2


def test_parse_range():
    assert parse_range("2..4") == (2, 4)
    assert parse_range("3") == (3, 3)
    for bad in ("4..2", "a..b", "0..2", "1...3"):
        with pytest.raises(InputError):
            parse_range(bad)


def test_inputs_document_reparses():
    rng = np.random.default_rng(0)
    A = NonNegMatrix(rng.random((3, 3)))
    S = MatrixSet([NonNegMatrix(rng.random((3, 3))) for _ in range(2)])
    text = dumps(inputs_document({"A": A, "Psi": S}, ["C1"], {"alpha": Fraction(1, 4)}))
    doc = parse_document(text)
    assert doc.as_set("A")[0] == A and doc.as_set("Psi") == S


def test_report_helpers():
    r = report_document("radius", digest("x"), {"a": 1}, {"t": 0.5})
    assert r["input_digest"].startswith("sha256:") and len(r["input_digest"]) == 71
    assert deterministic_part(r) == {k: v for k, v in r.items() if k != "timing"}
    assert dumps({"x": float("inf"), "q": Fraction(1, 3)}) == '{\n "x": "inf",\n "q": "1/3"\n}\n'
