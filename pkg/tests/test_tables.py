import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from vdwtransmon.tables import OutputTable, TableFormatError, dumps, loads, read_table, write_table


@given(arrays(np.float64, st.tuples(st.integers(1, 20), st.integers(1, 5)), elements=st.floats(allow_nan=False, allow_infinity=True)))
def test_round_trip_bit_identical(data):
    cols = [f"c{i}" for i in range(data.shape[1])]
    t = OutputTable(cols, ["s"] * len(cols), data, meta={"seed": "1"})
    back = loads(dumps(t))
    assert back.columns == cols and back.units == t.units and back.meta == t.meta
    assert back.rows.tobytes() == t.rows.tobytes()


def test_labelled_round_trip(tmp_path):
    t = OutputTable(["value"], [""], [[1.0 / 3], [np.nan]], labels=["a", "b"], row_units=["Hz", ""])
    write_table(t, tmp_path / "t.csv")
    back = read_table(tmp_path / "t.csv")
    assert back.labels == ["a", "b"] and back.row_units == ["Hz", ""]
    assert back.value("a") == 1.0 / 3 and np.isnan(back.value("b"))
    assert back.unit_of("a") == "Hz"


def test_layout():
    text = dumps(OutputTable(["time", "p_excited"], ["s", ""], [[0.0, 0.1]], meta={"k": "v"}))
    assert text == "# k: v\ntime,p_excited\ns,\n0,0.10000000000000001\n"


def test_ragged_row():
    with pytest.raises(TableFormatError, match="line 4: row has 3 fields, expected 2"):
        loads("x,y\ns,\n1,2\n3,4,5\n")


def test_non_numeric_row():
    with pytest.raises(TableFormatError, match="line 3"):
        loads("x,y\ns,\n1,abc\n")


def test_missing_units_row():
    with pytest.raises(TableFormatError):
        loads("x,y\n")


def test_multiline_meta_rejected():
    with pytest.raises(TableFormatError):
        dumps(OutputTable(["x"], [""], [[1.0]], meta={"k": "a\nb"}))
