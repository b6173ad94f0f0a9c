import io

import numpy as np
import pytest

from ksl.geometry import decay_report
from ksl.io import format_value, read_profile, to_json, write_profile, write_table
from ksl.soliton import flat_profile


def test_profile_round_trip_is_bit_exact(make_soliton):
    p = make_soliton(3, 1.5)
    back = read_profile(write_profile(p))
    for name in ("t", "phi", "phi1", "phi2", "phi3"):
        np.testing.assert_array_equal(getattr(back, name), getattr(p, name))
    assert back.params == p.params and back.n == 3 and back.gauge == p.gauge


def test_round_trip_through_file(tmp_path, flat2):
    path = tmp_path / "flat.csv"
    with open(path, "w", newline="") as fh:
        write_profile(flat2, fh)
    with open(path, newline="") as fh:
        back = read_profile(fh)
    assert back.kind == "custom"
    np.testing.assert_array_equal(back.phi, flat2.phi)


def test_downstream_statistics_survive(make_soliton):
    p = make_soliton(2, 2.0)
    a = decay_report(p).constants
    b = decay_report(read_profile(write_profile(p))).constants
    for key in a:
        assert b[key] == pytest.approx(a[key], rel=1e-12)


def test_output_is_deterministic(make_soliton):
    p = make_soliton(2, 2.0)
    assert write_profile(p) == write_profile(p)
    assert write_profile(p).count("\r\n") == len(p) + 2


@pytest.mark.parametrize(
    "text",
    [
        "t,phi,phi1,phi2,phi3\r\n0,1,1,1,1\r\n",
        "# {not json\r\nt,phi,phi1,phi2,phi3\r\n",
        '# {"kind": "custom", "n": 2}\r\nt,phi\r\n0,1\r\n1,2\r\n',
        '# {"kind": "custom", "n": 2}\r\nt,phi,phi1,phi2,phi3\r\n0,1,1,1,1\r\n',
        '# {"kind": "odd", "n": 2}\r\nt,phi,phi1,phi2,phi3\r\n0,1,1,1,1\r\n1,2,2,2,2\r\n',
        '# {"kind": "custom", "n": 2}\r\nt,phi,phi1,phi2,phi3\r\n0,1,1,x,1\r\n1,2,2,2,2\r\n',
    ],
)
def test_malformed_input(text):
    with pytest.raises(ValueError):
        read_profile(text)


def test_format_value():
    assert format_value(True) == "true"
    assert format_value(np.float64(0.1)) == "0.1"
    assert format_value(float("inf")) == "inf"
    assert format_value(float("nan")) == "nan"
    assert format_value(np.int64(3)) == "3"


def test_table_quoting():
    text = write_table([{"a": "x,y", "b": 1.5}], ("a", "b"))
    assert text == 'a,b\r\n"x,y",1.5\r\n'


def test_json_is_stable():
    text = to_json({"b": np.float64(1.0), "a": [float("inf"), np.int64(2)]})
    assert text == '{\n  "a": [\n    null,\n    2\n  ],\n  "b": 1.0\n}\n'


def test_flat_profile_values():
    p = read_profile(io.StringIO(write_profile(flat_profile(1, -1, 1, 5))))
    np.testing.assert_array_equal(p.phi, np.exp(p.t))
