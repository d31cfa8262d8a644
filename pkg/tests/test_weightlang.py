import math

import pytest

from cknweights import weights as W
from cknweights.errors import ParseError, SpecError
from cknweights.weightlang import load_table, parse_weight


@pytest.mark.parametrize("text, expected", [
    ("pow(1.5)", W.power(1.5)),
    ("expinv(1,-)", W.exp_inv_power(-1, 1.0)),
    (" expinv( 2 , + ) ", W.exp_inv_power(1, 2.0)),
    ("scale(3,pow(2))", W.scale(3.0, W.power(2.0))),
    ("prod(pow(1),expinv(0.5,-))", W.product(W.power(1.0), W.exp_inv_power(-1, 0.5))),
    ("pow(-1e0)", W.power(-1.0)),
])
def test_grammar(text, expected):
    assert parse_weight(text) == expected


def test_eta_is_attached():
    spec = parse_weight("pow(-1)", math.inf)
    assert math.isinf(spec.eta)


@pytest.mark.parametrize("text, pos", [
    ("pow(1.5", 7),
    ("powr(1)", 0),
    ("expinv(1,*)", 9),
    ("pow(1) x", 7),
    ("", 0),
])
def test_errors_carry_position(text, pos):
    with pytest.raises(ParseError) as info:
        parse_weight(text)
    assert info.value.position == pos
    assert "^" in str(info.value)


def test_table_file(tmp_path):
    path = tmp_path / "w.csv"
    path.write_text("t,w\n0.1,1\n0.5,3\n1.0,2\n")
    spec = parse_weight("table(w.csv)", base_dir=tmp_path)
    assert W.evaluate(spec, 0.3) == pytest.approx(2.0)
    assert load_table(path).family == "table"


def test_bad_table_files(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,y\n0.1,1\n")
    with pytest.raises(SpecError):
        load_table(bad)
    bad.write_text("t,w\n0.1,abc\n")
    with pytest.raises(SpecError):
        load_table(bad)
    with pytest.raises((SpecError, OSError)):
        parse_weight("table(missing.csv)", base_dir=tmp_path)
