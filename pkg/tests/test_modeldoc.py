import numpy as np
import pytest

from nsmc.modeldoc import ModelDocError, load, parse_text, parse_number

BASIC = """\
# comment line
measure = transient   # trailing comment
n = 12
reward = 1 0
mu = 1/3 2/3
matrix base
  0.7 0.3
  0.4 0.6
end
"""


def test_parse_basic():
    doc = parse_text(BASIC)
    assert doc.measure == "transient"
    assert doc.get("n") == 12
    assert np.allclose(doc.get("mu"), [1 / 3, 2 / 3])
    assert doc.matrices["base"].rows.shape == (2, 2)
    assert doc.line_of("reward") == 4
    assert doc.matrices["base"].line == 6


def test_fractions_round_once():
    assert parse_number("1/3") == 1 / 3
    assert parse_number("0.1") == 0.1
    assert parse_number("-2.5e-3") == -0.0025
    with pytest.raises(ModelDocError):
        parse_number("1/0")
    with pytest.raises(ModelDocError):
        parse_number("abc")


def test_steps_and_named_mu():
    doc = parse_text("measure = transient\nmu = uniform\nmatrix step\n1\nend\nmatrix step\n1\nend\n")
    assert len(doc.steps) == 2
    assert doc.get("mu") == "uniform"


@pytest.mark.parametrize("text,line,fragment", [
    ("measure = transient\nfoo = 1\n", 2, "unknown key"),
    ("measure = transient\nn = 1.5\n", 2, "integer"),
    ("measure = transient\nreward = 1 x\n", 2, "not a number"),
    ("measure = transient\nmatrix base\n1 0\n0 1 0\nend\n", 2, "unequal"),
    ("measure = transient\nmatrix base\n1 0\nend\n", 2, "not square"),
    ("measure = transient\nmatrix base\n1\n", 2, "missing 'end'"),
    ("measure = transient\nn = 1\nn = 2\n", 3, "duplicate"),
    ("measure = nope\n", 1, "unknown measure"),
    ("measure = transient\nmatrix bogus\n", 2, "matrix NAME"),
    ("measure = transient\nhold_last = maybe\n", 2, "true or false"),
    ("measure = transient\njust words\n", 2, "key = value"),
])
def test_errors_carry_line(text, line, fragment):
    with pytest.raises(ModelDocError) as exc:
        parse_text(text, source="m.txt")
    assert exc.value.line == line
    assert str(exc.value).startswith("m.txt:%d:" % line)
    assert fragment in str(exc.value)


def test_missing_measure():
    with pytest.raises(ModelDocError, match="missing 'measure"):
        parse_text("n = 3\n")


def test_load_from_file(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text(BASIC)
    assert load(p).source == str(p)
