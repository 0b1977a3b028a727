import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irisindex.errors import LabelParseError, SizeError, DataError
from irisindex.model import (
    EyeLabel, IntrinsicIrisCode, KeyPortion, NormalizedIris, QualityReport, Reason, Side, Stage,
    format_label, parse_label,
)


@pytest.mark.parametrize("text, subject, side", [
    ("04233_L", "04233", Side.LEFT),
    ("04233_R", "04233", Side.RIGHT),
    ("synth_0001_L", "synth_0001", Side.LEFT),
])
def test_parse_label(text, subject, side):
    assert parse_label(text) == EyeLabel(subject, side)


@pytest.mark.parametrize("text", ["04233", "04233_X", "_L", "a b_L", "a,b_R", "", "04233_l"])
def test_parse_label_rejects(text):
    with pytest.raises(LabelParseError):
        parse_label(text)


def test_parse_error_names_token():
    with pytest.raises(LabelParseError, match="'X'"):
        parse_label("04233_X")


def test_format_label():
    assert format_label(EyeLabel("04233", Side.LEFT)) == "04233_L"
    assert format_label(EyeLabel("a", Side.RIGHT)) == "a_R"


subjects = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Zs", "Zl", "Zp", "Cc"), blacklist_characters=","),
    min_size=1, max_size=20,
).filter(lambda s: not any(c.isspace() for c in s))


@settings(max_examples=1000)
@given(subjects, st.sampled_from(list(Side)))
def test_label_round_trip(subject, side):
    label = EyeLabel(subject, side)
    assert parse_label(format_label(label)) == label
    assert format_label(parse_label(format_label(label))) == format_label(label)


def test_label_equality_is_componentwise():
    assert EyeLabel("7", Side.LEFT) == parse_label("7_L")
    assert EyeLabel("7", Side.LEFT) != EyeLabel("7", Side.RIGHT)
    assert len({parse_label("7_L"), parse_label("7_L")}) == 1


def test_containers_reject_wrong_size():
    lab = parse_label("a_L")
    with pytest.raises(SizeError):
        KeyPortion(np.zeros(4095), lab, "s")
    with pytest.raises(SizeError):
        NormalizedIris(np.zeros((64, 511)), lab, "s")
    with pytest.raises(SizeError):
        IntrinsicIrisCode(np.zeros(0), lab)


def test_containers_reject_bad_values():
    lab = parse_label("a_L")
    with pytest.raises(DataError):
        NormalizedIris(np.full((64, 512), 1.5), lab, "s")
    with pytest.raises(DataError):
        KeyPortion(np.full(4096, np.nan), lab, "s")
    with pytest.raises(DataError):
        KeyPortion(np.full(4096, 2.0), lab, "s", Stage.PREPROCESSED)
    # raw keys may hold any finite values
    KeyPortion(np.full(4096, 2.0), lab, "s", Stage.RAW)


def test_containers_are_immutable():
    key = KeyPortion(np.zeros(4096), parse_label("a_L"), "s")
    with pytest.raises(ValueError):
        key.values[0] = 1.0


def test_quality_report_consistency():
    QualityReport(True, Reason.OK, 0, 0.1)
    with pytest.raises(ValueError):
        QualityReport(True, Reason.MAD_OUT_OF_RANGE, 0, 0.1)
    with pytest.raises(ValueError):
        QualityReport(False, Reason.OK, 0, 0.1)
