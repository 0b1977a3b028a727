import numpy as np
import pytest

from irisindex.model import KeyPortion, Stage, parse_label


def make_key(values, label="s1_L", sample_id="x", stage=Stage.RAW):
    if np.isscalar(values):
        values = np.full(4096, float(values))
    return KeyPortion(np.asarray(values, dtype=float), parse_label(label), sample_id, stage)


@pytest.fixture
def rng():
    return np.random.default_rng(20231016)


# one summary line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
