import numpy as np
import pytest

ACCEPTANCE_LINES = []


def maxabs(M):
    return float(np.max(np.abs(M), initial=0.0))


def align_row_phases(U, ref):
    """Multiply each row of ``U`` by the unit phase that best matches ``ref``."""
    out = np.array(U, dtype=complex)
    for k in range(out.shape[0]):
        ov = np.vdot(out[k], ref[k])
        out[k] *= ov / abs(ov)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240321)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
