import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture(scope="session")
def design_4prb():
    """Two-sided 4-PRB design, half overlap, two transition bins, 10 dB ceiling."""
    from fcwave.optimizer import DesignProblem, optimize_weights

    p = DesignProblem.from_table(4, 0.5, 2, 10.0, "both")
    mask, rep = optimize_weights(p)
    return p, mask, rep


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_log(pytestconfig):
    """criterion number -> list of (ok, detail) for the summary table."""
    return pytestconfig.stash.setdefault(_ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_ACCEPTANCE, None)
    if not log:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(log):
        parts = log[n]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d}: {status}  " + "; ".join(d for _, d in parts))
