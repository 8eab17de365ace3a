import numpy as np
import pytest

from corrstruct.model import CorrelationStructure, MultiSetSample


def null_sample(K=4, I=5, N=1000, seed=0) -> MultiSetSample:
    rng = np.random.default_rng(seed)
    return MultiSetSample(tuple(rng.standard_normal((I, N)) for _ in range(K)))


def empty_structure(K, J) -> CorrelationStructure:
    return CorrelationStructure(K=K, sets=(frozenset(),) * J, rho=(0.0,) * J)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
