import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fraclap.spectral import Domain, build_basis

settings.register_profile("fraclap", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("fraclap")


def box_basis(dim=1, modes=16, length=np.pi, oversample=4):
    dom = Domain((length,) * dim, (modes,) * dim)
    return build_basis(dom, (modes,) * dim, oversample)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str):
    """Store one acceptance line; printed in the terminal summary."""
    ACCEPTANCE[criterion] = (bool(ok), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
