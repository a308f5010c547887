import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from anelastic.basis import SpectralField, make_basis

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# lines collected by the acceptance tests, echoed in the terminal summary
ACCEPTANCE_LINES = []


def random_field(m, parity, rng, decay=0.0):
    """Hermitian random field of order ``m`` (optionally with decaying spectrum)."""
    basis = make_basis(m)
    c = rng.standard_normal(basis.shape) + 1j * rng.standard_normal(basis.shape)
    c = 0.5 * (c + np.conj(c[::-1]))
    if decay:
        k1, k2 = np.meshgrid(basis.k1, basis.k2, indexing="ij")
        c *= (1.0 + k1 ** 2 + k2 ** 2) ** (-decay / 2)
    return SpectralField(basis, parity, c)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
