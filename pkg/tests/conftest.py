import pytest

from dual_unitary_sff.config import get_rng, get_settings
from dual_unitary_sff.dual_gates import (
    DisorderDistribution,
    build_dual_gate,
    build_time_reversal_gate,
    haar_unitary,
    random_dual_params,
)

STRONG = (2.5, 2.9)


@pytest.fixture
def rng():
    return get_rng(1234, 0)


@pytest.fixture
def gate_pair():
    """Strongly interacting dual-unitary qubit gates, fixed by seed"""
    rng = get_rng(7, 0)
    return build_dual_gate(random_dual_params(2, rng, STRONG)), build_dual_gate(random_dual_params(2, rng, STRONG))


@pytest.fixture
def symmetric_pair():
    rng = get_rng(8, 0)
    return tuple(
        build_time_reversal_gate(haar_unitary(2, rng), haar_unitary(2, rng), float(rng.uniform(*STRONG)), 2)
        for _ in range(2)
    )


@pytest.fixture
def clean():
    return DisorderDistribution.clean()


@pytest.fixture
def gaussian():
    return DisorderDistribution(nu=0.5)


@pytest.fixture
def settings_env(monkeypatch):
    """Set DUSFF_* variables for one test and drop the cached settings around it"""

    def _set(**values):
        for key, value in values.items():
            monkeypatch.setenv(f"DUSFF_{key.upper()}", str(value))
        get_settings.cache_clear()

    yield _set
    monkeypatch.undo()
    get_settings.cache_clear()
