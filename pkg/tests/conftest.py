"""
Shared fixtures for the Tailwise test suite.
"""
import pytest

from distributions import CompoundPoisson, Exponential, Lognormal, MomentSummary, ParetoI, moment_summary


@pytest.fixture
def exp1():
    return Exponential(1.0)


@pytest.fixture
def pareto_5_10():
    return ParetoI(5.0, 10.0)


@pytest.fixture
def lognormal_5():
    return Lognormal(5.0, 1.21)


@pytest.fixture
def cp_lambda4():
    """Compound Poisson with frequency 4 and lognormal(3, 1.21) severity."""
    return CompoundPoisson(4.0, Lognormal(3.0, 1.21))


@pytest.fixture
def cp_lambda4_moments(cp_lambda4) -> MomentSummary:
    return moment_summary(cp_lambda4)


@pytest.fixture
def exp1_moments(exp1) -> MomentSummary:
    return moment_summary(exp1)


@pytest.fixture
def heavy_cp_moments() -> MomentSummary:
    """Compound Poisson with frequency 4 and lognormal(3, 25) severity."""
    return moment_summary(CompoundPoisson(4.0, Lognormal(3.0, 25.0)))
