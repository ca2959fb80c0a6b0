import pytest

from bounded_agents.automaton import AFamilyParams, build_a_family
from bounded_agents.dynamic_env import validate_setting


@pytest.fixture(scope="session")
def paper_setting():
    """The four-signal experiment setting used throughout the suite."""
    return validate_setting(
        k=4, pG=(0.4, 0.3, 0.2, 0.1), pB=(0.1, 0.2, 0.3, 0.4),
        xG=1.0, xB=-1.0, pi=0.001,
    )


@pytest.fixture(scope="session")
def trivial_setting():
    return validate_setting(
        k=4, pG=(0.25, 0.25, 0.25, 0.25), pB=(0.25, 0.25, 0.25, 0.25),
        xG=1.0, xB=-1.0, pi=0.001,
    )


@pytest.fixture(scope="session")
def ladder_policy_5(paper_setting):
    """Five-state ladder with the good/bad one-signal partition."""
    return build_a_family(
        paper_setting.k,
        AFamilyParams(n=4, p_exp=0.0273668, pos=frozenset({1}), neg=frozenset({4})),
    )
