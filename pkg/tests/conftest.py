import numpy as np
import pytest

from greensplit import dynamics, net_model, scenario


@pytest.fixture(scope="session")
def single_net():
    return scenario.load("single_road")


@pytest.fixture(scope="session")
def four_net():
    return scenario.load("four_intersections")


@pytest.fixture(scope="session")
def four_schedule(four_net):
    return net_model.uniform_schedule(four_net)


@pytest.fixture(scope="session")
def four_modes(four_net, four_schedule):
    return dynamics.assemble_modes(four_net, four_schedule)


@pytest.fixture(scope="session")
def four_output(four_net):
    return dynamics.output_map(four_net)


@pytest.fixture(scope="session")
def four_report(four_modes, four_output):
    from greensplit.optimizer import optimize
    return optimize(four_modes, four_output, np.ones(four_modes.n))


def make_hurwitz(rng: np.random.Generator, n: int) -> np.ndarray:
    """Random dense matrix shifted left of the imaginary axis."""
    a = rng.standard_normal((n, n))
    alpha = np.linalg.eigvals(a).real.max()
    return a - (alpha + 0.5 + rng.uniform(0.0, 1.0)) * np.eye(n)


@pytest.fixture
def hurwitz_factory():
    return make_hurwitz
