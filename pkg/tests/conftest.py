import numpy as np
import pytest

from arlib.errors import OriginNotSingular
from arlib.geometry.structure import load_structure, loads_structure


@pytest.fixture(scope="session")
def grushin():
    return load_structure("grushin")


@pytest.fixture(scope="session")
def r4():
    return load_structure("r4")


@pytest.fixture(scope="session")
def strongly_regular():
    return load_structure("strongly_regular")


@pytest.fixture(scope="session")
def flat():
    return load_structure("flat", tolerate=(OriginNotSingular,))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def planar(a11, measure="1", validate=False, regularity="general2d"):
    """A one-dimensional frame X1 = a11 d/dz1 on the default chart."""
    return loads_structure(
        f"""
n = 1
chart = [-1.0, 1.0, -1.0, 1.0]
regularity = "{regularity}"
measure = "{measure}"
A = ["{a11}"]
""",
        name=f"planar[{a11}]",
        validate=validate,
    )
