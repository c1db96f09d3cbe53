import numpy as np
import pytest

from qmcstats import example_model, random_kraus_family


@pytest.fixture(scope="session")
def random_families():
    """20 seeded primitive families, d=2, k alternating between 2 and 3."""
    return [random_kraus_family(2, 3 if i % 2 else 2, seed=1000 + i)
            for i in range(20)]


@pytest.fixture(scope="session")
def coin():
    """example2 at omega = pi/2: level-1 statistics are a fair coin."""
    return example_model("example2", np.pi / 2)


@pytest.fixture(scope="session")
def xyz_third():
    """example2 at omega = pi/3 (generic primitive point)."""
    return example_model("example2", np.pi / 3)
