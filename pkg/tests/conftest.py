import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from poroscale import KineticsParams, build_perforated_domain, build_unit_cell


@pytest.fixture(scope="session")
def square_cell():
    return build_unit_cell(8, ("square", 0.5))


@pytest.fixture(scope="session")
def disk_cell():
    return build_unit_cell(64, ("disk", 0.25))


@pytest.fixture(scope="session")
def small_domain(square_cell):
    return build_perforated_domain(square_cell, 4)


@pytest.fixture
def kin_reg():
    return KineticsParams(k_f=1.0, k_d=1.0, k1=1.0, k2=1.0, delta=0.1, mode="regularized")


@pytest.fixture
def kin_event():
    return KineticsParams(k_f=1.0, k_d=1.0, k1=1.0, k2=1.0, delta=0.1, mode="event")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
