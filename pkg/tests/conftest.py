import numpy as np
import pytest

from ardnet.model import CovariateTable, Theta, UtilityModel, abs_diff, constant


@pytest.fixture
def ages4():
    return CovariateTable({"age": [30.0, 20.0, 44.0, 24.0]})


@pytest.fixture
def full_model():
    """Direct, mutual and indirect parts all active."""
    return UtilityModel(
        direct_features=(constant(), abs_diff("age", 20.0)),
        mutual_features=(constant(),),
        indirect_features=(constant(),),
    )


@pytest.fixture
def full_theta(full_model):
    return Theta(np.array([0.5, -1.0]), np.array([0.4]), np.array([0.3]))
