import numpy as np
import pytest

from psmkit.kinematics import bundled_psm_chain


@pytest.fixture(scope="session")
def psm_chain():
    return bundled_psm_chain()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def client():
    from fastapi.testclient import TestClient

    from psmkit.service import app

    return TestClient(app)
