import numpy as np
import pytest

from stspec import LorentzianFactorizedModel, RegisterLayout

TWO_PI = 2.0 * np.pi

# Reference configuration used throughout: four-qubit irregular block with
# x_c = 1.5 L0, line positions at 0.2 k_d and 0.2 * 2 pi / t_c.
PAPER_POSITIONS = (0.19, 0.39, 0.56, 0.81)


@pytest.fixture(scope="session")
def paper_model():
    return LorentzianFactorizedModel(nu_s=1.0, nu_t=1.0, xc=1.5, tc=1.0,
                                     ks=0.2 * TWO_PI, ws=0.2 * TWO_PI)


@pytest.fixture(scope="session")
def paper_layout():
    return RegisterLayout(PAPER_POSITIONS, 1.0)
