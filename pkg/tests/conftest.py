import warnings

import numpy as np
import pytest

from sovchain import make_chain, normalize_twist
from sovchain.errors import SingularTwistWarning
from sovchain.transfer import TransferEvaluator

# full (non-diagonal, b != 0) invertible simple twist shared by the reference chains
TWIST_FULL = np.array([[1.1 + 0.4j, 0.8 - 0.3j],
                       [0.45 + 0.65j, -0.7 + 1.2j]])
TWIST_DIAG = np.array([[1.7 + 0.5j, 0.0],
                       [0.0, 0.6 - 0.8j]])

XI_N2 = (0.31 - 1.2j, 2.86 + 0.77j)
XI_N3 = (0.42 - 1.1j, 2.93 + 0.81j, -2.17 + 2.33j)


@pytest.fixture(scope="session")
def chain1():
    """N=1, two_s=1, xi=0, eta=1, K=diag(2,1): every value hand-checkable."""
    return make_chain(1.0, [(1, 0.0)], np.diag([2.0, 1.0]).astype(complex), seed=3)


@pytest.fixture(scope="session")
def chain12():
    """Reference chain: N=2, two_s=(1,2), D=6, full twist."""
    return make_chain(1.0, [(1, XI_N2[0]), (2, XI_N2[1])], TWIST_FULL, seed=7)


@pytest.fixture(scope="session")
def chain12_diag():
    """b = 0 variant of the reference chain (diagonal twist)."""
    return make_chain(1.0, [(1, XI_N2[0]), (2, XI_N2[1])], TWIST_DIAG, seed=11)


@pytest.fixture(scope="session")
def chain112():
    """N=3, two_s=(1,1,2), D=12."""
    sites = [(1, XI_N3[0]), (1, XI_N3[1]), (2, XI_N3[2])]
    return make_chain(1.0, sites, TWIST_FULL, seed=13)


@pytest.fixture(scope="session")
def chain12_k2zero():
    """Degenerate twist diag(2, 0) on the reference sites."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularTwistWarning)
        twist = normalize_twist(np.diag([2.0, 0.0]).astype(complex))
    return make_chain(1.0, [(1, XI_N2[0]), (2, XI_N2[1])], twist, seed=7)


@pytest.fixture(scope="session")
def ev12(chain12):
    return TransferEvaluator(chain12)


@pytest.fixture(scope="session")
def ev112(chain112):
    return TransferEvaluator(chain112)
