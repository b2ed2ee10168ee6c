import sys
from pathlib import Path

import numpy as np
import pytest

from lmc_abstraction import build_imdpa, case_study, imdpa_to_mdpa, partition_by_labels

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]
CASE_FILE = ROOT / "examples" / "case_study.json"

S_A = [(0.2, 0.45, 0.35), (0.18, 0.46, 0.36), (0.17, 0.44, 0.39), (0.23, 0.48, 0.29)]
S_B = [(0.02, 0.96, 0.02), (0.03, 0.97, 0.0), (0.0, 1.0, 0.0)]
EMPTY_SET_ROWS = [(0.5, 0.3, 0.2), (0.45, 0.33, 0.22), (0.44, 0.3, 0.26), (0.45, 0.34, 0.21)]


@pytest.fixture(scope="session")
def chain():
    return case_study()


@pytest.fixture(scope="session")
def partition(chain):
    return partition_by_labels(chain)


@pytest.fixture(scope="session")
def imdpa(chain):
    return build_imdpa(chain)


@pytest.fixture(scope="session")
def mdpa(imdpa):
    return imdpa_to_mdpa(imdpa)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
