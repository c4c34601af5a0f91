import os

import numpy as np
import pytest

# Fast deterministic PRF for the suite; individual tests opt back into the
# hash-based one by deleting the variable.
os.environ.setdefault("NCAUDIT_TEST_PRF", "1")

from ncaudit import spacemac  # noqa: E402


@pytest.fixture(autouse=True)
def _fresh_mac_cache():
    spacemac.clear_cache()
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(0xC0FFEE)
