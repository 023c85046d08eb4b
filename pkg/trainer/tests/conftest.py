import shutil

import pytest


@pytest.fixture(scope="session")
def dyncarto_bin():
    path = shutil.which("dyncarto")
    if path is None:
        pytest.fail("the dyncarto CLI must be installed (pip install -e .. from the repo root)")
    return path
