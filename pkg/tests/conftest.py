from __future__ import annotations

import pytest

from errorfloor.code_graph import load_code


@pytest.fixture(scope="session")
def tanner():
    return load_code("tanner155").graph


@pytest.fixture(scope="session")
def margulis7():
    return load_code("margulis:7").graph
