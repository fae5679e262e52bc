import json
import os
import pathlib

import pytest

SOURCE_DIR = pathlib.Path(os.environ.get("SWARMSIM_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


@pytest.fixture
def configs():
    return SOURCE_DIR / "configs"


@pytest.fixture
def milling(configs):
    return json.loads((configs / "milling.json").read_text())


@pytest.fixture
def table1():
    return (SOURCE_DIR / "data" / "table1_measurements.csv").read_text()
