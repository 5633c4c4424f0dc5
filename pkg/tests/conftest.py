import sys
from pathlib import Path

import pytest

from seasonalvol.config import load_config

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
DATA = Path(__file__).parent / "data"
sys.path.insert(0, str(Path(__file__).parent))

TABLE1 = ("sinusoid", "exp_sinusoid", "sawtooth", "triangle", "spiked")


def table1_model(name):
    return load_config(CONFIGS / f"table1_{name}.cfg").model


@pytest.fixture(scope="session")
def table1_models():
    return {name: table1_model(name) for name in TABLE1}


@pytest.fixture(scope="session")
def table4():
    return load_config(CONFIGS / "table4_cases.cfg")


@pytest.fixture(scope="session")
def table2():
    return {k: load_config(CONFIGS / f"table2_case{k}.cfg").model for k in (1, 2)}
