import pytest

from eonplan.net import load_topology
from eonplan.params import ImpairmentParams

from pathlib import Path

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="session")
def table2_params():
    """Reference link budget with the whole-slot 12.5 GHz electrical filter."""
    return ImpairmentParams()


@pytest.fixture(scope="session")
def experiment_params():
    """Same budget with the per-subcarrier 156.25 MHz electrical filter."""
    return ImpairmentParams(electrical_bandwidth_hz=156.25e6)


@pytest.fixture(scope="session")
def sixnode():
    return load_topology(CONFIG_DIR / "sixnode.json")


@pytest.fixture(scope="session")
def nsfnet():
    return load_topology(CONFIG_DIR / "nsfnet.json")
