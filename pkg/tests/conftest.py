from pathlib import Path

import pytest

from curves import load_curves
from hwmodel import load_channel, load_hardware
from netmodel import load_network

DATA = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def alexnet():
    return load_network(DATA / "alexnet.net")


@pytest.fixture(scope="session")
def vgg16():
    return load_network(DATA / "vgg16.net")


@pytest.fixture(scope="session")
def hw():
    return load_hardware(DATA / "edge28nm.hw")


@pytest.fixture(scope="session")
def ch():
    return load_channel(DATA / "nlink.ch")


@pytest.fixture(scope="session")
def curves():
    return load_curves(DATA / "alexnet.curves")


@pytest.fixture(scope="session")
def resnet50():
    return load_network(DATA / "resnet50.net")
