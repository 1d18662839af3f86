import os

import pytest

import chipcost as cc

HERE = os.path.dirname(__file__)
DATA = os.path.join(HERE, "data")
CONFIGS = os.path.join(os.path.dirname(HERE), "configs")


def data_path(*parts: str) -> str:
    return os.path.join(DATA, *parts)


def config_path(*parts: str) -> str:
    return os.path.join(CONFIGS, *parts)


@pytest.fixture(scope="session")
def handcheck_library():
    return cc.parse_library(data_path("handcheck", "library.xml"))


@pytest.fixture(scope="session")
def handcheck_system(handcheck_library):
    return cc.parse_system(data_path("handcheck", "system.xml"),
                           data_path("handcheck", "netlist.xml"),
                           handcheck_library)


@pytest.fixture(scope="session")
def gp_library():
    return cc.parse_library(config_path("graph_processor", "library.xml"))


@pytest.fixture(scope="session")
def gp_system(gp_library):
    return cc.parse_system(config_path("graph_processor", "system.xml"),
                           config_path("graph_processor", "netlist.xml"),
                           gp_library)
