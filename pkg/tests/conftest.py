import os

import pytest
from hypothesis import HealthCheck, settings

from ppverify.io import data_path, load_protocol, load_stage_graphs
from ppverify.presburger import parse_formula
from ppverify.protolib import gen_majority

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def majority():
    return load_protocol(data_path("majority.json"))


@pytest.fixture(scope="session")
def fig1(majority):
    right, left = load_stage_graphs(majority, data_path("fig1.json"))
    return right, left


@pytest.fixture(scope="session")
def majority_phi():
    return parse_formula("x >= y")


@pytest.fixture(scope="session")
def gen_maj():
    return gen_majority()
