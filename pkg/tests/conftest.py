from functools import lru_cache
from importlib import resources

import pytest
from hypothesis import settings

from tracebound.certificate import Certificate, rebuild_bundle

settings.register_profile("default", deadline=None, print_blob=True)
settings.load_profile("default")

COR19_POLYS = ["x", "x-1", "x-2", "x^2-3x+1", "x^3-5x^2+6x-1", "x^4-7x^3+13x^2-7x+1", "x^4-7x^3+14x^2-8x+1"]


def fixture_path(name: str):
    return resources.files("tracebound") / "fixtures" / f"{name}.json"


@lru_cache(maxsize=None)
def load_cert(name: str) -> Certificate:
    return Certificate.load(fixture_path(name))


@lru_cache(maxsize=None)
def load_bundle(name: str):
    return rebuild_bundle(load_cert(name))


@pytest.fixture(scope="session")
def cor19_cert():
    return load_cert("cor19")


@pytest.fixture(scope="session")
def cor19_bundle():
    return load_bundle("cor19")


@lru_cache(maxsize=None)
def load_report(name: str):
    from tracebound.certificate import certify

    return certify(load_cert(name))


FIXTURES = ["schur", "siegel", "cor15", "cor16", "cor17", "cor18", "cor19"]
