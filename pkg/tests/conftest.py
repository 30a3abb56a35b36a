import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

import logicgeo as lg

ALGEBRA_DIR = os.path.join(os.path.dirname(__file__), "..", "algebras")


def _load(stem):
    return lg.load_algebra(os.path.join(ALGEBRA_DIR, f"{stem}.alg"))


@pytest.fixture(scope="session")
def z2():
    return _load("z2")


@pytest.fixture(scope="session")
def z3():
    return _load("z3")


@pytest.fixture(scope="session")
def z4():
    return _load("z4")


@pytest.fixture(scope="session")
def k4():
    return _load("k4")


@pytest.fixture(scope="session")
def z2c():
    return _load("z2c")


@pytest.fixture(scope="session")
def z3c():
    return _load("z3c")


@pytest.fixture(scope="session")
def z3r():
    return _load("z3r")


@pytest.fixture(scope="session")
def z2a(z2):
    return lg.adjoin_constants(z2)


@pytest.fixture(scope="session")
def z3a(z3):
    return lg.adjoin_constants(z3)


@pytest.fixture(scope="session")
def X1():
    return lg.VarContext.of("x1")


@pytest.fixture(scope="session")
def X2():
    return lg.VarContext.of("x1,x2")


@pytest.fixture(scope="session")
def X3():
    return lg.VarContext.of("x1,x2,x3")


@pytest.fixture(scope="session")
def saturated_families():
    """One saturated constant-free value family per (algebra, sort),
    shared across the suite because the deep ones take seconds to build."""
    cache = {}

    def get(alg, sort, max_depth=8):
        key = (alg.name, sort.names)
        if key not in cache:
            frag = lg.Fragment(sort, max_depth, alg.sig, with_adjoined=False)
            fam = lg.build_value_family((alg,), frag, stop_when_stable=True)
            assert fam.saturation_depth is not None, (
                f"no saturation for {alg.name} over {sort.label()}"
            )
            cache[key] = fam
        return cache[key]

    return get
