import numpy as np
import pytest

from fatattractor.potentials import polynomial, quad_eps, quad_sym
from fatattractor.solver import solve_subaction
from fatattractor.symbolic import SymbolSeq

LAM = 0.51


def seq(text: str) -> SymbolSeq:
    return SymbolSeq.parse(text)


@pytest.fixture(scope="session")
def qsym():
    return quad_sym()


@pytest.fixture(scope="session")
def b_qsym(qsym):
    return solve_subaction(qsym, LAM, n=4096).b


@pytest.fixture(scope="session")
def aaa():
    return quad_eps(0.05, 0.2)


@pytest.fixture(scope="session")
def b_aaa(aaa):
    return solve_subaction(aaa, LAM, n=4096).b


@pytest.fixture(scope="session")
def const():
    return polynomial([0.7], name="const")


@pytest.fixture(scope="session")
def b_const(const):
    return solve_subaction(const, LAM, n=256).b


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
