import numpy as np
import pytest

from h2bem import kernels
from h2bem.containers import AssemblyContext, assemble_dense
from h2bem.mesh import sphere_mesh


@pytest.fixture(scope="session")
def sphere1():
    return sphere_mesh(1)


@pytest.fixture(scope="session")
def sphere2():
    return sphere_mesh(2)


@pytest.fixture(scope="session")
def sphere3():
    return sphere_mesh(3)


@pytest.fixture(scope="session")
def ctx1(sphere1):
    return AssemblyContext(sphere1)


@pytest.fixture(scope="session")
def ctx2(sphere2):
    return AssemblyContext(sphere2)


@pytest.fixture(scope="session")
def dense_g1(ctx1):
    return assemble_dense(ctx1, kernels.SLP, 4)


@pytest.fixture(scope="session")
def dense_g2(ctx2):
    return assemble_dense(ctx2, kernels.SLP, 4)


@pytest.fixture(scope="session")
def dense_k2(ctx2):
    return assemble_dense(ctx2, kernels.DLP, 4)


@pytest.fixture(scope="session")
def dense_w2(ctx2):
    return assemble_dense(ctx2, kernels.HYP, 4)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
