import numpy as np
import pytest

from vshell import geometry
from vshell.material import MaterialParams


@pytest.fixture
def flat():
    return geometry.plane_chart()


@pytest.fixture
def cylinder():
    # unit radius, angle coordinates = arclength: matches the hand values
    # b_11 = -1, a = I at y = (0, 0)
    return geometry.cylinder_chart(radius=1.0, angle=np.pi / 3, height=1.0)


@pytest.fixture
def hypar():
    return geometry.hypar_chart(slope=0.6)


@pytest.fixture
def params():
    return MaterialParams(lam=1.0, mu=1.0, theta=1.0, rho=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def duffy_tri_rule(n=8):
    """Tensor Gauss rule mapped onto the reference triangle (independent of
    the library's 7-point rule); exact to high degree for oracle quadrature."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = (x + 1.0) / 2.0
    w = w / 2.0
    pts, wts = [], []
    for i in range(n):
        for j in range(n):
            u, v = x[i], x[j]
            pts.append((u, v * (1.0 - u)))
            wts.append(w[i] * w[j] * (1.0 - u))
    return np.array(pts), np.array(wts)
