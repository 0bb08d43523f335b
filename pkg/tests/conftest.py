import pytest

from wulffkit.anisotropy import ConstantAnisotropy, HarmonicAnisotropy, QuadraticAnisotropy
from wulffkit.hypersurface import Ellipsoid, RadialGraph, Torus

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# anisotropies on S^2 used across modules
F_ONE = ConstantAnisotropy(2, 1.0)
F_QUAD = QuadraticAnisotropy(2, ((4.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)))
F_Y20 = HarmonicAnisotropy(2, (((2, 0), 0.05),))
# no antipodal symmetry, so orientation conventions matter
F_ODD = HarmonicAnisotropy(2, (((2, 2), 0.1), ((3, 1), 0.05), ((1, 0), 0.05)))

SPHERE = RadialGraph(dimension=2)
ELLIPSOID = Ellipsoid(dimension=2, axes=(2.0, 1.5, 1.0))
PERTURBED = RadialGraph(dimension=2, coefficients=(((2, 2), 0.1),))
TORUS = Torus(R=2.0, rho=0.5)


@pytest.fixture(params=[F_ONE, F_QUAD, F_Y20, F_ODD], ids=["one", "quad", "y20", "odd"])
def aniso(request):
    return request.param
