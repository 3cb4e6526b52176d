import numpy as np
import pytest

from sgmfem.femkit.assembly import FeSpacePair, assemble_blocks
from sgmfem.femkit.coefficients import affine_scalar
from sgmfem.mesh import BcConfig, build_unit_square
from sgmfem.problems import tp1_force

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_blocks(level=1, nu=0.4, coeff=None, force=None, pressure="pminus1", bc=None):
    mesh = build_unit_square(level, bc or BcConfig())
    spaces = FeSpacePair(mesh, pressure)
    coeff = coeff if coeff is not None else affine_scalar(1.0, 0.1)
    return assemble_blocks(spaces, coeff, nu, force or tp1_force(nu))
