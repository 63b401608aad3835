import numpy as np
import pytest

from wentzell.benchmarks import interval_setup
from wentzell.geometry import GeometryKind, GeometrySpec, build_geometry
from wentzell.operator import assemble_blocks, assemble_wentzell, solve_eigenproblem


@pytest.fixture(scope="session")
def interval64():
    return interval_setup(64)


@pytest.fixture(scope="session")
def slab():
    spec = GeometrySpec(GeometryKind.PERIODIC_SLAB, 1.0, 2.0 * np.pi, bulk_elements=8, periodic_points=8)
    mesh = build_geometry(spec)
    blocks = assemble_blocks(mesh)
    op = assemble_wentzell(blocks)
    return mesh, blocks, op.with_eig(solve_eigenproblem(op, op.n))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
