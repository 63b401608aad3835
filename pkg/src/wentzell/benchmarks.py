"""Standard interval benchmarks used by the verification suite.

Both use the unit interval with 64 elements, theta = 1/2, alpha = omega = 1,
the BlockR2 damping and n = 8 Galerkin modes.

* linear: f = g = 0, u0 = 0.01 cos(pi x), u1 = 0.
* nonlinear: f(s) = s^3, g(s) = -0.1 s, u0 = 2 cos(pi x), u1 = 0.

Absolute energy residuals scale with the square of the amplitude, which is
why the linear benchmark uses small data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .galerkin import ModalSystem, State, build_modal_system, integrate, project_initial_data
from .geometry import GeometryKind, GeometrySpec, Mesh, build_geometry
from .nonlinearity import NonlinearitySpec, cubic_f, linear_g
from .operator import (
    FractionalParams,
    OperatorBlocks,
    WentzellOperator,
    assemble_blocks,
    assemble_wentzell,
    damping_parts,
    solve_eigenproblem,
)

BENCH_ELEMENTS = 64
BENCH_N = 8
BENCH_T = 10.0


@dataclass(frozen=True)
class Setup:
    mesh: Mesh
    blocks: OperatorBlocks
    op: WentzellOperator


def interval_setup(elements: int = BENCH_ELEMENTS, length: float = 1.0) -> Setup:
    mesh = build_geometry(GeometrySpec(GeometryKind.INTERVAL, length, bulk_elements=elements))
    blocks = assemble_blocks(mesh)
    op = assemble_wentzell(blocks)
    return Setup(mesh, blocks, op.with_eig(solve_eigenproblem(op, op.n)))


def linear_spec() -> NonlinearitySpec:
    return NonlinearitySpec()


def nonlinear_spec() -> NonlinearitySpec:
    return NonlinearitySpec(f_terms=cubic_f(1.0), g_terms=linear_g(-0.1))


def benchmark_system(setup: Setup, spec: NonlinearitySpec, n: int = BENCH_N,
                     params: FractionalParams | None = None) -> ModalSystem:
    params = params or FractionalParams()
    return build_modal_system(setup.op, damping_parts(setup.op, params), spec, n, setup.mesh)


def cosine_data(setup: Setup, amplitude: float):
    x = setup.mesh.nodes[:, -1]
    return amplitude * np.cos(np.pi * x / setup.mesh.spec.length), np.zeros_like(x)


def initial_state(setup: Setup, amplitude: float, n: int = BENCH_N) -> State:
    U0, V0 = cosine_data(setup, amplitude)
    return project_initial_data(setup.op, U0, V0, n)


def run_linear(setup: Setup, dt: float, T: float = BENCH_T, sample_stride: int = 2):
    system = benchmark_system(setup, linear_spec())
    return system, integrate(system, initial_state(setup, 0.01), T, dt, sample_stride)


def run_nonlinear(setup: Setup, dt: float, T: float = BENCH_T, sample_stride: int = 2):
    system = benchmark_system(setup, nonlinear_spec())
    return system, integrate(system, initial_state(setup, 2.0), T, dt, sample_stride)
