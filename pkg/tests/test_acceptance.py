"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""

import time

import numpy as np
import pytest
import scipy.linalg as sla

from conftest import ACCEPTANCE_LINES
from wentzell.benchmarks import (
    BENCH_N,
    benchmark_system,
    cosine_data,
    interval_setup,
    linear_spec,
    nonlinear_spec,
    run_linear,
    run_nonlinear,
)
from wentzell.config import config_from_dict
from wentzell.galerkin import convergence_study, nonlinear_force, potential, verify_weak_residual
from wentzell.geometry import GeometryKind, GeometrySpec, build_geometry, compute_measures
from wentzell.nonlinearity import (
    NonlinearitySpec,
    PowerTerm,
    Verdict,
    check_balance,
    cubic_f,
    default_grid,
    estimate_poincare_constant,
    linear_g,
    scenario_checks,
)
from wentzell.operator import (
    FractionalParams,
    Realization,
    apply_fractional_power,
    assemble_blocks,
    assemble_wentzell,
    build_damping_matrix,
    damping_parts,
    min_generalized_eigenvalue,
    solve_eigenproblem,
)
from wentzell.runner import run


def report(number, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {name} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def bench():
    setup = interval_setup()
    return {"setup": setup, "linear": {}, "nonlinear": {}, "seconds": {}}


def trajectory(bench, kind, dt):
    cache = bench[kind]
    if dt not in cache:
        t0 = time.perf_counter()
        fn = run_linear if kind == "linear" else run_nonlinear
        cache[dt] = fn(bench["setup"], dt)
        bench["seconds"][(kind, dt)] = time.perf_counter() - t0
    return cache[dt]


def _op(spec):
    mesh = build_geometry(spec)
    blocks = assemble_blocks(mesh)
    op = assemble_wentzell(blocks)
    return mesh, blocks, op.with_eig(solve_eigenproblem(op, op.n))


def test_criterion_01_constant_mode():
    specs = {
        "interval": GeometrySpec(GeometryKind.INTERVAL, 1.0, bulk_elements=255),
        "slab": GeometrySpec(GeometryKind.PERIODIC_SLAB, 1.0, 2 * np.pi, bulk_elements=31, periodic_points=8),
    }
    worst, slowest, flat = 0.0, 0.0, True
    for spec in specs.values():
        t0 = time.perf_counter()
        _, _, op = _op(spec)
        slowest = max(slowest, time.perf_counter() - t0)
        assert op.n == 256
        worst = max(worst, abs(op.eig.values[0] - 1.0))
        w = op.eig.vectors[:, 0]
        flat &= bool(np.ptp(w) <= 1e-9 * abs(w[0]))
    ok = worst <= 1e-9 and flat and slowest < 1.0
    report(1, "constant-mode anchor", ok,
           f"max |L1-1| = {worst:.2e} <= 1e-9, constant eigenvector = {flat}, runtime {slowest:.2f}s < 1s at 256 unknowns")


def test_criterion_02_spectral_calculus():
    t0 = time.perf_counter()
    _, _, op = _op(GeometrySpec(GeometryKind.INTERVAL, 1.0, bulk_elements=511))
    x = np.random.default_rng(0).standard_normal(op.n)
    Ax = op.A @ x
    e1 = np.linalg.norm(apply_fractional_power(op.eig, op.M, 1.0, x) - Ax) / np.linalg.norm(Ax)
    half = apply_fractional_power(op.eig, op.M, 0.5, x)
    twice = apply_fractional_power(op.eig, op.M, 0.5, sla.solve(op.M, half, assume_a="pos"))
    e2 = np.linalg.norm(twice - Ax) / np.linalg.norm(Ax)
    one = np.ones(op.n)
    M1 = op.M @ one
    e3 = max(np.linalg.norm(apply_fractional_power(op.eig, op.M, th, one) - M1) / np.linalg.norm(M1)
             for th in np.linspace(0.0, 1.0, 11))
    elapsed = time.perf_counter() - t0
    ok = e1 <= 1e-9 and e2 <= 1e-8 and e3 <= 1e-9 and elapsed < 5.0
    report(2, "spectral-calculus laws", ok,
           f"A^1 rel err {e1:.1e} <= 1e-9, half-power composition {e2:.1e} <= 1e-8, "
           f"constants {e3:.1e}, runtime {elapsed:.2f}s < 5s at {op.n} unknowns")


def test_criterion_03_damping_realizations():
    ops = [_op(GeometrySpec(GeometryKind.INTERVAL, 1.0, bulk_elements=64))[2],
           _op(GeometrySpec(GeometryKind.PERIODIC_SLAB, 1.0, 2 * np.pi, bulk_elements=8, periodic_points=8))[2]]
    agree = 0.0
    for op in ops:
        for omega in (1.0, 0.5, 0.1):
            d1 = build_damping_matrix(op, FractionalParams(1.0, 1.0, omega, Realization.SPECTRAL_R1))
            d2 = build_damping_matrix(op, FractionalParams(1.0, 1.0, omega, Realization.BLOCK_R2))
            agree = max(agree, np.max(np.abs(d1 - d2)))
    lowest = np.inf
    for op in ops:
        for theta in (0.5, 0.75, 1.0):
            for alpha in (0.25, 0.5, 1.0):
                for omega in (0.1, 0.5, 1.0):
                    lowest = min(lowest, min_generalized_eigenvalue(
                        build_damping_matrix(op, FractionalParams(theta, alpha, omega)), op.M))
                    if alpha == 1.0:
                        lowest = min(lowest, min_generalized_eigenvalue(build_damping_matrix(
                            op, FractionalParams(theta, alpha, omega, Realization.SPECTRAL_R1)), op.M))
    ok = agree <= 1e-9 and lowest >= 1 - 1e-9
    report(3, "damping realizations agree", ok,
           f"max |R1-R2| at theta=1 = {agree:.1e} <= 1e-9, min eig(D, M) over 3x3x3 grid = {lowest:.12f} >= 1-1e-9")


def test_criterion_04_energy_identity(bench):
    _, lin1 = trajectory(bench, "linear", 1e-3)
    _, lin2 = trajectory(bench, "linear", 5e-4)
    _, non1 = trajectory(bench, "nonlinear", 1e-3)
    _, non2 = trajectory(bench, "nonlinear", 5e-4)
    r_lin = lin1.max_identity_residual / lin2.max_identity_residual
    r_non = non1.max_identity_residual / non2.max_identity_residual
    slowest = max(bench["seconds"].values())
    ok = (lin1.max_identity_residual <= 1e-8 and 3.5 <= r_lin <= 4.5 and 3.5 <= r_non <= 4.5 and slowest < 30.0)
    report(4, "energy identity", ok,
           f"linear max residual {lin1.max_identity_residual:.2e} <= 1e-8 at dt=1e-3, halving ratio {r_lin:.3f}; "
           f"nonlinear ratio {r_non:.3f} in [3.5, 4.5]; slowest run {slowest:.1f}s < 30s")


def test_criterion_05_monotone_and_apriori(bench):
    runs = [trajectory(bench, k, dt)[1] for k in ("linear", "nonlinear") for dt in (1e-3, 5e-4)]
    worst_rise = max(float(np.max(np.diff(t.energies))) for t in runs)
    setup = bench["setup"]
    vol, area = compute_measures(setup.mesh)
    c_omega = estimate_poincare_constant(setup.mesh, setup.blocks)
    verdict = check_balance(nonlinear_spec(), vol, area, c_omega).verdict
    excess = max(max(r.kinetic + r.elastic for r in t.reports) - t.reports[0].E
                 for t in (trajectory(bench, "nonlinear", 1e-3)[1], trajectory(bench, "nonlinear", 5e-4)[1]))
    ok = worst_rise <= 1e-10 and verdict is Verdict.SATISFIED and excess <= 1e-8
    report(5, "energy monotonicity and a-priori proxy", ok,
           f"max sample-to-sample rise {worst_rise:.1e} <= 1e-10; balance {verdict.value}; "
           f"max(kinetic+elastic) - E(0) = {excess:.3f} <= 1e-8")


def _crossing(make, bound, vol, area, c_omega):
    """Bisect the numeric verdict boundary in the coefficient under test."""
    grid = default_grid(1e6, 400)
    sat = lambda c: check_balance(make(c), vol, area, c_omega, grid).verdict is Verdict.SATISFIED
    lo, hi = 0.5 * bound, 1.5 * bound
    assert not sat(lo) and sat(hi)
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if sat(mid) else (mid, hi)
    return 0.5 * (lo + hi)


def test_criterion_06_balance_scenarios():
    t0 = time.perf_counter()
    vol, area, c_omega, eps = 1.0, 2.0, 0.5, 0.5
    s1 = NonlinearitySpec(f_terms=cubic_f(1.0), g_terms=linear_g(-1.0), epsilon=eps)
    res1 = scenario_checks(s1, vol, area, c_omega)[0]
    ok1 = res1 == (True, None, None) and check_balance(s1, vol, area, c_omega).verdict is Verdict.SATISFIED

    cg2 = 0.4
    make2 = lambda cf: NonlinearitySpec(f_terms=cubic_f(cf), g_terms=(PowerTerm(cg2, 3.0),), epsilon=eps)
    bound2 = scenario_checks(make2(1.0), vol, area, c_omega)[1][1]
    ok2 = (scenario_checks(make2(1.01 * bound2), vol, area, c_omega)[0][1] is True
           and scenario_checks(make2(0.99 * bound2), vol, area, c_omega)[0][1] is False)
    cross2 = _crossing(make2, bound2, vol, area, c_omega)
    ok2 &= abs(cross2 / bound2 - 1) <= 0.01

    cg3 = -0.1
    make3 = lambda cf: NonlinearitySpec(f_terms=(PowerTerm(cf, 2.0),), g_terms=linear_g(cg3), epsilon=eps)
    t3 = scenario_checks(make3(1.0), vol, area, c_omega)[1][2]
    bound3 = t3 - (area / vol) * cg3
    ok3 = (scenario_checks(make3(1.01 * bound3), vol, area, c_omega)[0][2] is True
           and scenario_checks(make3(0.99 * bound3), vol, area, c_omega)[0][2] is False)
    cross3 = _crossing(make3, bound3, vol, area, c_omega)
    ok3 &= abs(cross3 / bound3 - 1) <= 0.01
    elapsed = time.perf_counter() - t0
    ok = ok1 and ok2 and ok3 and elapsed < 1.0
    report(6, "balance scenarios", ok,
           f"scenario 1 {res1}; scenario 2 bound {bound2:.4f}, numeric crossing off by {abs(cross2 / bound2 - 1):.1e}; "
           f"scenario 3 bound {bound3:.4f}, crossing off by {abs(cross3 / bound3 - 1):.1e} (<= 1%); runtime {elapsed:.2f}s < 1s")


def test_criterion_07_poincare():
    vals = {}
    for n in (256, 2048):
        mesh = build_geometry(GeometrySpec(GeometryKind.INTERVAL, 1.0, bulk_elements=n))
        vals[n] = estimate_poincare_constant(mesh, assemble_blocks(mesh))
    lower = 1 / np.sqrt(12)
    drift = abs(vals[256] - vals[2048])
    ok = vals[256] >= lower - 1e-9 and drift <= 1e-4
    report(7, "Poincare constant", ok,
           f"C(256) = {vals[256]:.8f} >= 1/sqrt(12) = {lower:.8f}; |C(256) - C(2048)| = {drift:.1e} <= 1e-4; "
           f"exact 1/pi = {1 / np.pi:.8f}")


def test_criterion_08_weak_residual(bench):
    sys1, lin1 = trajectory(bench, "linear", 1e-3)
    sys2, lin2 = trajectory(bench, "linear", 5e-4)
    w1 = verify_weak_residual(lin1, sys1, 4).max
    w2 = verify_weak_residual(lin2, sys2, 4).max
    ratio = w1 / w2
    ok = w1 <= 1e-6 and 3.5 <= ratio <= 4.5
    report(8, "weak-solution residual", ok,
           f"max residual over 4 test modes {w1:.2e} <= 1e-6 at dt=1e-3; halving ratio {ratio:.3f} (order 2)")


def test_criterion_09_gradient_check(bench):
    system = benchmark_system(bench["setup"], nonlinear_spec())
    rng = np.random.default_rng(9)
    h = 1e-6
    worst = 0.0
    for _ in range(20):
        a = rng.standard_normal(system.n)
        N = nonlinear_force(system, a)
        fd = np.empty(system.n)
        for i in range(system.n):
            e = np.zeros(system.n)
            e[i] = h
            # the potential carries a factor 2 relative to the integrals of F and G
            fd[i] = 0.5 * (sum(potential(system, a + e)) - sum(potential(system, a - e))) / (2 * h)
        worst = max(worst, np.linalg.norm(fd - N) / max(np.linalg.norm(N), 1e-300))
    report(9, "gradient check", worst <= 1e-6, f"max relative mismatch over 20 states {worst:.1e} <= 1e-6")


def test_criterion_10_galerkin_consistency(bench):
    setup = bench["setup"]
    op = setup.op
    parts = damping_parts(op, FractionalParams())
    U0 = 0.01 * (op.eig.vectors[:, 0] + op.eig.vectors[:, 1])
    V0 = -0.01 * op.eig.vectors[:, 1]
    lin = convergence_study(op, parts, linear_spec(), setup.mesh, [2, 4, 8, 16], U0, V0, 10.0, 1e-3, 10)
    U0, V0 = cosine_data(setup, 2.0)
    cub = convergence_study(op, parts, nonlinear_spec(), setup.mesh, [8, 16, 32], U0, V0, 2.0, 1e-3, 10)
    d8, d16 = cub.distances[0], cub.distances[1]
    ok = max(lin.distances) <= 1e-9 and d8 > d16
    report(10, "Galerkin consistency", ok,
           f"linear spread over n in {{2,4,8,16}} = {max(lin.distances):.1e} <= 1e-9; "
           f"cubic d(8,32) = {d8:.4f} > d(16,32) = {d16:.4f}")


def test_criterion_11_determinism(tmp_path):
    data = {
        "geometry": {"kind": "Interval", "bulk_elements": 64},
        "time": {"T": 1.0, "dt": 1e-3, "sample_stride": 10},
        "nonlinearity": {"f_terms": [{"coef": 1, "power": 4}], "g_terms": [{"coef": -0.1, "power": 2}]},
        "initial_data": {"u0": [{"type": "cos", "amplitude": 2.0}]},
        "checks": {"balance": True, "sign_growth": True, "apriori_bound": True, "identity_tol": 1e-3},
        "seed": 42,
    }
    for d in ("a", "b"):
        run(config_from_dict(data), "simulate", tmp_path / d)
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    same = names == sorted(p.name for p in (tmp_path / "b").iterdir()) and all(
        (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in names)
    report(11, "determinism", same, f"{len(names)} artifacts byte-identical across repeated simulate runs")
