"""Command pipelines: assemble, eigensolve, then command-specific work and artifacts."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import artifacts
from .config import RunConfig, sample_field
from .galerkin import (
    apriori_bound_holds,
    build_modal_system,
    convergence_study,
    integrate,
    project_initial_data,
    verify_weak_residual,
)
from .geometry import build_geometry, compute_measures
from .nonlinearity import (
    Verdict,
    check_balance,
    check_sign_growth,
    default_grid,
    estimate_poincare_constant,
    probe_boundary_interior_inequality,
)
from .operator import (
    assemble_blocks,
    assemble_wentzell,
    damping_parts,
    estimate_isomorphism_constant,
    solve_eigenproblem,
    solve_wentzell_bvp,
)

log = logging.getLogger(__name__)

PASS, FAIL, SKIPPED = "pass", "fail", "skipped"


class Command(str, enum.Enum):
    EIG = "eig"
    SIMULATE = "simulate"
    BALANCE = "balance"
    POINCARE = "poincare"
    BVP = "bvp"
    CONVERGE = "converge"


@dataclass
class RunSummary:
    command: str
    input_digest: str
    config: dict
    checks: dict = field(default_factory=dict)
    scalars: dict = field(default_factory=dict)
    artifacts: list = field(default_factory=list)
    solver_stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(v != FAIL for v in self.checks.values())

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def record(self, name, ok):
        if name in self.checks:
            raise ValueError(f"check {name} recorded twice")
        self.checks[name] = ok if isinstance(ok, str) else (PASS if ok else FAIL)

    def to_dict(self):
        return {
            "command": self.command,
            "input_digest": self.input_digest,
            "config": self.config,
            "checks": self.checks,
            "passed": self.passed,
            "scalars": self.scalars,
            "artifacts": self.artifacts,
            "solver_stats": self.solver_stats,
        }


class _Context:
    def __init__(self, cfg: RunConfig, out: Path):
        self.cfg = cfg
        self.out = out
        self.mesh = build_geometry(cfg.geometry_spec())
        self.blocks = assemble_blocks(self.mesh)
        self.op = assemble_wentzell(self.blocks)
        self._full = None

    def full_operator(self):
        if self._full is None:
            self._full = self.op.with_eig(solve_eigenproblem(self.op, self.op.n))
        return self._full


def _emit(summary, ctx, name, writer, *args, **kwargs):
    path = ctx.out / name
    writer(path, *args, **kwargs)
    summary.artifacts.append(name)
    return path


def _balance(summary, ctx):
    cfg = ctx.cfg
    spec = cfg.nonlinearity_spec()
    volume, area = compute_measures(ctx.mesh)
    c_omega = estimate_poincare_constant(ctx.mesh, ctx.blocks)
    grid = default_grid(cfg.balance.s_max, cfg.balance.points)
    report = check_balance(spec, volume, area, c_omega, grid, omega=cfg.fractional.omega, s_min=cfg.balance.s_min)
    payload = report.to_dict() | {"C_Omega": c_omega, "volume": volume, "area": area,
                                  "r1": spec.r1, "r2": spec.r2, "c_f": spec.c_f, "c_g": spec.c_g,
                                  "epsilon": spec.epsilon, "omega": cfg.fractional.omega}
    _emit(summary, ctx, "balance.json", artifacts.write_json, payload)
    _emit(summary, ctx, "balance.csv", artifacts.write_csv, ["s", "quotient"], zip(report.grid, report.quotient))
    pos = report.grid > 0
    _emit(summary, ctx, "balance.svg", artifacts.write_svg_plot,
          [("s > 0", report.grid[pos], report.quotient[pos]), ("s < 0", -report.grid[~pos], report.quotient[~pos])],
          title="balance quotient", xlabel="|s|", ylabel="quotient", logx=True)
    summary.scalars.update({"C_Omega": c_omega, "balance_verdict": report.verdict.value,
                            "balance_liminf_estimate": report.numeric_liminf_estimate,
                            "C_delta": report.fitted_offset})
    summary.record("balance", report.verdict is Verdict.SATISFIED)
    return report


def _sign_growth(summary, ctx):
    report = check_sign_growth(ctx.cfg.nonlinearity_spec())
    summary.scalars["sign_growth"] = report.to_dict()
    summary.record("sign_growth", report.passed)
    return report


def _cmd_eig(summary, ctx):
    op = ctx.full_operator()
    eig = op.eig
    _emit(summary, ctx, "eigs.csv", artifacts.write_eigs_csv, eig)
    _emit(summary, ctx, "eigs.svg", artifacts.write_svg_plot,
          [("Lambda_j", np.arange(1, eig.n_modes + 1), eig.values)],
          title="eigenvalue staircase", xlabel="j", ylabel="Lambda_j", logy=True)
    if ctx.cfg.export_matrices:
        for name, mat in (("A.coo.txt", op.A), ("M.coo.txt", op.M)):
            _emit(summary, ctx, name, artifacts.write_coo, mat)
    iso = estimate_isomorphism_constant(op, ctx.cfg.probe.isomorphism_probes, seed=ctx.cfg.seed)
    summary.scalars.update({
        "lambda_1": float(eig.values[0]),
        "lambda_2": float(eig.values[1]) if eig.n_modes > 1 else None,
        "n_unknowns": op.n,
        "isomorphism": {"ratio_low": iso.ratio_low, "ratio_high": iso.ratio_high, "c_star": iso.c_star},
    })
    summary.record("constant_mode", abs(eig.values[0] - 1.0) <= 1e-9)


def _initial_data(ctx, op):
    idata = ctx.cfg.initial_data
    U0 = sample_field(idata.u0, ctx.mesh, op.eig.vectors)
    V0 = sample_field(idata.v0, ctx.mesh, op.eig.vectors)
    return U0, V0


def _cmd_simulate(summary, ctx):
    cfg = ctx.cfg
    op = ctx.full_operator()
    params = cfg.fractional_params()
    spec = cfg.nonlinearity_spec()
    parts = damping_parts(op, params)
    n = cfg.galerkin.n
    system = build_modal_system(op, parts, spec, n, ctx.mesh)
    U0, V0 = _initial_data(ctx, op)
    state0 = project_initial_data(op, U0, V0, n)
    checks = cfg.checks
    balance = _balance(summary, ctx) if checks.balance else None
    if checks.sign_growth:
        _sign_growth(summary, ctx)

    traj = integrate(system, state0, cfg.time.T, cfg.time.dt, cfg.time.sample_stride)
    header = ["t", "E", "kinetic", "elastic", "pot_bulk", "pot_bdry", "dissipation", "identity_residual"]
    header += [f"a_{i + 1}" for i in range(n)]
    rows = ([*r.as_row(), *a] for r, a in zip(traj.reports, traj.a))
    _emit(summary, ctx, "trajectory.csv", artifacts.write_csv, header, rows)
    _emit(summary, ctx, "energy.svg", artifacts.write_svg_plot,
          [("E(t)", traj.times, traj.energies),
           ("E(t) + dissipation", traj.times, [r.E + r.dissipation_accumulated for r in traj.reports])],
          title="energy", xlabel="t", ylabel="energy")

    summary.scalars.update({"E0": traj.reports[0].E, "E_final": traj.reports[-1].E,
                            "max_identity_residual": traj.max_identity_residual, "n": n})
    summary.solver_stats = dict(traj.stats)
    if checks.energy_identity:
        summary.record("energy_identity", traj.max_identity_residual <= checks.identity_tol)
    if checks.energy_monotone:
        summary.record("energy_monotone", traj.energy_monotone())
    summary.scalars["energy_monotone"] = traj.energy_monotone()
    if checks.weak_residual:
        m = min(checks.weak_residual_modes, n)
        wr = verify_weak_residual(traj, system, m)
        summary.scalars["max_weak_residual"] = wr.max
        summary.record("weak_residual", wr.max <= checks.weak_residual_tol)
    if checks.apriori_bound:
        if balance is None or balance.verdict is not Verdict.SATISFIED:
            summary.record("apriori_bound", SKIPPED)
        else:
            summary.record("apriori_bound", apriori_bound_holds(traj, balance.fitted_offset))


def _cmd_balance(summary, ctx):
    _balance(summary, ctx)
    if ctx.cfg.checks.sign_growth:
        _sign_growth(summary, ctx)


def _cmd_poincare(summary, ctx):
    c_omega = estimate_poincare_constant(ctx.mesh, ctx.blocks)
    pc = ctx.cfg.probe
    probe = probe_boundary_interior_inequality(ctx.mesh, ctx.blocks, pc.epsilon, pc.s, pc.samples, seed=ctx.cfg.seed)
    payload = {"C_Omega": c_omega, "boundary_interior": probe.__dict__}
    _emit(summary, ctx, "poincare.json", artifacts.write_json, payload)
    summary.scalars.update({"C_Omega": c_omega, "C_eps": probe.c_eps})
    summary.record("poincare_positive", c_omega > 0)


def _cmd_bvp(summary, ctx):
    cfg = ctx.cfg
    p1 = sample_field(cfg.bvp.p1, ctx.mesh)
    p2 = sample_field(cfg.bvp.p2, ctx.mesh, boundary=True)
    U = solve_wentzell_bvp(ctx.blocks, p1, p2)
    coords = ctx.mesh.nodes
    header = [f"x{i}" for i in range(coords.shape[1])] + ["p1", "U"]
    _emit(summary, ctx, "bvp.csv", artifacts.write_csv, header, ([*c, a, u] for c, a, u in zip(coords, p1, U)))
    summary.scalars.update({"U_min": float(U.min()), "U_max": float(U.max())})
    summary.record("bvp_solved", bool(np.all(np.isfinite(U))))


def _cmd_converge(summary, ctx):
    cfg = ctx.cfg
    op = ctx.full_operator()
    parts = damping_parts(op, cfg.fractional_params())
    n_values = sorted(cfg.galerkin.convergence)
    U0, V0 = _initial_data(ctx, op)
    table = convergence_study(op, parts, cfg.nonlinearity_spec(), ctx.mesh, n_values, U0, V0,
                              cfg.time.T, cfg.time.dt, cfg.time.sample_stride)
    _emit(summary, ctx, "converge.csv", artifacts.write_csv, ["n", "distance"], zip(table.n_values, table.distances))
    header = ["t"] + [f"E_n{n}" for n in table.n_values]
    _emit(summary, ctx, "converge_energy.csv", artifacts.write_csv, header,
          ([t, *vals] for t, vals in zip(table.times, np.array(table.energies).T)))
    _emit(summary, ctx, "converge.svg", artifacts.write_svg_plot,
          [(f"n={n}", table.times, e) for n, e in zip(table.n_values, table.energies)],
          title="energy per Galerkin dimension", xlabel="t", ylabel="E")
    d = table.distances
    summary.scalars.update({"distances": dict(zip(map(str, table.n_values), d)),
                            "distances_nonincreasing": all(b <= a for a, b in zip(d, d[1:]))})
    summary.record("converge_completed", True)


_DISPATCH = {
    Command.EIG: _cmd_eig,
    Command.SIMULATE: _cmd_simulate,
    Command.BALANCE: _cmd_balance,
    Command.POINCARE: _cmd_poincare,
    Command.BVP: _cmd_bvp,
    Command.CONVERGE: _cmd_converge,
}


def run(cfg: RunConfig, command, out_dir=None) -> RunSummary:
    """Execute ``command`` for ``cfg``, write artifacts and ``summary.json``."""
    command = Command(command)
    out = Path(out_dir if out_dir is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    summary = RunSummary(command=command.value, input_digest=cfg.digest(),
                         config=cfg.model_dump(mode="json", exclude={"output"}))
    ctx = _Context(cfg, out)
    log.info("running %s on %d unknowns", command.value, ctx.op.n)
    _DISPATCH[command](summary, ctx)
    summary.artifacts.append("summary.json")
    artifacts.write_json(out / "summary.json", summary.to_dict())
    return summary
