"""Truncated Galerkin system, implicit-midpoint integration and energy bookkeeping.

The modal unknowns ``a`` are coefficients in the first ``n`` M-orthonormal
eigenmodes of (A, M).  The semi-discrete system reads

    a'' + Dm a' + diag(Lambda) a + N(a) = 0,

with ``Dm = W^T D W`` and ``N(a)_i = int f(u) psi_i dx + int g(u) psi_i dsigma``.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import AssemblyError, BlowUpError, DimensionError, IntegrationError, NumericError, ParameterError, StepError
from .geometry import Mesh
from .nonlinearity import NonlinearitySpec
from .operator import WentzellOperator

NEWTON_TOL = 1e-11
NEWTON_MAX_ITER = 50
BLOWUP_AMPLITUDE = 1e8
MAX_HALVINGS = 3
MONOTONE_TOL = 1e-10

PART_NAMES = ("fractional", "boundary", "velocity")


@dataclass(frozen=True)
class ModalSystem:
    n: int
    lam: np.ndarray
    damping: np.ndarray
    parts: dict
    W: np.ndarray
    spec: NonlinearitySpec
    phi_bulk: np.ndarray
    w_bulk: np.ndarray
    phi_bdry: np.ndarray
    w_bdry: np.ndarray
    A: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    _lu_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def linear(self) -> bool:
        return self.spec.is_zero

    def reconstruct(self, a):
        return self.W @ a


@dataclass(frozen=True)
class State:
    a: np.ndarray
    a_dot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        v = np.asarray(self.a_dot, dtype=float)
        if a.shape != v.shape or a.ndim != 1:
            raise DimensionError("a and a_dot must be 1-D arrays of equal length")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(v))):
            raise NumericError("state has non-finite entries")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "a_dot", v)
        object.__setattr__(self, "t", float(self.t))


@dataclass(frozen=True)
class EnergyReport:
    t: float
    E: float
    kinetic: float
    elastic: float
    potential_bulk: float
    potential_boundary: float
    dissipation_accumulated: float
    identity_residual: float
    E0: float
    rates: tuple
    dissipation_parts: tuple

    def as_row(self):
        return [self.t, self.E, self.kinetic, self.elastic, self.potential_bulk,
                self.potential_boundary, self.dissipation_accumulated, self.identity_residual]


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    a: np.ndarray
    a_dot: np.ndarray
    reports: list
    stats: dict

    @property
    def energies(self):
        return np.array([r.E for r in self.reports])

    @property
    def max_identity_residual(self) -> float:
        return max(r.identity_residual for r in self.reports)

    def energy_monotone(self, tol=MONOTONE_TOL) -> bool:
        return bool(np.all(np.diff(self.energies) <= tol))

    def energy_bounded(self, tol=MONOTONE_TOL) -> bool:
        E = self.energies
        return bool(np.all(E <= E[0] + tol))

    def states(self):
        return [State(a, v, t) for a, v, t in zip(self.a, self.a_dot, self.times)]


def build_modal_system(op: WentzellOperator, damping, spec: NonlinearitySpec, n: int, mesh: Mesh) -> ModalSystem:
    """Project the damped wave dynamics onto the first ``n`` eigenmodes.

    ``damping`` is either the assembled damping matrix or the dict returned
    by :func:`wentzell.operator.damping_parts`; a plain matrix is reported
    as a single velocity-type dissipation.
    """
    if op.eig is None or op.eig.n_modes < n:
        have = 0 if op.eig is None else op.eig.n_modes
        raise ParameterError(f"requested n={n} modes, decomposition has {have}")
    if n < 1:
        raise ParameterError("Galerkin dimension must be >= 1")
    W = np.array(op.eig.vectors[:, :n])
    lam = np.array(op.eig.values[:n])
    if isinstance(damping, dict):
        full = {k: np.asarray(damping[k]) for k in PART_NAMES}
    else:
        D = np.asarray(damping)
        full = {"fractional": D - op.M, "boundary": np.zeros_like(D), "velocity": np.array(op.M)}
    parts = {}
    for k in PART_NAMES:
        p = W.T @ full[k] @ W
        parts[k] = 0.5 * (p + p.T)
    Dm = sum(parts[k] for k in PART_NAMES)
    if np.linalg.eigvalsh(Dm)[0] < 1.0 - 1e-9:
        raise AssemblyError("modal damping is not bounded below by the identity")
    return ModalSystem(
        n=n,
        lam=lam,
        damping=Dm,
        parts=parts,
        W=W,
        spec=spec,
        phi_bulk=np.asarray(mesh.bulk_interp @ W),
        w_bulk=np.asarray(mesh.bulk_weights),
        phi_bdry=np.array(W[mesh.boundary_nodes]),
        w_bdry=np.asarray(mesh.boundary_weights),
        A=op.A,
        M=op.M,
    )


def project_initial_data(op: WentzellOperator, U0, V0, n: int, t0: float = 0.0) -> State:
    """M-orthogonal projection of nodal initial data onto the modal span."""
    U0 = np.asarray(U0, dtype=float)
    V0 = np.asarray(V0, dtype=float)
    if U0.shape != (op.n,) or V0.shape != (op.n,):
        raise DimensionError(f"initial data must have length {op.n}")
    if op.eig is None or op.eig.n_modes < n:
        raise ParameterError(f"decomposition has fewer than {n} modes")
    W = op.eig.vectors[:, :n]
    return State(W.T @ (op.M @ U0), W.T @ (op.M @ V0), t0)


def _guard(a):
    amp = float(np.max(np.abs(a))) if a.size else 0.0
    if not np.isfinite(amp) or amp > BLOWUP_AMPLITUDE:
        raise BlowUpError(amp)


def nonlinear_force(system: ModalSystem, a) -> np.ndarray:
    """Modal load of the bulk and boundary nonlinearities at coefficients ``a``."""
    a = np.asarray(a, dtype=float)
    _guard(a)
    if system.linear:
        return np.zeros(system.n)
    u = system.phi_bulk @ a
    gam = system.phi_bdry @ a
    with np.errstate(over="ignore", invalid="ignore"):
        fb = system.w_bulk * system.spec.f(u)
        gb = system.w_bdry * system.spec.g(gam)
    if not (np.all(np.isfinite(fb)) and np.all(np.isfinite(gb))):
        raise BlowUpError(np.max(np.abs(a)), f"nonlinearity overflowed at modal amplitude {np.max(np.abs(a)):.3e}")
    return system.phi_bulk.T @ fb + system.phi_bdry.T @ gb


def nonlinear_jacobian(system: ModalSystem, a) -> np.ndarray:
    if system.linear:
        return np.zeros((system.n, system.n))
    u = system.phi_bulk @ a
    gam = system.phi_bdry @ a
    jb = system.w_bulk * system.spec.f_prime(u)
    jg = system.w_bdry * system.spec.g_prime(gam)
    return (system.phi_bulk.T * jb) @ system.phi_bulk + (system.phi_bdry.T * jg) @ system.phi_bdry


def potential(system: ModalSystem, a):
    """Return (2 int F(u) dx, 2 int G(u) dsigma) at modal coefficients ``a``."""
    u = system.phi_bulk @ a
    gam = system.phi_bdry @ a
    return (2.0 * float(system.w_bulk @ system.spec.F_tilde(u)),
            2.0 * float(system.w_bdry @ system.spec.G_tilde(gam)))


def _linear_lu(system, dt):
    key = float(dt)
    lu = system._lu_cache.get(key)
    if lu is None:
        J = (2.0 / dt) * np.eye(system.n) + system.damping + 0.5 * dt * np.diag(system.lam)
        lu = sla.lu_factor(J)
        system._lu_cache[key] = lu
    return lu


def _step(system, state, dt, stats=None):
    a0, v0 = state.a, state.a_dot
    lam, Dm = system.lam, system.damping

    def residual(d):
        am = a0 + 0.5 * d
        return (2.0 / dt) * d - 2.0 * v0 + Dm @ d + dt * (lam * am + nonlinear_force(system, am))

    d = dt * v0
    iters = 0
    if system.linear:
        lu = _linear_lu(system, dt)
        for _ in range(2):
            d = d + sla.lu_solve(lu, -residual(d))
            iters += 1
    else:
        base = (2.0 / dt) * np.eye(system.n) + Dm + 0.5 * dt * np.diag(lam)
        for iters in range(1, NEWTON_MAX_ITER + 1):
            am = a0 + 0.5 * d
            J = base + 0.5 * dt * nonlinear_jacobian(system, am)
            delta = np.linalg.solve(J, -residual(d))
            d = d + delta
            if not np.all(np.isfinite(d)):
                raise StepError(f"Newton diverged at t={state.t:.6g}")
            if np.max(np.abs(delta)) <= NEWTON_TOL * max(1.0, np.max(np.abs(d))):
                break
        else:
            raise StepError(f"Newton did not converge in {NEWTON_MAX_ITER} iterations at t={state.t:.6g}")
    if stats is not None:
        stats["newton_iterations"] += iters
        stats["max_newton_iterations"] = max(stats["max_newton_iterations"], iters)
    a1 = a0 + d
    _guard(a1)
    return State(a1, 2.0 * d / dt - v0, state.t + dt)


def step(system: ModalSystem, state: State, dt: float) -> State:
    """One implicit-midpoint step; ``dt`` may be negative to run backwards."""
    if dt == 0:
        raise ParameterError("dt must be nonzero")
    if state.a.shape != (system.n,):
        raise DimensionError(f"state has {state.a.shape[0]} modes, system has {system.n}")
    return _step(system, state, dt)


def _rates(system, v):
    return tuple(2.0 * float(v @ system.parts[k] @ v) for k in PART_NAMES)


def compute_energy(system: ModalSystem, state: State, previous: EnergyReport | None = None) -> EnergyReport:
    """Energy functional of the state and trapezoid-rule dissipation since ``previous``."""
    a, v = state.a, state.a_dot
    kinetic = float(v @ v)
    elastic = float(a @ (system.lam * a))
    pb, pg = potential(system, a)
    E = kinetic + elastic + pb + pg
    rates = _rates(system, v)
    if previous is None:
        parts = (0.0, 0.0, 0.0)
        E0 = E
    else:
        h = state.t - previous.t
        parts = tuple(p + 0.5 * h * (r0 + r1) for p, r0, r1 in zip(previous.dissipation_parts, previous.rates, rates))
        E0 = previous.E0
    diss = float(sum(parts))
    return EnergyReport(
        t=state.t, E=E, kinetic=kinetic, elastic=elastic, potential_bulk=pb, potential_boundary=pg,
        dissipation_accumulated=diss, identity_residual=abs(E + diss - E0), E0=E0,
        rates=rates, dissipation_parts=parts,
    )


def _advance(system, state, dt, stats, depth=0):
    """Step with up to MAX_HALVINGS recursive dt-halvings on Newton failure.

    Returns the list of states reached (one, or several after halving).
    """
    try:
        return [_step(system, state, dt, stats)]
    except StepError:
        if depth >= MAX_HALVINGS:
            raise
        stats["step_rejections"] += 1
        first = _advance(system, state, 0.5 * dt, stats, depth + 1)
        return first + _advance(system, first[-1], 0.5 * dt, stats, depth + 1)


def integrate(system: ModalSystem, state0: State, T: float, dt: float, sample_stride: int = 1) -> TrajectoryRecord:
    """Fixed-step integration on [t0, t0 + T] with energy reports at every sample."""
    if T <= 0 or dt <= 0:
        raise ParameterError("T and dt must be positive")
    if sample_stride < 1:
        raise ParameterError("sample_stride must be >= 1")
    n_steps = int(round(T / dt))
    if n_steps < 1 or abs(n_steps * dt - T) > 1e-9 * T:
        raise ParameterError(f"T={T} is not an integer multiple of dt={dt}")
    stats = {"newton_iterations": 0, "max_newton_iterations": 0, "step_rejections": 0, "steps": n_steps}
    state = state0
    report = compute_energy(system, state)
    times, As, Vs, reports = [state.t], [state.a], [state.a_dot], [report]
    t0 = state0.t
    for k in range(1, n_steps + 1):
        try:
            new_states = _advance(system, state, dt, stats)
        except (StepError, BlowUpError) as exc:
            raise IntegrationError(state.t, str(exc)) from exc
        # pin the clock to the grid so sampled times do not drift
        new_states[-1] = State(new_states[-1].a, new_states[-1].a_dot, t0 + k * dt)
        for s in new_states:
            report = compute_energy(system, s, report)
        state = new_states[-1]
        if k % sample_stride == 0 or k == n_steps:
            times.append(state.t)
            As.append(state.a)
            Vs.append(state.a_dot)
            reports.append(report)
    return TrajectoryRecord(np.array(times), np.array(As), np.array(Vs), reports, stats)


@dataclass(frozen=True)
class WeakResidual:
    times: np.ndarray
    residual: np.ndarray
    max_per_mode: np.ndarray

    @property
    def max(self) -> float:
        return float(np.max(self.max_per_mode)) if self.max_per_mode.size else 0.0


def verify_weak_residual(traj: TrajectoryRecord, system: ModalSystem, m: int) -> WeakResidual:
    """Residual of the weak identity tested against the first ``m`` modes.

    On each sampling interval the difference quotient of (a, a') is compared
    with the right-hand side evaluated at the averaged endpoint state.  For a
    test mode the residual is the larger of the displacement and velocity
    components.
    """
    if m > system.n:
        raise ParameterError(f"test modes m={m} exceed Galerkin dimension n={system.n}")
    if m < 1:
        raise ParameterError("need at least one test mode")
    t, A, V = traj.times, traj.a, traj.a_dot
    h = np.diff(t)[:, None]
    am = 0.5 * (A[1:] + A[:-1])
    vm = 0.5 * (V[1:] + V[:-1])
    N = np.array([nonlinear_force(system, x) for x in am])
    r_a = (A[1:] - A[:-1]) / h - vm
    r_v = (V[1:] - V[:-1]) / h + vm @ system.damping.T + am * system.lam + N
    res = np.maximum(np.abs(r_a), np.abs(r_v))[:, :m]
    max_per_mode = res.max(axis=0) if res.shape[0] else np.zeros(m)
    return WeakResidual(0.5 * (t[1:] + t[:-1]), res, max_per_mode)


def apriori_bound_holds(traj: TrajectoryRecord, c_delta: float = 0.0, tol: float = 1e-8) -> bool:
    """kinetic + elastic <= E(0) + 2 C_delta t at every sample."""
    E0 = traj.reports[0].E
    for r in traj.reports:
        if r.kinetic + r.elastic > E0 + 2.0 * c_delta * (r.t - traj.times[0]) + tol:
            return False
    return True


@dataclass
class ConvergenceTable:
    n_values: list
    distances: list
    energies: list
    times: np.ndarray


def _worker_count():
    try:
        return max(1, int(os.environ.get("WENTZELL_THREADS", "1")))
    except ValueError:
        return 1


def convergence_study(op: WentzellOperator, damping, spec: NonlinearitySpec, mesh: Mesh, n_values,
                      U0, V0, T: float, dt: float, sample_stride: int = 1) -> ConvergenceTable:
    """Run the Galerkin system for each ``n`` and measure distance to the largest.

    The distance is the sup over samples of
    ``(dU^T A dU + dV^T M dV + ||du||_{L^r1}^{r1})^{1/2}`` between nodal
    reconstructions.
    """
    n_values = [int(n) for n in n_values]
    if not n_values or any(b < a for a, b in zip(n_values, n_values[1:])):
        raise ParameterError("Galerkin dimensions must be a nondecreasing list")

    def run(n):
        system = build_modal_system(op, damping, spec, n, mesh)
        traj = integrate(system, project_initial_data(op, U0, V0, n), T, dt, sample_stride)
        return traj.times, traj.a @ system.W.T, traj.a_dot @ system.W.T, traj.energies

    workers = min(_worker_count(), len(n_values))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run, n_values))
    else:
        runs = [run(n) for n in n_values]

    times, U_ref, V_ref, _ = runs[-1]
    r1 = spec.r1
    interp = mesh.bulk_interp
    distances = []
    for _, U, V, _ in runs:
        dU = U - U_ref
        dV = V - V_ref
        lr = np.abs(interp @ dU.T) ** r1
        d2 = (np.einsum("ki,ij,kj->k", dU, op.A, dU) + np.einsum("ki,ij,kj->k", dV, op.M, dV)
              + mesh.bulk_weights @ lr)
        distances.append(float(np.sqrt(np.max(np.clip(d2, 0.0, None)))))
    return ConvergenceTable(n_values, distances, [r[3] for r in runs], times)
