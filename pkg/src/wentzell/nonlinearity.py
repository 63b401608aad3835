"""Nonlinearity pair (f, g) and the structural checks it must pass.

Both nonlinearities belong to a closed-form family: a sum of odd signed
powers ``c |s|^(p-2) s`` (p >= 2) plus bounded perturbations ``c sin(k s)``.
Derivatives and antiderivatives normalized to vanish at zero are exact.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NumericError, ParameterError, PreconditionError
from .geometry import Mesh
from .operator import OperatorBlocks

DEFAULT_S_MIN = 1e2
INCONCLUSIVE_BAND = 1e-6


@dataclass(frozen=True)
class PowerTerm:
    coef: float
    power: float

    def __post_init__(self):
        if self.power < 2:
            raise ParameterError(f"power terms need p >= 2, got {self.power}")


@dataclass(frozen=True)
class SineTerm:
    coef: float
    wavenumber: float

    def __post_init__(self):
        if self.wavenumber == 0:
            raise ParameterError("sine perturbation needs a nonzero wavenumber")


def _leading(terms):
    active = [t for t in terms if t.coef != 0]
    if not active:
        return 2.0, 0.0
    p = max(t.power for t in active)
    return float(p), float(sum(t.coef for t in active if t.power == p))


@dataclass(frozen=True)
class NonlinearitySpec:
    f_terms: tuple = ()
    g_terms: tuple = ()
    f_sines: tuple = ()
    g_sines: tuple = ()
    M1: float = 1.0
    M2: float = 1.0
    l1: float = 1.0
    l2: float = 1.0
    epsilon: float = 0.5
    r1_override: float | None = field(default=None)
    r2_override: float | None = field(default=None)

    def __post_init__(self):
        for name in ("f_terms", "g_terms", "f_sines", "g_sines"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.M1 < 0 or self.M2 < 0:
            raise ParameterError("sign-condition constants M1, M2 must be nonnegative")
        if self.epsilon <= 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        for r in (self.r1, self.r2):
            if r < 2:
                raise ParameterError(f"leading exponents must be >= 2, got {r}")

    @property
    def r1(self) -> float:
        return float(self.r1_override) if self.r1_override is not None else _leading(self.f_terms)[0]

    @property
    def r2(self) -> float:
        return float(self.r2_override) if self.r2_override is not None else _leading(self.g_terms)[0]

    @property
    def c_f(self) -> float:
        return _leading(self.f_terms)[1]

    @property
    def c_g(self) -> float:
        return _leading(self.g_terms)[1]

    @property
    def is_zero(self) -> bool:
        terms = self.f_terms + self.g_terms + self.f_sines + self.g_sines
        return all(t.coef == 0 for t in terms)

    def f(self, s):
        return _value(self.f_terms, self.f_sines, s)

    def f_prime(self, s):
        return _derivative(self.f_terms, self.f_sines, s)

    def F_tilde(self, s):
        return _antiderivative(self.f_terms, self.f_sines, s)

    def g(self, s):
        return _value(self.g_terms, self.g_sines, s)

    def g_prime(self, s):
        return _derivative(self.g_terms, self.g_sines, s)

    def G_tilde(self, s):
        return _antiderivative(self.g_terms, self.g_sines, s)


def cubic_f(coef=1.0):
    return (PowerTerm(coef, 4.0),)


def linear_g(coef):
    return (PowerTerm(coef, 2.0),)


def _value(terms, sines, s):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    out = np.zeros_like(s)
    for t in terms:
        out = out + t.coef * a ** (t.power - 2.0) * s
    for t in sines:
        out = out + t.coef * np.sin(t.wavenumber * s)
    return out


def _derivative(terms, sines, s):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    out = np.zeros_like(s)
    for t in terms:
        out = out + t.coef * (t.power - 1.0) * a ** (t.power - 2.0)
    for t in sines:
        out = out + t.coef * t.wavenumber * np.cos(t.wavenumber * s)
    return out


def _antiderivative(terms, sines, s):
    s = np.asarray(s, dtype=float)
    a = np.abs(s)
    out = np.zeros_like(s)
    for t in terms:
        out = out + t.coef * a ** t.power / t.power
    for t in sines:
        out = out + t.coef / t.wavenumber * (1.0 - np.cos(t.wavenumber * s))
    return out


_EVALUATORS = {
    "f": NonlinearitySpec.f,
    "f_prime": NonlinearitySpec.f_prime,
    "F_tilde": NonlinearitySpec.F_tilde,
    "g": NonlinearitySpec.g,
    "g_prime": NonlinearitySpec.g_prime,
    "G_tilde": NonlinearitySpec.G_tilde,
}


def eval_nonlinearity(spec: NonlinearitySpec, s, which: str):
    """Evaluate one of f, g, their derivatives or normalized antiderivatives."""
    try:
        fn = _EVALUATORS[which]
    except KeyError:
        raise ParameterError(f"unknown nonlinearity component {which!r}") from None
    out = fn(spec, s)
    return float(out) if np.ndim(out) == 0 else out


# -- probe grids ----------------------------------------------------------

def default_grid(s_max=1e6, points=400):
    """Log-spaced magnitudes on [1, s_max], both signs."""
    mag = np.logspace(0.0, np.log10(s_max), points)
    return np.concatenate([-mag[::-1], mag])


def _check_grid(grid, min_points):
    grid = np.asarray(grid, dtype=float)
    mag = np.abs(grid)
    if grid.size == 0:
        raise PreconditionError("probe grid is empty")
    if mag.min() > 1.0 or mag.max() < 1e6:
        raise PreconditionError("probe grid must cover |s| in [1, 1e6]")
    if not (np.any(grid > 0) and np.any(grid < 0)):
        raise PreconditionError("probe grid must contain both signs")
    if np.unique(mag).size < min_points:
        raise PreconditionError(f"probe grid needs at least {min_points} magnitudes")
    return grid


@dataclass(frozen=True)
class SignGrowthReport:
    f_over_s_min: float
    g_prime_min: float
    f_growth_max: float
    g_growth_max: float
    sign_f: bool
    sign_g: bool
    growth_f: bool
    growth_g: bool

    @property
    def passed(self) -> bool:
        return self.sign_f and self.sign_g and self.growth_f and self.growth_g

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {"passed": self.passed}


# roundoff allowance when a growth ratio sits exactly on its bound
GROWTH_RTOL = 1e-12


def check_sign_growth(spec: NonlinearitySpec, grid=None) -> SignGrowthReport:
    """Probe the sign and growth assumptions on a log grid.

    The liminf of f(s)/s is taken over the grid itself; the pointwise
    conditions on g' and the growth bounds are also probed on [-1, 1].
    """
    grid = _check_grid(default_grid() if grid is None else grid, 1)
    everywhere = np.concatenate([grid, np.linspace(-1.0, 1.0, 201)])
    f_over_s = float(np.min(spec.f(grid) / grid))
    gp_min = float(np.min(spec.g_prime(everywhere)))
    a = np.abs(everywhere)
    fg = float(np.max(np.abs(spec.f(everywhere)) / (1.0 + a ** (spec.r1 - 1.0))))
    gg = float(np.max(np.abs(spec.g(everywhere)) / (1.0 + a ** (spec.r2 - 1.0))))
    return SignGrowthReport(
        f_over_s_min=f_over_s,
        g_prime_min=gp_min,
        f_growth_max=fg,
        g_growth_max=gg,
        sign_f=f_over_s > -spec.M1,
        sign_g=gp_min >= -spec.M2,
        growth_f=fg <= spec.l1 * (1.0 + GROWTH_RTOL),
        growth_g=gg <= spec.l2 * (1.0 + GROWTH_RTOL),
    )


# -- balance condition ----------------------------------------------------

class Verdict(str, enum.Enum):
    SATISFIED = "Satisfied"
    VIOLATED = "Violated"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class BalanceReport:
    numeric_liminf_estimate: float
    outer_decade_min: float
    probe_range: tuple
    scenario_results: tuple
    scenario_thresholds: tuple
    verdict: Verdict
    delta: float
    fitted_offset: float
    grid: np.ndarray = field(repr=False)
    quotient: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "numeric_liminf_estimate": self.numeric_liminf_estimate,
            "outer_decade_min": self.outer_decade_min,
            "probe_range": list(self.probe_range),
            "scenario_results": list(self.scenario_results),
            "scenario_thresholds": list(self.scenario_thresholds),
            "verdict": self.verdict.value,
            "delta": self.delta,
            "fitted_offset": self.fitted_offset,
        }


def balance_numerator(spec, s, volume, area, c_omega):
    ratio = area / volume
    kappa = c_omega ** 2 * area ** 2 / (4.0 * spec.epsilon * volume ** 2)
    g = spec.g(s)
    return spec.f(s) * s + ratio * g * s - kappa * (spec.g_prime(s) * s + g) ** 2


def scenario_checks(spec, volume, area, c_omega):
    """Closed-form admissibility scenarios for asymptotically pure powers.

    Returns ``(results, thresholds)``; an entry is ``None`` where the
    scenario's exponent/sign pattern does not apply.  Thresholds are the
    bound that ``c_f`` (scenario 2) or ``c_f + |Gamma|/|Omega| c_g``
    (scenario 3) must exceed.
    """
    r1, r2, cf, cg, eps = spec.r1, spec.r2, spec.c_f, spec.c_g, spec.epsilon
    ratio = area / volume
    s1 = s2 = s3 = None
    t2 = t3 = None
    if cf > 0 and cg < 0:
        s1 = bool(r1 > max(r2, 2.0 * (r2 - 1.0)))
    if 2.0 < r2 and np.isclose(r1, 2.0 * (r2 - 1.0)):
        t2 = (c_omega * area * cg * r2 / volume) ** 2 / (4.0 * eps)
        s2 = bool(cf > t2)
    if r1 == 2.0 and r2 == 2.0:
        t3 = (c_omega * area * cg / volume) ** 2 / eps
        s3 = bool(cf + ratio * cg > t3)
    return (s1, s2, s3), (None, t2, t3)


def check_balance(spec: NonlinearitySpec, volume: float, area: float, c_omega: float, grid=None,
                  omega: float = 1.0, s_min: float = DEFAULT_S_MIN) -> BalanceReport:
    """Probe the balance quotient on a log grid and classify the pair (f, g)."""
    if not 0.0 < spec.epsilon < omega:
        raise ParameterError(f"epsilon = {spec.epsilon} violates the constraint epsilon in (0, omega) with omega = {omega}")
    if c_omega <= 0:
        raise ParameterError("Poincare constant must be positive")
    r1, r2 = spec.r1, spec.r2
    if r1 < max(r2, 2.0 * (r2 - 1.0)):
        raise PreconditionError(f"exponent constraint r1 >= max(r2, 2(r2 - 1)) fails: r1={r1}, r2={r2}")
    grid = _check_grid(default_grid() if grid is None else grid, 200)
    mag = np.abs(grid)
    with np.errstate(over="ignore", invalid="ignore"):
        q = balance_numerator(spec, grid, volume, area, c_omega) / mag ** r1
    if not np.all(np.isfinite(q)):
        raise NumericError("balance quotient overflowed on the probe grid")
    s_max = float(mag.max())
    tail = mag >= s_min
    estimate = float(np.min(q[tail])) if np.any(tail) else float(np.min(q))
    outer = float(np.min(q[mag >= s_max / 10.0]))
    results, thresholds = scenario_checks(spec, volume, area, c_omega)

    if outer <= 0.0:
        verdict = Verdict.VIOLATED
    elif estimate > 0.0 and outer > INCONCLUSIVE_BAND and any(r is True for r in results):
        verdict = Verdict.SATISFIED
    else:
        verdict = Verdict.INCONCLUSIVE

    # numerator >= delta |s|^r1 - C_delta on the grid and on [-1, 1]
    delta = max(estimate, 0.0) / 2.0
    probe = np.concatenate([grid, np.linspace(-1.0, 1.0, 201)])
    with np.errstate(over="ignore", invalid="ignore"):
        gap = delta * np.abs(probe) ** r1 - balance_numerator(spec, probe, volume, area, c_omega)
    c_delta = float(max(0.0, np.max(gap)))

    return BalanceReport(
        numeric_liminf_estimate=estimate,
        outer_decade_min=outer,
        probe_range=(float(min(s_min, s_max)), s_max),
        scenario_results=results,
        scenario_thresholds=thresholds,
        verdict=verdict,
        delta=delta,
        fitted_offset=c_delta,
        grid=grid,
        quotient=q,
    )


# -- geometric constants --------------------------------------------------

def estimate_poincare_constant(mesh: Mesh, blocks: OperatorBlocks) -> float:
    """Discrete best constant of ||u - <u>_Gamma||_{L2} <= C ||grad u||_{L2}.

    Largest generalized eigenvalue of (P, K_bulk) on the M-orthogonal
    complement of constants, where P is the bulk mass form of u - <u>_Gamma.
    """
    N = blocks.n
    ones = np.ones(N)
    M = blocks.mass_bulk + blocks.mass_bdry
    mean_row = (blocks.mass_bdry @ ones) / mesh.area
    R = np.eye(N) - np.outer(ones, mean_row)
    P = R.T @ blocks.mass_bulk @ R
    Z = sla.null_space((M @ ones)[None, :])
    Pz = Z.T @ P @ Z
    Kz = Z.T @ blocks.stiff_bulk @ Z
    try:
        top = sla.eigh(0.5 * (Pz + Pz.T), 0.5 * (Kz + Kz.T), eigvals_only=True,
                       subset_by_index=[Z.shape[1] - 1, Z.shape[1] - 1])
    except sla.LinAlgError as exc:
        raise NumericError("Poincare eigenproblem failed") from exc
    return float(np.sqrt(top[0]))


@dataclass(frozen=True)
class BoundaryProbeReport:
    c_eps: float
    epsilon: float
    s: float
    gamma: float
    samples: int


def probe_boundary_interior_inequality(mesh: Mesh, blocks: OperatorBlocks, epsilon: float, s: float,
                                       samples: int = 100, seed=0, vectors=None) -> BoundaryProbeReport:
    """Smallest C making ||u||_{L^s(Gamma)}^s <= eps ||grad u||^2 + C (||u||_{L^g}^g + 1).

    Here g = max(s, 2(s - 1)).  Random probes are standard normal nodal
    vectors scaled by a log-uniform amplitude in [1e-1, 1e1], drawn one at a
    time so that a longer run extends a shorter one.
    """
    if s <= 1:
        raise ParameterError(f"s must exceed 1, got {s}")
    if epsilon <= 0:
        raise ParameterError(f"epsilon must be positive, got {epsilon}")
    gamma = max(s, 2.0 * (s - 1.0))
    if vectors is None:
        rng = np.random.default_rng(seed)
        vectors = []
        for _ in range(samples):
            amp = 10.0 ** rng.uniform(-1.0, 1.0)
            vectors.append(amp * rng.standard_normal(mesh.n_nodes))
    c = 0.0
    for u in vectors:
        u = np.asarray(u, dtype=float)
        lhs = mesh.boundary_weights @ np.abs(mesh.trace(u)) ** s
        grad = u @ blocks.stiff_bulk @ u
        lg = mesh.bulk_weights @ np.abs(mesh.bulk_interp @ u) ** gamma
        c = max(c, (lhs - epsilon * grad) / (lg + 1.0))
    return BoundaryProbeReport(c_eps=float(c), epsilon=float(epsilon), s=float(s), gamma=float(gamma),
                               samples=len(vectors))
