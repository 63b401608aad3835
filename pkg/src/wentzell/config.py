"""JSON run configuration: schema, validation and conversion to domain objects."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigurationError, ConstraintError, WentzellError
from .geometry import GeometryKind, GeometrySpec, Mesh
from .nonlinearity import NonlinearitySpec, PowerTerm, SineTerm
from .operator import ExponentConvention, FractionalParams, Realization

SCHEMA_VERSION = 1


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GeometryConfig(_Model):
    kind: GeometryKind = GeometryKind.INTERVAL
    length: float = Field(1.0, gt=0)
    circumference: float = Field(2.0 * np.pi, gt=0)
    bulk_elements: int = Field(16, ge=2)
    periodic_points: int = 8

    @field_validator("periodic_points")
    @classmethod
    def _power_of_two(cls, v):
        if v < 4 or v & (v - 1):
            raise ValueError("must be a power of two >= 4")
        return v


class FractionalConfig(_Model):
    theta: float = 0.5
    alpha: float = 1.0
    omega: float = 1.0
    realization: Realization = Realization.BLOCK_R2
    exponent_convention: ExponentConvention = ExponentConvention.THETA

    @field_validator("theta")
    @classmethod
    def _theta_range(cls, v):
        if not 0.5 <= v <= 1.0:
            raise ValueError(f"theta = {v} outside the admissible range [1/2, 1]")
        return v

    @field_validator("alpha", "omega")
    @classmethod
    def _unit_range(cls, v, info):
        if not 0.0 < v <= 1.0:
            raise ValueError(f"{info.field_name} = {v} outside the admissible range (0, 1]")
        return v


class PowerTermConfig(_Model):
    coef: float
    power: float = Field(ge=2)


class SineTermConfig(_Model):
    coef: float
    wavenumber: float

    @field_validator("wavenumber")
    @classmethod
    def _nonzero(cls, v):
        if v == 0:
            raise ValueError("wavenumber must be nonzero")
        return v


class NonlinearityConfig(_Model):
    f_terms: List[PowerTermConfig] = []
    g_terms: List[PowerTermConfig] = []
    f_sines: List[SineTermConfig] = []
    g_sines: List[SineTermConfig] = []
    M1: float = Field(1.0, ge=0)
    M2: float = Field(1.0, ge=0)
    l1: float = Field(1.0, gt=0)
    l2: float = Field(1.0, gt=0)
    epsilon: float = Field(0.5, gt=0)
    r1: Optional[float] = Field(None, ge=2)
    r2: Optional[float] = Field(None, ge=2)


class ConstantTerm(_Model):
    type: Literal["constant"]
    value: float


class CosineTerm(_Model):
    type: Literal["cos"]
    amplitude: float
    wavenumber: int = Field(1, ge=0)
    axis: Literal["normal", "periodic"] = "normal"


class ModeTerm(_Model):
    type: Literal["mode"]
    index: int = Field(ge=1)
    amplitude: float


FieldTerm = Annotated[Union[ConstantTerm, CosineTerm, ModeTerm], Field(discriminator="type")]


class InitialDataConfig(_Model):
    u0: List[FieldTerm] = [CosineTerm(type="cos", amplitude=0.01, wavenumber=1)]
    v0: List[FieldTerm] = []


class TimeConfig(_Model):
    T: float = Field(gt=0)
    dt: float = Field(gt=0)
    sample_stride: int = Field(1, ge=1)


class GalerkinConfig(_Model):
    n: int = Field(8, ge=1)
    convergence: List[int] = [4, 8, 16]


class ChecksConfig(_Model):
    energy_identity: bool = True
    energy_monotone: bool = True
    weak_residual: bool = True
    apriori_bound: bool = False
    balance: bool = False
    sign_growth: bool = False
    identity_tol: float = Field(1e-6, gt=0)
    weak_residual_tol: float = Field(1e-3, gt=0)
    weak_residual_modes: int = Field(4, ge=1)


class BalanceGridConfig(_Model):
    s_min: float = Field(1e2, gt=0)
    s_max: float = Field(1e6, ge=1e6)
    points: int = Field(400, ge=200)


class ProbeConfig(_Model):
    s: float = Field(2.0, gt=1)
    epsilon: float = Field(0.5, gt=0)
    samples: int = Field(100, ge=1)
    isomorphism_probes: int = Field(10, ge=1)


class BvpConfig(_Model):
    p1: List[FieldTerm] = []
    p2: List[FieldTerm] = [ConstantTerm(type="constant", value=1.0)]


class RunConfig(_Model):
    schema_version: Literal[1] = SCHEMA_VERSION
    geometry: GeometryConfig
    time: TimeConfig
    fractional: FractionalConfig = FractionalConfig()
    nonlinearity: NonlinearityConfig = NonlinearityConfig()
    initial_data: InitialDataConfig = InitialDataConfig()
    galerkin: GalerkinConfig = GalerkinConfig()
    checks: ChecksConfig = ChecksConfig()
    balance: BalanceGridConfig = BalanceGridConfig()
    probe: ProbeConfig = ProbeConfig()
    bvp: BvpConfig = BvpConfig()
    export_matrices: bool = False
    output: str = "out"
    seed: int = Field(0, ge=0, lt=2 ** 64)

    # -- domain conversion ------------------------------------------------

    def geometry_spec(self) -> GeometrySpec:
        g = self.geometry
        return GeometrySpec(g.kind, g.length, g.circumference, g.bulk_elements, g.periodic_points)

    def fractional_params(self) -> FractionalParams:
        f = self.fractional
        return FractionalParams(f.theta, f.alpha, f.omega, f.realization, f.exponent_convention)

    def nonlinearity_spec(self) -> NonlinearitySpec:
        n = self.nonlinearity
        return NonlinearitySpec(
            f_terms=tuple(PowerTerm(t.coef, t.power) for t in n.f_terms),
            g_terms=tuple(PowerTerm(t.coef, t.power) for t in n.g_terms),
            f_sines=tuple(SineTerm(t.coef, t.wavenumber) for t in n.f_sines),
            g_sines=tuple(SineTerm(t.coef, t.wavenumber) for t in n.g_sines),
            M1=n.M1, M2=n.M2, l1=n.l1, l2=n.l2, epsilon=n.epsilon,
            r1_override=n.r1, r2_override=n.r2,
        )

    def digest(self) -> str:
        payload = self.model_dump(mode="json", exclude={"output"})
        text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _loc(err) -> str:
    return ".".join(str(p) for p in err["loc"] if not (isinstance(p, str) and p in ("constant", "cos", "mode"))) or "<root>"


def check_constraints(cfg: RunConfig) -> None:
    eps, omega = cfg.nonlinearity.epsilon, cfg.fractional.omega
    if not 0.0 < eps < omega:
        raise ConstraintError("nonlinearity.epsilon", f"constraint ε ∈ (0, ω) violated: ε = {eps}, ω = {omega}")
    if cfg.fractional.realization is Realization.SPECTRAL_R1 and cfg.fractional.alpha != 1.0:
        raise ConstraintError("fractional.alpha", "constraint α = 1 required by the SpectralR1 realization")
    if not cfg.time.dt < cfg.time.T:
        raise ConstraintError("time.dt", f"constraint dt < T violated: dt = {cfg.time.dt}, T = {cfg.time.T}")
    steps = cfg.time.T / cfg.time.dt
    if abs(steps - round(steps)) > 1e-9 * steps:
        raise ConstraintError("time.dt", "constraint T / dt ∈ ℕ violated")
    try:
        cfg.nonlinearity_spec()
    except WentzellError as exc:
        raise ConstraintError("nonlinearity", str(exc)) from exc


def config_from_dict(data: dict) -> RunConfig:
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ConfigurationError(_loc(err), err["msg"]) from None
    check_constraints(cfg)
    return cfg


def parse_config(path) -> RunConfig:
    """Read, validate and default-fill a JSON configuration file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(str(path), f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(str(path), f"invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError("<root>", "config must be a JSON object")
    return config_from_dict(data)


def sample_field(terms, mesh: Mesh, eigvecs=None, boundary=False) -> np.ndarray:
    """Evaluate a list of field terms at the nodes (or boundary nodes)."""
    nodes = mesh.nodes[mesh.boundary_nodes] if boundary else mesh.nodes
    out = np.zeros(nodes.shape[0])
    y = nodes[:, -1]
    for t in terms:
        if t.type == "constant":
            out += t.value
        elif t.type == "cos":
            if t.axis == "normal":
                out += t.amplitude * np.cos(t.wavenumber * np.pi * y / mesh.spec.length)
            else:
                if mesh.kind is GeometryKind.INTERVAL:
                    raise ConfigurationError("initial_data", "periodic axis requires the PeriodicSlab geometry")
                out += t.amplitude * np.cos(2.0 * np.pi * t.wavenumber * nodes[:, 0] / mesh.spec.circumference)
        else:
            if eigvecs is None or t.index > eigvecs.shape[1]:
                raise ConfigurationError("initial_data", f"mode index {t.index} unavailable")
            col = eigvecs[:, t.index - 1]
            out += t.amplitude * (col[mesh.boundary_nodes] if boundary else col)
    return out
