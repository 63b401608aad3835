"""Desk-scale geometries with coupled bulk/boundary quadrature.

Two geometries are supported:

``Interval``
    Omega = (0, L) with piecewise-linear elements.  The boundary is the pair
    of endpoints carrying the counting measure, so |Gamma| = 2 and the
    Laplace-Beltrami operator vanishes identically.

``PeriodicSlab``
    Omega = (0, L) x S^1(l_x).  The normal direction y is piecewise linear,
    the periodic direction x is a Fourier collocation grid with
    ``periodic_points`` equispaced nodes.  The boundary is the two circles
    y = 0 and y = L.

Nodes of the slab are numbered row by row: ``index = i * P + j`` with ``i``
the normal (y) index and ``j`` the periodic (x) index.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, DimensionError

# two-point Gauss rule on the reference element [0, 1]
_GAUSS_POINTS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
_GAUSS_WEIGHTS = np.array([0.5, 0.5])


class GeometryKind(str, enum.Enum):
    INTERVAL = "Interval"
    PERIODIC_SLAB = "PeriodicSlab"


class Region(str, enum.Enum):
    BULK = "Bulk"
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class GeometrySpec:
    kind: GeometryKind = GeometryKind.INTERVAL
    length: float = 1.0
    circumference: float = 2.0 * np.pi
    bulk_elements: int = 16
    periodic_points: int = 8

    def __post_init__(self):
        object.__setattr__(self, "kind", GeometryKind(self.kind))
        if not self.length > 0:
            raise ConfigurationError("length", f"must be positive, got {self.length}")
        if not self.circumference > 0:
            raise ConfigurationError("circumference", f"must be positive, got {self.circumference}")
        if int(self.bulk_elements) != self.bulk_elements or self.bulk_elements < 2:
            raise ConfigurationError("bulk_elements", f"must be an integer >= 2, got {self.bulk_elements}")
        p = self.periodic_points
        if int(p) != p or p < 4 or (int(p) & (int(p) - 1)) != 0:
            raise ConfigurationError("periodic_points", f"must be a power of two >= 4, got {p}")


def _frozen(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Mesh:
    """Discrete geometry.

    ``bulk_interp`` maps nodal values to values at the bulk quadrature points;
    boundary quadrature points coincide with the boundary nodes, so the
    boundary rule is a weight per boundary node.
    """

    spec: GeometrySpec
    nodes: np.ndarray
    elements: np.ndarray
    boundary_nodes: np.ndarray
    bulk_points: np.ndarray
    bulk_weights: np.ndarray
    bulk_interp: sp.csr_matrix
    boundary_weights: np.ndarray
    volume: float
    area: float
    normal_nodes: np.ndarray = field(repr=False)
    periodic_nodes: np.ndarray = field(repr=False)

    @property
    def kind(self) -> GeometryKind:
        return self.spec.kind

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_boundary(self) -> int:
        return self.boundary_nodes.shape[0]

    def trace(self, u):
        """Restriction of a nodal field to the boundary nodes."""
        u = np.asarray(u)
        if u.shape[0] != self.n_nodes:
            raise DimensionError(f"bulk field has length {u.shape[0]}, mesh has {self.n_nodes} nodes")
        return u[self.boundary_nodes]

    def lift(self, gamma):
        """Zero extension of a boundary field to the full node set."""
        gamma = np.asarray(gamma, dtype=float)
        if gamma.shape[0] != self.n_boundary:
            raise DimensionError(f"boundary field has length {gamma.shape[0]}, mesh has {self.n_boundary} boundary nodes")
        out = np.zeros((self.n_nodes,) + gamma.shape[1:])
        out[self.boundary_nodes] = gamma
        return out

    def trace_matrix(self) -> sp.csr_matrix:
        nb = self.n_boundary
        return sp.csr_matrix((np.ones(nb), (np.arange(nb), self.boundary_nodes)), shape=(nb, self.n_nodes))

    def boundary_mask(self):
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes] = True
        return mask


def _interval_pieces(length, n_el):
    """1-D piecewise-linear nodes, Gauss points and interpolation matrix."""
    x = np.linspace(0.0, length, n_el + 1)
    h = np.diff(x)
    qp = (x[:-1, None] + h[:, None] * _GAUSS_POINTS[None, :]).ravel()
    qw = (h[:, None] * _GAUSS_WEIGHTS[None, :]).ravel()
    # quadrature point q lives in element q // 2
    cols = np.repeat(np.arange(n_el), 2)[:, None] + np.array([0, 1])[None, :]
    xi = np.tile(_GAUSS_POINTS, n_el)
    vals = np.stack([1.0 - xi, xi], axis=1)
    rows = np.repeat(np.arange(2 * n_el), 2)
    interp = sp.csr_matrix((vals.ravel(), (rows, cols.ravel())), shape=(2 * n_el, n_el + 1))
    return x, qp, qw, interp


def build_geometry(spec: GeometrySpec) -> Mesh:
    """Construct the mesh and quadrature rules described by ``spec``."""
    if not isinstance(spec, GeometrySpec):
        raise ConfigurationError("geometry", "expected a GeometrySpec")
    y, qy, wy, interp_y = _interval_pieces(spec.length, spec.bulk_elements)
    n_el = spec.bulk_elements

    if spec.kind is GeometryKind.INTERVAL:
        nodes = y[:, None]
        elements = np.stack([np.arange(n_el), np.arange(1, n_el + 1)], axis=1)
        boundary = np.array([0, n_el])
        return Mesh(
            spec=spec,
            nodes=_frozen(nodes),
            elements=_frozen(elements),
            boundary_nodes=_frozen(boundary),
            bulk_points=_frozen(qy[:, None]),
            bulk_weights=_frozen(wy),
            bulk_interp=interp_y,
            boundary_weights=_frozen(np.ones(2)),
            volume=float(spec.length),
            area=2.0,
            normal_nodes=_frozen(y),
            periodic_nodes=_frozen(np.zeros(1)),
        )

    P = spec.periodic_points
    lx = spec.circumference
    x = np.arange(P) * (lx / P)
    wx = np.full(P, lx / P)
    ny = n_el + 1
    X, Y = np.meshgrid(x, y)  # rows follow y, columns follow x
    nodes = np.stack([X.ravel(), Y.ravel()], axis=1)
    idx = np.arange(ny * P).reshape(ny, P)
    jn = np.roll(np.arange(P), -1)
    elements = np.stack([idx[:-1, :], idx[:-1, jn], idx[1:, jn], idx[1:, :]], axis=-1).reshape(-1, 4)
    boundary = np.concatenate([idx[0], idx[-1]])
    QX, QY = np.meshgrid(x, qy)
    bulk_points = np.stack([QX.ravel(), QY.ravel()], axis=1)
    bulk_weights = np.outer(wy, wx).ravel()
    # x is collocated at the quadrature points, so the x-factor is the identity
    interp = sp.kron(interp_y, sp.identity(P), format="csr")
    return Mesh(
        spec=spec,
        nodes=_frozen(nodes),
        elements=_frozen(elements),
        boundary_nodes=_frozen(boundary),
        bulk_points=_frozen(bulk_points),
        bulk_weights=_frozen(bulk_weights),
        bulk_interp=interp,
        boundary_weights=_frozen(np.concatenate([wx, wx])),
        volume=float(spec.length * lx),
        area=float(2.0 * lx),
        normal_nodes=_frozen(y),
        periodic_nodes=_frozen(x),
    )


def compute_measures(mesh: Mesh):
    """Return (|Omega|, |Gamma|) by summation of the quadrature weights."""
    return float(np.sum(mesh.bulk_weights)), float(np.sum(mesh.boundary_weights))


def quadrature_integrate(mesh: Mesh, nodal_field, region=Region.BULK) -> float:
    """Integrate a nodal field over the bulk or the boundary.

    A bulk field has one value per node and is interpolated to the Gauss
    points; a boundary field has one value per boundary node.
    """
    region = Region(region)
    u = np.asarray(nodal_field, dtype=float)
    if region is Region.BULK:
        if u.shape != (mesh.n_nodes,):
            raise DimensionError(f"bulk field must have shape ({mesh.n_nodes},), got {u.shape}")
        return float(mesh.bulk_weights @ (mesh.bulk_interp @ u))
    if u.shape != (mesh.n_boundary,):
        raise DimensionError(f"boundary field must have shape ({mesh.n_boundary},), got {u.shape}")
    return float(mesh.boundary_weights @ u)
