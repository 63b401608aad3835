"""Discrete Wentzell-Laplacian, its spectral calculus and damping operators.

The positive operator ``A = K_bulk + M_bulk + K_bdry + M_bdry`` realizes
minus the Wentzell-Laplacian in weak form; ``M = M_bulk + M_bdry`` is the
mass matrix of L^2(Omega) x L^2(Gamma) restricted to traces.  Everything is
dense: the target size is a few thousand unknowns at most.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla

from .errors import AssemblyError, DimensionError, NumericError, ParameterError
from .geometry import GeometryKind, Mesh

SYMMETRY_RTOL = 1e-12
EIG_RESIDUAL_RTOL = 1e-9
ORTHONORMAL_ATOL = 1e-9
MAX_DENSE_UNKNOWNS = 4096


class Realization(str, enum.Enum):
    SPECTRAL_R1 = "SpectralR1"
    BLOCK_R2 = "BlockR2"


class ExponentConvention(str, enum.Enum):
    THETA = "theta"
    TWO_THETA = "two_theta"


@dataclass(frozen=True)
class OperatorBlocks:
    mass_bulk: np.ndarray
    stiff_bulk: np.ndarray
    mass_bdry: np.ndarray
    stiff_bdry: np.ndarray
    boundary_nodes: np.ndarray

    @property
    def n(self) -> int:
        return self.mass_bulk.shape[0]

    def lift(self, p2):
        p2 = np.asarray(p2, dtype=float)
        if p2.shape == (self.n,):
            return p2
        if p2.shape != (self.boundary_nodes.shape[0],):
            raise DimensionError(f"boundary field has shape {p2.shape}")
        out = np.zeros(self.n)
        out[self.boundary_nodes] = p2
        return out


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class WentzellOperator:
    blocks: OperatorBlocks
    A: np.ndarray
    M: np.ndarray
    eig: EigenDecomposition | None = None

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def with_eig(self, eig: EigenDecomposition) -> "WentzellOperator":
        return replace(self, eig=eig)

    def full_eig(self) -> EigenDecomposition:
        """The complete decomposition, computing it if the cached one is truncated."""
        if self.eig is not None and self.eig.n_modes == self.n:
            return self.eig
        return solve_eigenproblem(self, self.n)


@dataclass(frozen=True)
class FractionalParams:
    theta: float = 0.5
    alpha: float = 1.0
    omega: float = 1.0
    realization: Realization = Realization.BLOCK_R2
    exponent_convention: ExponentConvention = ExponentConvention.THETA

    def __post_init__(self):
        object.__setattr__(self, "realization", Realization(self.realization))
        object.__setattr__(self, "exponent_convention", ExponentConvention(self.exponent_convention))
        if not 0.5 <= self.theta <= 1.0:
            raise ParameterError(f"theta must lie in [1/2, 1], got {self.theta}")
        if not 0.0 < self.alpha <= 1.0:
            raise ParameterError(f"alpha must lie in (0, 1], got {self.alpha}")
        if not 0.0 < self.omega <= 1.0:
            raise ParameterError(f"omega must lie in (0, 1], got {self.omega}")
        if self.realization is Realization.SPECTRAL_R1 and self.alpha != 1.0:
            raise ParameterError("SpectralR1 realization requires alpha = 1")

    @property
    def power(self) -> float:
        """Exponent applied to the eigenvalues."""
        if self.exponent_convention is ExponentConvention.TWO_THETA:
            return 2.0 * self.theta
        return self.theta


@dataclass(frozen=True)
class IsomorphismReport:
    ratio_low: float
    ratio_high: float
    c_star: float
    ratios: tuple


# -- assembly -------------------------------------------------------------

def _p1_matrices(nodes_1d):
    h = np.diff(nodes_1d)
    n = nodes_1d.shape[0]
    K = np.zeros((n, n))
    Mm = np.zeros((n, n))
    ke = np.array([[1.0, -1.0], [-1.0, 1.0]])
    me = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0
    for e, he in enumerate(h):
        sl = slice(e, e + 2)
        K[sl, sl] += ke / he
        Mm[sl, sl] += me * he
    return K, Mm


def _fourier_stiffness(n_points, circumference):
    """Spectral -d^2/dx^2 quadratic form on an equispaced periodic grid.

    The Nyquist mode keeps its wavenumber so that only constants lie in the
    kernel.
    """
    k = 2.0 * np.pi / circumference * np.fft.fftfreq(n_points, d=1.0 / n_points)
    c = np.real(np.fft.ifft(k ** 2))
    idx = (np.arange(n_points)[:, None] - np.arange(n_points)[None, :]) % n_points
    C = c[idx]
    C = 0.5 * (C + C.T)
    return (circumference / n_points) * C


def assemble_blocks(mesh: Mesh) -> OperatorBlocks:
    """Bulk and boundary mass/stiffness blocks on the full node index set."""
    Ky, My = _p1_matrices(np.asarray(mesh.normal_nodes))
    N = mesh.n_nodes
    if N > MAX_DENSE_UNKNOWNS:
        raise ParameterError(f"{N} unknowns exceeds the dense limit {MAX_DENSE_UNKNOWNS}")
    if mesh.kind is GeometryKind.INTERVAL:
        Mb = np.zeros((N, N))
        Mb[mesh.boundary_nodes, mesh.boundary_nodes] = mesh.boundary_weights
        blocks = OperatorBlocks(My, Ky, Mb, np.zeros((N, N)), np.asarray(mesh.boundary_nodes))
    else:
        P = mesh.spec.periodic_points
        lx = mesh.spec.circumference
        Mx = np.eye(P) * (lx / P)
        Kx = _fourier_stiffness(P, lx)
        ends = np.zeros(My.shape[0])
        ends[[0, -1]] = 1.0
        Ey = np.diag(ends)
        blocks = OperatorBlocks(
            mass_bulk=np.kron(My, Mx),
            stiff_bulk=np.kron(Ky, Mx) + np.kron(My, Kx),
            mass_bdry=np.kron(Ey, Mx),
            stiff_bdry=np.kron(Ey, Kx),
            boundary_nodes=np.asarray(mesh.boundary_nodes),
        )
    for a in (blocks.mass_bulk, blocks.stiff_bulk, blocks.mass_bdry, blocks.stiff_bdry):
        a.setflags(write=False)
    return blocks


def _is_symmetric(a):
    scale = max(np.max(np.abs(a)), 1.0)
    return np.max(np.abs(a - a.T)) <= SYMMETRY_RTOL * scale


def assemble_wentzell(blocks: OperatorBlocks) -> WentzellOperator:
    """Composite stiffness ``A`` and mass ``M`` of the Wentzell-Laplacian."""
    for name in ("mass_bulk", "stiff_bulk", "mass_bdry", "stiff_bdry"):
        if not _is_symmetric(getattr(blocks, name)):
            raise AssemblyError(f"block {name} is not symmetric")
    A = blocks.stiff_bulk + blocks.mass_bulk + blocks.stiff_bdry + blocks.mass_bdry
    M = blocks.mass_bulk + blocks.mass_bdry
    for name, mat in (("A", A), ("M", M)):
        try:
            sla.cho_factor(mat)
        except sla.LinAlgError as exc:
            raise AssemblyError(f"composite matrix {name} is not positive definite") from exc
    A.setflags(write=False)
    M.setflags(write=False)
    return WentzellOperator(blocks=blocks, A=A, M=M)


# -- spectral calculus ----------------------------------------------------

def _fix_signs(W):
    W = W.copy()
    for j in range(W.shape[1]):
        col = W[:, j]
        tol = 1e-12 * np.max(np.abs(col))
        first = np.flatnonzero(np.abs(col) > tol)[0]
        if col[first] < 0:
            W[:, j] = -col
    return W


def solve_eigenproblem(op: WentzellOperator, n: int) -> EigenDecomposition:
    """Lowest ``n`` eigenpairs of ``A w = lambda M w`` with M-orthonormal w."""
    N = op.n
    if not 1 <= n <= N:
        raise ParameterError(f"requested {n} modes, operator has {N} unknowns")
    if n == N:
        vals, W = sla.eigh(op.A, op.M, driver="gvd")
    else:
        vals, W = sla.eigh(op.A, op.M, subset_by_index=[0, n - 1], driver="gvx")
    W = _fix_signs(W)
    AW = op.A @ W
    MW = op.M @ W
    # Rayleigh-quotient refinement: eigenvalue error becomes quadratic in the vector error
    vals = np.sum(W * AW, axis=0) / np.sum(W * MW, axis=0)
    if np.any(np.diff(vals) < 0):
        order = np.argsort(vals, kind="stable")
        vals, W, AW, MW = vals[order], W[:, order], AW[:, order], MW[:, order]
    res = np.linalg.norm(AW - MW * vals, axis=0)
    bound = EIG_RESIDUAL_RTOL * vals * np.linalg.norm(MW, axis=0)
    if np.any(res > bound):
        j = int(np.argmax(res / bound))
        raise NumericError(f"eigenpair {j} residual {res[j]:.3e} exceeds {bound[j]:.3e}")
    gram = W.T @ MW
    if np.max(np.abs(gram - np.eye(n))) > ORTHONORMAL_ATOL:
        raise NumericError("eigenvectors are not M-orthonormal")
    vals.setflags(write=False)
    W.setflags(write=False)
    return EigenDecomposition(values=vals, vectors=W)


def _spectral_matrix(M, values, vectors, power):
    MW = M @ vectors
    lam = np.clip(values, 0.0, None) ** power
    out = (MW * lam) @ MW.T
    return 0.5 * (out + out.T)


def fractional_matrix(eig: EigenDecomposition, M, theta: float) -> np.ndarray:
    """Dense weak-form matrix of ``A**theta``: ``M W diag(L**theta) W^T M``."""
    if not 0.0 <= theta <= 2.0:
        raise ParameterError(f"power {theta} outside [0, 2]")
    return _spectral_matrix(M, eig.values, eig.vectors, theta)


def apply_fractional_power(eig: EigenDecomposition, M, theta: float, x) -> np.ndarray:
    """Weak-form action of ``A**theta`` on a nodal vector."""
    if not 0.0 <= theta <= 1.0:
        raise ParameterError(f"theta must lie in [0, 1], got {theta}")
    x = np.asarray(x, dtype=float)
    if x.shape[0] != M.shape[0]:
        raise DimensionError(f"vector length {x.shape[0]} != {M.shape[0]}")
    MW = M @ eig.vectors
    return MW @ (eig.values ** theta * (MW.T @ x))


def damping_parts(op: WentzellOperator, params: FractionalParams) -> dict:
    """The three quadratic forms whose sum is the damping matrix.

    Keys: ``fractional`` (omega-part in the bulk), ``boundary``
    (alpha*omega*K_bdry) and ``velocity`` (the L^2 x L^2 damping).
    """
    p = params.power
    if params.realization is Realization.SPECTRAL_R1:
        eig = op.full_eig()
        Ap = _spectral_matrix(op.M, eig.values, eig.vectors, p)
        return {
            "fractional": params.omega * (Ap - op.M),
            "boundary": np.zeros_like(op.M),
            "velocity": np.array(op.M),
        }
    mu, V = sla.eigh(op.blocks.stiff_bulk, op.M)
    Bp = _spectral_matrix(op.M, mu, V, p)
    return {
        "fractional": params.omega * Bp,
        "boundary": params.alpha * params.omega * op.blocks.stiff_bdry,
        "velocity": np.array(op.M),
    }


def build_damping_matrix(op: WentzellOperator, params: FractionalParams) -> np.ndarray:
    """Weak-form matrix of the strong damping operator.

    SpectralR1: ``omega A^theta + (1 - omega) M``.
    BlockR2:    ``omega B^theta + alpha omega K_bdry + M`` with ``B = K_bulk``.
    """
    parts = damping_parts(op, params)
    D = parts["fractional"] + parts["boundary"] + parts["velocity"]
    return 0.5 * (D + D.T)


def min_generalized_eigenvalue(S, M) -> float:
    return float(sla.eigh(S, M, eigvals_only=True, subset_by_index=[0, 0])[0])


# -- boundary value problem and diagnostics -------------------------------

def solve_wentzell_bvp(blocks: OperatorBlocks, p1, p2) -> np.ndarray:
    """Solve ``-Lap u = p1`` in Omega, ``-Lap_Gamma u + d_n u + u = p2`` on Gamma.

    ``p1`` is nodal; ``p2`` is given on the boundary nodes (or nodally, in
    which case interior entries are ignored by the boundary mass).
    """
    p1 = np.asarray(p1, dtype=float)
    if p1.shape != (blocks.n,):
        raise DimensionError(f"p1 must have shape ({blocks.n},), got {p1.shape}")
    load = blocks.mass_bulk @ p1 + blocks.mass_bdry @ blocks.lift(p2)
    S = blocks.stiff_bulk + blocks.stiff_bdry + blocks.mass_bdry
    try:
        U = sla.solve(S, load, assume_a="pos")
    except sla.LinAlgError as exc:
        raise NumericError("Wentzell BVP system is singular") from exc
    res = np.linalg.norm(S @ U - load)
    scale = np.linalg.norm(S, 2) * np.linalg.norm(U) + np.linalg.norm(load)
    if scale > 0 and res > 1e-10 * scale:
        raise NumericError(f"BVP residual {res:.3e} exceeds tolerance")
    return U


def _graph_ratio(A, M, cho, U):
    LU = sla.cho_solve(cho, A @ U)
    image = LU @ (M @ LU)
    base = U @ (M @ U)
    return float(np.sqrt(image / (base + image)))


def estimate_isomorphism_constant(op: WentzellOperator, probes: int = 10, seed=0, vectors=None) -> IsomorphismReport:
    """Envelope of ``||M^{-1} A U||_M / ||U||_graph`` over probe vectors.

    The graph norm is ``(||U||_M^2 + ||M^{-1} A U||_M^2)^{1/2}``.  Probes are
    standard normal nodal vectors drawn one at a time, so the first ``k``
    probes do not depend on the total count.  Explicit ``vectors`` replace
    the random family.
    """
    cho = sla.cho_factor(op.M)
    if vectors is None:
        if probes < 1:
            raise ParameterError("probes must be >= 1")
        rng = np.random.default_rng(seed)
        vectors = [rng.standard_normal(op.n) for _ in range(probes)]
    ratios = tuple(_graph_ratio(op.A, op.M, cho, np.asarray(v, dtype=float)) for v in vectors)
    lo, hi = min(ratios), max(ratios)
    return IsomorphismReport(ratio_low=lo, ratio_high=hi, c_star=max(hi, 1.0 / lo), ratios=ratios)


def discrete_norms(op: WentzellOperator, U, V) -> dict:
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.shape != (op.n,) or V.shape != (op.n,):
        raise DimensionError(f"expected vectors of length {op.n}")
    return {
        "norm_X2_sq": float(V @ op.M @ V),
        "norm_V1_sq": float(U @ op.A @ U),
        "energy_pairing": float(U @ op.A @ V),
    }
