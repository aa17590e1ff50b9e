"""Dense complex linear algebra on small tensor-product Hilbert spaces.

Density operators, Hermitian operators and pure states are immutable value
types with validation at construction; all operations are pure functions.
Matrix exponentials go through the eigendecomposition, which keeps evolved
operators exactly unitary-conjugated.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
NORM_TOL = 1e-12

#: Largest Hilbert-space dimension the toolkit is willing to materialize.
MAX_DIM = 4096


class DimensionError(ValueError):
    """Raised when operands have inconsistent or oversized dimensions."""


class ValidationError(ValueError):
    """Raised when a state or operator violates one of its invariants."""


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, positive semidefinite, unit-trace matrix on a product space.

    Parameters
    ----------
    elements : array_like
        Square complex matrix.
    subsystem_dims : sequence of int
        Ordered factor dimensions; their product must equal the matrix
        dimension.
    meta : dict, optional
        Free-form provenance tags (protocol parameters, frames).  Not part
        of the mathematical value.
    """

    elements: np.ndarray
    subsystem_dims: tuple[int, ...]
    meta: dict | None = field(default=None, compare=False)

    def __init__(self, elements, subsystem_dims: Sequence[int], meta: dict | None = None):
        mat = _readonly(elements)
        dims = tuple(int(d) for d in subsystem_dims)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"density operator must be square, got shape {mat.shape}")
        if int(np.prod(dims)) != mat.shape[0]:
            raise DimensionError(
                f"subsystem dims {dims} do not multiply to dimension {mat.shape[0]}")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
            raise ValidationError("density operator is not Hermitian within 1e-12")
        tr = np.trace(mat)
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValidationError(f"density operator trace {tr} differs from 1 beyond 1e-12")
        evals = np.linalg.eigvalsh(mat)
        if evals.min() < -PSD_TOL:
            raise ValidationError(
                f"density operator has negative eigenvalue {evals.min():.3e}")
        object.__setattr__(self, "elements", mat)
        object.__setattr__(self, "subsystem_dims", dims)
        object.__setattr__(self, "meta", meta)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @staticmethod
    def from_pure(state: "PureState", subsystem_dims: Sequence[int] | None = None,
                  meta: dict | None = None) -> "DensityOperator":
        dims = tuple(subsystem_dims) if subsystem_dims is not None else (state.dim,)
        v = state.amplitudes
        return DensityOperator(np.outer(v, v.conj()), dims, meta=meta)

    @staticmethod
    def maximally_mixed(dim: int) -> "DensityOperator":
        return DensityOperator(np.eye(dim) / dim, (dim,))


@dataclass(frozen=True)
class HermitianOperator:
    """Hermitian matrix, energies in units where the chosen coupling is 1."""

    elements: np.ndarray

    def __init__(self, elements):
        mat = _readonly(elements)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DimensionError(f"operator must be square, got shape {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
            raise ValidationError("operator is not Hermitian within 1e-12")
        object.__setattr__(self, "elements", mat)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]


@dataclass(frozen=True)
class PureState:
    """Normalized state vector."""

    amplitudes: np.ndarray

    def __init__(self, amplitudes):
        v = np.array(amplitudes, dtype=complex).reshape(-1)
        n = np.linalg.norm(v)
        if abs(n - 1.0) > NORM_TOL:
            raise ValidationError(f"state norm {n} differs from 1 beyond 1e-12")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


def tensor(a, b):
    """Kronecker product of two states or two density operators.

    Subsystem dimension lists concatenate.  Rejects results beyond
    ``MAX_DIM``, reporting the dimension that would have been required.
    """
    if isinstance(a, PureState) and isinstance(b, PureState):
        if a.dim * b.dim > MAX_DIM:
            raise DimensionError(
                f"tensor product would need dimension {a.dim * b.dim} > {MAX_DIM}")
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityOperator) and isinstance(b, DensityOperator):
        if a.dim * b.dim > MAX_DIM:
            raise DimensionError(
                f"tensor product would need dimension {a.dim * b.dim} > {MAX_DIM}")
        return DensityOperator(np.kron(a.elements, b.elements),
                               a.subsystem_dims + b.subsystem_dims)
    raise TypeError("tensor expects two PureState or two DensityOperator operands")


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Trace out all subsystems not listed in ``keep``.

    Kept subsystems stay in their original order.  An empty ``keep`` yields
    the trivial one-dimensional operator (the scalar 1).
    """
    keep = sorted(set(int(k) for k in keep))
    n = len(rho.subsystem_dims)
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")
    dims = rho.subsystem_dims
    t = rho.elements.reshape(dims + dims)
    # contract bra/ket axis pairs of every dropped subsystem
    dropped = [k for k in range(n) if k not in keep]
    for count, k in enumerate(dropped):
        ax = k - count  # axes shift left after each trace
        t = np.trace(t, axis1=ax, axis2=ax + (n - count))
    kept_dims = tuple(dims[k] for k in keep) if keep else (1,)
    d = int(np.prod(kept_dims))
    return DensityOperator(np.asarray(t).reshape(d, d), kept_dims)


def eigh(h: HermitianOperator) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian operator.

    Returns eigenvalues in ascending order and the matrix of orthonormal
    eigenvectors (columns).
    """
    if not isinstance(h, HermitianOperator):
        h = HermitianOperator(h)  # validates hermiticity
    return np.linalg.eigh(h.elements)


def unitary_from_hamiltonian(h: HermitianOperator, t: float) -> np.ndarray:
    """exp(-i H t) through the spectral decomposition (hbar = 1)."""
    w, v = eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def evolve(rho: DensityOperator, h: HermitianOperator, t: float) -> DensityOperator:
    """Unitary conjugation rho -> U rho U† with U = exp(-i H t)."""
    if h.dim != rho.dim:
        raise DimensionError(f"operator dim {h.dim} does not match state dim {rho.dim}")
    u = unitary_from_hamiltonian(h, t)
    out = u @ rho.elements @ u.conj().T
    return DensityOperator(out, rho.subsystem_dims, meta=rho.meta)


def evolve_pure(psi: PureState, h: HermitianOperator, t: float) -> PureState:
    """exp(-i H t) |psi>."""
    if h.dim != psi.dim:
        raise DimensionError(f"operator dim {h.dim} does not match state dim {psi.dim}")
    return PureState(unitary_from_hamiltonian(h, t) @ psi.amplitudes)


def project(rho: DensityOperator, p: np.ndarray, normalize: bool = True):
    """Apply a projector: returns (post-measurement state, probability).

    With ``normalize`` the state comes back as a DensityOperator; otherwise
    the raw matrix P rho P is returned.  A normalized request on an outcome
    of probability <= 1e-14 signals an impossible outcome.
    """
    p = np.asarray(p, dtype=complex)
    if np.max(np.abs(p @ p - p)) > HERMITICITY_TOL:
        raise ValidationError("projector fails P^2 = P within 1e-12")
    prob = np.trace(p @ rho.elements)
    if abs(prob.imag) > 1e-12:
        raise ValidationError(f"projection probability has imaginary part {prob.imag:.2e}")
    prob = float(prob.real)
    out = p @ rho.elements @ p.conj().T
    if not normalize:
        return out, prob
    if prob <= 1e-14:
        raise ValidationError(f"impossible outcome: probability {prob:.2e}")
    return DensityOperator(out / prob, rho.subsystem_dims), prob


def fidelity(rho: DensityOperator, sigma: DensityOperator) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    if rho.dim != sigma.dim:
        raise DimensionError("fidelity requires equal dimensions")
    w, v = np.linalg.eigh(rho.elements)
    w = np.clip(w, 0.0, None)
    sqrt_rho = (v * np.sqrt(w)) @ v.conj().T
    inner = sqrt_rho @ sigma.elements @ sqrt_rho
    ev = np.linalg.eigvalsh(inner)
    return float(np.sum(np.sqrt(np.clip(ev, 0.0, None))) ** 2)


def basis_vector(dim: int, index: int) -> PureState:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return PureState(v)
