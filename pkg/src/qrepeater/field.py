"""Exact coherent-state algebra for the optical pulse.

A pulse entangled with a register of atoms is held as a list of branches
(qubit configuration, fiber amplitude, environment amplitude, coefficient).
All amplitudes stay purely imaginary by protocol convention, which keeps
every displacement phase-free and the displaced cat states exactly
orthogonal where the discrimination needs them to be.  Nothing here is
truncated; the Fock representation exists only as a cross-check.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from math import lgamma
from typing import Iterable, Sequence

import numpy as np

from .qmat import DensityOperator, ValidationError

IMAG_TOL = 1e-12
GRAM_RANK_TOL = 1e-10
PROB_SUM_TOL = 1e-12

#: single-qubit kets for the configuration labels
_CONFIG_KETS = {
    "0": np.array([1.0, 0.0], dtype=complex),
    "1": np.array([0.0, 1.0], dtype=complex),
    "+": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
    "-": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
}


def coherent_overlap(gamma: complex, delta: complex) -> complex:
    """<gamma|delta> = exp(-|gamma|^2/2 - |delta|^2/2 + conj(gamma) delta)."""
    return np.exp(-abs(gamma) ** 2 / 2 - abs(delta) ** 2 / 2 + np.conj(gamma) * delta)


def config_overlap(a: str, b: str) -> complex:
    """<a|b> for two qubit configuration strings."""
    out = 1.0
    for ca, cb in zip(a, b):
        if ca == cb:
            continue
        out *= np.vdot(_CONFIG_KETS[ca], _CONFIG_KETS[cb])
        if out == 0.0:
            return 0.0
    return out


def config_ket(config: str) -> np.ndarray:
    """Computational-basis amplitudes of a configuration string."""
    out = np.array([1.0], dtype=complex)
    for c in config:
        out = np.kron(out, _CONFIG_KETS[c])
    return out


@dataclass(frozen=True)
class Branch:
    config: str
    field_amp: complex
    env_amp: complex
    coeff: complex


@dataclass(frozen=True)
class CoherentBranchState:
    """Entangled qubits + one field mode + one environment mode, exactly."""

    branches: tuple[Branch, ...]
    qubit_count: int

    def physical_norm(self) -> float:
        """sum_ij c_i conj(c_j) <gamma_j|gamma_i> <eps_j|eps_i> <q_j|q_i>."""
        total = 0.0 + 0.0j
        for bi in self.branches:
            for bj in self.branches:
                q = config_overlap(bj.config, bi.config)
                if q == 0.0:
                    continue
                total += (bi.coeff * np.conj(bj.coeff) * q
                          * coherent_overlap(bj.field_amp, bi.field_amp)
                          * coherent_overlap(bj.env_amp, bi.env_amp))
        if abs(total.imag) > 1e-10:
            raise ValidationError(f"physical norm has imaginary part {total.imag:.2e}")
        return float(total.real)


def initial_state(qubit_count: int, pulse_amp: complex) -> CoherentBranchState:
    """All atoms in |0>, pulse in |pulse_amp>, environment in vacuum."""
    _require_imaginary(pulse_amp, "pulse amplitude")
    b = Branch("0" * qubit_count, complex(pulse_amp), 0.0 + 0.0j, 1.0 + 0.0j)
    return CoherentBranchState((b,), qubit_count)


@dataclass(frozen=True)
class LossChannel:
    """Beam-splitter fiber loss with transmittance eta = exp(-ell/ell0)."""

    ell: float
    ell0: float = 25.0

    def __post_init__(self):
        if self.ell < 0 or self.ell0 <= 0:
            raise ValidationError(f"invalid channel: ell={self.ell}, ell0={self.ell0}")

    @property
    def eta(self) -> float:
        return float(np.exp(-self.ell / self.ell0))


@dataclass(frozen=True)
class CatSpec:
    """Displaced even/odd cat: (|center+offset> +- |center-offset>)/sqrt(2 N)."""

    center: complex
    offset: complex
    parity: str  # "even" | "odd"

    def __post_init__(self):
        if self.parity not in ("even", "odd"):
            raise ValidationError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if self.parity == "odd" and abs(self.offset) == 0:
            raise ValidationError("odd cat undefined for zero offset")
        n = self.normalization
        if not 0 < n <= 2:
            raise ValidationError(f"cat normalization {n} outside (0, 2]")

    @property
    def normalization(self) -> float:
        # N_+- = 1 +- exp(-2|offset|^2), the overlap of the two peaks
        ov = np.exp(-2 * abs(self.offset) ** 2)
        return float(1 + ov if self.parity == "even" else 1 - ov)

    def components(self) -> list[tuple[complex, complex]]:
        """(coefficient, coherent amplitude) pairs of the normalized cat."""
        s = 1.0 if self.parity == "even" else -1.0
        c = 1.0 / np.sqrt(2 * self.normalization)
        return [(c, self.center + self.offset), (s * c, self.center - self.offset)]


def _require_imaginary(amount: complex, what: str) -> None:
    if abs(np.real(amount)) > IMAG_TOL * max(1.0, abs(amount)):
        raise ValidationError(
            f"{what} must be purely imaginary (got {amount}); a real part breaks "
            "the cat-state orthogonality the discrimination relies on")


def _expand_to_x(config: str, target: int) -> list[tuple[str, complex, int]]:
    """Rewrite one qubit of a configuration in the sigma^X eigenbasis.

    Returns (new config, weight, x eigenvalue) triples.
    """
    c = config[target]
    if c == "+":
        return [(config, 1.0, +1)]
    if c == "-":
        return [(config, 1.0, -1)]
    plus = config[:target] + "+" + config[target + 1:]
    minus = config[:target] + "-" + config[target + 1:]
    r = 1.0 / np.sqrt(2.0)
    if c == "0":
        return [(plus, r, +1), (minus, r, -1)]
    return [(plus, r, +1), (minus, -r, -1)]


def controlled_displace(state: CoherentBranchState, targets: Iterable[int],
                        amount: complex) -> CoherentBranchState:
    """Displace the field by ``amount`` times each target's sigma^X eigenvalue.

    Target qubits come back expressed in the X basis.  Purely imaginary
    displacements compose without Weyl phases, so branches just shift.
    """
    targets = sorted(set(int(t) for t in targets))
    if not targets:
        raise ValidationError("controlled displacement needs at least one target")
    if any(t < 0 or t >= state.qubit_count for t in targets):
        raise ValidationError(f"targets {targets} out of range")
    _require_imaginary(amount, "displacement amount")

    merged: dict[tuple, complex] = {}
    for br in state.branches:
        expanded = [(br.config, br.coeff, 0)]
        for t in targets:
            nxt = []
            for cfg, coeff, s_total in expanded:
                for new_cfg, w, s in _expand_to_x(cfg, t):
                    nxt.append((new_cfg, coeff * w, s_total + s))
            expanded = nxt
        for cfg, coeff, s_total in expanded:
            key = (cfg, br.field_amp + s_total * amount, br.env_amp)
            merged[key] = merged.get(key, 0.0 + 0.0j) + coeff
    branches = tuple(Branch(cfg, f, e, c) for (cfg, f, e), c in merged.items()
                     if abs(c) > 1e-15)
    return CoherentBranchState(branches, state.qubit_count)


def apply_loss(state: CoherentBranchState, ch: LossChannel) -> CoherentBranchState:
    """Beam-splitter loss: field -> sqrt(eta) field, env <- sqrt(1-eta) field."""
    eta = ch.eta
    if not 0 < eta <= 1:
        raise ValidationError(f"transmittance {eta} outside (0, 1]")
    if any(abs(b.env_amp) > 0 for b in state.branches):
        raise ValidationError("loss already applied: environment amplitudes nonzero")
    t, r = np.sqrt(eta), np.sqrt(1 - eta)
    branches = tuple(Branch(b.config, t * b.field_amp, r * b.field_amp, b.coeff)
                     for b in state.branches)
    return CoherentBranchState(branches, state.qubit_count)


# ---------------------------------------------------------------------------
# field-basis handling

def _basis_components(member) -> list[tuple[complex, complex]]:
    if isinstance(member, CatSpec):
        return member.components()
    return [(1.0 + 0.0j, complex(member))]


def _member_overlap(u, v) -> complex:
    out = 0.0 + 0.0j
    for cu, au in _basis_components(u):
        for cv, av in _basis_components(v):
            out += np.conj(cu) * cv * coherent_overlap(au, av)
    return out


def _member_coherent_overlap(u, gamma: complex) -> complex:
    """<u|gamma> for a basis member and a coherent amplitude."""
    return sum(np.conj(cu) * coherent_overlap(au, gamma) for cu, au in _basis_components(u))


def _pivoted_cholesky(g: np.ndarray, tol: float) -> tuple[list[int], np.ndarray, int]:
    """G[piv][:, piv] = L L† with diagonal pivoting; returns (piv, L, rank)."""
    g = np.array(g, dtype=complex)
    n = g.shape[0]
    piv = list(range(n))
    low = np.zeros((n, n), dtype=complex)
    rank = n
    for k in range(n):
        j = k + int(np.argmax(np.real(np.diag(g))[k:]))
        if np.real(g[j, j]) <= tol:
            rank = k
            break
        if j != k:
            g[[k, j], :] = g[[j, k], :]
            g[:, [k, j]] = g[:, [j, k]]
            low[[k, j], :k] = low[[j, k], :k]
            piv[k], piv[j] = piv[j], piv[k]
        low[k, k] = np.sqrt(np.real(g[k, k]))
        low[k + 1:, k] = g[k + 1:, k] / low[k, k]
        g[k + 1:, k + 1:] -= np.outer(low[k + 1:, k], np.conj(low[k + 1:, k]))
    return piv, low[:rank, :rank], rank


def _forward_solve(low: np.ndarray, b: np.ndarray) -> np.ndarray:
    y = np.zeros_like(b)
    for i in range(low.shape[0]):
        y[i] = (b[i] - low[i, :i] @ y[:i]) / low[i, i]
    return y


def reduce_to_density(state: CoherentBranchState,
                      field_basis: Sequence) -> DensityOperator:
    """Qubits ⊗ field density operator with the environment traced out.

    The field factor is expressed in the orthonormalized span of
    ``field_basis`` (cat specs and/or coherent amplitudes).  The basis must
    span every branch amplitude; a rank-deficient basis is reduced
    automatically with a warning.
    """
    members = list(field_basis)
    if not members:
        raise ValidationError("field_basis must not be empty")
    n = len(members)
    gram = np.array([[_member_overlap(u, v) for v in members] for u in members])
    piv, low, rank = _pivoted_cholesky(gram, GRAM_RANK_TOL)
    if rank < n:
        warnings.warn(f"field basis rank-deficient: kept {rank} of {n} members",
                      stacklevel=2)
    ordered = [members[p] for p in piv[:rank]]

    coords = []
    for br in state.branches:
        v = np.array([_member_coherent_overlap(u, br.field_amp) for u in ordered])
        y = _forward_solve(low, v)
        residual = 1.0 - float(np.real(np.vdot(y, y)))
        if residual > 1e-9:
            raise ValidationError(
                f"field_basis does not span branch amplitude {br.field_amp} "
                f"(missing norm {residual:.2e})")
        coords.append(y)

    nq = state.qubit_count
    dim = (2 ** nq) * rank
    rho = np.zeros((dim, dim), dtype=complex)
    vecs = [np.kron(config_ket(br.config), y) for br, y in zip(state.branches, coords)]
    for i, bi in enumerate(state.branches):
        for j, bj in enumerate(state.branches):
            w = bi.coeff * np.conj(bj.coeff) * coherent_overlap(bj.env_amp, bi.env_amp)
            rho += w * np.outer(vecs[i], np.conj(vecs[j]))
    norm = np.trace(rho).real
    return DensityOperator(rho / norm, (2,) * nq + (rank,))


# ---------------------------------------------------------------------------
# cat-state discrimination

@dataclass(frozen=True)
class CSDDevice:
    """Ideal discrimination of the pulse in a displaced-cat basis.

    ``center`` is the undisplaced pulse amplitude at the detector and
    ``step`` the elementary conditional displacement, so incoming branches
    sit at center + m*step.  ``max_order`` is 1 for the two-atom device
    (basis: reference, cats at +-step) and 2 for the four-atom one (adds
    cats at +-2*step).
    """

    center: complex
    step: complex
    max_order: int = 1

    def __post_init__(self):
        if abs(self.step) == 0:
            raise ValidationError("degenerate discrimination: zero cat offset "
                                  "(eta |alpha|^2 = 0), odd cat undefined")
        if self.max_order not in (1, 2):
            raise ValidationError("max_order must be 1 or 2")

    def basis(self) -> dict[str, object]:
        """The (linearly independent, not mutually orthogonal) basis."""
        out = {"ref": self.center}
        out["cat+"] = CatSpec(self.center, self.step, "even")
        out["cat-"] = CatSpec(self.center, self.step, "odd")
        if self.max_order == 2:
            out["d+"] = CatSpec(self.center, 2 * self.step, "even")
            out["d-"] = CatSpec(self.center, 2 * self.step, "odd")
        return out


def csd1(center: complex, step: complex) -> CSDDevice:
    return CSDDevice(center, step, max_order=1)


def csd2(center: complex, step: complex) -> CSDDevice:
    return CSDDevice(center, step, max_order=2)


def _member_coefficients(device: CSDDevice, m: int) -> dict[str, complex]:
    """Expansion of |center + m*step> over the discrimination basis.

    Exact for |m| <= max_order: the two cats of order |m| recombine into the
    displaced coherent state.  The expansion is unique because the basis is
    linearly independent.
    """
    if m == 0:
        return {"ref": 1.0 + 0.0j}
    order = abs(m)
    sign = 1.0 if m > 0 else -1.0
    even = CatSpec(device.center, order * device.step, "even")
    odd = CatSpec(device.center, order * device.step, "odd")
    names = ("cat+", "cat-") if order == 1 else ("d+", "d-")
    return {names[0]: np.sqrt(2 * even.normalization) / 2,
            names[1]: sign * np.sqrt(2 * odd.normalization) / 2}


def csd_measure(state: CoherentBranchState, device: CSDDevice) -> list[tuple]:
    """Run the discrimination; postselect the odd cat at +-step.

    Returns ``[("odd_cat_success", p, rho_qubits), ("failure", 1-p, rho)]``.
    Branch field amplitudes must lie on the grid center + m*step with
    |m| <= max_order.  Outcome probabilities are checked to sum to 1.
    """
    groups: dict[str, list[tuple[Branch, complex]]] = {}
    for br in state.branches:
        m_float = (br.field_amp - device.center) / device.step
        m = int(round(np.real(m_float)))
        if abs(m_float - m) > 1e-9 or abs(m) > device.max_order:
            raise ValidationError(
                f"branch amplitude {br.field_amp} not on the discrimination grid "
                f"(m = {m_float})")
        for name, x in _member_coefficients(device, m).items():
            groups.setdefault(name, []).append((br, br.coeff * x))

    nq = state.qubit_count
    dim = 2 ** nq

    def group_density(items) -> tuple[np.ndarray, float]:
        rho = np.zeros((dim, dim), dtype=complex)
        for bi, ci in items:
            vi = config_ket(bi.config)
            for bj, cj in items:
                w = ci * np.conj(cj) * coherent_overlap(bj.env_amp, bi.env_amp)
                rho += w * np.outer(vi, np.conj(config_ket(bj.config)))
        p = float(np.trace(rho).real)
        return rho, p

    densities = {name: group_density(items) for name, items in groups.items()}
    total = sum(p for _, p in densities.values())
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise ValidationError(
            f"discrimination probabilities sum to {total}, not 1 within 1e-12")

    rho_s, p_s = densities.get("cat-", (np.zeros((dim, dim), complex), 0.0))
    rho_f = sum(r for name, (r, _) in densities.items() if name != "cat-")
    p_f = total - p_s

    out = []
    success_state = (DensityOperator(rho_s / p_s, (2,) * nq) if p_s > 1e-14 else None)
    failure_state = (DensityOperator(rho_f / p_f, (2,) * nq) if p_f > 1e-14 else None)
    out.append(("odd_cat_success", p_s, success_state))
    out.append(("failure", p_f, failure_state))
    return out


def csd_branch_probabilities(state: CoherentBranchState,
                             device: CSDDevice) -> dict[str, float]:
    """Per-member diagnostic probabilities.

    The basis is not mutually orthogonal, so this split is not unique as a
    quantum measurement; only the odd-cat entry is postselected by the
    protocol.
    """
    probs = {}
    for name in device.basis():
        probs[name] = 0.0
    groups: dict[str, list[tuple[Branch, complex]]] = {}
    for br in state.branches:
        m = int(round(np.real((br.field_amp - device.center) / device.step)))
        for name, x in _member_coefficients(device, m).items():
            groups.setdefault(name, []).append((br, br.coeff * x))
    dim = 2 ** state.qubit_count
    for name, items in groups.items():
        rho = np.zeros((dim, dim), dtype=complex)
        for bi, ci in items:
            vi = config_ket(bi.config)
            for bj, cj in items:
                w = ci * np.conj(cj) * coherent_overlap(bj.env_amp, bi.env_amp)
                rho += w * np.outer(vi, np.conj(config_ket(bj.config)))
        probs[name] = float(np.trace(rho).real)
    return probs


# ---------------------------------------------------------------------------
# truncated-Fock oracle

def coherent_fock(gamma: complex, cutoff: int) -> np.ndarray:
    """Fock amplitudes of |gamma> up to photon number cutoff-1."""
    if gamma == 0:
        v = np.zeros(cutoff, dtype=complex)
        v[0] = 1.0
        return v
    n = np.arange(cutoff)
    log_gamma = np.log(complex(gamma))
    logfact = np.array([lgamma(k + 1) for k in range(cutoff)])
    return np.exp(-abs(gamma) ** 2 / 2 + n * log_gamma - logfact / 2)


def fock_check(state: CoherentBranchState, cutoff: int,
               field_basis: Sequence | None = None) -> DensityOperator:
    """Independent truncated-Fock build of the reduced density operator.

    Verifies that the analytic (Gram-basis) reduction and the Fock-basis
    reduction describe the same state to fidelity >= 1 - 1e-8, then returns
    the Fock-basis operator.
    """
    max_amp = max((abs(b.field_amp) for b in state.branches), default=0.0)
    required = max_amp ** 2 + 6 * max_amp
    if cutoff < required:
        tail = max(1.0 - float(np.sum(np.abs(coherent_fock(b.field_amp, cutoff)) ** 2))
                   for b in state.branches)
        raise ValidationError(
            f"Fock cutoff {cutoff} below required {required:.1f}; tail mass {tail:.2e}")

    nq = state.qubit_count
    dim = (2 ** nq) * cutoff
    rho = np.zeros((dim, dim), dtype=complex)
    vecs = [np.kron(config_ket(b.config), coherent_fock(b.field_amp, cutoff))
            for b in state.branches]
    for i, bi in enumerate(state.branches):
        for j, bj in enumerate(state.branches):
            w = bi.coeff * np.conj(bj.coeff) * coherent_overlap(bj.env_amp, bi.env_amp)
            rho += w * np.outer(vecs[i], np.conj(vecs[j]))
    norm = np.trace(rho).real
    fock_rho = DensityOperator(rho / norm, (2,) * nq + (cutoff,))

    if field_basis is None:
        field_basis = sorted({b.field_amp for b in state.branches}, key=lambda z: z.imag)
    gram_rho = reduce_to_density(state, field_basis)

    # embed the Gram-basis field factor into Fock space and compare
    members = list(field_basis)
    gram = np.array([[_member_overlap(u, v) for v in members] for u in members])
    piv, low, rank = _pivoted_cholesky(gram, GRAM_RANK_TOL)
    ordered = [members[p] for p in piv[:rank]]
    fock_members = np.column_stack([
        sum(c * coherent_fock(a, cutoff) for c, a in _basis_components(u))
        for u in ordered])
    # orthonormal basis e = B (L^-H), so the embedding matrix is B (L^-H)
    t = fock_members @ np.linalg.inv(low.conj().T)
    embed = np.kron(np.eye(2 ** nq), t)
    mapped = embed @ gram_rho.elements @ embed.conj().T
    mapped = DensityOperator(mapped / np.trace(mapped).real, (2,) * nq + (cutoff,))

    from .qmat import fidelity
    f = fidelity(fock_rho, mapped)
    if f < 1 - 1e-8:
        raise ValidationError(
            f"Fock and Gram representations disagree: fidelity {f:.12f}")
    return fock_rho
