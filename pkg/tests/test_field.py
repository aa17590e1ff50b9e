import numpy as np
import pytest

from qrepeater import field, qmat
from qrepeater.field import (
    CatSpec,
    LossChannel,
    ValidationError,
    apply_loss,
    coherent_fock,
    coherent_overlap,
    controlled_displace,
    csd1,
    csd2,
    csd_measure,
    fock_check,
    initial_state,
    reduce_to_density,
)


def pair_pipeline(alpha_mag=1.0, ell=25.0, ell0=25.0, beta_mag=1.0):
    alpha, beta = 1j * alpha_mag, 1j * beta_mag
    ch = LossChannel(ell, ell0)
    st = initial_state(2, beta)
    st = controlled_displace(st, [0], alpha)
    st = apply_loss(st, ch)
    st = controlled_displace(st, [1], np.sqrt(ch.eta) * alpha)
    return st, ch


class TestControlledDisplace:
    def test_single_atom_splits_into_x_branches(self):
        st = initial_state(1, 1j)
        out = controlled_displace(st, [0], 0.5j)
        assert len(out.branches) == 2
        amps = {b.config: b.field_amp for b in out.branches}
        assert abs(amps["+"] - 1.5j) < 1e-15
        assert abs(amps["-"] - 0.5j) < 1e-15
        for b in out.branches:
            assert abs(b.coeff - 1 / np.sqrt(2)) < 1e-15
        assert abs(out.physical_norm() - 1.0) < 1e-12

    def test_zero_amount_leaves_state_physically_unchanged(self):
        st = initial_state(1, 1j)
        out = controlled_displace(st, [0], 0.0)
        rho_before = reduce_to_density(st, [1j])
        rho_after = reduce_to_density(out, [1j])
        assert np.max(np.abs(rho_before.elements - rho_after.elements)) < 1e-12

    def test_two_targets_binomial_weights(self):
        st = initial_state(2, 1j)
        out = controlled_displace(st, [0, 1], 0.5j)
        weights = {}
        for b in out.branches:
            weights[b.field_amp] = weights.get(b.field_amp, 0.0) + abs(b.coeff) ** 2
        assert abs(weights[2j] - 0.25) < 1e-15     # beta + 2 alpha
        assert abs(weights[1j] - 0.5) < 1e-15      # beta
        assert abs(weights[0j] - 0.25) < 1e-15     # beta - 2 alpha

    def test_rejects_real_amount(self):
        st = initial_state(1, 1j)
        with pytest.raises(ValidationError):
            controlled_displace(st, [0], 0.3 + 0.1j)

    def test_rejects_empty_targets(self):
        st = initial_state(1, 1j)
        with pytest.raises(ValidationError):
            controlled_displace(st, [], 0.5j)


class TestApplyLoss:
    def test_unit_transmittance_is_identity(self):
        st = controlled_displace(initial_state(1, 1j), [0], 1j)
        out = apply_loss(st, LossChannel(0.0))
        for a, b in zip(st.branches, out.branches):
            assert abs(a.field_amp - b.field_amp) < 1e-15
            assert abs(b.env_amp) == 0.0

    def test_splitting_amplitudes(self):
        ch = LossChannel(25.0, 25.0)
        st = controlled_displace(initial_state(1, 1j), [0], 1j)
        out = apply_loss(st, ch)
        for b in out.branches:
            orig = 2j if b.config == "+" else 0j
            assert abs(b.field_amp - np.sqrt(ch.eta) * orig) < 1e-15
            assert abs(b.env_amp - np.sqrt(1 - ch.eta) * orig) < 1e-15

    def test_double_loss_rejected(self):
        st = apply_loss(controlled_displace(initial_state(1, 1j), [0], 1j),
                        LossChannel(10.0))
        with pytest.raises(ValidationError):
            apply_loss(st, LossChannel(10.0))

    def test_env_overlap_gives_decoherence_factor(self):
        # branches beta +- alpha: environment overlap must equal
        # exp(-2 |alpha|^2 (1 - eta))
        alpha_mag, ell = 0.8, 18.0
        ch = LossChannel(ell)
        st = controlled_displace(initial_state(1, 1j), [0], 1j * alpha_mag)
        out = apply_loss(st, ch)
        envs = {b.config: b.env_amp for b in out.branches}
        got = coherent_overlap(envs["-"], envs["+"])
        expected = np.exp(-2 * alpha_mag ** 2 * (1 - ch.eta))
        assert abs(got - expected) < 1e-14

    def test_partial_trace_over_env_reproduces_factor(self):
        # joint fiber (x) environment state in Fock space, traced over E,
        # must show the same inter-branch factor as the overlap formula
        alpha_mag, ell = 0.7, 12.0
        ch = LossChannel(ell)
        t, r = np.sqrt(ch.eta), np.sqrt(1 - ch.eta)
        gp, gm = 1j * (1 + alpha_mag), 1j * (1 - alpha_mag)
        cutoff = 25
        psi = (np.kron(coherent_fock(t * gp, cutoff), coherent_fock(r * gp, cutoff))
               + np.kron(coherent_fock(t * gm, cutoff), coherent_fock(r * gm, cutoff)))
        psi /= np.linalg.norm(psi)
        rho = qmat.DensityOperator.from_pure(qmat.PureState(psi), (cutoff, cutoff))
        red = qmat.partial_trace(rho, keep=[0])
        vp, vm = coherent_fock(t * gp, cutoff), coherent_fock(t * gm, cutoff)
        # build the expected reduced matrix analytically
        w = coherent_overlap(r * gm, r * gp)
        n = 2 + 2 * np.real(coherent_overlap(gm, gp))
        expected = (np.outer(vp, vp.conj()) + np.outer(vm, vm.conj())
                    + w * np.outer(vp, vm.conj())
                    + np.conj(w) * np.outer(vm, vp.conj())) / n
        assert np.max(np.abs(red.elements - expected)) < 1e-10
        assert abs(w - np.exp(-2 * alpha_mag ** 2 * (1 - ch.eta))) < 1e-14


class TestCatSpec:
    def test_normalization_matches_offset_formula(self):
        # offset 2 alpha_t gives N_+- = 1 +- exp(-8 eta |alpha|^2)
        alpha_mag, ell = 0.9, 14.0
        eta = LossChannel(ell).eta
        off = 2j * np.sqrt(eta) * alpha_mag
        even = CatSpec(1j, off, "even")
        odd = CatSpec(1j, off, "odd")
        assert abs(even.normalization - (1 + np.exp(-8 * eta * alpha_mag ** 2))) < 1e-14
        assert abs(odd.normalization - (1 - np.exp(-8 * eta * alpha_mag ** 2))) < 1e-14

    def test_odd_cat_requires_offset(self):
        with pytest.raises(ValidationError):
            CatSpec(1j, 0.0, "odd")

    def test_cat_components_normalized(self):
        cat = CatSpec(0.5j, 0.8j, "odd")
        n = sum(np.conj(cu) * cv * coherent_overlap(au, av)
                for cu, au in cat.components() for cv, av in cat.components())
        assert abs(n - 1.0) < 1e-12


class TestReduceToDensity:
    def test_single_branch_is_pure_projector(self):
        st = initial_state(2, 1j)
        rho = reduce_to_density(st, [1j])
        assert rho.subsystem_dims == (2, 2, 1)
        evals = np.linalg.eigvalsh(rho.elements)
        assert abs(evals[-1] - 1.0) < 1e-12

    def test_gram_orthogonality_of_discrimination_basis(self):
        # <c-|ref> = 0 and <c-|c+> = 0 exactly for purely imaginary amplitudes
        eta = LossChannel(25.0).eta
        bt, at = 1j * np.sqrt(eta), 1j * np.sqrt(eta)
        cm = CatSpec(bt, 2 * at, "odd")
        cp = CatSpec(bt, 2 * at, "even")
        assert abs(field._member_overlap(cm, bt)) < 1e-14
        assert abs(field._member_overlap(cm, cp)) < 1e-14

    def test_pipeline_state_matches_fock_oracle(self):
        st, ch = pair_pipeline(alpha_mag=0.8, ell=15.0)
        bt = 1j * np.sqrt(ch.eta)
        at = 0.8j * np.sqrt(ch.eta)
        basis = [bt, CatSpec(bt, 2 * at, "even"), CatSpec(bt, 2 * at, "odd")]
        # fock_check raises if the two representations disagree beyond 1e-8
        fock_check(st, cutoff=40, field_basis=basis)

    def test_rank_deficient_basis_warns_and_reduces(self):
        st = initial_state(1, 1j)
        with pytest.warns(UserWarning, match="rank-deficient"):
            rho = reduce_to_density(st, [1j, 1j])
        assert rho.subsystem_dims[-1] == 1

    def test_incomplete_basis_rejected(self):
        st, ch = pair_pipeline()
        with pytest.raises(ValidationError, match="span"):
            reduce_to_density(st, [1j * np.sqrt(ch.eta)])


class TestCSD:
    def test_pair_success_probability_closed_form(self):
        st, ch = pair_pipeline(alpha_mag=1.0, ell=25.0)
        device = csd1(1j * np.sqrt(ch.eta), 2j * np.sqrt(ch.eta))
        outcomes = csd_measure(st, device)
        label, prob, rho = outcomes[0]
        assert label == "odd_cat_success"
        # frozen oracle: (1 - exp(-8 e^{-1}))/4
        expected = (1 - np.exp(-8 * np.exp(-1.0))) / 4
        assert abs(expected - 0.2368236258540599) < 1e-15
        assert abs(prob - expected) < 1e-12

    def test_outcome_probabilities_sum_to_one(self):
        st, ch = pair_pipeline(alpha_mag=0.6, ell=30.0)
        device = csd1(1j * np.sqrt(ch.eta), 1.2j * np.sqrt(ch.eta))
        outcomes = csd_measure(st, device)
        assert abs(sum(p for _, p, _ in outcomes) - 1.0) < 1e-12

    def test_degenerate_offset_rejected(self):
        with pytest.raises(ValidationError, match="odd cat undefined"):
            csd1(1j, 0.0)

    def test_success_probability_vanishes_with_offset(self):
        # N_-/4 -> 0 as eta |alpha|^2 -> 0
        st, ch = pair_pipeline(alpha_mag=0.05, ell=1.0)
        device = csd1(1j * np.sqrt(ch.eta), 0.1j * np.sqrt(ch.eta))
        _, prob, _ = csd_measure(st, device)[0]
        assert prob < 0.005

    def test_off_grid_amplitude_rejected(self):
        st = initial_state(1, 1j)
        device = csd1(0.0j, 0.7j)
        with pytest.raises(ValidationError, match="grid"):
            csd_measure(st, device)

    def test_quad_disc_probabilities_sum_to_one(self):
        alpha, ch = 0.75j, LossChannel(10.0)
        st = initial_state(4, 1j)
        st = controlled_displace(st, [0, 1], alpha)
        st = apply_loss(st, ch)
        st = controlled_displace(st, [2, 3], np.sqrt(ch.eta) * alpha)
        device = csd2(1j * np.sqrt(ch.eta), 1.5j * np.sqrt(ch.eta))
        outcomes = csd_measure(st, device)
        assert abs(sum(p for _, p, _ in outcomes) - 1.0) < 1e-12
        diag = field.csd_branch_probabilities(st, device)
        assert abs(sum(diag.values()) - 1.0) < 1e-12
        assert set(diag) == {"ref", "cat+", "cat-", "d+", "d-"}


class TestFockCheck:
    def test_vacuum_branch(self):
        st = initial_state(1, 0.0)
        rho = fock_check(st, cutoff=8)
        assert abs(rho.elements[0, 0] - 1.0) < 1e-12

    def test_coherent_vacuum_overlap(self):
        v = coherent_fock(1j, 40)
        got = v[0]
        assert abs(got - np.exp(-0.5)) < 1e-12
        assert abs(np.vdot(coherent_fock(0.0, 40), v) - np.exp(-0.5)) < 1e-12

    def test_cutoff_too_small_reports_tail(self):
        st = initial_state(1, 3j)
        with pytest.raises(ValidationError, match="tail mass"):
            fock_check(st, cutoff=6)

    def test_pipeline_fock_equivalence(self):
        st, _ = pair_pipeline(alpha_mag=1.0, ell=25.0)
        fock_check(st, cutoff=40)  # raises if fidelity < 1 - 1e-8
