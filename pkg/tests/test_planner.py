import numpy as np
import pytest

from qrepeater import planner
from qrepeater.planner import (
    RepeaterParams,
    SegmentSolution,
    ValidationError,
    chain_law_discrepancies,
    solve_segment_length,
    success_probability,
    rate,
)


class TestParams:
    def test_validation(self):
        with pytest.raises(ValidationError):
            RepeaterParams(1.0, 10.0, 4)
        with pytest.raises(ValidationError):
            RepeaterParams(1.0, 10.0, 3, p_swap=0.0)
        with pytest.raises(ValidationError):
            RepeaterParams(1.0, -1.0, 3)


class TestSuccessProbability:
    def test_worked_example(self):
        # alpha=1, ell=11 km, p_swap=0.9 gives 0.0139 (prints as 0.014)
        p = RepeaterParams(1.0, 11.0, 3)
        assert abs(success_probability(p) - 0.0139) < 5e-5

    def test_ratio_form_independent_of_p_swap(self):
        for ps in (0.5, 0.9, 1.0):
            p = RepeaterParams(0.75, 10.0, 3, p_swap=ps)
            assert abs(success_probability(p) / ps
                       - 0.014132001168744756 * (0.9 / 0.9)) < 1e-12

    def test_reference_ratios(self):
        # direct evaluations of (1 - exp(-8 a^2 eta))^2 / 64
        p = RepeaterParams(0.5, 10.0, 3)
        assert abs(success_probability(p) / 0.9 - 0.008517487548481214) < 1e-12
        p = RepeaterParams(1.0, 10.0, 3)
        assert abs(success_probability(p) / 0.9 - 0.015479) < 1e-6

    def test_vanishes_with_transmittance(self):
        p = RepeaterParams(1.0, 2000.0, 3)
        assert success_probability(p) < 1e-10


class TestRate:
    def test_single_segment_has_no_swap_penalty(self):
        p1 = RepeaterParams(1.0, 10.0, 1)
        assert abs(rate(p1) - success_probability(p1) / planner.cycle_time(p1)) < 1e-12

    def test_table3_first_and_last_rows(self):
        rows = planner.table_rate_rows("table3")
        (first, printed_first), (last, printed_last) = rows[0], rows[-1]
        assert abs(first.rate_pps - 39.0) < 0.1
        assert abs(last.rate_pps - 15.8) < 0.1

    def test_table5_long_chain(self):
        rows = dict(((r.n_segments, r.ell), (r, p))
                    for r, p in planner.table_rate_rows("table5"))
        row, printed = rows[(111, 10.0)]
        assert abs(row.rate_pps - 1.39) < 0.01
        assert printed == 1.4

    def test_all_printed_rows_within_five_percent(self):
        for name in ("table3", "table4", "table5"):
            for row, printed in planner.table_rate_rows(name):
                assert abs(row.rate_pps - printed) / printed < 0.05

    def test_worked_example_rate(self):
        p = RepeaterParams(1.0, 11.0, 3)
        assert abs(rate(p) - 18.0) / 18.0 < 0.10

    def test_strictly_decreasing_in_n(self):
        rates = [rate(RepeaterParams(1.0, 10.0, n)) for n in (1, 3, 7, 15, 31)]
        assert all(a > b for a, b in zip(rates, rates[1:]))


class TestFinalFidelity:
    def test_conventional_matches_chain_module(self):
        from qrepeater.swapping import ChainSpec, chain_compose
        f_seg = planner.segment_fidelity(1.0, 5.2)
        via_chain = chain_compose(ChainSpec(15, f_seg, "conventional")).f_final
        assert abs(planner.final_fidelity(1.0, 5.2, 15) - via_chain) < 1e-12

    def test_known_discrepancy_band(self):
        # printed table fidelities agree with the conventional law to 0.04
        # absolute at every row, but not exactly (documented ambiguity)
        worst = 0.0
        for name in ("table3", "table4", "table5"):
            for d in chain_law_discrepancies(name):
                worst = max(worst, abs(d["deviation_conventional"]))
        assert worst < 0.04
        assert worst > 1e-3  # genuinely not exact

    def test_reference_row_value(self):
        # alpha=1, ell=5.2, N=15: conventional law gives about 0.797
        got = planner.final_fidelity(1.0, 5.2, 15)
        assert abs(got - 0.797) < 1e-3


class TestSolveSegmentLength:
    def test_fixed_point_roundtrip(self):
        for n in (3, 15):
            target = planner.final_fidelity(1.0, 10.0, n)
            sol = solve_segment_length(target, 1.0, n)
            assert sol.feasible
            assert abs(sol.ell - 10.0) < 1.5e-3  # 1 m bisection tolerance

    def test_reference_band(self):
        sol = solve_segment_length(0.8, 1.0, 15)
        assert sol.feasible
        assert 4.5 <= sol.ell <= 6.0

    def test_monotone_in_n(self):
        ells = [solve_segment_length(0.9, 0.75, n).ell for n in (3, 7, 15, 31)]
        assert all(a > b for a, b in zip(ells, ells[1:]))

    def test_monotone_in_target(self):
        e1 = solve_segment_length(0.8, 1.0, 7).ell
        e2 = solve_segment_length(0.9, 1.0, 7).ell
        assert e2 < e1

    def test_near_unity_target_yields_tiny_segment(self):
        sol = solve_segment_length(0.9999, 0.5, 111)
        assert isinstance(sol, SegmentSolution)
        assert sol.feasible
        assert sol.ell < 0.05
        assert sol.f_achieved >= 0.9999

    def test_out_of_range_target_rejected(self):
        with pytest.raises(ValidationError):
            solve_segment_length(1.0, 1.0, 3)
        with pytest.raises(ValidationError):
            solve_segment_length(0.4, 1.0, 3)

    def test_dynamical_method_supported(self):
        sol = solve_segment_length(0.9, 1.0, 7, method="dynamical")
        assert sol.feasible
        conv = solve_segment_length(0.9, 1.0, 7).ell
        assert abs(sol.ell - conv) < 1.0  # nearby but not identical


class TestDatasets:
    def test_fig2_endpoints(self):
        csv = planner.fig2_dataset(1.0, ell_grid=[0.0, 100.0, 150.0])
        lines = csv.strip().splitlines()
        assert lines[0] == "ell_km,f,F,S_conv,S1_dyn"
        first = [float(x) for x in lines[1].split(",")]
        assert abs(first[1] - 1.0) < 1e-9
        assert abs(first[2] - 1.0) < 1e-5
        f100 = [float(x) for x in lines[2].split(",")]
        f150 = [float(x) for x in lines[3].split(",")]
        assert abs(f150[1] - f100[1]) < 0.005

    def test_fig4_reference_value(self):
        csv = planner.fig4_dataset(alphas=(0.75,), ell_grid=[10.0])
        val = float(csv.strip().splitlines()[1].split(",")[2])
        assert abs(val - 0.014132001168744756) < 1e-10  # 9 significant digits

    def test_fig5_monotone_lengths(self):
        csv = planner.fig5_dataset(1.0, targets=(0.9,), n_max=15)
        rows = [line.split(",") for line in csv.strip().splitlines()[1:]]
        ells = [float(r[3]) for r in rows]
        assert all(a > b for a, b in zip(ells, ells[1:]))

    def test_table_dataset_shape(self):
        csv = planner.table_dataset("table4")
        lines = csv.strip().splitlines()
        assert lines[0] == "F_final,ell_km,N,R_pps,L_km"
        assert len(lines) == 1 + 8

    def test_datasets_deterministic(self):
        assert planner.fig2_dataset(0.75) == planner.fig2_dataset(0.75)
        assert planner.discrepancy_dataset() == planner.discrepancy_dataset()

    def test_discrepancy_dataset_rows(self):
        csv = planner.discrepancy_dataset()
        lines = csv.strip().splitlines()
        assert len(lines) == 1 + 4 + 8 + 12
