import dataclasses

import numpy as np
import pytest

from cavityrh import rh_solver
from cavityrh.geometry import MaterialParams
from cavityrh.pipeline import solve
from cavityrh.rh_solver import (SolverConfig, SolverError, _first_rhs, _next_rhs,
                                assemble_systems, check_equilibrium, iterate)
from cavityrh.series_engine import cavity_rhs, kernel_coeffs, ring_expand

from conftest import simulated_area


@pytest.fixture(scope="module")
def coeffs(case1_map, mat):
    return kernel_coeffs(mat.kappa, case1_map.theta1, case1_map.theta2, 360)


class TestConfig:

    @pytest.mark.parametrize("kw", [dict(N0=3), dict(N0=180, M=360), dict(eps=0.0),
                                    dict(max_iters=0), dict(x0=0.0)])
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            SolverConfig(**kw)

    def test_boundary_truncation_allowed(self):
        assert SolverConfig(N0=4, M=9).N0 == 4


class TestSystems:

    def test_entry_index_arithmetic(self, coeffs):
        s = assemble_systems(coeffs, SolverConfig())
        # row k = 1, unknown d_{-2}: subscript -k-1+n = 0
        assert s.neg_matrix[1, 1] == coeffs.alpha_k[0]
        assert s.neg_matrix[0, 0] == coeffs.alpha_k[0]
        assert s.pos_matrix[0, 0] == coeffs.beta_k[1]

    def test_triangular_toeplitz(self, coeffs):
        s = assemble_systems(coeffs, SolverConfig(N0=20, M=60))
        assert np.allclose(np.tril(s.neg_matrix, -1), 0)
        assert np.allclose(np.tril(s.pos_matrix, -1), 0)
        assert s.neg_matrix.shape == (20, 20) and s.pos_matrix.shape == (21, 21)
        for r in range(19):
            for c in range(r, 20):
                assert s.neg_matrix[r, c] == coeffs.alpha_k[c - r]
        for r in range(21):
            for c in range(r, 21):
                assert s.pos_matrix[r, c] == coeffs.beta_k[c - r + 1]

    def test_independent_of_loading(self, case1_map):
        mats = [MaterialParams(), MaterialParams(gamma=5.0, k0=1.3)]
        ss = [assemble_systems(kernel_coeffs(m.kappa, case1_map.theta1, case1_map.theta2, 360),
                               SolverConfig()) for m in mats]
        np.testing.assert_array_equal(ss[0].neg_matrix, ss[1].neg_matrix)
        np.testing.assert_array_equal(ss[0].pos_matrix, ss[1].pos_matrix)

    def test_condition_finite(self, coeffs):
        s = assemble_systems(coeffs, SolverConfig())
        assert np.isfinite(s.cond_neg) and np.isfinite(s.cond_pos)
        assert s.cond_neg < 1e6 and s.cond_pos < 1e6

    def test_potentials_against_direct_sums(self, coeffs):
        N0 = 12
        s = assemble_systems(coeffs, SolverConfig(N0=N0, M=40))
        rng = np.random.default_rng(9)
        d = rng.normal(size=2 * N0 + 1) + 1j * rng.normal(size=2 * N0 + 1)
        A, B = s.potentials(d)
        al, be = coeffs.alpha_k, coeffs.beta_k
        for k in range(-N0, N0 + 1):
            a = sum(al[k - m] * d[m + N0] for m in range(-N0, k + 1))
            b = sum(be[n - k] * d[n + N0] for n in range(k, N0 + 1))
            assert A[k + N0] == pytest.approx(a, rel=1e-12, abs=1e-12)
            assert B[k + N0] == pytest.approx(b, rel=1e-12, abs=1e-12)

    def test_truncated_coefficients_rejected(self, case1_map):
        c = kernel_coeffs(1.8, case1_map.theta1, case1_map.theta2, 40)
        with pytest.raises(ValueError):
            assemble_systems(c, SolverConfig(N0=20, M=41))


class TestIterate:

    def test_factorized_once_per_solve(self, case1, case1_map, mat):
        before = rh_solver.FACTORIZATIONS
        sol = solve(case1, mat, SolverConfig(), cmap=case1_map)
        assert rh_solver.FACTORIZATIONS - before == 2
        assert sol.systems.factorizations == 2
        assert sol.state.iterations > 1

    def test_unloaded(self, case1, case1_map):
        sol = solve(case1, MaterialParams(gamma=0.0), SolverConfig(), cmap=case1_map)
        assert not np.any(sol.state.d)
        assert sol.state.iterations == 0
        assert sol.state.stop_reason == "tolerance"
        assert all(v == 0 for v in sol.equilibrium().values())

    def test_fixed_point(self, case1_solution):
        sol = case1_solution
        st, s = sol.state, sol.systems
        N0 = st.N0
        L = 2 * N0
        M = (len(sol.f_alpha) - 1) // 2
        u = sol.alpha ** np.arange(-L, L + 1.0) * sol.f_alpha[M - L:M + L + 1]
        r0 = _first_rhs(sol.rhs, sol.alpha, st.kappa, N0)
        r1 = _next_rhs(st.A, st.B, u, sol.alpha, N0)
        lhs_neg = s.neg_matrix @ st.d[N0 - 1::-1]
        lhs_pos = s.pos_matrix @ st.d[N0:]
        scale = np.abs(r0[1]).max()
        assert np.abs(lhs_neg - r0[0] - r1[0]).max() <= 1e-10 * scale
        assert np.abs(lhs_pos - r0[1] - r1[1]).max() <= 1e-10 * scale

    def test_first_pass_enforces_resultant_rows(self, case1_solution):
        st = case1_solution.state
        kap = st.kappa
        assert st.A_m1 == pytest.approx(st.K0 / (1 + kap), rel=1e-12)
        assert st.B_m1 == pytest.approx(-kap * st.K0 / (1 + kap), rel=1e-12)

    def test_resultant_against_mapped_area(self, case1_solution, mat):
        W_sim = simulated_area(case1_solution.cmap)
        kap = mat.kappa
        st = case1_solution.state
        assert st.A_m1 == pytest.approx(-1j * W_sim * mat.gamma / (1 + kap), rel=1e-6)
        assert st.B_m1 == pytest.approx(1j * kap * W_sim * mat.gamma / (1 + kap), rel=1e-6)

    def test_single_valued(self, case1_solution):
        st = case1_solution.state
        assert abs(st.kappa * st.A_m1 + st.B_m1) <= 1e-8 * abs(st.A_m1)

    def test_residual_history_contracts(self, case1_solution):
        h = np.array(case1_solution.state.residual_history)
        assert case1_solution.state.converged
        assert h[-1] <= 1e-14 * h[0]
        # not monotone pass to pass, but every two passes shrink the correction
        assert np.all(h[2:] < h[:-2])

    def test_linear_in_unit_weight(self, case1, case1_map, mat, case1_solution):
        sol2 = solve(case1, mat.scaled(2.0), SolverConfig(), cmap=case1_map)
        d1, d2 = case1_solution.state.d, sol2.state.d
        assert np.abs(d2 - 2 * d1).max() <= 1e-10 * np.abs(d1).max()
        assert sol2.state.A_m1 == pytest.approx(2 * case1_solution.state.A_m1, rel=1e-12)

    def test_iteration_cap_reported(self, case1, case1_map, mat):
        sol = solve(case1, mat, SolverConfig(max_iters=2), cmap=case1_map)
        assert sol.state.stop_reason == "cap"
        assert not sol.state.converged
        assert sol.state.iterations == 2
        assert len(sol.state.residual_history) == 3

    def test_divergence_detected(self, case1_solution):
        sol = case1_solution
        systems = dataclasses.replace(sol.systems)
        calls = {"n": 0}
        real_solve = sol.systems.solve

        def growing(a, b):
            calls["n"] += 1
            return real_solve(a, b) * 10.0 ** calls["n"]

        systems.solve = growing
        with pytest.raises(SolverError) as exc:
            iterate(systems, sol.rhs, sol.f_alpha, sol.alpha, sol.state.kappa, sol.cfg)
        state = exc.value.state
        assert state.stop_reason == "diverged"
        assert len(state.residual_history) >= 6

    def test_short_ring_expansion_rejected(self, case1_solution):
        sol = case1_solution
        f = ring_expand(sol.cmap, sol.alpha, 100)
        with pytest.raises(ValueError):
            iterate(sol.systems, sol.rhs, f, sol.alpha, 1.8, sol.cfg)

    def test_report(self, case1_solution):
        r = case1_solution.state.report()
        assert r["iterations"] == case1_solution.state.iterations
        assert r["stop_reason"] in ("tolerance", "relative")
        assert r["config"]["N0"] == 80
        assert len(r["residual_history"]) == r["iterations"] + 1


class TestEquilibriumReport:

    def test_keys(self, case1_solution):
        rep = case1_solution.equilibrium()
        assert set(rep) == {"A_-1", "B_-1", "A_-1 - B_-1", "single_valuedness", "K0"}
        assert rep["single_valuedness"] < 1e-12

    def test_regression_values(self, case1_solution):
        st = case1_solution.state
        assert st.A_m1 == pytest.approx(-89.28468j, abs=1e-4)
        assert st.B_m1 == pytest.approx(160.71242j, abs=1e-4)

    def test_unloaded_report_is_zero(self, case1_solution):
        st = dataclasses.replace(case1_solution.state, A=0 * case1_solution.state.A,
                                 B=0 * case1_solution.state.B, K0=0j)
        assert all(v == 0 for v in check_equilibrium(st, 12.5, 0.0, 1.8).values())

    def test_cavity_rhs_uses_configured_truncation(self, case1_solution, mat):
        rhs = cavity_rhs(case1_solution.cmap, mat, 360)
        assert len(rhs.I_k) == 360
