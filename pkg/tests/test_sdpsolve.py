import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from magbb.sdpsolve import Constraint, SdpProblem, SdpSolution, solve, validate

I3 = np.eye(3)


def _trace_one(a):
    return SdpProblem(a, (Constraint(np.eye(a.shape[0]), "eq", 1.0),))


def _random_sym(rng, n):
    a = rng.normal(size=(n, n))
    return a + a.T


class TestSolve:
    def test_diagonal_minimum(self):
        sol = solve(_trace_one(np.diag([1.0, 2.0, 3.0])))
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(1.0, abs=1e-7)
        np.testing.assert_allclose(sol.x_matrix, np.diag([1.0, 0, 0]), atol=1e-7)
        assert sol.eigenvalues[1] / sol.eigenvalues[0] <= 1e-4

    def test_random_eigenvalue_problems(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a = _random_sym(rng, 3)
            sol = solve(_trace_one(a))
            assert sol.status == "optimal"
            assert sol.objective_value == pytest.approx(np.linalg.eigvalsh(a)[0], abs=1e-6)

    def test_contradictory_equalities(self):
        prob = SdpProblem(np.diag([1.0, 2.0, 3.0]), (Constraint(I3, "eq", 1.0), Constraint(I3, "eq", 2.0)))
        sol = solve(prob)
        assert sol.status == "infeasible"

    def test_infeasible_inequalities_certificate(self):
        # trace(X) <= 1 but X_11 >= 2
        e11 = np.diag([1.0, 0, 0])
        prob = SdpProblem(I3, (Constraint(I3, "le", 1.0), Constraint(e11, "ge", 2.0)))
        sol = solve(prob)
        assert sol.status == "infeasible"
        assert sol.certificate_residual <= 1e-6

    def test_inequalities(self):
        # min trace(diag(1,2,3) X) s.t. trace X >= 1, X_11 <= 0.25 -> 0.25*1 + 0.75*2
        e11 = np.diag([1.0, 0, 0])
        prob = SdpProblem(np.diag([1.0, 2.0, 3.0]), (Constraint(I3, "ge", 1.0), Constraint(e11, "le", 0.25)))
        sol = solve(prob)
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(1.75, abs=1e-7)
        assert validate(prob, sol).max_violation <= 1e-6

    def test_max_iterations(self):
        sol = solve(_trace_one(np.diag([1.0, 2.0, 3.0])), max_iterations=2)
        assert sol.status == "max_iterations"
        assert sol.x_matrix.shape == (3, 3)

    def test_deterministic(self):
        a = _random_sym(np.random.default_rng(3), 4)
        s1, s2 = solve(_trace_one(a)), solve(_trace_one(a))
        assert np.array_equal(s1.x_matrix, s2.x_matrix)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0.01, 100.0))
    def test_scaling_invariance(self, seed, alpha):
        a = _random_sym(np.random.default_rng(seed), 3)
        s1 = solve(_trace_one(a))
        s2 = solve(_trace_one(alpha * a))
        assert s2.objective_value == pytest.approx(alpha * s1.objective_value, abs=1e-6 * max(1, alpha))
        np.testing.assert_allclose(s2.x_matrix, s1.x_matrix, atol=1e-5)

    def test_constraint_order_independent(self):
        rng = np.random.default_rng(11)
        a = _random_sym(rng, 4)
        b = rng.normal(size=(4, 4))
        b = b @ b.T
        cons = [Constraint(np.eye(4), "eq", 2.0), Constraint(b, "le", 3.0), Constraint(np.diag([1.0, 0, 0, 0]), "ge", 0.1)]
        s1 = solve(SdpProblem(a, tuple(cons)))
        s2 = solve(SdpProblem(a, tuple(reversed(cons))))
        assert s1.status == s2.status == "optimal"
        assert s1.objective_value == pytest.approx(s2.objective_value, abs=1e-6)
        np.testing.assert_allclose(s1.x_matrix, s2.x_matrix, atol=1e-4)

    def test_optimal_invariants(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            a = _random_sym(rng, 5)
            b = rng.normal(size=(5, 5))
            b = b @ b.T
            prob = SdpProblem(a, (Constraint(np.eye(5), "eq", 1.0), Constraint(b, "le", float(np.trace(b)))))
            sol = solve(prob)
            assert sol.status == "optimal"
            rep = validate(prob, sol)
            assert rep.min_eigenvalue >= -1e-8
            assert rep.violations.max() <= 1e-6
            assert sol.objective_value == pytest.approx(rep.objective_value, abs=1e-8)


class TestValidate:
    def test_optimal_solution(self):
        prob = _trace_one(np.diag([1.0, 2.0, 3.0]))
        rep = validate(prob, solve(prob))
        assert rep.max_violation <= 1e-6

    def test_zero_matrix(self):
        prob = _trace_one(np.diag([1.0, 2.0, 3.0]))
        sol = SdpSolution(np.zeros((3, 3)), "optimal", 0.0, 0.0, np.zeros(3))
        rep = validate(prob, sol)
        assert rep.violations[0] == pytest.approx(1.0)
        assert rep.signed[0] == pytest.approx(-1.0)

    def test_negative_eigenvalue(self):
        prob = _trace_one(np.diag([1.0, 2.0, 3.0]))
        sol = SdpSolution(np.diag([1.1, 0.0, -0.1]), "optimal", 0.0, 0.0, np.zeros(3))
        assert validate(prob, sol).psd_violation == pytest.approx(0.1)

    def test_dimension_mismatch(self):
        prob = _trace_one(np.diag([1.0, 2.0, 3.0]))
        with pytest.raises(ValueError):
            validate(prob, SdpSolution(np.eye(2), "optimal", 0.0, 0.0, np.zeros(2)))


class TestProblemValidation:
    def test_asymmetric(self):
        with pytest.raises(ValueError):
            SdpProblem(np.array([[0.0, 1.0], [0.0, 0.0]]), (Constraint(np.eye(2), "eq", 1.0),))

    def test_empty_constraints(self):
        with pytest.raises(ValueError):
            SdpProblem(np.eye(2), ())

    def test_bad_relation(self):
        with pytest.raises(ValueError):
            Constraint(np.eye(2), "lt", 1.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            SdpProblem(np.eye(2), (Constraint(np.eye(3), "eq", 1.0),))
