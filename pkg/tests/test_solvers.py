import itertools
import warnings

import numpy as np
import pytest

from hma_xlmimo.optimizer import (QuadraticForm, SolverOptions, max_eigenvalue, power_iteration, solve_ao_box,
                                  solve_ba_greedy, solve_lp_mm, solve_uc, solve_unit_modulus_mm)
from hma_xlmimo.optimizer.solvers import EigenConvergenceWarning, lorentzian_phases

from conftest import random_psd


def cplx(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_form(rng, n, rank=None):
    return QuadraticForm(random_psd(rng, n, rank), cplx(rng, n))


def test_uc_examples(rng):
    c = cplx(rng, 5)
    np.testing.assert_allclose(solve_uc(QuadraticForm(np.eye(5, dtype=complex), c)), c.conj(), atol=1e-14)
    np.testing.assert_array_equal(solve_uc(QuadraticForm(random_psd(rng, 4), np.zeros(4, complex))), 0)


def test_uc_beats_perturbations(rng):
    qf = random_form(rng, 8)
    q = solve_uc(qf)
    f = qf.objective(q)
    for _ in range(100):
        assert qf.objective(q + 1e-3 * cplx(rng, 8)) >= f


def test_uc_keeps_a_better_incumbent(rng):
    qf = random_form(rng, 6)
    best = solve_uc(qf)
    # an exact-value hook that prefers the incumbent
    rigged = QuadraticForm(qf.S, qf.c, exact=lambda q: 0.0 if np.array_equal(q, best) else 1.0)
    np.testing.assert_array_equal(solve_uc(rigged, q0=best), best)


def test_uc_zero_quadratic():
    assert not np.any(solve_uc(QuadraticForm(np.zeros((3, 3), complex), np.zeros(3, complex))))
    with pytest.raises(ValueError):
        solve_uc(QuadraticForm(np.zeros((3, 3), complex), np.ones(3, complex)))


def test_box_interior_matches_uc(rng):
    x = rng.standard_normal((6, 6))
    S = x @ x.T + 6 * np.eye(6)
    target = rng.uniform(0.5, 4.5, 6)
    qf = QuadraticForm(S.astype(complex), (S @ target).astype(complex))
    opts = SolverOptions(qp_tol=1e-14, qp_max_iter=20_000)
    np.testing.assert_allclose(solve_ao_box(qf, 0.001, 5.0, opts).real, solve_uc(qf).real, atol=1e-6)


def test_box_clamps_and_singleton():
    qf = QuadraticForm(np.eye(4, dtype=complex), np.full(4, 10.0 + 0j))
    np.testing.assert_allclose(solve_ao_box(qf, 0.001, 5.0), 5.0)
    np.testing.assert_array_equal(solve_ao_box(qf, 0.3, 0.3), 0.3)
    with pytest.raises(ValueError):
        solve_ao_box(qf, 1.0, 0.5)


def test_box_is_descent(rng):
    for _ in range(20):
        qf = random_form(rng, 10)
        q0 = rng.uniform(0.001, 5.0, 10).astype(complex)
        q = solve_ao_box(qf, 0.001, 5.0, q0=q0)
        assert np.all((q.real >= 0.001) & (q.real <= 5.0)) and not np.any(q.imag)
        assert qf.objective(q) <= qf.objective(q0) + 1e-12


def _ba_exhaustive(qf, level):
    n = qf.size
    best = np.inf
    for bits in itertools.product((0.0, level), repeat=n):
        best = min(best, qf.objective(np.array(bits, complex)))
    return best


def test_ba_examples(rng):
    qf = QuadraticForm(np.zeros((5, 5), complex), rng.uniform(0.1, 1.0, 5).astype(complex))
    np.testing.assert_array_equal(solve_ba_greedy(qf, 0.1), 0.1)
    pd = QuadraticForm(random_psd(rng, 5) + np.eye(5), np.zeros(5, complex))
    np.testing.assert_array_equal(solve_ba_greedy(pd, 0.1), 0.0)


def test_ba_is_local_optimum(rng):
    level = 0.1
    for _ in range(20):
        qf = random_form(rng, 8)
        q = solve_ba_greedy(qf, level)
        assert set(np.unique(q.real)) <= {0.0, level} and not np.any(q.imag)
        f = qf.objective(q)
        for i in range(8):
            flipped = q.copy()
            flipped[i] = level - flipped[i]
            assert qf.objective(flipped) >= f - 1e-12
        assert f >= _ba_exhaustive(qf, level) - 1e-12


def test_eigenvalue_examples(rng):
    assert max_eigenvalue(np.diag([1.0, 3.0, 2.0])) == pytest.approx(3.0)
    assert max_eigenvalue(np.eye(4)) == pytest.approx(1.0)
    assert max_eigenvalue(np.diag([1.0, 3.0, 2.0]), method="power") == pytest.approx(3.0, rel=1e-7)


def test_power_iteration_against_eigh(rng):
    for _ in range(20):
        S = random_psd(rng, 20)
        exact = np.linalg.eigvalsh(S)[-1]
        lam, v, ok = power_iteration(S, tol=1e-12, max_iter=20_000)
        assert ok
        assert lam == pytest.approx(exact, rel=1e-7)
        assert lam >= np.real(np.vdot(v, S @ v)) - 1e-12 * exact


def test_power_iteration_fallback_warns():
    # two equal-magnitude eigenvalues of opposite sign never settle
    S = np.diag([1.0, -1.0])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        lam = max_eigenvalue(S, SolverOptions(eig_max_iter=5), method="power")
    assert any(issubclass(w.category, EigenConvergenceWarning) for w in caught)
    assert lam == pytest.approx(0.0)


def _lp_f(qf, p):
    return qf.objective((1j + p) / 2)


def test_mm_surrogate_majorizes(rng):
    """f(p) <= f~(p | p0) with equality at p0, for T = lambda_max I."""
    for _ in range(100):
        n = 6
        qf = random_form(rng, n)
        lam = max_eigenvalue(qf.S)
        p, p0 = np.exp(2j * np.pi * rng.random(n)), np.exp(2j * np.pi * rng.random(n))

        def surrogate(x):
            t_minus_s = lam * np.eye(n) - qf.S
            gap = np.real(np.vdot(x - p0, t_minus_s @ (x - p0)))
            return _lp_f(qf, x) + gap / 4

        assert surrogate(p) >= _lp_f(qf, p) - 1e-10 * abs(_lp_f(qf, p))
        assert surrogate(p0) == pytest.approx(_lp_f(qf, p0), rel=1e-10)


def test_mm_degenerate_majorizer_converges_at_once(rng):
    n = 5
    qf = QuadraticForm(3.0 * np.eye(n, dtype=complex), cplx(rng, n))
    res = solve_lp_mm(qf, SolverOptions(mm_tol=1e-12))
    # the second iterate repeats the first, so the loop stops after confirming it
    assert res.iterations <= 2
    a = 2 * qf.c.conj() - 1j * (qf.S @ np.ones(n))
    np.testing.assert_allclose(res.p, a / np.abs(a), atol=1e-12)


def test_mm_trace_is_monotone(rng):
    for _ in range(50):
        qf = random_form(rng, 12, rank=4)
        res = solve_lp_mm(qf, SolverOptions(seed=int(rng.integers(1000))))
        assert np.all(np.diff(res.objective_trace) <= 1e-10)
        np.testing.assert_allclose(np.abs(2 * res.q - 1j), 1.0, atol=1e-12)
        assert res.objective_trace[-1] == pytest.approx(_lp_f(qf, res.p), rel=1e-9, abs=1e-9)


def test_unit_modulus_mm_is_monotone(rng):
    for _ in range(20):
        qf = random_form(rng, 10)
        res = solve_unit_modulus_mm(qf, SolverOptions(seed=1))
        assert np.all(np.diff(res.objective_trace) <= 1e-10)
        np.testing.assert_allclose(np.abs(res.q), 1.0, atol=1e-12)


def test_lorentzian_phase_inverse(rng):
    p = np.exp(2j * np.pi * rng.random(8))
    np.testing.assert_allclose(lorentzian_phases((1j + p) / 2), p, atol=1e-12)


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(mm_tol=0.0)
