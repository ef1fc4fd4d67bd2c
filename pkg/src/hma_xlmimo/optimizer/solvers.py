"""Weight-subproblem solvers for the four HMA feasible sets (and unit-modulus hybrid stages).

Every solver minimizes f(q) = q^H S q - 2 Re(q^H c*) and accepts a warm start;
starting from the current AO iterate keeps the outer sum-rate sequence monotone.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .quadratic import QuadraticForm

log = logging.getLogger(__name__)


class EigenConvergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SolverOptions:
    ao_tol: float = 1e-3
    ao_max_iter: int = 100
    mm_tol: float = 1e-8
    mm_max_iter: int = 1000
    eig_tol: float = 1e-9
    eig_max_iter: int = 500
    qp_tol: float = 1e-9
    qp_max_iter: int = 500
    ridge: float = 1e-12
    seed: int = 0
    monotone_slack: float = 1e-9

    def __post_init__(self):
        for name in ("ao_tol", "mm_tol", "eig_tol", "qp_tol", "ridge"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class MMResult:
    q: np.ndarray
    p: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    lambda_max: float = 0.0


def power_iteration(S: np.ndarray, tol: float = 1e-9, max_iter: int = 500, seed: int = 0):
    """Dominant eigenpair of a Hermitian PSD matrix.

    Returns (estimate, vector, converged). The estimate is the Rayleigh quotient
    plus the residual norm, so it upper-bounds the Rayleigh quotient of the vector.
    """
    n = S.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    mu, resid = 0.0, np.inf
    for _ in range(max_iter):
        sv = S @ v
        mu = float(np.real(np.vdot(v, sv)))
        resid = float(np.linalg.norm(sv - mu * v))
        if resid <= tol * abs(mu) or not np.any(sv):
            return mu + resid, v, True
        v = sv / np.linalg.norm(sv)
    return mu + resid, v, False


def max_eigenvalue(S: np.ndarray, options: SolverOptions = SolverOptions(), method: str = "auto") -> float:
    """Largest eigenvalue of Hermitian S; full decomposition for N <= 64 unless ``method='power'``."""
    n = S.shape[0]
    if method == "eigh" or (method == "auto" and n <= 64):
        return float(scipy.linalg.eigvalsh(S, subset_by_index=[n - 1, n - 1])[0])
    lam, _, ok = power_iteration(S, options.eig_tol, options.eig_max_iter, options.seed)
    if not ok:
        warnings.warn("power iteration did not converge, using trace(S) as the bound", EigenConvergenceWarning)
        return float(np.real(np.trace(S)))
    return lam


def solve_uc(qf: QuadraticForm, options: SolverOptions = SolverOptions(), q0: np.ndarray | None = None) -> np.ndarray:
    """Minimizer of the unconstrained quadratic, S q = c*."""
    S, rhs = qf.S, qf.c.conj()
    lam = max_eigenvalue(S, options)
    if lam <= 0:
        if np.any(rhs):
            raise ValueError("linear term with a zero quadratic: objective unbounded")
        return np.zeros(qf.size, dtype=complex) if q0 is None else np.array(q0, dtype=complex)
    a = S
    if np.linalg.cond(S) > 1.0 / options.ridge:
        a = S + options.ridge * lam * np.eye(qf.size)
    q = scipy.linalg.solve(a, rhs, assume_a="her")
    resid = np.linalg.norm(S @ q - rhs)
    if resid > options.qp_tol * max(np.linalg.norm(rhs), 1e-300):
        log.debug("UC residual %.3e", resid)
    if q0 is not None and qf.value(q) > qf.value(q0):
        # rounding in the solve beat the true decrease; keep the incumbent
        return np.array(q0, dtype=complex)
    return q


def solve_ao_box(qf: QuadraticForm, lower: float, upper: float, options: SolverOptions = SolverOptions(),
                 q0: np.ndarray | None = None) -> np.ndarray:
    """Projected gradient on q^T Re(S) q - 2 Re(c)^T q over the real box [lower, upper]^N."""
    if upper < lower:
        raise ValueError("empty box")
    R, r = np.real(qf.S), np.real(qf.c)
    n = r.size
    q = np.full(n, 0.5 * (lower + upper)) if q0 is None else np.clip(np.real(q0), lower, upper)
    if upper == lower:
        return np.full(n, lower, dtype=complex)
    lam = max_eigenvalue(R, options)
    if lam <= 0:
        return np.where(r > 0, upper, np.where(r < 0, lower, q)).astype(complex)
    scale = max(np.linalg.norm(r), lam * np.linalg.norm(q), 1e-300)
    f = qf.value(q.astype(complex))
    for _ in range(options.qp_max_iter):
        # step 1/(2 lam) on the gradient 2(Rq - r)
        q_new = np.clip(q - (R @ q - r) / lam, lower, upper)
        step = lam * np.linalg.norm(q_new - q)
        f_new = qf.value(q_new.astype(complex))
        if f_new > f:
            break
        q, f = q_new, f_new
        if step <= options.qp_tol * scale:
            break
    return q.astype(complex)


def _real_objective(R: np.ndarray, r: np.ndarray, q: np.ndarray) -> float:
    return float(q @ R @ q - 2.0 * r @ q)


def solve_ba_greedy(qf: QuadraticForm, level: float, options: SolverOptions = SolverOptions(),
                    q0: np.ndarray | None = None) -> np.ndarray:
    """Cyclic coordinate descent over {0, level}^N; ties go to ``level``."""
    R, r = np.real(qf.S), np.real(qf.c)
    n = r.size
    if q0 is None:
        q = np.full(n, level)
    else:
        q = np.where(np.abs(np.real(q0) - level) <= np.abs(np.real(q0)), level, 0.0)
    start = q.copy()
    g = R @ q
    diag = np.diag(R)
    scale = max(np.abs(_real_objective(R, r, q)), np.abs(r).sum() * level, 1e-300)
    for _ in range(options.qp_max_iter):
        improved = False
        for i in range(n):
            x = q[i]
            y = level - x  # the other state
            rest = g[i] - diag[i] * x
            delta = diag[i] * (y * y - x * x) + 2.0 * (y - x) * (rest - r[i])
            if delta < 0 or (delta == 0 and y == level):
                q[i] = y
                g += R[:, i] * (y - x)
                if delta < -1e-14 * scale:
                    improved = True
        if not improved:
            break
    if qf.value(q.astype(complex)) > qf.value(start.astype(complex)):
        return start.astype(complex)
    return q.astype(complex)


def _unit_phase(a: np.ndarray) -> np.ndarray:
    """e^{j arg a} with arg 0 = 0."""
    mag = np.abs(a)
    zero = mag == 0
    if zero.any():
        a = np.where(zero, 1.0 + 0j, a)
        mag = np.where(zero, 1.0, mag)
    return a / mag


def _mm_loop(S, drive, objective, p, options: SolverOptions) -> MMResult:
    lam = max_eigenvalue(S, options)
    f = objective(p)
    trace = [f]
    it = 0
    for it in range(1, options.mm_max_iter + 1):
        p_new = _unit_phase(lam * p - (S @ p - drive))
        f_new = objective(p_new)
        if f_new > f:
            # an eigenvalue estimate below lambda_max (or rounding) broke the majorizer; back off
            lam *= 2.0
            log.debug("MM objective increased, enlarging T to %.3e", lam)
            continue
        trace.append(f_new)
        done = abs(f_new - f) <= options.mm_tol
        p, f = p_new, f_new
        if done:
            break
    return MMResult(q=p, p=p, objective_trace=trace, iterations=it, lambda_max=lam)


def solve_lp_mm(qf: QuadraticForm, options: SolverOptions = SolverOptions(),
                p0: np.ndarray | None = None) -> MMResult:
    """MM over Lorentzian weights q = (j + p)/2 with the lambda_max I majorizer."""
    n = qf.size
    S = qf.S
    if p0 is None:
        p0 = np.exp(2j * np.pi * np.random.default_rng(options.seed).random(n))
    drive = 2.0 * qf.c.conj() - 1j * (S @ np.ones(n))
    res = _mm_loop(S, drive, lambda p: qf.value((1j + p) / 2.0), np.asarray(p0, dtype=complex), options)
    res.q = (1j + res.p) / 2.0
    return res


def solve_unit_modulus_mm(qf: QuadraticForm, options: SolverOptions = SolverOptions(),
                          p0: np.ndarray | None = None) -> MMResult:
    """MM over unit-modulus q (phase-shifter analog combiners)."""
    n = qf.size
    if p0 is None:
        p0 = np.exp(2j * np.pi * np.random.default_rng(options.seed).random(n))
    return _mm_loop(qf.S, qf.c.conj(), qf.value, np.asarray(p0, dtype=complex), options)


def lorentzian_phases(q: np.ndarray) -> np.ndarray:
    """Inverse of q = (j + p)/2, snapped onto the unit circle."""
    return _unit_phase(2.0 * np.asarray(q) - 1j)
