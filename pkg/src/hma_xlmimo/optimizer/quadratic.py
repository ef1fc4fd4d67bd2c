"""Quadratic form q^H S q - 2 Re(q^H c*) of the weight subproblem.

With B_s = W M W^H, A_s = H G G^H H^H, C_s = H G M W^H and D_s = H H^H,
the block structure of Q reduces the trace objective to

    S = sum_s P (B_s kron 1_{LxL}) .* A_s^T + N0 (diag(B_s) kron I_L) .* D_s
    c = sum_s P c_s,   (c_s)_n = (C_s)_{n, strip(n)}

f(q) equals sum_s tr(M_s E_s(q)) - P sum_s tr(M_s). At high SNR the two terms
are many orders of magnitude larger than their difference, so every form also
carries ``exact``, a direct evaluation of sum_s tr(M_s E_s(q)) that the solvers
use for descent checks and stopping.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .objective import Link, _as_stack, _h_or_ones, hermitian


@dataclass(frozen=True)
class QuadraticForm:
    S: np.ndarray
    c: np.ndarray
    exact: Callable[[np.ndarray], float] | None = None

    def objective(self, q: np.ndarray) -> float:
        q = np.asarray(q)
        return float(np.real(np.vdot(q, self.S @ q)) - 2.0 * np.real(np.vdot(q, self.c.conj())))

    def value(self, q: np.ndarray) -> float:
        """Objective up to a q-independent constant, evaluated without cancellation when possible."""
        return self.objective(q) if self.exact is None else self.exact(q)

    @property
    def size(self) -> int:
        return self.c.size


def _per_subcarrier(g_s, h_s, w_s, m_s):
    hg = h_s[:, None] * g_s
    b = w_s @ m_s @ w_s.conj().T
    a = hg @ hg.conj().T
    c = hg @ m_s @ w_s.conj().T
    d = np.abs(h_s) ** 2
    return b, a, c, d


class TraceEvaluator:
    """q -> sum_s Re tr(M_s E_s(q)) with W_s, M_s held fixed.

    Variable j sits in row ``rows[j]`` and column ``cols[j]`` of the analog
    stage. W^H Q H G - I is affine in q, so its coefficients are tabulated once;
    the noise part is the PSD form q^H N q (``noise`` is its diagonal when 1-D).
    """

    def __init__(self, g: np.ndarray, hs: np.ndarray, combiners: np.ndarray, weights: np.ndarray,
                 link: Link, rows: np.ndarray, cols: np.ndarray, noise: np.ndarray):
        u = g.shape[2]
        wc = combiners.conj()[:, rows, :]  # S x J x U
        hg = hs[:, cols, None] * g[:, cols, :]  # S x J x U
        # coef[s, a, b, j] = conj(W[s, rows_j, a]) h[s, cols_j] G[s, cols_j, b]
        coef = np.einsum("sja,sjb->sabj", wc, hg)
        self._coef = coef.reshape(-1, rows.size)
        self._shape = (g.shape[0], u, u)
        self._eye = np.eye(u)
        self._weights = weights
        self._power = link.power
        self._noise = noise

    def __call__(self, q: np.ndarray) -> float:
        q = np.asarray(q)
        err = (self._coef @ q).reshape(self._shape) - self._eye
        signal = np.real(np.vdot(err, self._weights @ err))
        if self._noise.ndim == 1:
            noise = np.dot(self._noise, np.abs(q) ** 2)
        else:
            noise = np.real(np.vdot(q, self._noise @ q))
        return float(self._power * signal + noise)


def build_quadratic(channels, combiners: np.ndarray, weights: np.ndarray, link: Link,
                    num_strips: int, per_strip: int, h=None) -> QuadraticForm:
    """Assemble (S, c) for the block-structured HMA weights."""
    g = _as_stack(channels)
    n = g.shape[1]
    if n != num_strips * per_strip:
        raise ValueError(f"{n} elements do not match {num_strips} x {per_strip}")
    hs = _h_or_ones(h, g.shape[0], n)
    strip = np.repeat(np.arange(num_strips), per_strip)
    S = np.zeros((n, n), dtype=complex)
    c = np.zeros(n, dtype=complex)
    noise = np.zeros(n)
    for s in range(g.shape[0]):
        b, a, cs, d = _per_subcarrier(g[s], hs[s], combiners[s], weights[s])
        # (B kron N_L)_{ij} = B[strip(i), strip(j)]
        S += link.power * b[np.ix_(strip, strip)] * a.T
        noise += link.noise_power * np.real(np.diag(b))[strip] * d
        c += link.power * cs[np.arange(n), strip]
    S[np.diag_indices(n)] += noise
    exact = TraceEvaluator(g, hs, combiners, weights, link, strip, np.arange(n), noise)
    return QuadraticForm(hermitian(S), c, exact)


def build_quadratic_full(channels, combiners: np.ndarray, weights: np.ndarray, link: Link, h=None) -> QuadraticForm:
    """Same objective for an unstructured M x N analog stage, variable vec(Q^T) = Q.ravel()."""
    g = _as_stack(channels)
    n = g.shape[1]
    m = combiners.shape[1]
    hs = _h_or_ones(h, g.shape[0], n)
    S = np.zeros((m * n, m * n), dtype=complex)
    noise = np.zeros((m * n, m * n), dtype=complex)
    c = np.zeros(m * n, dtype=complex)
    for s in range(g.shape[0]):
        b, a, cs, d = _per_subcarrier(g[s], hs[s], combiners[s], weights[s])
        S += link.power * np.kron(b, a.T)
        noise += link.noise_power * np.kron(b, np.diag(d))
        c += link.power * cs.T.ravel()
    rows, cols = np.divmod(np.arange(m * n), n)
    exact = TraceEvaluator(g, hs, combiners, weights, link, rows, cols, hermitian(noise))
    return QuadraticForm(hermitian(S + noise), c, exact)
