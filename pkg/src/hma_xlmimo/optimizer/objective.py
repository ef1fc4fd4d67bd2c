"""Sum rate, MSE matrices and the closed-form WMMSE updates.

All functions work on a dense analog stage ``block`` (M x N_R, the HMA block
matrix Q or a hybrid RF combiner W_RF^H), the channel stack ``G`` of shape
(S, N_R, U) and optional waveguide diagonals ``h`` of shape (S, N_R).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

COND_LIMIT = 1e12
RIDGE = 1e-12


@dataclass(frozen=True)
class Link:
    """Transmit power P_t (W), one-sided noise density (W/Hz) and subcarrier spacing (Hz)."""

    power: float
    noise_density: float
    spacing: float

    @property
    def noise_power(self) -> float:
        return self.noise_density * self.spacing

    @property
    def snr(self) -> float:
        return self.power / self.noise_power

    @classmethod
    def from_dbm(cls, power_dbm: float, noise_dbm_hz: float, spacing: float) -> "Link":
        return cls(dbm_to_watt(power_dbm), dbm_to_watt(noise_dbm_hz), spacing)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def _as_stack(channels) -> np.ndarray:
    g = getattr(channels, "matrices", channels)
    g = np.asarray(g)
    if g.ndim == 2:
        g = g[None]
    if not np.all(np.isfinite(g)):
        raise ValueError("channel contains non-finite entries")
    return g


def _h_or_ones(h, num_subcarriers: int, num_elements: int) -> np.ndarray:
    if h is None:
        return np.ones((num_subcarriers, num_elements), dtype=complex)
    h = np.asarray(h, dtype=complex)
    if h.ndim == 1:
        h = np.broadcast_to(h, (num_subcarriers, num_elements))
    return h


def effective_channel(block: np.ndarray, g_s: np.ndarray, h_s: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(Q H G, Q H H^H Q^H) for one subcarrier."""
    qh = block if h_s is None else block * h_s[None, :]
    return qh @ g_s, qh @ qh.conj().T


def hermitian(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().swapaxes(-1, -2))


def regularized(a: np.ndarray, ridge: float = RIDGE, limit: float = COND_LIMIT) -> np.ndarray:
    """Add ridge * trace/dim * I when ``a`` is worse conditioned than ``limit``."""
    if np.linalg.cond(a) <= limit:
        return a
    n = a.shape[0]
    scale = np.real(np.trace(a)) / n
    if scale <= 0:
        scale = 1.0
    return a + ridge * scale * np.eye(n)


def _logdet2(a: np.ndarray) -> float:
    sign, logabs = np.linalg.slogdet(a)
    return float(logabs / np.log(2.0))


def subcarrier_rate(f: np.ndarray, k: np.ndarray, w: np.ndarray, snr: float) -> float:
    """log2|I + snr * W^H F F^H W (W^H K W)^-1| with the rank-deficient guard."""
    wf = w.conj().T @ f
    y = hermitian(w.conj().T @ k @ w)
    u = y.shape[0]
    ymax = np.max(np.abs(y)) if y.size else 0.0
    if ymax == 0.0:
        return 0.0
    if np.linalg.cond(y) <= COND_LIMIT:
        # whiten with Y = L L^H: |I + snr X Y^-1| = |I + snr Z Z^H|, Z = L^-1 W^H F
        low = scipy.linalg.cholesky(y, lower=True)
        z = scipy.linalg.solve_triangular(low, wf, lower=True)
        return _logdet2(np.eye(u) + snr * hermitian(z @ z.conj().T))
    x = hermitian(wf @ wf.conj().T)
    # restrict to the column space of W^H Q H
    lam, vec = np.linalg.eigh(y)
    keep = lam > lam[-1] / COND_LIMIT
    if not np.any(keep):
        return 0.0
    vr = vec[:, keep] / np.sqrt(lam[keep])[None, :]
    return _logdet2(np.eye(int(keep.sum())) + snr * hermitian(vr.conj().T @ x @ vr))


def sum_rate(channels, block: np.ndarray, combiners: np.ndarray, link: Link, h=None) -> float:
    """Sum over subcarriers of the log-det rate, in bit/s/Hz (multiply by the spacing for bit/s)."""
    g = _as_stack(channels)
    hs = _h_or_ones(h, g.shape[0], g.shape[1])
    total = 0.0
    for s in range(g.shape[0]):
        f, k = effective_channel(block, g[s], hs[s])
        total += subcarrier_rate(f, k, combiners[s], link.snr)
    return total


def mse_matrix(g_s: np.ndarray, block: np.ndarray, w_s: np.ndarray, link: Link, h_s=None) -> np.ndarray:
    f, k = effective_channel(block, g_s, h_s)
    err = w_s.conj().T @ f - np.eye(g_s.shape[1])
    return hermitian(link.power * err @ err.conj().T + link.noise_power * w_s.conj().T @ k @ w_s)


def update_M(e: np.ndarray) -> np.ndarray:
    return hermitian(np.linalg.inv(regularized(hermitian(e))))


def update_W(g_s: np.ndarray, block: np.ndarray, link: Link, h_s=None) -> np.ndarray:
    """MMSE combiner P (P F F^H + N0 K)^-1 F, the stationary point of tr(M E) for any M > 0.

    Evaluated as K^-1 F (F^H K^-1 F + I/snr)^-1, which avoids the SNR-sized
    condition number of the M x M bracket (K is diagonal for HMA blocks).
    """
    f, k = effective_channel(block, g_s, h_s)
    if not np.any(f):
        return np.zeros_like(f)
    k = hermitian(k)
    if np.linalg.cond(k) <= COND_LIMIT:
        kf = scipy.linalg.cho_solve(scipy.linalg.cho_factor(k), f)
        inner = hermitian(f.conj().T @ kf) + np.eye(f.shape[1]) / link.snr
        return kf @ np.linalg.inv(inner)
    a = hermitian(link.power * f @ f.conj().T + link.noise_power * k)
    return link.power * np.linalg.solve(regularized(a), f)


def wmmse_rate(errors: np.ndarray, link: Link) -> float:
    """sum_s log2|P_t E_s^-1|, equal to the sum rate when every W_s is the MMSE combiner."""
    total = 0.0
    for e in errors:
        u = e.shape[0]
        total += u * np.log2(link.power) - _logdet2(hermitian(e))
    return total


def fully_digital_rate(channels, link: Link) -> float:
    """sum_s log2|I + P/(N0) G^H G|, the best linear fully-digital receiver."""
    g = _as_stack(channels)
    u = g.shape[2]
    return float(sum(_logdet2(np.eye(u) + link.snr * hermitian(gs.conj().T @ gs)) for gs in g))


def combiner_stack(channels, block: np.ndarray, link: Link, h=None) -> np.ndarray:
    g = _as_stack(channels)
    hs = _h_or_ones(h, g.shape[0], g.shape[1])
    return np.stack([update_W(g[s], block, link, hs[s]) for s in range(g.shape[0])])
