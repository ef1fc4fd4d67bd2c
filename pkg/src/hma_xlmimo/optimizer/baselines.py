"""Reference architectures: phase-shifter hybrid A/D and fully-digital receivers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ao import AoState, alternate
from .objective import Link, fully_digital_rate
from .quadratic import build_quadratic_full
from .solvers import SolverOptions, solve_uc, solve_unit_modulus_mm

__all__ = ["HybridResult", "hybrid_ad_optimize", "fully_digital_rate"]


@dataclass
class HybridResult:
    rf_combiner: np.ndarray  # N x M, unit modulus unless relaxed
    baseband: np.ndarray  # S x M x U
    rate: float
    state: AoState


def hybrid_ad_optimize(channels, num_rf: int, link: Link, options: SolverOptions = SolverOptions(),
                       relax: str = "unit_modulus") -> HybridResult:
    """AO over a fully-connected N x M RF combiner and per-subcarrier baseband combiners.

    ``relax='uc'`` drops the unit-modulus constraint (used as a consistency check).
    """
    g = getattr(channels, "matrices", channels)
    n = g.shape[1]
    rng = np.random.default_rng(options.seed)
    q0 = np.exp(2j * np.pi * rng.random(num_rf * n))
    to_block = lambda q: q.reshape(num_rf, n)  # noqa: E731 - Q = W_RF^H, vec(Q^T) = Q.ravel()

    if relax == "unit_modulus":
        def solve(qf, q):
            res = solve_unit_modulus_mm(qf, options, q)
            return res.q, res.iterations
    elif relax == "uc":
        def solve(qf, q):
            return solve_uc(qf, options, q), 1
    else:
        raise ValueError(f"unknown relaxation {relax!r}")

    state = alternate(channels, link, q0, to_block,
                      build=lambda g_, w, m, lk, hs: build_quadratic_full(g_, w, m, lk, hs),
                      solve=solve, options=options)
    return HybridResult(to_block(state.q).conj().T, state.W, state.rate, state)
