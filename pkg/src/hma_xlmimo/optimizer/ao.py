"""Alternating optimization of baseband combiners, MSE weights and the analog stage."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..frontend import FeasibleSet, expand_to_block, initial_weights
from .objective import Link, _as_stack, _h_or_ones, mse_matrix, sum_rate, update_M, update_W, wmmse_rate
from .quadratic import QuadraticForm, build_quadratic
from .solvers import (SolverOptions, lorentzian_phases, solve_ao_box, solve_ba_greedy, solve_lp_mm,
                      solve_uc)


class MonotonicityError(RuntimeError):
    """The sum-rate sequence decreased by more than the allowed slack."""


@dataclass
class AoState:
    q: np.ndarray
    W: np.ndarray
    M: np.ndarray
    rate_trace: list[float] = field(default_factory=list)
    wmmse_trace: list[float] = field(default_factory=list)
    stage_seconds: list[float] = field(default_factory=list)
    inner_iterations: list[int] = field(default_factory=list)
    iteration: int = 0
    converged: bool = False
    feasible_set: FeasibleSet | None = None

    @property
    def rate(self) -> float:
        return self.rate_trace[-1]


def _combine_step(g, hs, block, link):
    ws, es = [], []
    for s in range(g.shape[0]):
        w = update_W(g[s], block, link, hs[s])
        ws.append(w)
        es.append(mse_matrix(g[s], block, w, link, hs[s]))
    ws, es = np.stack(ws), np.stack(es)
    ms = np.stack([update_M(e) for e in es])
    return ws, es, ms


def alternate(channels, link: Link, q0: np.ndarray, to_block: Callable[[np.ndarray], np.ndarray],
              build: Callable[..., QuadraticForm], solve: Callable[[QuadraticForm, np.ndarray], tuple[np.ndarray, int]],
              options: SolverOptions, h=None, check_monotone: bool = True) -> AoState:
    """Generic AO loop; ``rate_trace[l]`` is the rate of q^(l) with its MMSE combiners."""
    g = _as_stack(channels)
    hs = _h_or_ones(h, g.shape[0], g.shape[1])
    q = np.asarray(q0, dtype=complex)
    block = to_block(q)
    t0 = time.perf_counter()
    ws, es, ms = _combine_step(g, hs, block, link)
    state = AoState(q=q, W=ws, M=ms)
    state.rate_trace.append(sum_rate(g, block, ws, link, hs))
    state.wmmse_trace.append(wmmse_rate(es, link))
    state.stage_seconds.append(time.perf_counter() - t0)
    for it in range(1, options.ao_max_iter + 1):
        t0 = time.perf_counter()
        qf = build(g, ws, ms, link, hs)
        q, inner = solve(qf, q)
        block = to_block(q)
        ws, es, ms = _combine_step(g, hs, block, link)
        rate = sum_rate(g, block, ws, link, hs)
        prev = state.rate_trace[-1]
        state.q, state.W, state.M, state.iteration = q, ws, ms, it
        state.rate_trace.append(rate)
        state.wmmse_trace.append(wmmse_rate(es, link))
        state.inner_iterations.append(inner)
        state.stage_seconds.append(time.perf_counter() - t0)
        if check_monotone and rate < prev - options.monotone_slack:
            raise MonotonicityError(f"sum rate dropped from {prev!r} to {rate!r} at iteration {it}")
        if abs(rate - prev) <= options.ao_tol:
            state.converged = True
            break
    return state


def weight_solver(feasible_set: FeasibleSet, options: SolverOptions):
    kind = feasible_set.kind
    if kind == "UC":
        return lambda qf, q: (solve_uc(qf, options, q), 1)
    if kind == "AO":
        return lambda qf, q: (solve_ao_box(qf, feasible_set.lower, feasible_set.upper, options, q), 1)
    if kind == "BA":
        return lambda qf, q: (solve_ba_greedy(qf, feasible_set.level, options, q), 1)

    def lp(qf, q):
        res = solve_lp_mm(qf, options, lorentzian_phases(q))
        return res.q, res.iterations

    return lp


def run_ao(channels, feasible_set: FeasibleSet, link: Link, num_strips: int, per_strip: int,
           options: SolverOptions = SolverOptions(), h=None, q0: np.ndarray | None = None,
           check_monotone: bool = True) -> AoState:
    """HMA weights and per-subcarrier combiners maximizing the wideband sum rate."""
    n = num_strips * per_strip
    if q0 is None:
        q0 = initial_weights(feasible_set, n, np.random.default_rng(options.seed))
    state = alternate(
        channels, link, q0,
        to_block=lambda q: expand_to_block(q, num_strips, per_strip),
        build=lambda g, w, m, lk, hs: build_quadratic(g, w, m, lk, num_strips, per_strip, hs),
        solve=weight_solver(feasible_set, options),
        options=options, h=h, check_monotone=check_monotone,
    )
    state.feasible_set = feasible_set
    return state
