from __future__ import annotations

import numpy as np
import pytest

from hma_xlmimo.channel import SubcarrierGrid, draw_path_params, spherical_channel
from hma_xlmimo.geometry import SPEED_OF_LIGHT, build_hma_array, sample_user_layout
from hma_xlmimo.optimizer import Link

CARRIER = 26e9
WAVELENGTH = SPEED_OF_LIGHT / CARRIER

# acceptance lines collected by tests/test_acceptance.py, echoed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}


def make_scene(seed: int, array_length_wl: float = 2.0, users: int = 2, paths: int = 5,
               bandwidth: float = 600e6, subcarriers: int = 4, power_dbm: float = -60.0):
    """HMA array, spherical channel and link for one seeded draw."""
    arr = build_hma_array(array_length_wl * WAVELENGTH, WAVELENGTH)
    grid = SubcarrierGrid(CARRIER, bandwidth, subcarriers)
    rng = np.random.default_rng(seed)
    layout = sample_user_layout(rng, users, paths, arr)
    params = draw_path_params(layout, rng)
    channels = spherical_channel(layout, arr.positions, grid, params)
    return arr, channels, Link.from_dbm(power_dbm, -174.0, grid.spacing)


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    rank = n if rank is None else rank
    x = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return x @ x.conj().T


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
