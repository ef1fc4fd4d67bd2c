"""Scenario construction and evaluation of every set and baseline on one channel draw.

A cell is one (axis value, seed) pair. The seed fixes the user layout and the
shadowing draw; every label evaluated in the cell sees the same true channel,
whose fingerprint is stored in each record.
"""
from __future__ import annotations

import dataclasses
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..channel import (ChannelSet, SubcarrierGrid, draw_path_params, full_waveguide, narrowband_copy,
                       spherical_channel, synthesize, plane_wave_channel)
from ..coupling import CouplingConfig, apply_coupling, coupling_matrix
from ..frontend import FeasibleSet, expand_to_block
from ..geometry import (SPEED_OF_LIGHT, HmaArray, UserLayout, aperture_matched_upa, build_conventional_array,
                        build_hma_array, layout_with_los, near_field_annulus, sample_user_layout, xz_point)
from ..optimizer import Link, fully_digital_rate, hybrid_ad_optimize, run_ao
from ..optimizer.objective import sum_rate
from .config import ExperimentConfig

log = logging.getLogger(__name__)


@dataclass
class ResultRecord:
    """Outcome of one label in one cell. ``rate`` is in bit/s/Hz summed over subcarriers."""

    seed: int
    axis_value: float | int | None
    label: str
    rate: float
    rate_bps: float
    iterations: int = 0
    converged: bool = True
    runtime_ms: float = 0.0
    channel_hash: str = ""
    config_hash: str = ""
    trace: list = field(default_factory=list)  # (iteration, rate, wmmse_rate, inner_iterations, seconds)
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass
class Scene:
    config: ExperimentConfig
    wavelength: float
    grid: SubcarrierGrid
    link: Link
    array: HmaArray
    users: list[UserLayout]
    params: object
    channels: ChannelSet
    h: np.ndarray | None


def apply_axis(config: ExperimentConfig, value) -> ExperimentConfig:
    """The fixed parameters with one axis value substituted."""
    if value is None or config.axis in ("distance", "coupling"):
        return config
    key = {"bandwidth": "bandwidth_mhz", "array_length": "array_length", "users": "users",
           "power": "power_dbm"}[config.axis]
    if key == "users":
        value = int(value)
    return dataclasses.replace(config, **{key: value})


def _place_los(users: list[UserLayout], config: ExperimentConfig, value, d_f: float) -> list[UserLayout]:
    distance_axis = config.kind == "sweep" and config.axis == "distance"
    if not distance_axis and config.user_angle_deg is None:
        return users
    points = []
    for user in users:
        radius = float(np.linalg.norm(user.los_point))
        angle = float(np.arctan2(user.los_point[0], user.los_point[2]))
        if distance_axis:
            radius = value * d_f
        if config.user_angle_deg is not None:
            angle = np.deg2rad(config.user_angle_deg)
        points.append(xz_point(radius, angle))
    users = layout_with_los(users, points)
    if distance_axis:
        # the whole path set moves with the user; directions are kept
        users = [UserLayout(u.los_point, _at_radius(u.scatterer_points, value * d_f), u.incidence_angles)
                 for u in users]
    return users


def _at_radius(points: np.ndarray, radius: float) -> np.ndarray:
    if points.size == 0:
        return points
    return points * (radius / np.linalg.norm(points, axis=1, keepdims=True))


def build_scene(config: ExperimentConfig, value, seed: int) -> Scene:
    c = apply_axis(config, value)
    wavelength = SPEED_OF_LIGHT / (c.carrier_ghz * 1e9)
    array = build_hma_array(c.array_length * wavelength, wavelength)
    grid = SubcarrierGrid(c.carrier_ghz * 1e9, c.bandwidth_mhz * 1e6, c.subcarriers)
    link = Link.from_dbm(c.power_dbm, c.noise_dbm_hz, grid.spacing)
    rng = np.random.default_rng(seed)
    users = sample_user_layout(rng, c.users, c.paths, array)
    users = _place_los(users, c, value, near_field_annulus(array)[1])
    params = draw_path_params(users, rng)
    channels = synthesize(users, array.positions, grid, params, c.channel_model)
    if c.coupling and c.axis != "coupling":
        channels = apply_coupling(coupling_matrix(CouplingConfig.metamaterial(array.positions, wavelength)), channels)
    h = None
    if c.waveguide == "full":
        h = full_waveguide(array.num_microstrips, array.elements_per_strip, wavelength).diagonals(
            grid.count, array.num_elements)
    return Scene(c, wavelength, grid, link, array, users, params, channels, h)


def _conventional_channel(scene: Scene, positions: np.ndarray, coupled: bool) -> ChannelSet:
    ch = spherical_channel(scene.users, positions, scene.grid, scene.params)
    if coupled:
        ch = apply_coupling(coupling_matrix(CouplingConfig.half_wave(positions, scene.wavelength)), ch)
    return ch


def _trace_rows(state) -> list[tuple]:
    inner = [0] + list(state.inner_iterations)
    return [(i, r, w, inner[i], t) for i, (r, w, t) in
            enumerate(zip(state.rate_trace, state.wmmse_trace, state.stage_seconds))]


class _Cell:
    """Evaluates labels on one scene and turns each into a ResultRecord."""

    def __init__(self, config: ExperimentConfig, value, seed: int):
        self.config, self.value, self.seed = config, value, seed
        self.scene = build_scene(config, value, seed)
        self.options = dataclasses.replace(config.solver_options, seed=seed)
        self.channel_hash = self.scene.channels.fingerprint()
        self._design_cache: dict[str, ChannelSet] = {}

    def record(self, label: str, fn) -> ResultRecord:
        t0 = time.perf_counter()
        try:
            rate, state = fn()
            rec = ResultRecord(self.seed, self.value, label, float(rate), float(rate) * self.scene.grid.spacing)
            if state is not None:
                rec.iterations, rec.converged, rec.trace = state.iteration, state.converged, _trace_rows(state)
        except Exception as exc:  # partial-failure policy: tag the cell and keep going
            log.warning("seed %s, %s=%s, %s failed: %s", self.seed, self.config.axis, self.value, label, exc)
            rec = ResultRecord(self.seed, self.value, label, float("nan"), float("nan"),
                               converged=False, error=f"{type(exc).__name__}: {exc}")
        rec.runtime_ms = 1e3 * (time.perf_counter() - t0)
        rec.channel_hash, rec.config_hash = self.channel_hash, self.config.hash
        return rec

    # HMA designs ---------------------------------------------------------

    def hma(self, set_name: str, design: ChannelSet | None = None, truth: ChannelSet | None = None):
        s = self.scene
        truth = s.channels if truth is None else truth
        state = run_ao(truth if design is None else design, FeasibleSet.parse(set_name), s.link,
                       s.array.num_microstrips, s.array.elements_per_strip, self.options, h=s.h)
        if design is None:
            return state.rate, state
        block = expand_to_block(state.q, s.array.num_microstrips, s.array.elements_per_strip)
        return sum_rate(truth, block, state.W, s.link, s.h), state

    def design_channel(self, kind: str) -> ChannelSet:
        if kind not in self._design_cache:
            s = self.scene
            if kind == "narrowband":
                ch = narrowband_copy(s.channels)
            else:
                ch = plane_wave_channel(s.users, s.array.positions, s.grid, s.params)
                if s.channels.coupling_applied:
                    ch = apply_coupling(coupling_matrix(CouplingConfig.metamaterial(s.array.positions, s.wavelength)), ch)
                if kind == "plane_narrowband":
                    ch = narrowband_copy(ch)
            self._design_cache[kind] = ch
        return self._design_cache[kind]

    # conventional arrays ---------------------------------------------------

    def upa(self, spacing_wl: float = 0.5):
        s = self.scene
        return aperture_matched_upa(s.config.array_length * s.wavelength, s.wavelength, spacing_wl * s.wavelength)

    def fully_digital(self, positions: np.ndarray, coupled: bool):
        return fully_digital_rate(_conventional_channel(self.scene, positions, coupled), self.scene.link), None

    def hybrid(self):
        s = self.scene
        ch = _conventional_channel(s, self.upa().positions, s.config.coupling)
        res = hybrid_ad_optimize(ch, s.array.num_microstrips, s.link, self.options)
        return res.rate, res.state


_DESIGN_SUFFIX = {"narrowband": "narrowband", "plane_wave": "plane", "plane_narrowband": "baseline"}


def run_cell(config: ExperimentConfig, value, seed: int) -> list[ResultRecord]:
    """All requested labels for one (axis value, seed)."""
    try:
        cell = _Cell(config, value, seed)
    except Exception as exc:
        log.warning("seed %s, %s=%s: scene construction failed: %s", seed, config.axis, value, exc)
        msg = f"{type(exc).__name__}: {exc}"
        return [ResultRecord(seed, value, label, float("nan"), float("nan"), converged=False,
                             config_hash=config.hash, error=msg) for label in planned_labels(config)]
    s = cell.scene
    records = []
    coupling_axis = config.kind == "sweep" and config.axis == "coupling"
    for set_name in config.sets:
        records.append(cell.record(set_name, lambda: cell.hma(set_name)))
        for base in config.baselines:
            if base in _DESIGN_SUFFIX:
                records.append(cell.record(f"{set_name}-{_DESIGN_SUFFIX[base]}",
                                           lambda: cell.hma(set_name, cell.design_channel(base))))
        if coupling_axis:
            c_hma = coupling_matrix(CouplingConfig.metamaterial(s.array.positions, s.wavelength))
            coupled = apply_coupling(c_hma, s.channels)
            records.append(cell.record(f"{set_name}-coupled", lambda: cell.hma(set_name, truth=coupled)))
    for base in config.baselines:
        if base == "fully_digital":
            records.append(cell.record(base, lambda: cell.fully_digital(cell.upa().positions, s.config.coupling)))
        elif base == "fully_digital_ula":
            ula = build_conventional_array("ULA", s.array.num_microstrips, s.wavelength / 2, s.wavelength)
            records.append(cell.record(base, lambda: cell.fully_digital(ula.positions, s.config.coupling)))
        elif base == "fully_digital_hma":
            records.append(cell.record(base, lambda: (fully_digital_rate(s.channels, s.link), None)))
        elif base == "hybrid":
            records.append(cell.record(base, cell.hybrid))
    if coupling_axis:
        conv = cell.upa(value).positions
        records.append(cell.record("fully_digital_conv", lambda: cell.fully_digital(conv, False)))
        records.append(cell.record("fully_digital_conv-coupled", lambda: cell.fully_digital(conv, True)))
    return records


def planned_labels(config: ExperimentConfig) -> list[str]:
    """Labels in the order run_cell emits them."""
    coupling_axis = config.kind == "sweep" and config.axis == "coupling"
    labels = []
    for set_name in config.sets:
        labels.append(set_name)
        labels += [f"{set_name}-{_DESIGN_SUFFIX[b]}" for b in config.baselines if b in _DESIGN_SUFFIX]
        if coupling_axis:
            labels.append(f"{set_name}-coupled")
    labels += [b for b in config.baselines if b not in _DESIGN_SUFFIX]
    if coupling_axis:
        labels += ["fully_digital_conv", "fully_digital_conv-coupled"]
    return labels


def run_scenario(config: ExperimentConfig, seed: int) -> list[ResultRecord]:
    """Every set and baseline of a single scenario on the seed's channel draw."""
    return run_cell(dataclasses.replace(config, kind="single", axis=None, values=()), None, seed)


def _cell_job(args):
    return run_cell(*args)


def run_sweep(config: ExperimentConfig, threads: int | None = None) -> list[ResultRecord]:
    """Records for every (axis value, seed) cell, ordered by axis value then seed.

    Cells run in a process pool when ``threads`` > 1; the output order does
    not depend on scheduling.
    """
    threads = config.threads if threads is None else threads
    jobs = [(config, value, seed) for value in config.axis_points() for seed in config.seeds]
    if threads <= 1 or len(jobs) <= 1:
        results = [_cell_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_cell_job, jobs))
    return [rec for cell in results for rec in cell]
