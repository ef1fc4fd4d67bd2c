"""Spherical-wave dual-wideband uplink channels (and the plane-wave variant)."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import SPEED_OF_LIGHT, UserLayout

DEFAULT_CARRIER = 26e9
DEFAULT_REFRACTIVE_INDEX = 2.24 - 0.025j
DEFAULT_ROUGHNESS = 0.088e-3
DEFAULT_BORESIGHT_EXPONENT = 2.0
SHADOWING_STD_DB = 8.0


class SingularGeometryError(ValueError):
    """Raised when a path anchor coincides with an array element."""


@dataclass(frozen=True)
class SubcarrierGrid:
    carrier: float
    bandwidth: float
    count: int

    def __post_init__(self):
        if self.count < 1 or self.bandwidth <= 0 or self.carrier <= 0:
            raise ValueError("grid needs positive carrier, bandwidth and subcarrier count")

    @property
    def spacing(self) -> float:
        return self.bandwidth / self.count

    @property
    def frequencies(self) -> np.ndarray:
        # baseband offsets (s - (S+1)/2) * B/S, s = 0..S-1 (not symmetric about 0)
        s = np.arange(self.count)
        return (s - (self.count + 1) / 2.0) * self.spacing

    @property
    def center_index(self) -> int:
        return self.count // 2

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier


@dataclass(frozen=True)
class PathParams:
    """Per-user propagation parameters; ``large_scale[u][p]`` is the linear gain of path p (LoS = 0)."""

    large_scale: tuple[np.ndarray, ...]
    refractive_index: complex = DEFAULT_REFRACTIVE_INDEX
    roughness: float = DEFAULT_ROUGHNESS
    boresight_exponent: float = DEFAULT_BORESIGHT_EXPONENT

    def __post_init__(self):
        if self.boresight_exponent < 0:
            raise ValueError("boresight exponent must be >= 0")
        for eps in self.large_scale:
            if np.any(np.asarray(eps) < 0):
                raise ValueError("large-scale gains must be non-negative")


@dataclass(frozen=True)
class WaveguideModel:
    """Propagation along the microstrips, H_s in the receive chain.

    ``scalar`` mode is h_s * I; ``full`` mode is diag(exp(-(alpha + j beta) rho_l)).
    """

    mode: str = "scalar"
    scalar_gains: np.ndarray | None = None
    attenuation: float = 0.6
    wavenumber: float | None = None
    port_distances: np.ndarray | None = None

    def diagonal(self, s: int, num_elements: int) -> np.ndarray:
        if self.mode == "scalar":
            h = 1.0 if self.scalar_gains is None else complex(self.scalar_gains[s])
            return np.full(num_elements, h, dtype=complex)
        if self.mode == "full":
            if self.wavenumber is None or self.port_distances is None:
                raise ValueError("full waveguide model needs wavenumber and port distances")
            rho = np.asarray(self.port_distances, dtype=float)
            if rho.shape != (num_elements,):
                raise ValueError(f"expected {num_elements} port distances, got {rho.shape}")
            return np.exp(-(self.attenuation + 1j * self.wavenumber) * rho)
        raise ValueError(f"unknown waveguide mode {self.mode!r}")

    def diagonals(self, num_subcarriers: int, num_elements: int) -> np.ndarray:
        return np.stack([self.diagonal(s, num_elements) for s in range(num_subcarriers)])


def full_waveguide(num_strips: int, per_strip: int, wavelength: float, attenuation: float = 0.6) -> WaveguideModel:
    """Lossy microstrip with the port at l = 0 on every strip: rho_l = l * lambda / 5."""
    rho = np.tile(np.arange(per_strip) * wavelength / 5.0, num_strips)
    return WaveguideModel("full", attenuation=attenuation, wavenumber=2 * np.pi / wavelength, port_distances=rho)


def waveguide_response(model: WaveguideModel, s: int, num_elements: int) -> np.ndarray:
    return np.diag(model.diagonal(s, num_elements))


@dataclass(frozen=True)
class ChannelSet:
    """Stack of per-subcarrier channels, ``matrices[s]`` is the N_R x U matrix G_s."""

    matrices: np.ndarray = field(repr=False)
    grid: SubcarrierGrid
    model_tag: str = "spherical"
    coupling_applied: bool = False

    def __post_init__(self):
        if self.matrices.ndim != 3 or self.matrices.shape[0] != self.grid.count:
            raise ValueError(f"expected ({self.grid.count}, N_R, U) channel stack, got {self.matrices.shape}")
        if not np.all(np.isfinite(self.matrices)):
            raise ValueError("channel contains non-finite entries")

    @property
    def num_subcarriers(self) -> int:
        return self.matrices.shape[0]

    @property
    def num_elements(self) -> int:
        return self.matrices.shape[1]

    @property
    def num_users(self) -> int:
        return self.matrices.shape[2]

    def with_matrices(self, matrices: np.ndarray, **changes) -> "ChannelSet":
        return replace(self, matrices=matrices, **changes)

    def fingerprint(self) -> str:
        import hashlib

        return hashlib.sha256(np.ascontiguousarray(self.matrices).tobytes()).hexdigest()[:16]


def propagation_delay(source: np.ndarray, element: np.ndarray) -> float:
    d = float(np.linalg.norm(np.asarray(source, float) - np.asarray(element, float)))
    if d == 0.0:
        raise SingularGeometryError("path anchor coincides with an array element")
    return d / SPEED_OF_LIGHT


def radiation_profile(theta, b: float = DEFAULT_BORESIGHT_EXPONENT):
    """2(b+1) cos^b(theta) inside the front hemisphere, 0 outside."""
    theta = np.asarray(theta, dtype=float)
    inside = (theta >= 0.0) & (theta <= np.pi / 2)
    # clip guards cos(pi/2) ~ 6e-17 from going negative under fractional b
    out = np.where(inside, 2.0 * (b + 1.0) * np.clip(np.cos(theta), 0.0, None) ** b, 0.0)
    return out if out.ndim else float(out)


def reflection_coefficient(
    path_index: int,
    frequency,
    incidence_angle: float = 0.0,
    carrier: float = DEFAULT_CARRIER,
    refractive_index: complex = DEFAULT_REFRACTIVE_INDEX,
    roughness: float = DEFAULT_ROUGHNESS,
):
    """Rough-surface reflection of an NLoS bounce; the LoS path (index 0) returns 1."""
    f = np.asarray(frequency, dtype=float)
    if path_index == 0:
        out = np.ones_like(f, dtype=complex)
        return out if out.ndim else complex(out)
    n_t = complex(refractive_index)
    cos_i = np.cos(incidence_angle)
    # principal branch of complex arcsin; only cos(phi_t) is needed
    cos_t = np.cos(np.arcsin(np.sin(incidence_angle) / n_t + 0j))
    fresnel = (cos_i - n_t * cos_t) / (cos_i + n_t * cos_t)
    rough = np.exp(-8.0 * np.pi**2 * (carrier + f) ** 2 * roughness**2 * cos_i**2 / SPEED_OF_LIGHT**2)
    out = fresnel * rough
    return out if np.ndim(out) else complex(out)


def gain_coefficient(reflection_magnitude, radiation, distance, frequency, carrier: float = DEFAULT_CARRIER):
    """|Gamma| sqrt(F) c / (4 pi (f + fc) d)."""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise SingularGeometryError("zero propagation distance")
    fc_f = carrier + np.asarray(frequency, dtype=float)
    if np.any(fc_f <= 0):
        raise ValueError("f + fc must be positive")
    return np.abs(reflection_magnitude) * np.sqrt(radiation) * SPEED_OF_LIGHT / (4 * np.pi * fc_f * distance)


def pathloss_db(distance) -> np.ndarray:
    return -38.0 * np.log10(distance) - 34.5


def large_scale_fading(distance, rng: np.random.Generator | None, shadow_std_db: float = SHADOWING_STD_DB):
    """Linear gain with log-distance path loss and log-normal shadowing (rng=None disables shadowing)."""
    distance = np.asarray(distance, dtype=float)
    if np.any(distance <= 0):
        raise SingularGeometryError("zero propagation distance")
    eta = 0.0 if rng is None else rng.normal(0.0, shadow_std_db, distance.shape)
    out = 10.0 ** ((pathloss_db(distance) + eta) / 10.0)
    return out if out.ndim else float(out)


def draw_path_params(
    users: Sequence[UserLayout],
    rng: np.random.Generator | None,
    refractive_index: complex = DEFAULT_REFRACTIVE_INDEX,
    roughness: float = DEFAULT_ROUGHNESS,
    boresight_exponent: float = DEFAULT_BORESIGHT_EXPONENT,
) -> PathParams:
    """One shadowing draw per (user, path), shared by all elements of that path."""
    eps = tuple(large_scale_fading(np.linalg.norm(u.path_points, axis=1), rng) for u in users)
    return PathParams(eps, refractive_index, roughness, boresight_exponent)


def _elevation(points: np.ndarray, elements: np.ndarray, distances: np.ndarray) -> np.ndarray:
    dz = points[:, None, 2] - elements[None, :, 2]
    return np.arccos(np.clip(dz / distances, -1.0, 1.0))


def _path_amplitudes(user: UserLayout, eps: np.ndarray, elements: np.ndarray, freqs: np.ndarray,
                     carrier: float, params: PathParams) -> tuple[np.ndarray, np.ndarray]:
    """sqrt(eps) * A for every (s, p, n), and the exact element distances (p, n)."""
    points = user.path_points
    dist = np.linalg.norm(points[:, None, :] - elements[None, :, :], axis=2)
    if np.any(dist == 0.0):
        raise SingularGeometryError("path anchor coincides with an array element")
    radiation = radiation_profile(_elevation(points, elements, dist), params.boresight_exponent)
    gamma = np.ones((freqs.size, points.shape[0]))
    for p in range(1, points.shape[0]):
        gamma[:, p] = np.abs(reflection_coefficient(
            p, freqs, user.incidence_angles[p - 1], carrier, params.refractive_index, params.roughness))
    amp = gain_coefficient(gamma[:, :, None], radiation[None], dist[None], freqs[:, None, None], carrier)
    return np.sqrt(eps)[None, :, None] * amp, dist


def spherical_channel(users: Sequence[UserLayout], elements: np.ndarray, grid: SubcarrierGrid,
                      params: PathParams) -> ChannelSet:
    """G_s columns g_u = sum_p a_{u,p} (.) b_{u,p} with exact element-to-anchor distances."""
    elements = np.asarray(elements, dtype=float)
    freqs = grid.frequencies
    out = np.zeros((grid.count, elements.shape[0], len(users)), dtype=complex)
    for u, user in enumerate(users):
        a, dist = _path_amplitudes(user, params.large_scale[u], elements, freqs, grid.carrier, params)
        b = np.exp(-2j * np.pi * (grid.carrier + freqs)[:, None, None] * dist[None] / SPEED_OF_LIGHT)
        out[:, :, u] = np.sum(a * b, axis=1)
    return ChannelSet(out, grid, "spherical")


def plane_wave_delays(points: np.ndarray, elements: np.ndarray) -> np.ndarray:
    """Far-field distance approximation |p| - <e, p/|p|> for every (path, element)."""
    r = np.linalg.norm(points, axis=1)
    if np.any(r == 0.0):
        raise SingularGeometryError("path anchor at the array center")
    theta = np.arccos(np.clip(points[:, 2] / r, -1.0, 1.0))
    phi = np.arctan2(points[:, 1], points[:, 0])
    # element offset projected on the arrival direction; positive offsets shorten the path
    offset = (elements[None, :, 0] * (np.sin(theta) * np.cos(phi))[:, None]
              + elements[None, :, 1] * (np.sin(theta) * np.sin(phi))[:, None])
    return r[:, None] - offset


def plane_wave_channel(users: Sequence[UserLayout], elements: np.ndarray, grid: SubcarrierGrid,
                       params: PathParams) -> ChannelSet:
    """Same amplitudes as the spherical model, phases from the plane-wavefront delay."""
    elements = np.asarray(elements, dtype=float)
    freqs = grid.frequencies
    out = np.zeros((grid.count, elements.shape[0], len(users)), dtype=complex)
    for u, user in enumerate(users):
        a, _ = _path_amplitudes(user, params.large_scale[u], elements, freqs, grid.carrier, params)
        dist = plane_wave_delays(user.path_points, elements)
        b = np.exp(-2j * np.pi * (grid.carrier + freqs)[:, None, None] * dist[None] / SPEED_OF_LIGHT)
        out[:, :, u] = np.sum(a * b, axis=1)
    return ChannelSet(out, grid, "plane")


def synthesize(users: Sequence[UserLayout], elements: np.ndarray, grid: SubcarrierGrid, params: PathParams,
               model: str = "spherical") -> ChannelSet:
    if model == "spherical":
        return spherical_channel(users, elements, grid, params)
    if model == "plane":
        return plane_wave_channel(users, elements, grid, params)
    raise ValueError(f"unknown channel model {model!r}")


def narrowband_copy(channels: ChannelSet, index: int | None = None) -> ChannelSet:
    """Repeat one subcarrier's G over the whole grid (design model that ignores frequency selectivity)."""
    index = channels.grid.center_index if index is None else index
    stacked = np.repeat(channels.matrices[index][None], channels.num_subcarriers, axis=0)
    return channels.with_matrices(stacked)


def export_channels(channels: ChannelSet, directory: str | Path, metadata: dict | None = None) -> list[Path]:
    """One CSV per subcarrier (row, col, re, im) plus ``channels.json`` metadata."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    n, u = channels.num_elements, channels.num_users
    rows, cols = np.divmod(np.arange(n * u), u)
    for s, g in enumerate(channels.matrices):
        path = directory / f"subcarrier_{s:03d}.csv"
        flat = g.ravel()
        lines = ["row,col,re,im"]
        lines += [f"{r},{c},{float(z.real)!r},{float(z.imag)!r}" for r, c, z in zip(rows, cols, flat)]
        path.write_text("\n".join(lines) + "\n")
        written.append(path)
    meta = {
        "model_tag": channels.model_tag,
        "coupling_applied": channels.coupling_applied,
        "shape": [channels.num_subcarriers, n, u],
        "grid": {"carrier": channels.grid.carrier, "bandwidth": channels.grid.bandwidth,
                 "count": channels.grid.count},
        **(metadata or {}),
    }
    meta_path = directory / "channels.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    written.append(meta_path)
    return written


def load_channels(directory: str | Path) -> ChannelSet:
    directory = Path(directory)
    meta = json.loads((directory / "channels.json").read_text())
    s_count, n, u = meta["shape"]
    out = np.zeros((s_count, n, u), dtype=complex)
    for s in range(s_count):
        data = np.loadtxt(directory / f"subcarrier_{s:03d}.csv", delimiter=",", skiprows=1, ndmin=2)
        r, c = data[:, 0].astype(int), data[:, 1].astype(int)
        out[s, r, c] = data[:, 2] + 1j * data[:, 3]
    g = meta["grid"]
    return ChannelSet(out, SubcarrierGrid(g["carrier"], g["bandwidth"], g["count"]), meta["model_tag"],
                      meta["coupling_applied"])
