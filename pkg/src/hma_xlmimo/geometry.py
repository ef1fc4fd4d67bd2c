"""Array geometries, user/scatterer placement and near-field boundaries.

Coordinate conventions: the receive array lies in the z = 0 plane with its
centroid at the origin and boresight along +z. Microstrips run along y
(metamaterial elements spaced lambda/5), and are stacked along x at lambda/2.
Users and scatterers are placed on the xz-plane in front of the array.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SPEED_OF_LIGHT = 3e8


class InvalidGeometryError(ValueError):
    """Raised when an aperture or placement region is degenerate."""


def _centered_grid(nx: int, ny: int, dx: float, dy: float) -> np.ndarray:
    # x is the slow index, y the fast one: row n = ix * ny + iy
    xs = (np.arange(nx) - (nx - 1) / 2.0) * dx
    ys = (np.arange(ny) - (ny - 1) / 2.0) * dy
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel(), np.zeros(nx * ny)])


@dataclass(frozen=True)
class HmaArray:
    """M microstrips with L metamaterial elements each.

    ``positions[(m * L) + l]`` is the 3D location of element ``l`` on strip
    ``m`` (zero-based), matching the ordering of the weight vector.
    """

    num_microstrips: int
    elements_per_strip: int
    element_spacing: float
    strip_spacing: float
    wavelength: float
    array_length: float
    positions: np.ndarray = field(repr=False)

    @property
    def num_elements(self) -> int:
        return self.num_microstrips * self.elements_per_strip

    @property
    def aperture(self) -> float:
        return np.sqrt(2.0) * self.array_length

    def index(self, m: int, l: int) -> int:
        if not (0 <= m < self.num_microstrips and 0 <= l < self.elements_per_strip):
            raise IndexError(f"element ({m}, {l}) outside {self.num_microstrips}x{self.elements_per_strip}")
        return m * self.elements_per_strip + l


@dataclass(frozen=True)
class ConventionalArray:
    layout: str  # "ULA" or "UPA"
    num_antennas: int
    spacing: float
    wavelength: float
    positions: np.ndarray = field(repr=False)

    @property
    def num_elements(self) -> int:
        return self.num_antennas


@dataclass(frozen=True)
class UserLayout:
    """LoS anchor plus ``num_paths`` scatterers for a single user."""

    los_point: np.ndarray
    scatterer_points: np.ndarray
    incidence_angles: np.ndarray

    @property
    def num_paths(self) -> int:
        return int(self.scatterer_points.shape[0])

    @property
    def path_points(self) -> np.ndarray:
        """All path anchors, LoS first: shape (P + 1, 3)."""
        return np.vstack([self.los_point[None, :], self.scatterer_points])

    def scaled(self, factor: float) -> "UserLayout":
        return UserLayout(self.los_point * factor, self.scatterer_points * factor, self.incidence_angles.copy())


def build_hma_array(array_length: float, wavelength: float) -> HmaArray:
    """A x A HMA with M = floor(2A/lambda) strips and L = floor(5A/lambda) elements per strip."""
    if array_length <= 0 or wavelength <= 0:
        raise InvalidGeometryError("array length and wavelength must be positive")
    # small epsilon keeps exact multiples (A = 6 lambda) from flooring down
    num_strips = int(np.floor(2.0 * array_length / wavelength + 1e-9))
    per_strip = int(np.floor(5.0 * array_length / wavelength + 1e-9))
    if num_strips < 1 or per_strip < 1:
        raise InvalidGeometryError(
            f"aperture A={array_length:g} m too small for lambda={wavelength:g} m "
            f"(M={num_strips}, L={per_strip})"
        )
    element_spacing = wavelength / 5.0
    strip_spacing = wavelength / 2.0
    positions = _centered_grid(num_strips, per_strip, strip_spacing, element_spacing)
    return HmaArray(num_strips, per_strip, element_spacing, strip_spacing, wavelength, array_length, positions)


def build_conventional_array(layout: str, num_antennas: int, spacing: float, wavelength: float) -> ConventionalArray:
    """ULA along x, or a square UPA (``num_antennas`` must be a perfect square)."""
    layout = layout.upper()
    if num_antennas < 1 or spacing <= 0:
        raise InvalidGeometryError("need at least one antenna and positive spacing")
    if layout == "ULA":
        positions = _centered_grid(num_antennas, 1, spacing, spacing)
    elif layout == "UPA":
        side = int(round(np.sqrt(num_antennas)))
        if side * side != num_antennas:
            raise InvalidGeometryError(f"UPA needs a square antenna count, got {num_antennas}")
        positions = _centered_grid(side, side, spacing, spacing)
    else:
        raise InvalidGeometryError(f"unknown layout {layout!r}")
    return ConventionalArray(layout, num_antennas, spacing, wavelength, positions)


def aperture_matched_upa(array_length: float, wavelength: float, spacing: float | None = None) -> ConventionalArray:
    """Square UPA filling an A x A aperture (default lambda/2 spacing)."""
    spacing = wavelength / 2.0 if spacing is None else spacing
    side = int(np.floor(array_length / spacing + 1e-9))
    if side < 1:
        raise InvalidGeometryError("aperture smaller than one antenna spacing")
    return build_conventional_array("UPA", side * side, spacing, wavelength)


def fraunhofer_distance(aperture: float, wavelength: float) -> float:
    if aperture <= 0 or wavelength <= 0:
        raise InvalidGeometryError("aperture and wavelength must be positive")
    return 2.0 * aperture**2 / wavelength


def fresnel_distance(aperture: float, wavelength: float) -> float:
    if aperture <= 0 or wavelength <= 0:
        raise InvalidGeometryError("aperture and wavelength must be positive")
    return float(np.cbrt(aperture**4 / (8.0 * wavelength)))


def near_field_annulus(array: HmaArray | ConventionalArray, aperture: float | None = None) -> tuple[float, float]:
    if aperture is None:
        aperture = array.aperture  # type: ignore[union-attr]
    d_n = fresnel_distance(aperture, array.wavelength)
    d_f = fraunhofer_distance(aperture, array.wavelength)
    if d_n >= d_f:
        raise InvalidGeometryError(f"empty near-field region: d_N={d_n:g} >= d_F={d_f:g}")
    return d_n, d_f


def xz_point(radius: float, angle: float) -> np.ndarray:
    """Point on the xz-plane at ``radius`` and ``angle`` from boresight (+z)."""
    return np.array([radius * np.sin(angle), 0.0, radius * np.cos(angle)])


def sample_user_layout(
    seed: int | np.random.Generator,
    num_users: int,
    paths_per_user: int,
    array: HmaArray,
    angle_range: tuple[float, float] = (-np.pi / 4, np.pi / 4),
) -> list[UserLayout]:
    """Draw users and scatterers uniformly in radius over (d_N, d_F] and in angle.

    Incidence angles of the NLoS reflections are uniform in [0, pi/2).
    """
    if num_users < 1:
        raise InvalidGeometryError("need at least one user")
    if paths_per_user < 0:
        raise InvalidGeometryError("number of NLoS paths must be non-negative")
    lo, hi = angle_range
    if not (-np.pi / 2 < lo <= hi < np.pi / 2):
        raise InvalidGeometryError(f"angle range {angle_range} must lie inside (-pi/2, pi/2)")
    d_n, d_f = near_field_annulus(array)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    def draw_points(n: int) -> np.ndarray:
        # uniform on (d_N, d_F]: reflect the half-open [0, 1) draw
        radii = d_f - (d_f - d_n) * rng.random(n)
        angles = rng.uniform(lo, hi, n)
        return np.column_stack([radii * np.sin(angles), np.zeros(n), radii * np.cos(angles)])

    users = []
    for _ in range(num_users):
        los = draw_points(1)[0]
        scatterers = draw_points(paths_per_user)
        incidence = rng.uniform(0.0, np.pi / 2, paths_per_user)
        users.append(UserLayout(los, scatterers, incidence))
    return users


def layout_with_los(users: Sequence[UserLayout], los_points: Sequence[np.ndarray]) -> list[UserLayout]:
    """Replace each user's LoS anchor, keeping the scatterers."""
    return [UserLayout(np.asarray(p, dtype=float), u.scatterer_points, u.incidence_angles) for u, p in zip(users, los_points)]
