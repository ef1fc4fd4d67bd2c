"""Mutual coupling between side-by-side wire dipoles.

The coupling matrix C = (Z_A + Z_L)(Z + Z_L I)^-1 multiplies the channel,
the receiver noise is left uncoupled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .channel import ChannelSet

DEFAULT_IMPEDANCE = 50.0


class IllConditionedCouplingError(np.linalg.LinAlgError):
    pass


def sine_integral(u):
    """Si(u) = int_0^u sin(x)/x dx."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("sine integral is only used for u >= 0")
    out = special.sici(u)[0]
    return out if out.ndim else float(out)


def cosine_integral(u):
    """Ci(u) = -int_u^inf cos(x)/x dx, logarithmically singular at 0."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise ValueError("cosine integral needs u > 0")
    out = special.sici(u)[1]
    return out if out.ndim else float(out)


def mutual_impedance_entry(distance, dipole_length: float, wavenumber: float):
    """Off-diagonal impedance of two parallel side-by-side dipoles ``distance`` apart (ohms)."""
    d = np.asarray(distance, dtype=float)
    if np.any(d <= 0):
        raise ValueError("mutual impedance needs a positive separation; use Z_A on the diagonal")
    r = np.sqrt(d**2 + dipole_length**2)
    u0, u1, u2 = wavenumber * d, wavenumber * (r + dipole_length), wavenumber * (r - dipole_length)
    si0, ci0 = special.sici(u0)
    si1, ci1 = special.sici(u1)
    si2, ci2 = special.sici(u2)
    out = 30.0 * (2 * ci0 - ci1 - ci2) - 30j * (2 * si0 - si1 - si2)
    return out if np.ndim(out) else complex(out)


@dataclass(frozen=True)
class CouplingConfig:
    positions: np.ndarray
    wavelength: float
    dipole_length: float
    antenna_impedance: complex = DEFAULT_IMPEDANCE
    load_impedance: complex = DEFAULT_IMPEDANCE

    def __post_init__(self):
        if self.dipole_length <= 0 or self.wavelength <= 0:
            raise ValueError("dipole length and wavelength must be positive")
        if self.antenna_impedance + self.load_impedance == 0:
            raise ValueError("Z_A + Z_L must be non-zero")

    @property
    def wavenumber(self) -> float:
        return 2 * np.pi / self.wavelength

    @classmethod
    def metamaterial(cls, positions, wavelength, **kw) -> "CouplingConfig":
        return cls(np.asarray(positions, float), wavelength, wavelength / 32.0, **kw)

    @classmethod
    def half_wave(cls, positions, wavelength, **kw) -> "CouplingConfig":
        return cls(np.asarray(positions, float), wavelength, wavelength / 2.0, **kw)


def impedance_matrix(config: CouplingConfig) -> np.ndarray:
    pos = np.asarray(config.positions, dtype=float)
    n = pos.shape[0]
    dist = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=2)
    iu = np.triu_indices(n, k=1)
    if np.any(dist[iu] == 0):
        raise ValueError("two elements share a position")
    z = np.full((n, n), complex(config.antenna_impedance), dtype=complex)
    vals = mutual_impedance_entry(dist[iu], config.dipole_length, config.wavenumber)
    z[iu] = vals
    z[(iu[1], iu[0])] = vals
    return z


def coupling_from_impedance(z: np.ndarray, antenna_impedance: complex = DEFAULT_IMPEDANCE,
                            load_impedance: complex = DEFAULT_IMPEDANCE, max_condition: float = 1e12) -> np.ndarray:
    n = z.shape[0]
    loaded = z + load_impedance * np.eye(n)
    cond = np.linalg.cond(loaded)
    if not np.isfinite(cond) or cond > max_condition:
        raise IllConditionedCouplingError(f"Z + Z_L I is ill-conditioned (cond = {cond:.3e})")
    return (antenna_impedance + load_impedance) * np.linalg.inv(loaded)


def coupling_matrix(config: CouplingConfig) -> np.ndarray:
    return coupling_from_impedance(impedance_matrix(config), config.antenna_impedance, config.load_impedance)


def apply_coupling(coupling: np.ndarray, channels: ChannelSet) -> ChannelSet:
    if coupling.shape != (channels.num_elements, channels.num_elements):
        raise ValueError(f"coupling matrix {coupling.shape} does not match {channels.num_elements} elements")
    return channels.with_matrices(np.einsum("ij,sju->siu", coupling, channels.matrices), coupling_applied=True)
