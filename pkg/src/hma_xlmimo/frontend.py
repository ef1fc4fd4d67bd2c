"""HMA weights: feasible sets, block expansion and the analog/digital receive chain."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

LORENTZIAN_TOL = 1e-9


@dataclass(frozen=True)
class FeasibleSet:
    """One of UC (complex plane), AO [a, b], BA {0, c} or LP (Lorentzian circle)."""

    kind: str
    lower: float | None = None
    upper: float | None = None
    level: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind == "AO":
            if self.lower is None or self.upper is None or not (self.upper >= self.lower > 0):
                raise ValueError(f"amplitude-only set needs upper >= lower > 0, got [{self.lower}, {self.upper}]")
        elif kind == "BA":
            if self.level is None or self.level <= 0:
                raise ValueError("binary-amplitude level must be positive")
        elif kind not in ("UC", "LP"):
            raise ValueError(f"unknown feasible set {self.kind!r}")

    @classmethod
    def uc(cls) -> "FeasibleSet":
        return cls("UC")

    @classmethod
    def ao(cls, lower: float = 0.001, upper: float = 5.0) -> "FeasibleSet":
        return cls("AO", lower=lower, upper=upper)

    @classmethod
    def ba(cls, level: float = 0.1) -> "FeasibleSet":
        return cls("BA", level=level)

    @classmethod
    def lp(cls) -> "FeasibleSet":
        return cls("LP")

    @classmethod
    def parse(cls, name: str) -> "FeasibleSet":
        """Default feasible set for each name: UC, AO, BA, LP."""
        return {"UC": cls.uc, "AO": cls.ao, "BA": cls.ba, "LP": cls.lp}[name.strip().upper()]()

    @property
    def tag(self) -> str:
        if self.kind == "AO":
            return f"AO({self.lower:g},{self.upper:g})"
        if self.kind == "BA":
            return f"BA({self.level:g})"
        return self.kind

    def contains(self, q: np.ndarray, tol: float = LORENTZIAN_TOL) -> bool:
        q = np.asarray(q)
        if not np.all(np.isfinite(q)):
            return False
        if self.kind == "UC":
            return True
        if self.kind == "AO":
            return bool(np.all(np.abs(q.imag) <= tol) and np.all(q.real >= self.lower - tol)
                        and np.all(q.real <= self.upper + tol))
        if self.kind == "BA":
            return bool(np.all(np.abs(q.imag) <= tol)
                        and np.all((np.abs(q.real) <= tol) | (np.abs(q.real - self.level) <= tol)))
        return bool(np.all(np.abs(np.abs(q - 0.5j) - 0.5) <= tol))


@dataclass(frozen=True)
class WeightVector:
    q: np.ndarray
    feasible_set: FeasibleSet

    def __post_init__(self):
        if not self.feasible_set.contains(self.q):
            raise ValueError(f"weights violate the {self.feasible_set.tag} constraint")

    def __len__(self) -> int:
        return self.q.size


def expand_to_block(q: np.ndarray, num_strips: int, per_strip: int) -> np.ndarray:
    """M x N_R matrix with strip m's L weights in columns m*L .. m*L+L-1 of row m."""
    q = np.asarray(q)
    if q.size != num_strips * per_strip:
        raise ValueError(f"weight vector of length {q.size} does not fit {num_strips} x {per_strip}")
    out = np.zeros((num_strips, num_strips * per_strip), dtype=complex)
    rows = np.repeat(np.arange(num_strips), per_strip)
    out[rows, np.arange(q.size)] = q
    return out


def block_entries(block: np.ndarray, per_strip: int) -> np.ndarray:
    num_strips = block.shape[0]
    rows = np.repeat(np.arange(num_strips), per_strip)
    return block[rows, np.arange(num_strips * per_strip)]


def strip_combine(q: np.ndarray, num_strips: int, x: np.ndarray) -> np.ndarray:
    """Q @ x without forming Q (x has N_R rows)."""
    x = np.asarray(x)
    per_strip = q.size // num_strips
    xr = x.reshape(num_strips, per_strip, *x.shape[1:])
    return np.einsum("ml,ml...->m...", q.reshape(num_strips, per_strip), xr)


def lorentzian_map(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if np.any(np.abs(np.abs(p) - 1.0) > 1e-12):
        raise ValueError("Lorentzian map needs unit-modulus inputs")
    return (1j + p) / 2.0


def receive_combine(w: np.ndarray, block: np.ndarray, h_diag: np.ndarray | None, y: np.ndarray) -> np.ndarray:
    """z = W^H Q H y for one subcarrier (H given by its diagonal)."""
    w, block, y = np.asarray(w), np.asarray(block), np.asarray(y)
    if block.shape[1] != y.shape[0] or w.shape[0] != block.shape[0]:
        raise ValueError(f"shape mismatch: W {w.shape}, Q {block.shape}, y {y.shape}")
    hy = y if h_diag is None else np.asarray(h_diag) * y
    return w.conj().T @ (block @ hy)


def project_to_set(q_raw: np.ndarray, feasible_set: FeasibleSet) -> np.ndarray:
    q = np.asarray(q_raw, dtype=complex)
    kind = feasible_set.kind
    if kind == "UC":
        return q.copy()
    if kind == "AO":
        return np.clip(q.real, feasible_set.lower, feasible_set.upper).astype(complex)
    if kind == "BA":
        c = feasible_set.level
        # ties at c/2 go to the "on" state
        return np.where(np.abs(q.real - c) <= np.abs(q.real), c, 0.0).astype(complex)
    z = 2.0 * q - 1j
    phase = np.where(z == 0, 0.0, np.angle(z))
    return (1j + np.exp(1j * phase)) / 2.0


def initial_weights(feasible_set: FeasibleSet, n: int, rng: np.random.Generator) -> np.ndarray:
    if feasible_set.kind == "LP":
        return lorentzian_map(np.exp(2j * np.pi * rng.random(n)))
    if feasible_set.kind == "AO":
        return np.full(n, 0.5 * (feasible_set.lower + feasible_set.upper), dtype=complex)
    if feasible_set.kind == "BA":
        return np.full(n, feasible_set.level, dtype=complex)
    return np.exp(2j * np.pi * rng.random(n))


def weights_to_csv(q: np.ndarray, feasible_set: FeasibleSet) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "re", "im", "set"])
    for i, z in enumerate(np.asarray(q, dtype=complex)):
        writer.writerow([i, repr(float(z.real)), repr(float(z.imag)), feasible_set.tag])
    return buf.getvalue()


def weights_from_csv(text: str) -> tuple[np.ndarray, str]:
    rows = list(csv.DictReader(io.StringIO(text)))
    q = np.array([complex(float(r["re"]), float(r["im"])) for r in rows])
    return q, rows[0]["set"] if rows else ""
