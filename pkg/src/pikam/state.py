"""Phase points and tangent vectors in the (I, z, phi) coordinate order."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


def wrap_angles(phi: np.ndarray) -> np.ndarray:
    """Reduce angles to [0, 2*pi)."""
    out = np.mod(phi, TWO_PI)
    # np.mod can round tiny negatives up to exactly 2*pi
    out[out >= TWO_PI] = 0.0
    return out


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PhasePoint:
    """A point of the chart; angles are stored wrapped to [0, 2*pi)."""

    I: np.ndarray
    z: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "I", _frozen_array(self.I))
        object.__setattr__(self, "z", _frozen_array(self.z))
        phi = wrap_angles(np.array(self.phi, dtype=float).reshape(-1))
        object.__setattr__(self, "phi", _frozen_array(phi))
        if self.I.size != self.phi.size:
            raise ValueError(
                f"PhasePoint needs as many angles as actions, got {self.I.size} and {self.phi.size}"
            )
        if not (np.all(np.isfinite(self.I)) and np.all(np.isfinite(self.z))
                and np.all(np.isfinite(self.phi))):
            raise ValueError("PhasePoint coordinates must be finite")

    @property
    def k(self) -> int:
        return self.I.size

    @property
    def m(self) -> int:
        return self.z.size

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.I, self.z, self.phi])

    @classmethod
    def from_vector(cls, x, k: int, m: int) -> "PhasePoint":
        x = np.asarray(x, dtype=float)
        if x.size != 2 * k + m:
            raise ValueError(f"expected a vector of length {2 * k + m}, got {x.size}")
        return cls(x[:k], x[k:k + m], x[k + m:])

    def __eq__(self, other):
        if not isinstance(other, PhasePoint):
            return NotImplemented
        return (np.array_equal(self.I, other.I) and np.array_equal(self.z, other.z)
                and np.array_equal(self.phi, other.phi))

    def __repr__(self):
        return f"PhasePoint(I={self.I.tolist()}, z={self.z.tolist()}, phi={self.phi.tolist()})"


@dataclass(frozen=True, eq=False)
class TangentVector:
    """Velocity components (dI, dz, dphi) at a phase point."""

    dI: np.ndarray
    dz: np.ndarray
    dphi: np.ndarray

    def __post_init__(self):
        for name in ("dI", "dz", "dphi"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        if self.dI.size != self.dphi.size:
            raise ValueError("dI and dphi must have equal length")

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.dI, self.dz, self.dphi])

    @classmethod
    def from_vector(cls, v, k: int, m: int) -> "TangentVector":
        v = np.asarray(v, dtype=float)
        if v.size != 2 * k + m:
            raise ValueError(f"expected a vector of length {2 * k + m}, got {v.size}")
        return cls(v[:k], v[k:k + m], v[k + m:])

    def __eq__(self, other):
        if not isinstance(other, TangentVector):
            return NotImplemented
        return np.array_equal(self.vector, other.vector)

    def __repr__(self):
        return (f"TangentVector(dI={self.dI.tolist()}, dz={self.dz.tolist()}, "
                f"dphi={self.dphi.tolist()})")


def as_vector(x) -> np.ndarray:
    """Flat float vector for a PhasePoint or array-like."""
    if isinstance(x, PhasePoint):
        return x.vector
    return np.ascontiguousarray(x, dtype=float).reshape(-1)
