"""Pulse-sequence construction and error-ensemble discretization.

Provides the rectangular pi pulse, the two-fold 5-piece composite pi pulse
and its parametric variants, plus quadrature rules for the two systematic
error channels: a Gaussian detuning distribution (Gauss-Hermite nodes) and
a Lorentzian drive-amplitude distribution (equal-probability-mass nodes of
the truncated distribution).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_hermite

from .su2 import ErrorPoint

#: reference phase offsets (phi2 - phi1, phi3 - phi1) of the
#: detuning-robust composite pulse
COMPOSITE_DPHI21 = math.radians(97.08)
COMPOSITE_DPHI31 = math.radians(-47.88)

#: resonant rotation angles of the 5-piece building block
FIVE_PIECE_ANGLES = (math.pi / 2, 2 * math.pi, math.pi, 2 * math.pi, math.pi / 2)


@dataclass(frozen=True)
class PulseSegment:
    """One piecewise-constant drive segment.

    angle is the resonant rotation angle Omega_0*t (radians), phase the
    drive phase (radians), amp the relative drive amplitude.
    """

    angle: float
    phase: float = 0.0
    amp: float = 1.0

    def __post_init__(self):
        if self.angle < 0:
            raise ValueError(f"segment angle must be >= 0, got {self.angle}")
        if self.amp < 0:
            raise ValueError(f"segment amp must be >= 0, got {self.amp}")


@dataclass(frozen=True)
class PulseSequence:
    """Ordered list of drive segments with a human-readable label."""

    segments: tuple[PulseSegment, ...]
    label: str = ""

    def __post_init__(self):
        if len(self.segments) == 0:
            raise ValueError("pulse sequence must contain at least one segment")
        object.__setattr__(self, "segments", tuple(self.segments))
        if not math.isfinite(self.total_angle):
            raise ValueError("total rotation angle must be finite")

    @property
    def total_angle(self) -> float:
        return float(sum(seg.angle for seg in self.segments))

    def duration_us(self, omega0_mhz: float) -> float:
        """Wall-clock duration in microseconds for a Rabi frequency in MHz."""
        return self.total_angle / (2 * math.pi * omega0_mhz)

    def shifted(self, dphi: float) -> "PulseSequence":
        """Copy with every segment phase advanced by dphi (overall frame shift)."""
        segs = tuple(
            PulseSegment(s.angle, s.phase + dphi, s.amp) for s in self.segments
        )
        return PulseSequence(segs, label=self.label)

    def to_json_dict(self) -> dict:
        return {
            "label": self.label,
            "segments": [
                {"angle_rad": s.angle, "phase_rad": s.phase, "amp": s.amp}
                for s in self.segments
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json_dict(cls, doc: dict) -> "PulseSequence":
        segs = tuple(
            PulseSegment(d["angle_rad"], d["phase_rad"], d.get("amp", 1.0))
            for d in doc["segments"]
        )
        return cls(segs, label=doc.get("label", ""))


def build_rectangular(angle: float, phase: float = 0.0, label: str = "rectangular") -> PulseSequence:
    """Single-segment resonant pulse of the given rotation angle and phase."""
    return PulseSequence((PulseSegment(angle, phase, 1.0),), label=label)


def build_rectangular_pi(phase: float = 0.0) -> PulseSequence:
    """Plain resonant pi pulse at the given drive phase."""
    return build_rectangular(math.pi, phase)


def build_five_piece(
    dphi21: float,
    dphi31: float,
    phi1: float = 0.0,
    angles: tuple[float, ...] = FIVE_PIECE_ANGLES,
) -> tuple[PulseSegment, ...]:
    """The 5-piece half of the composite: angles at phases (p1,p2,p3,p2,p1)."""
    if len(angles) != 5:
        raise ValueError("five-piece template needs exactly 5 angles")
    phases = (phi1, phi1 + dphi21, phi1 + dphi31, phi1 + dphi21, phi1)
    return tuple(PulseSegment(a, p, 1.0) for a, p in zip(angles, phases))


def build_composite_pi(
    dphi21: float = COMPOSITE_DPHI21,
    dphi31: float = COMPOSITE_DPHI31,
    phi1: float = 0.0,
    angles: tuple[float, ...] = FIVE_PIECE_ANGLES,
) -> PulseSequence:
    """Composite pi pulse: the 5-piece block repeated twice (10 segments).

    The default phase offsets (97.08 deg, -47.88 deg) give the
    detuning-robust pulse; collinear phases collapse it to a plain 12*pi
    rotation.  The repeat is enforced here; the segments are stored
    explicitly so downstream code may relax the symmetry later.
    """
    block = build_five_piece(dphi21, dphi31, phi1, angles)
    return PulseSequence(block + block, label="composite")


def sigma_from_fwhm(fwhm: float) -> float:
    """Gaussian sigma from full width at half maximum."""
    return fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))


def gaussian_nodes(sigma: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes/weights rescaled to N(0, sigma^2).

    Weights sum to 1.  k=1 returns the single node 0 with weight 1.
    """
    if k < 1:
        raise ValueError(f"node count must be >= 1, got {k}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    x, w = roots_hermite(k)
    nodes = math.sqrt(2.0) * sigma * x
    weights = w / w.sum()
    return nodes, weights


def lorentzian_nodes(
    gamma: float, k: int, cutoff: float
) -> tuple[np.ndarray, np.ndarray]:
    """Equal-mass nodes of a truncated Lorentzian centered at 1.

    The distribution has half width at half maximum ``gamma`` and is
    truncated to [1 - cutoff, 1 + cutoff]; nodes sit at the probability
    midpoints of k equal-mass bins (inverse CDF of the truncated law), so
    the set is symmetric about 1 and an odd k places a node exactly at 1.
    """
    if k < 1:
        raise ValueError(f"node count must be >= 1, got {k}")
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    if cutoff <= 0:
        raise ValueError(f"cutoff must be > 0, got {cutoff}")
    q = (np.arange(k) + 0.5) / k
    if gamma == 0:
        nodes = np.ones(k)
    else:
        half_angle = math.atan2(cutoff, gamma)
        nodes = 1.0 + gamma * np.tan(half_angle * (2.0 * q - 1.0))
    weights = np.full(k, 1.0 / k)
    return nodes, weights / weights.sum()


@dataclass(frozen=True)
class QuadratureSet:
    """Discretized product measure over (detuning, amplitude) error points."""

    deltas: np.ndarray
    epss: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        e = np.asarray(self.epss, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if not (d.shape == e.shape == w.shape) or d.ndim != 1:
            raise ValueError("deltas, epss and weights must be equal-length 1-D arrays")
        if np.any(w < 0):
            raise ValueError("quadrature weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("quadrature weights must sum to 1 within 1e-12")
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "epss", e)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return self.deltas.size

    @property
    def nodes(self) -> list[ErrorPoint]:
        return [ErrorPoint(float(d), float(e)) for d, e in zip(self.deltas, self.epss)]


def tensor_quadrature(
    delta_nodes: tuple[np.ndarray, np.ndarray],
    eps_nodes: tuple[np.ndarray, np.ndarray],
) -> QuadratureSet:
    """Cartesian product of two 1-D node/weight rules with product weights."""
    dn, dw = delta_nodes
    en, ew = eps_nodes
    dn, dw, en, ew = map(np.asarray, (dn, dw, en, ew))
    deltas = np.repeat(dn, en.size)
    epss = np.tile(en, dn.size)
    weights = np.repeat(dw, en.size) * np.tile(ew, dn.size)
    return QuadratureSet(deltas, epss, weights / weights.sum())


@dataclass(frozen=True)
class ErrorModel:
    """Gaussian detuning spread x Lorentzian amplitude spread, discretized.

    sigma_delta is the Gaussian std of delta/Omega_0; gamma_eps the
    Lorentzian HWHM of the amplitude scale about 1, truncated at
    +-eps_truncation.
    """

    sigma_delta: float = 0.0
    gamma_eps: float = 0.0
    n_delta_nodes: int = 33
    n_eps_nodes: int = 11
    eps_truncation: float = 0.3

    def __post_init__(self):
        if self.sigma_delta < 0 or self.gamma_eps < 0:
            raise ValueError("distribution widths must be >= 0")
        if self.n_delta_nodes < 1 or self.n_eps_nodes < 1:
            raise ValueError("node counts must be >= 1")
        if self.eps_truncation <= 0:
            raise ValueError("eps_truncation must be > 0")

    def delta_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return gaussian_nodes(self.sigma_delta, self.n_delta_nodes)

    def eps_nodes(self) -> tuple[np.ndarray, np.ndarray]:
        return lorentzian_nodes(self.gamma_eps, self.n_eps_nodes, self.eps_truncation)

    def quadrature(self) -> QuadratureSet:
        return tensor_quadrature(self.delta_nodes(), self.eps_nodes())
