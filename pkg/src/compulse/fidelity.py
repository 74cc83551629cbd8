"""Average gate fidelity of pulses against a target pi rotation.

The scalar score is the standard average gate fidelity of a unitary
channel, (|Tr(T^dag U)|^2 + 2)/6 for two levels.  Targets are pi rotations
about an equatorial axis, either a fixed axis or the best equatorial axis
(the maximum of the score over the target phase, which has the closed form
(4 (ux^2 + uy^2) + 2)/6 in terms of the quaternion components of U).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from skimage import measure

from .pulses import PulseSequence, QuadratureSet
from .su2 import SIGMA_X, SIGMA_Y, _require_unitary, sequence_propagators

FIXED_AXIS = "fixed_axis"
BEST_EQUATORIAL = "best_equatorial"


@dataclass(frozen=True)
class TargetGate:
    """A target pi rotation about an equatorial axis."""

    kind: str
    phi: float = 0.0

    def __post_init__(self):
        if self.kind not in (FIXED_AXIS, BEST_EQUATORIAL):
            raise ValueError(f"unknown target kind {self.kind!r}")

    @classmethod
    def fixed_axis(cls, phi: float = 0.0) -> "TargetGate":
        return cls(FIXED_AXIS, phi)

    @classmethod
    def best_equatorial(cls) -> "TargetGate":
        return cls(BEST_EQUATORIAL)

    def unitary(self) -> np.ndarray:
        """-i sigma_phi for a fixed axis; undefined for best_equatorial."""
        if self.kind != FIXED_AXIS:
            raise ValueError("best_equatorial has no single target unitary")
        return -1j * (np.cos(self.phi) * SIGMA_X + np.sin(self.phi) * SIGMA_Y)


def unitary_avg_fidelity(U: np.ndarray, target: np.ndarray) -> float:
    """Average gate fidelity (|Tr(target^dag U)|^2 + 2)/6 of two unitaries."""
    U = _require_unitary(U, "U")
    target = _require_unitary(target, "target")
    tr = np.trace(target.conj().T @ U)
    return float((abs(tr) ** 2 + 2.0) / 6.0)


def _batch_fidelity(U: np.ndarray, target: TargetGate) -> np.ndarray:
    """Fidelity of a (..., 2, 2) stack of unitaries against a target."""
    if target.kind == BEST_EQUATORIAL:
        # |U01|^2 = ux^2 + uy^2 is global-phase free for any unitary
        return (4.0 * np.abs(U[..., 0, 1]) ** 2 + 2.0) / 6.0
    T = target.unitary()
    tr = np.einsum("ij,...ij->...", T.conj(), U)
    return (np.abs(tr) ** 2 + 2.0) / 6.0


def pointwise_fidelity(
    seq: PulseSequence, target: TargetGate, delta_norm, eps
) -> np.ndarray:
    """Noise-free fidelity of the sequence at explicit error coordinates."""
    U = sequence_propagators(seq, delta_norm, eps)
    return _batch_fidelity(U, target)


def channel_avg_fidelity(
    seq: PulseSequence, target: TargetGate, quad: QuadratureSet
) -> float:
    """Quadrature-averaged fidelity over the error ensemble.

    For best_equatorial the maximum over the target axis is taken per
    quadrature node (closed form), matching the role of the pi pulse in an
    echo where any equatorial axis refocuses static detuning.
    """
    F = pointwise_fidelity(seq, target, quad.deltas, quad.epss)
    return float(np.dot(quad.weights, F))


@dataclass(frozen=True)
class FidelityMap:
    """Fidelity over a (detuning, drive amplitude) grid plus one contour."""

    delta_axis: np.ndarray
    omega_axis: np.ndarray
    values: np.ndarray  # shape (len(delta_axis), len(omega_axis))
    contour_level: float
    contours: tuple[np.ndarray, ...]  # polylines, columns (delta, omega)

    def rows(self):
        """Row-major (delta outer, omega inner) CSV rows."""
        for i, d in enumerate(self.delta_axis):
            for j, o in enumerate(self.omega_axis):
                yield d, o, self.values[i, j]


def _extract_contours(
    values: np.ndarray,
    delta_axis: np.ndarray,
    omega_axis: np.ndarray,
    level: float,
) -> tuple[np.ndarray, ...]:
    """Marching-squares contour polylines in data coordinates."""
    if np.all(values >= level) or np.all(values <= level):
        return ()
    lines = measure.find_contours(values, level)
    out = []
    for line in lines:
        d = np.interp(line[:, 0], np.arange(delta_axis.size), delta_axis)
        o = np.interp(line[:, 1], np.arange(omega_axis.size), omega_axis)
        out.append(np.column_stack([d, o]))
    return tuple(out)


def fidelity_map(
    seq: PulseSequence,
    target: TargetGate,
    delta_range: tuple[float, float],
    omega_range: tuple[float, float],
    grid_shape: tuple[int, int],
    contour_level: float = 0.9,
) -> FidelityMap:
    """Pointwise (noise-free) fidelity map over detuning x drive amplitude.

    The grid is evaluated as a pure function per point; the result is
    independent of any internal evaluation order.  The contour at
    ``contour_level`` is extracted by marching squares with linear
    interpolation.
    """
    nd, no = grid_shape
    if nd < 2 or no < 2:
        raise ValueError("grid must be at least 2x2")
    if not all(np.isfinite(v) for v in (*delta_range, *omega_range)):
        raise ValueError("grid ranges must be finite")
    delta_axis = np.linspace(delta_range[0], delta_range[1], nd)
    omega_axis = np.linspace(omega_range[0], omega_range[1], no)
    D, O = np.meshgrid(delta_axis, omega_axis, indexing="ij")
    values = pointwise_fidelity(seq, target, D, O)
    contours = _extract_contours(values, delta_axis, omega_axis, contour_level)
    return FidelityMap(delta_axis, omega_axis, values, contour_level, contours)


def fidelity_slice(
    seq: PulseSequence,
    target: TargetGate,
    delta_points,
    eps: float = 1.0,
    quad: QuadratureSet | None = None,
) -> list[tuple[float, float]]:
    """1-D fidelity restriction at fixed drive amplitude.

    With ``quad`` given, each point is additionally averaged over the error
    ensemble centered on it (detunings add, amplitudes multiply); this is
    how a finite dephasing line of a single sensor enters the measured
    curve.
    """
    delta_points = np.asarray(delta_points, dtype=float)
    if quad is None:
        F = pointwise_fidelity(seq, target, delta_points, np.full_like(delta_points, eps))
    else:
        d = delta_points[:, None] + quad.deltas[None, :]
        e = eps * np.broadcast_to(quad.epss, d.shape)
        F = pointwise_fidelity(seq, target, d, e) @ quad.weights
    return [(float(d), float(f)) for d, f in zip(delta_points, F)]
