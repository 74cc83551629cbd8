"""Exact SU(2) algebra for a driven two-level spin.

Every propagator, pulse and target gate in this package is a plain 2x2
complex numpy array.  Time is measured in units of 1/Omega_0 (Omega_0 being
the resonant Rabi rate), so a resonant drive segment with nominal rotation
angle ``theta`` lasts ``t = theta`` and detunings appear as the
dimensionless ratio ``delta/Omega_0``.

Rotating-frame Hamiltonian convention (factor-of-2 fixed so that quoted
angles are rotation angles):

    H = (eps/2) * (cos(phi) sigma_x + sin(phi) sigma_y) + (delta/2) sigma_z

Piecewise-constant drive makes the propagator exact (Rabi formula); no
numerical integration is involved.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover
    from .pulses import PulseSegment, PulseSequence

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)

#: default tolerance when validating that an input matrix is unitary
UNITARITY_ATOL = 1e-8


@dataclass(frozen=True)
class ErrorPoint:
    """One systematic-error realization of the drive.

    Attributes
    ----------
    delta_norm : float
        Detuning in units of the resonant Rabi rate, delta/Omega_0.
    eps : float
        Relative drive amplitude (nominal value 1, must be >= 0).
    """

    delta_norm: float = 0.0
    eps: float = 1.0

    def __post_init__(self):
        if self.eps < 0:
            raise ValueError(f"amplitude scale must be >= 0, got {self.eps}")


@dataclass(frozen=True)
class SU2Decomposition:
    """Real quaternion components of a unitary with global phase removed.

    U = exp(i alpha) * (u0 * I - i (ux sx + uy sy + uz sz)) with
    u0**2 + |u|**2 = 1.  The gauge is fixed by u0 >= 0; when u0 is
    (numerically) zero, the first nonzero component of u is made >= 0.
    """

    u0: float
    u: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """Rebuild the SU(2) matrix (global phase dropped)."""
        ux, uy, uz = self.u
        return self.u0 * IDENTITY - 1j * (ux * SIGMA_X + uy * SIGMA_Y + uz * SIGMA_Z)


def is_unitary(U: np.ndarray, atol: float = UNITARITY_ATOL) -> bool:
    """True if U^dag U = I entrywise within atol."""
    U = np.asarray(U)
    return bool(np.max(np.abs(U.conj().T @ U - IDENTITY)) <= atol)


def _require_unitary(U: np.ndarray, what: str) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2):
        raise ValueError(f"{what} must be a 2x2 matrix, got shape {U.shape}")
    if not is_unitary(U):
        raise ValueError(f"{what} is not unitary within {UNITARITY_ATOL}")
    return U


def rotation_unitary(theta: float, axis) -> np.ndarray:
    """Rotation by ``theta`` about a unit 3-vector ``axis``.

    Returns cos(theta/2) I - i sin(theta/2) (axis . sigma).
    """
    axis = np.asarray(axis, dtype=float)
    if axis.shape != (3,):
        raise ValueError("axis must be a 3-vector")
    if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
        raise ValueError("axis must be a unit vector within 1e-9")
    half = 0.5 * theta
    gen = axis[0] * SIGMA_X + axis[1] * SIGMA_Y + axis[2] * SIGMA_Z
    return np.cos(half) * IDENTITY - 1j * np.sin(half) * gen


def drive_propagators(
    angle: float,
    phase: float,
    amp: float,
    delta_norm: np.ndarray,
    eps: np.ndarray,
) -> np.ndarray:
    """Propagators of one constant drive segment over arrays of error points.

    Closed-form Rabi solution of the rotating-frame Hamiltonian.  ``angle``
    is the resonant rotation angle Omega_0*t, ``phase`` the drive phase and
    ``amp`` the relative segment amplitude; ``delta_norm`` and ``eps`` are
    broadcast together and a (..., 2, 2) array is returned.
    """
    if angle < 0:
        raise ValueError(f"segment angle must be >= 0, got {angle}")
    delta_norm, eps = np.broadcast_arrays(
        np.asarray(delta_norm, dtype=float), np.asarray(eps, dtype=float)
    )
    omega = amp * eps
    rabi = np.hypot(omega, delta_norm)
    half = 0.5 * angle * rabi
    c = np.cos(half)
    # sin(a)/rabi is finite at rabi=0 (the propagator is then exactly I)
    k = np.divide(np.sin(half), rabi, out=np.zeros_like(rabi), where=rabi > 0)
    U = np.empty(delta_norm.shape + (2, 2), dtype=complex)
    off = -1j * k * omega
    U[..., 0, 0] = c - 1j * k * delta_norm
    U[..., 0, 1] = off * np.exp(-1j * phase)
    U[..., 1, 0] = off * np.exp(1j * phase)
    U[..., 1, 1] = c + 1j * k * delta_norm
    return U


def segment_propagator(seg: "PulseSegment", err: ErrorPoint) -> np.ndarray:
    """Exact propagator of a single pulse segment at one error point."""
    return drive_propagators(
        seg.angle, seg.phase, seg.amp, np.float64(err.delta_norm), np.float64(err.eps)
    )


def sequence_propagator(seq: "PulseSequence", err: ErrorPoint) -> np.ndarray:
    """Time-ordered propagator of a pulse sequence (first segment rightmost)."""
    if not seq.segments:
        raise ValueError("pulse sequence must contain at least one segment")
    U = IDENTITY
    for seg in seq.segments:
        U = segment_propagator(seg, err) @ U
    return U


def sequence_propagators(
    seq: "PulseSequence", delta_norm: np.ndarray, eps: np.ndarray
) -> np.ndarray:
    """Vectorized ``sequence_propagator`` over arrays of error points."""
    if not seq.segments:
        raise ValueError("pulse sequence must contain at least one segment")
    delta_norm, eps = np.broadcast_arrays(
        np.asarray(delta_norm, dtype=float), np.asarray(eps, dtype=float)
    )
    U = np.broadcast_to(IDENTITY, delta_norm.shape + (2, 2)).copy()
    for seg in seq.segments:
        P = drive_propagators(seg.angle, seg.phase, seg.amp, delta_norm, eps)
        U = np.einsum("...ij,...jk->...ik", P, U)
    return U


def decompose(U: np.ndarray) -> SU2Decomposition:
    """Split off the global phase of a unitary and return quaternion parts.

    Raises ValueError for non-unitary input.  The gauge convention is the
    one described on SU2Decomposition, which makes regression fixtures
    deterministic.
    """
    U = _require_unitary(U, "decompose input")
    det = U[0, 0] * U[1, 1] - U[0, 1] * U[1, 0]
    V = np.exp(-0.5j * np.angle(det)) * U
    u0 = 0.5 * (V[0, 0] + V[1, 1]).real
    ux = -0.5 * (V[0, 1] + V[1, 0]).imag
    uy = 0.5 * (V[1, 0] - V[0, 1]).real
    uz = -0.5 * (V[0, 0] - V[1, 1]).imag
    vec = np.array([u0, ux, uy, uz])
    # gauge: u0 >= 0, falling back to the first nonzero u component
    lead = vec[np.abs(vec) > 1e-12]
    if lead.size and lead[0] < 0:
        vec = -vec
    return SU2Decomposition(u0=float(vec[0]), u=vec[1:].copy())
