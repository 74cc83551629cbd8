"""Spin-echo / CPMG AC-magnetometry simulation and sensitivity estimation.

Protocol: pi/2 - free - [pi - free]*N - pi/2 with a square-wave test field
synchronized to the pi pulses, so the field phase accumulates
constructively while static detuning refocuses.  Free-evolution intervals
for N pi pulses are [tau_half, 2*tau_half, ..., 2*tau_half, tau_half]
(total free time 2*N*tau_half); the spin echo is the N=1 case.

Unit conventions: frequencies in MHz are cyclic and enter z-rotation
angles as 2*pi*(MHz)*(us); pulse propagators use the dimensionless
detuning delta/Omega_0.  Pulses consume real time (total_angle / 2 pi
Omega_0) during which the AC field is gated off but detuning still acts;
``ideal_pulses`` switches to error-free, zero-duration rotations for
analytic checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .pulses import (
    ErrorModel,
    PulseSequence,
    build_composite_pi,
    build_rectangular,
    build_rectangular_pi,
)
from .su2 import ErrorPoint, sequence_propagator, sequence_propagators

#: electron gyromagnetic ratio, MHz per mT
GAMMA_E_MHZ_PER_MT = 28.03

SPIN_ECHO = "spin_echo"
CPMG = "cpmg"


class DegenerateWorkingPointError(RuntimeError):
    """Raised when the signal slope vanishes at the sensing working point."""


@dataclass(frozen=True)
class SensorParams:
    """Physical parameters of the spin sensor and its environment.

    t2 is the dynamical-decoupling coherence time of the echo (N=1);
    under CPMG-N it is scaled as t2 * N**cpmg_t2_exponent (the standard
    spin-bath extension; the default 2/3 reproduces a factor-2 sensitivity
    gain at N=8).  detuning_offset_mhz is a deliberate carrier offset, the
    sweep variable of the detuned-magnetometry comparisons.
    """

    omega0_mhz: float = 10.0
    gamma_e_mhz_per_mt: float = GAMMA_E_MHZ_PER_MT
    t2star_us: float = 3.0
    t2_us: float = 104.0
    stretch: float = 1.5
    detuning_offset_mhz: float = 0.0
    cpmg_t2_exponent: float = 2.0 / 3.0

    def __post_init__(self):
        if self.omega0_mhz <= 0:
            raise ValueError("omega0_mhz must be > 0")
        if not self.t2_us >= self.t2star_us > 0:
            raise ValueError("need t2 >= t2star > 0")
        if self.stretch <= 0:
            raise ValueError("stretch must be > 0")

    @property
    def gamma_e_mhz_per_ut(self) -> float:
        return self.gamma_e_mhz_per_mt / 1000.0


@dataclass(frozen=True)
class ProtocolSpec:
    """One sensing experiment: timing, AC field, and the pulses to use."""

    kind: str = SPIN_ECHO
    n_pi: int = 1
    tau_half_us: float = 1.0
    b_amp_ut: float = 0.0
    pi_pulse: PulseSequence = field(default_factory=lambda: build_rectangular_pi(math.pi / 2))
    pi_half_pulse: PulseSequence = field(default_factory=lambda: build_rectangular(math.pi / 2, 0.0))
    readout_phase: float = 0.0
    ideal_pulses: bool = False
    #: per-pi-pulse drive phase shifts, applied cyclically; the standard
    #: XY-style alternation cancels coherent pulse errors along the train
    phase_cycle: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in (SPIN_ECHO, CPMG):
            raise ValueError(f"unknown protocol kind {self.kind!r}")
        if self.kind == SPIN_ECHO and self.n_pi != 1:
            raise ValueError("spin echo has exactly one pi pulse")
        if self.n_pi < 1:
            raise ValueError("n_pi must be >= 1")
        if self.tau_half_us <= 0:
            raise ValueError("tau_half_us must be > 0")
        object.__setattr__(self, "phase_cycle", tuple(self.phase_cycle))

    def pi_phase_shift(self, j: int) -> float:
        """Drive phase shift of the j-th pi pulse under the cycle."""
        if not self.phase_cycle:
            return 0.0
        return self.phase_cycle[j % len(self.phase_cycle)]

    @property
    def total_free_us(self) -> float:
        return 2.0 * self.n_pi * self.tau_half_us

    def free_intervals_us(self) -> np.ndarray:
        """Durations [tau_half, 2 tau_half, ..., 2 tau_half, tau_half]."""
        if self.n_pi == 1:
            return np.array([self.tau_half_us, self.tau_half_us])
        inner = [2.0 * self.tau_half_us] * (self.n_pi - 1)
        return np.array([self.tau_half_us, *inner, self.tau_half_us])

    def pulse_time_us(self, omega0_mhz: float) -> float:
        """Total drive time of all pulses in the sequence."""
        if self.ideal_pulses:
            return 0.0
        return (
            2.0 * self.pi_half_pulse.duration_us(omega0_mhz)
            + self.n_pi * self.pi_pulse.duration_us(omega0_mhz)
        )


@dataclass(frozen=True)
class ReadoutModel:
    """Shot-noise model of the optical readout."""

    photons_per_shot: int = 1000
    contrast: float = 0.02
    shots: int = 1

    def __post_init__(self):
        if self.photons_per_shot < 1:
            raise ValueError("photons_per_shot must be >= 1")
        if not 0.0 < self.contrast <= 1.0:
            raise ValueError("contrast must be in (0, 1]")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")


@dataclass(frozen=True)
class SensitivityResult:
    """eta = sigma/(dS/dB) * sqrt(T_seq) with the quantities that made it."""

    eta_nt_per_sqrt_hz: float
    slope_per_ut: float
    noise_sigma: float
    tau_used_us: float
    metadata: dict


@dataclass(frozen=True)
class SignalTrace:
    """1-D sweep of the ensemble signal along tau or field amplitude."""

    axis: str
    x: np.ndarray
    signal: np.ndarray


def free_evolution(delta_mhz: float, phase_b: float, t_us: float) -> np.ndarray:
    """z rotation exp(-i (2 pi delta t + phase_b) sigma_z / 2)."""
    if t_us < 0:
        raise ValueError("duration must be >= 0")
    theta = 2.0 * math.pi * delta_mhz * t_us + phase_b
    return np.array(
        [[np.exp(-0.5j * theta), 0.0], [0.0, np.exp(0.5j * theta)]], dtype=complex
    )


def square_wave_phase(
    b_amp_ut: float,
    tau_half_us: float,
    segment_index: int,
    n_pi: int,
    gamma_e_mhz_per_ut: float = GAMMA_E_MHZ_PER_MT / 1000.0,
) -> float:
    """Field phase 2 pi gamma_e B * dt of one free interval, signed.

    The square wave flips at every pi pulse, so interval j carries sign
    (-1)**j; combined with the spin flips all intervals then add
    constructively at readout.
    """
    if segment_index < 0 or segment_index > n_pi:
        raise ValueError("segment_index out of range")
    if segment_index in (0, n_pi):
        dt = tau_half_us
    else:
        dt = 2.0 * tau_half_us
    sign = -1.0 if segment_index % 2 else 1.0
    return sign * 2.0 * math.pi * gamma_e_mhz_per_ut * b_amp_ut * dt


def _pulse_propagators(
    p: ProtocolSpec, deltas_norm: np.ndarray, epss: np.ndarray
) -> tuple[dict[float, np.ndarray], np.ndarray, np.ndarray]:
    """({phase shift: pi propagators}, first pi/2, readout pi/2) stacks."""
    read = p.pi_half_pulse.shifted(p.readout_phase)
    shifts = sorted({p.pi_phase_shift(j) for j in range(p.n_pi)})
    if p.ideal_pulses:
        ideal = ErrorPoint(0.0, 1.0)
        shape = deltas_norm.shape + (2, 2)
        u_pi = {
            sh: np.broadcast_to(sequence_propagator(p.pi_pulse.shifted(sh), ideal), shape)
            for sh in shifts
        }
        u_init = np.broadcast_to(sequence_propagator(p.pi_half_pulse, ideal), shape)
        u_read = np.broadcast_to(sequence_propagator(read, ideal), shape)
        return u_pi, u_init, u_read
    u_pi = {
        sh: sequence_propagators(p.pi_pulse.shifted(sh), deltas_norm, epss)
        for sh in shifts
    }
    u_init = sequence_propagators(p.pi_half_pulse, deltas_norm, epss)
    u_read = sequence_propagators(read, deltas_norm, epss)
    return u_pi, u_init, u_read


def _survival_probabilities(
    p: ProtocolSpec, s: SensorParams, deltas_norm: np.ndarray, epss: np.ndarray
) -> np.ndarray:
    """|<0|psi>|^2 after the full sequence, vectorized over error points.

    deltas_norm must already include any deliberate carrier offset; it is
    applied consistently to the pulse propagators and (scaled by Omega_0)
    to the free evolutions.
    """
    deltas_norm, epss = np.broadcast_arrays(
        np.asarray(deltas_norm, dtype=float), np.asarray(epss, dtype=float)
    )
    u_pi, u_init, u_read = _pulse_propagators(p, deltas_norm, epss)
    delta_mhz = deltas_norm * s.omega0_mhz
    psi = u_init[..., :, 0]  # initial state |0>
    for j, dt in enumerate(p.free_intervals_us()):
        phase_b = square_wave_phase(
            p.b_amp_ut, p.tau_half_us, j, p.n_pi, s.gamma_e_mhz_per_ut
        )
        theta = 2.0 * math.pi * delta_mhz * dt + phase_b
        half = np.exp(-0.5j * theta)
        psi = np.stack([half * psi[..., 0], np.conj(half) * psi[..., 1]], axis=-1)
        if j < p.n_pi:
            psi = np.einsum("...ij,...j->...i", u_pi[p.pi_phase_shift(j)], psi)
    psi = np.einsum("...ij,...j->...i", u_read, psi)
    return np.abs(psi[..., 0]) ** 2


def simulate_run(p: ProtocolSpec, err: ErrorPoint, s: SensorParams) -> float:
    """Pure-state survival probability for a single error realization."""
    return float(
        _survival_probabilities(
            p, s, np.float64(err.delta_norm), np.float64(err.eps)
        )
    )


def decoherence_envelope(p: ProtocolSpec, s: SensorParams) -> float:
    """Stretched-exponential echo envelope exp(-(T_free/T2(N))^stretch)."""
    t2_eff = s.t2_us * p.n_pi ** s.cpmg_t2_exponent
    return math.exp(-((p.total_free_us / t2_eff) ** s.stretch))


#: 2*pi*sigma_delta*Omega_0*tau_half beyond which the random-detuning phase
#: of one lattice unit counts as fully wrapped (residual coherence < e^-50)
DEPHASE_THRESHOLD = 10.0

DIRECT = "direct"
DEPHASED = "dephased"


class _EnsembleEngine:
    """Ensemble averaging of the sensing signal with cached propagators.

    The pulse propagators depend only on the error nodes, never on timing
    or field amplitude, so sweeps and slope estimates reuse them.

    Two evaluation modes compute the same continuum ensemble average:

    direct
        Weighted sum of survival probabilities over the model quadrature.
        Faithful at any tau but the Gauss-Hermite rule must resolve the
        fastest interferometer phase (see suggested_delta_nodes), else the
        physically dephased modulation terms alias into the average.
    dephased
        Valid once 2*pi*sigma*Omega_0*tau_half exceeds DEPHASE_THRESHOLD:
        the random-detuning phase of one lattice unit is then uniformly
        wrapped and independent of the (slow) pulse-matrix dependence, so
        it is averaged exactly with 2*n_pi+1 equally spaced lattice phases
        (all surviving harmonics have integer lattice order <= 2*n_pi)
        while the model quadrature handles the pulses.  Deliberate carrier
        offsets stay deterministic and coherent.

    "auto" picks dephased whenever it is valid at the evaluated tau_half.
    """

    def __init__(
        self,
        p: ProtocolSpec,
        s: SensorParams,
        model: ErrorModel,
        mode: str = "auto",
    ):
        if mode not in ("auto", DIRECT, DEPHASED):
            raise ValueError(f"unknown ensemble mode {mode!r}")
        self.protocol = p
        self.sensor = s
        self.model = model
        self.mode = mode
        quad = model.quadrature()
        self.weights = quad.weights
        self.deltas = quad.deltas + s.detuning_offset_mhz / s.omega0_mhz
        self.epss = quad.epss
        self._props: dict[float, tuple] = {}

    def _propagators(self, readout_phase: float):
        key = float(readout_phase)
        if key not in self._props:
            p = replace(self.protocol, readout_phase=key)
            self._props[key] = _pulse_propagators(p, self.deltas, self.epss)
        return self._props[key]

    def _mode_for(self, tau_half_us: float) -> str:
        if self.mode != "auto":
            return self.mode
        wrap = (
            2.0 * math.pi * self.model.sigma_delta * self.sensor.omega0_mhz * tau_half_us
        )
        return DEPHASED if wrap >= DEPHASE_THRESHOLD else DIRECT

    def _p0_mean(self, p: ProtocolSpec) -> float:
        u_pi, u_init, u_read = self._propagators(p.readout_phase)
        s = self.sensor
        mode = self._mode_for(p.tau_half_us)
        intervals = p.free_intervals_us()
        if mode == DIRECT:
            delta_mhz = self.deltas * s.omega0_mhz
            lattice = np.zeros(1)
            comb_w = np.ones(1)
            m_orders = None
        else:
            # coherent part of the free phase: carrier offset only; the
            # wrapped random-detuning phase becomes the lattice variable
            delta_mhz = np.full_like(self.deltas, s.detuning_offset_mhz)
            n_comb = 2 * p.n_pi + 1
            lattice = 2.0 * math.pi * np.arange(n_comb) / n_comb
            comb_w = np.full(n_comb, 1.0 / n_comb)
            m_orders = np.rint(intervals / p.tau_half_us).astype(int)
        # virtual node set: quadrature nodes x lattice phases
        nq, nc = self.deltas.size, lattice.size
        theta_z = (lattice[None, :] * np.ones((nq, 1))).reshape(-1)
        dmhz = np.repeat(delta_mhz, nc)
        w = (self.weights[:, None] * comb_w[None, :]).reshape(-1)
        psi = np.repeat(u_init[..., :, 0], nc, axis=0)
        u_pi_v = {sh: np.repeat(u, nc, axis=0) for sh, u in u_pi.items()}
        for j, dt in enumerate(intervals):
            phase_b = square_wave_phase(
                p.b_amp_ut, p.tau_half_us, j, p.n_pi, s.gamma_e_mhz_per_ut
            )
            theta = 2.0 * math.pi * dmhz * dt + phase_b
            if m_orders is not None:
                theta = theta + m_orders[j] * theta_z
            half = np.exp(-0.5j * theta)
            psi = np.stack([half * psi[..., 0], np.conj(half) * psi[..., 1]], axis=-1)
            if j < p.n_pi:
                psi = np.einsum("...ij,...j->...i", u_pi_v[p.pi_phase_shift(j)], psi)
        psi = np.einsum("...ij,...j->...i", np.repeat(u_read, nc, axis=0), psi)
        p0 = np.abs(psi[..., 0]) ** 2
        return float(np.dot(w, p0))

    def signal(
        self,
        tau_half_us: float | None = None,
        b_amp_ut: float | None = None,
        readout_phase: float | None = None,
    ) -> float:
        p = self.protocol
        p = replace(
            p,
            tau_half_us=p.tau_half_us if tau_half_us is None else tau_half_us,
            b_amp_ut=p.b_amp_ut if b_amp_ut is None else b_amp_ut,
            readout_phase=p.readout_phase if readout_phase is None else readout_phase,
        )
        env = decoherence_envelope(p, self.sensor)
        return float(0.5 + env * (self._p0_mean(p) - 0.5))


def ensemble_signal(
    p: ProtocolSpec, s: SensorParams, model: ErrorModel, mode: str = "auto"
) -> float:
    """Detuning/amplitude ensemble average of the sensing signal.

    S = 1/2 + exp(-(T_free/T2)^stretch) * <p0 - 1/2> over the error
    ensemble; the Gaussian detuning average itself dephases the
    detuning-modulation terms on the inhomogeneous time scale, so only
    the refocused echo term survives at long sensing times.  ``mode``
    selects how the average is evaluated (see _EnsembleEngine); "direct"
    is the literal quadrature sum.
    """
    return _EnsembleEngine(p, s, model, mode=mode).signal()


def sweep_signal(
    p: ProtocolSpec,
    s: SensorParams,
    model: ErrorModel,
    axis: str,
    points,
) -> SignalTrace:
    """Ensemble signal along a 1-D sweep of tau_half or field amplitude."""
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        raise ValueError("sweep needs at least one point")
    engine = _EnsembleEngine(p, s, model)
    if axis == "tau":
        sig = np.array([engine.signal(tau_half_us=x) for x in points])
    elif axis == "b_amp":
        sig = np.array([engine.signal(b_amp_ut=x) for x in points])
    else:
        raise ValueError(f"unknown sweep axis {axis!r}")
    return SignalTrace(axis=axis, x=points, signal=sig)


def fringe_period_ut(p: ProtocolSpec, s: SensorParams) -> float:
    """Field amplitude advancing the accumulated phase by 2*pi."""
    return 1.0 / (s.gamma_e_mhz_per_ut * p.total_free_us)


def _resolved_model(model: ErrorModel, p: ProtocolSpec, s: SensorParams) -> ErrorModel:
    """Model with enough detuning nodes for a direct-mode evaluation.

    When the working point is in the dephased regime the lattice average
    takes over and the configured node count already suffices.
    """
    wrap = 2.0 * math.pi * model.sigma_delta * s.omega0_mhz * p.tau_half_us
    if wrap >= DEPHASE_THRESHOLD:
        return model
    needed = suggested_delta_nodes(
        model.sigma_delta, s.omega0_mhz, p.total_free_us, minimum=model.n_delta_nodes
    )
    if needed <= model.n_delta_nodes:
        return model
    return replace(model, n_delta_nodes=needed)


def estimate_sensitivity(
    p: ProtocolSpec,
    s: SensorParams,
    model: ErrorModel,
    r: ReadoutModel,
    overhead_us: float = 5.0,
    fd_fraction: float = 1.0 / 400.0,
) -> SensitivityResult:
    """Shot-noise-limited sensitivity at the steepest fringe point.

    The slope dS/dB is measured by central differences around the
    protocol's field amplitude at two readout phases, the protocol's own
    and the pi/2-biased one, combined in quadrature; this is the slope at
    the steepest point of the fringe whatever phase offset imperfect
    pulses imprint on it.  For ideal pulses the unbiased component
    vanishes and the estimate reduces to the plain central difference at
    the pi/2 bias.  The per-shot noise is sqrt(S(1-S)/n_ph)/C at the
    steepest working point and eta = sigma/|slope| * sqrt(T_seq), with
    T_seq including pulse time and a fixed init/readout overhead.  With B
    in uT and times in us, eta is numerically in nT/sqrt(Hz).
    """
    engine = _EnsembleEngine(p, s, _resolved_model(model, p, s))
    h = fd_fraction * fringe_period_ut(p, s)
    b0 = p.b_amp_ut
    r_bias = p.readout_phase + math.pi / 2.0
    slope_biased = (
        engine.signal(b_amp_ut=b0 + h, readout_phase=r_bias)
        - engine.signal(b_amp_ut=b0 - h, readout_phase=r_bias)
    ) / (2.0 * h)
    slope_plain = (
        engine.signal(b_amp_ut=b0 + h, readout_phase=p.readout_phase)
        - engine.signal(b_amp_ut=b0 - h, readout_phase=p.readout_phase)
    ) / (2.0 * h)
    slope = math.hypot(slope_biased, slope_plain)
    if slope < 1e-15:
        raise DegenerateWorkingPointError(
            f"signal slope vanishes at b_amp={b0} uT (detuning offset "
            f"{s.detuning_offset_mhz} MHz)"
        )
    # readout phase whose fringe zero crossing sits at b0 with maximal slope
    r_star = r_bias - math.atan2(slope_plain, slope_biased)
    s_work = engine.signal(b_amp_ut=b0, readout_phase=r_star)
    sigma_shot = math.sqrt(max(s_work * (1.0 - s_work), 0.0) / r.photons_per_shot) / r.contrast
    noise_sigma = sigma_shot / math.sqrt(r.shots)
    t_seq = p.total_free_us + p.pulse_time_us(s.omega0_mhz) + overhead_us
    eta = noise_sigma / slope * math.sqrt(r.shots * t_seq)
    return SensitivityResult(
        eta_nt_per_sqrt_hz=eta,
        slope_per_ut=slope,
        noise_sigma=noise_sigma,
        tau_used_us=p.tau_half_us,
        metadata={
            "kind": p.kind,
            "n_pi": p.n_pi,
            "pulse_label": p.pi_pulse.label,
            "detuning_offset_mhz": s.detuning_offset_mhz,
            "b_amp_ut": b0,
            "fd_step_ut": h,
            "readout_phase_steepest": r_star,
            "signal_at_working_point": s_work,
            "t_seq_us": t_seq,
            "envelope": decoherence_envelope(p, s),
        },
    )


def sensitivity_vs_detuning(
    p: ProtocolSpec,
    s: SensorParams,
    model: ErrorModel,
    r: ReadoutModel,
    detuning_offsets_mhz,
    overhead_us: float = 5.0,
) -> list[SensitivityResult]:
    """Sensitivity sweep over the deliberate carrier detuning.

    Failed points (degenerate working point) are flagged in the metadata
    and carry eta = nan instead of aborting the sweep.
    """
    out = []
    for off in np.asarray(detuning_offsets_mhz, dtype=float):
        s_i = replace(s, detuning_offset_mhz=float(off))
        try:
            out.append(estimate_sensitivity(p, s_i, model, r, overhead_us))
        except DegenerateWorkingPointError as exc:
            out.append(
                SensitivityResult(
                    eta_nt_per_sqrt_hz=float("nan"),
                    slope_per_ut=0.0,
                    noise_sigma=float("nan"),
                    tau_used_us=p.tau_half_us,
                    metadata={
                        "kind": p.kind,
                        "n_pi": p.n_pi,
                        "detuning_offset_mhz": float(off),
                        "failed": str(exc),
                    },
                )
            )
    return out


def default_pulse_pair(
    phi1: float = 0.0, rect_phase: float = math.pi / 2.0
) -> tuple[PulseSequence, PulseSequence]:
    """(rectangular, composite) pi pulses as used in the sensing workflows.

    The rectangular pi defaults to the y axis and the composite to phi1=0,
    which puts both effective rotation axes perpendicular to the x-phase
    pi/2 pulses (the robust Meiboom-Gill arrangement).
    """
    return build_rectangular_pi(rect_phase), build_composite_pi(phi1=phi1)


def detuning_enhancement(
    s: SensorParams,
    model: ErrorModel,
    r: ReadoutModel,
    detuning_offsets_mhz,
    tau_half_us: float,
    n_pi: int = 1,
    pi_rect: PulseSequence | None = None,
    pi_comp: PulseSequence | None = None,
    overhead_us: float = 5.0,
) -> tuple[list[SensitivityResult], list[SensitivityResult], np.ndarray]:
    """Rectangular and composite sensitivity sweeps plus their ratio."""
    rect, comp = default_pulse_pair()
    kind = SPIN_ECHO if n_pi == 1 else CPMG
    p_rect = ProtocolSpec(
        kind=kind, n_pi=n_pi, tau_half_us=tau_half_us, pi_pulse=pi_rect or rect
    )
    p_comp = ProtocolSpec(
        kind=kind, n_pi=n_pi, tau_half_us=tau_half_us, pi_pulse=pi_comp or comp
    )
    res_rect = sensitivity_vs_detuning(p_rect, s, model, r, detuning_offsets_mhz, overhead_us)
    res_comp = sensitivity_vs_detuning(p_comp, s, model, r, detuning_offsets_mhz, overhead_us)
    enh = np.array(
        [
            a.eta_nt_per_sqrt_hz / b.eta_nt_per_sqrt_hz
            for a, b in zip(res_rect, res_comp)
        ]
    )
    return res_rect, res_comp, enh


@dataclass(frozen=True)
class CpmgSensitivityMap:
    """Sensitivity over (pulse number, total sensing time) for both pulses."""

    n_pi_values: np.ndarray
    total_times_us: np.ndarray
    eta_comp: np.ndarray  # shape (n_N, n_T)
    eta_rect: np.ndarray
    enhancement: np.ndarray
    contour_level: float
    contours: tuple[np.ndarray, ...]


#: default pi-pulse phase alternation for CPMG trains; cancels coherent
#: pulse errors along the train (XY scheme) and leaves the echo unchanged
XY_PHASE_CYCLE = (0.0, math.pi / 2.0)


def cpmg_sensitivity_map(
    s: SensorParams,
    model: ErrorModel,
    r: ReadoutModel,
    n_pi_values,
    total_times_us,
    contour_level: float = 4.0,
    eta_scale: float = 1.0,
    overhead_us: float = 5.0,
    phase_cycle: tuple[float, ...] = XY_PHASE_CYCLE,
) -> CpmgSensitivityMap:
    """Grid of CPMG-N sensitivities; tau_half = T_total/(2N) per cell.

    The N=1 row is the spin echo.  The contour (marching squares on the
    composite map, in scaled eta units) reproduces the constant-sensitivity
    line of the CPMG figure.
    """
    from .fidelity import _extract_contours  # shared marching-squares helper

    n_pi_values = np.asarray(n_pi_values, dtype=int)
    total_times_us = np.asarray(total_times_us, dtype=float)
    if n_pi_values.size == 0 or total_times_us.size == 0:
        raise ValueError("grid must be non-empty")
    rect, comp = default_pulse_pair()
    eta = {id(rect): np.empty((n_pi_values.size, total_times_us.size)),
           id(comp): np.empty((n_pi_values.size, total_times_us.size))}
    for pulse in (rect, comp):
        for i, n in enumerate(n_pi_values):
            kind = SPIN_ECHO if n == 1 else CPMG
            for j, t_tot in enumerate(total_times_us):
                p = ProtocolSpec(
                    kind=kind,
                    n_pi=int(n),
                    tau_half_us=t_tot / (2.0 * n),
                    pi_pulse=pulse,
                    phase_cycle=phase_cycle,
                )
                try:
                    res = estimate_sensitivity(p, s, model, r, overhead_us)
                    eta[id(pulse)][i, j] = res.eta_nt_per_sqrt_hz
                except DegenerateWorkingPointError:
                    eta[id(pulse)][i, j] = float("nan")
    eta_rect = eta[id(rect)]
    eta_comp = eta[id(comp)]
    contours = _extract_contours(
        eta_comp * eta_scale,
        n_pi_values.astype(float),
        total_times_us,
        contour_level,
    )
    return CpmgSensitivityMap(
        n_pi_values=n_pi_values,
        total_times_us=total_times_us,
        eta_comp=eta_comp,
        eta_rect=eta_rect,
        enhancement=eta_rect / eta_comp,
        contour_level=contour_level,
        contours=contours,
    )


def cpmg_enhancement_vs_n(
    s: SensorParams,
    model: ErrorModel,
    r: ReadoutModel,
    n_pi_values,
    tau_half_us: float = 1.0,
    overhead_us: float = 5.0,
    phase_cycle: tuple[float, ...] = XY_PHASE_CYCLE,
) -> list[tuple[int, float, float, float]]:
    """(N, eta_rect, eta_comp, enhancement) at fixed per-pulse spacing."""
    rect, comp = default_pulse_pair()
    out = []
    for n in np.asarray(n_pi_values, dtype=int):
        kind = SPIN_ECHO if n == 1 else CPMG
        etas = []
        for pulse in (rect, comp):
            p = ProtocolSpec(
                kind=kind,
                n_pi=int(n),
                tau_half_us=tau_half_us,
                pi_pulse=pulse,
                phase_cycle=phase_cycle,
            )
            etas.append(estimate_sensitivity(p, s, model, r, overhead_us).eta_nt_per_sqrt_hz)
        out.append((int(n), etas[0], etas[1], etas[0] / etas[1]))
    return out


def suggested_delta_nodes(
    sigma_delta_norm: float,
    omega0_mhz: float,
    total_free_us: float,
    minimum: int = 33,
) -> int:
    """Gauss-Hermite node count resolving the fastest detuning modulation.

    Pairwise interferometer path phases reach a = 2*pi*T_free*delta; the
    Gauss-Hermite error bound for exp(i*a*delta) against N(0, sigma^2)
    decays once k exceeds ~0.7 (a*sigma)^2, while smaller node sets alias
    the (physically dephased) modulation terms back into the ensemble
    average.  An odd count also places one node at the distribution center.
    """
    a_sigma = 2.0 * math.pi * total_free_us * sigma_delta_norm * omega0_mhz
    k = max(minimum, math.ceil(0.8 * a_sigma * a_sigma + 20.0))
    return k if k % 2 else k + 1
