"""Composite-pulse quantum control and spin-sensor magnetometry toolkit.

Simulates robust composite pi pulses for two-level spin sensors, scores
them by ensemble-averaged gate fidelity under detuning and drive-amplitude
errors, optimizes their phases by momentum gradient ascent, and simulates
spin-echo / CPMG AC-magnetometry to quantify sensitivity and its
enhancement over plain rectangular pulses.
"""

from .su2 import (
    ErrorPoint,
    SU2Decomposition,
    decompose,
    is_unitary,
    rotation_unitary,
    segment_propagator,
    sequence_propagator,
    sequence_propagators,
)
from .pulses import (
    ErrorModel,
    PulseSegment,
    PulseSequence,
    QuadratureSet,
    build_composite_pi,
    build_rectangular,
    build_rectangular_pi,
    gaussian_nodes,
    lorentzian_nodes,
    sigma_from_fwhm,
    tensor_quadrature,
)
from .fidelity import (
    FidelityMap,
    TargetGate,
    channel_avg_fidelity,
    fidelity_map,
    fidelity_slice,
    pointwise_fidelity,
    unitary_avg_fidelity,
)
from .optimize import (
    OptRun,
    OptimizerConfig,
    ParamVector,
    fd_gradient,
    momentum_ascent,
    multistart_ascent,
    objective,
    pulse_from_params,
)
from .sensing import (
    CpmgSensitivityMap,
    DegenerateWorkingPointError,
    ProtocolSpec,
    ReadoutModel,
    SensitivityResult,
    SensorParams,
    SignalTrace,
    cpmg_enhancement_vs_n,
    cpmg_sensitivity_map,
    default_pulse_pair,
    detuning_enhancement,
    ensemble_signal,
    estimate_sensitivity,
    free_evolution,
    sensitivity_vs_detuning,
    simulate_run,
    square_wave_phase,
    suggested_delta_nodes,
    sweep_signal,
)

__version__ = "0.1.0"
