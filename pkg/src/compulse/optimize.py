"""Momentum gradient ascent over composite-pulse parameters.

The objective is the ensemble-averaged gate fidelity of the composite pi
pulse built from the parameter vector.  Gradients are central finite
differences (2 to 7 parameters make the cost trivial), the update is the
classic momentum rule v <- mu v + eta g, p <- p + v.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fidelity import TargetGate, channel_avg_fidelity
from .pulses import FIVE_PIECE_ANGLES, ErrorModel, PulseSequence, build_composite_pi

PHASES_ONLY = "phases_only"
PHASES_AND_ANGLES = "phases_and_angles"

#: consecutive iterations the objective must sit within tol of the best
#: value before the run counts as converged
STALL_PATIENCE = 20


@dataclass(frozen=True)
class ParamVector:
    """Free parameters of the composite pulse.

    phases_only: (dphi21, dphi31).  phases_and_angles: the two phase
    offsets followed by the five segment angles of the 5-piece block.
    Phases are unconstrained during ascent and wrapped to [0, 2pi) only
    for reporting; angles are kept >= 0 by projection.
    """

    values: tuple[float, ...]
    layout: str = PHASES_ONLY

    def __post_init__(self):
        n = {PHASES_ONLY: 2, PHASES_AND_ANGLES: 7}.get(self.layout)
        if n is None:
            raise ValueError(f"unknown layout {self.layout!r}")
        if len(self.values) != n:
            raise ValueError(f"layout {self.layout} needs {n} values, got {len(self.values)}")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    def projected(self) -> "ParamVector":
        """Clip segment angles at zero; phases pass through unchanged."""
        if self.layout == PHASES_ONLY:
            return self
        v = list(self.values)
        v[2:] = [max(0.0, a) for a in v[2:]]
        return ParamVector(tuple(v), self.layout)

    def reported(self) -> "ParamVector":
        """Phases wrapped modulo 2pi for reporting."""
        v = list(self.values)
        v[0] = v[0] % (2 * math.pi)
        v[1] = v[1] % (2 * math.pi)
        return ParamVector(tuple(v), self.layout)


def pulse_from_params(params: ParamVector, phi1: float = 0.0) -> PulseSequence:
    """Composite pi pulse encoded by a parameter vector."""
    if params.layout == PHASES_ONLY:
        return build_composite_pi(params.values[0], params.values[1], phi1)
    dphi21, dphi31, *angles = params.values
    return build_composite_pi(dphi21, dphi31, phi1, tuple(angles))


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.05
    momentum: float = 0.9
    fd_step: float = 1e-5
    max_iters: int = 300
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.fd_step <= 0:
            raise ValueError("fd_step must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be > 0")


@dataclass
class OptRun:
    """Trajectory and best point of one ascent run."""

    trajectory: list[tuple[int, float]]
    best_params: ParamVector
    best_objective: float
    failed: bool = False

    def to_json_dict(self) -> dict:
        return {
            "trajectory": [{"iter": i, "objective": j} for i, j in self.trajectory],
            "best": {
                "params": list(self.best_params.reported().values),
                "layout": self.best_params.layout,
                "objective": self.best_objective,
            },
            "failed": self.failed,
        }


def objective(
    params: ParamVector, model: ErrorModel, target: TargetGate
) -> float:
    """Ensemble-averaged fidelity of the composite built from ``params``."""
    return channel_avg_fidelity(pulse_from_params(params), target, model.quadrature())


def _fd_gradient(fn: Callable[[np.ndarray], float], p: np.ndarray, h: float) -> np.ndarray:
    g = np.empty_like(p)
    for i in range(p.size):
        step = np.zeros_like(p)
        step[i] = h
        g[i] = (fn(p + step) - fn(p - step)) / (2.0 * h)
    return g


def fd_gradient(
    params: ParamVector, model: ErrorModel, target: TargetGate, h: float
) -> np.ndarray:
    """Central-difference gradient of the fidelity objective."""
    if h <= 0:
        raise ValueError("finite-difference step must be > 0")
    quad = model.quadrature()

    def fn(v: np.ndarray) -> float:
        pv = ParamVector(tuple(v), params.layout)
        return channel_avg_fidelity(pulse_from_params(pv), target, quad)

    return _fd_gradient(fn, np.array(params.values, dtype=float), h)


def ascend(
    fn: Callable[[np.ndarray], float],
    init: ParamVector,
    cfg: OptimizerConfig,
) -> OptRun:
    """Momentum ascent of an arbitrary objective over a parameter vector.

    Stops at max_iters, or earlier once the objective has stayed within
    cfg.tol of the best value for STALL_PATIENCE consecutive iterations (a
    converged plateau; momentum overshoot excursions keep the run alive).
    A non-finite objective marks the run failed; the trajectory up to that
    point is kept.
    """
    p = np.array(init.projected().values, dtype=float)
    v = np.zeros_like(p)
    j = fn(p)
    trajectory = [(0, float(j))]
    if not math.isfinite(j):
        pv = ParamVector(tuple(p), init.layout)
        return OptRun(trajectory, pv, float("nan"), failed=True)
    best_p, best_j = p.copy(), j
    stall = 0
    for it in range(1, cfg.max_iters + 1):
        g = _fd_gradient(fn, p, cfg.fd_step)
        v = cfg.momentum * v + cfg.learning_rate * g
        p = p + v
        pv = ParamVector(tuple(p), init.layout).projected()
        p = np.array(pv.values)
        j = fn(p)
        trajectory.append((it, float(j)))
        if not math.isfinite(j):
            return OptRun(
                trajectory, ParamVector(tuple(best_p), init.layout), best_j, failed=True
            )
        if j > best_j:
            best_p, best_j = p.copy(), j
        # converged-plateau detection: the iterate must track the best
        # value to within tol for a stretch; momentum overshoot excursions
        # reset the counter
        if abs(j - best_j) < cfg.tol:
            stall += 1
        else:
            stall = 0
        if stall >= STALL_PATIENCE:
            break
    return OptRun(trajectory, ParamVector(tuple(best_p), init.layout), best_j)


def momentum_ascent(
    init: ParamVector,
    model: ErrorModel,
    target: TargetGate,
    cfg: OptimizerConfig,
) -> OptRun:
    """Maximize the ensemble-averaged fidelity from a given start point."""
    quad = model.quadrature()

    def fn(v: np.ndarray) -> float:
        pv = ParamVector(tuple(v), init.layout)
        return channel_avg_fidelity(pulse_from_params(pv), target, quad)

    return ascend(fn, init, cfg)


def random_inits(
    n_starts: int, layout: str, seed: int
) -> list[ParamVector]:
    """Deterministic multi-start initial points (phases uniform in [0, 2pi))."""
    rng = np.random.default_rng(seed)
    inits = []
    for _ in range(n_starts):
        dphi = rng.uniform(0.0, 2.0 * math.pi, size=2)
        if layout == PHASES_ONLY:
            inits.append(ParamVector(tuple(dphi), layout))
        else:
            inits.append(ParamVector(tuple(dphi) + FIVE_PIECE_ANGLES, layout))
    return inits


def multistart_ascent(
    model: ErrorModel,
    target: TargetGate,
    cfg: OptimizerConfig,
    n_starts: int,
    layout: str = PHASES_ONLY,
) -> list[OptRun]:
    """Independent momentum-ascent runs from seeded random initial points."""
    return [
        momentum_ascent(init, model, target, cfg)
        for init in random_inits(n_starts, layout, cfg.seed)
    ]
