"""Batch least-squares identification of an object's contact constants from
force-motion samples, with confidence gating, probe-force scheduling, and
operability classification.

The regression model is F = K*dx + D*v + C, i.e. rows [dx, v, 1] against the
measured interface force. Estimates are only trusted once the buffer is well
conditioned, populated, and the fit residual is small.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .world import OperableVector

#: defaults for the confidence gate; all overridable per instance
MIN_SAMPLES = 30
CONDITION_CEILING = 1e6
RESIDUAL_RMS_BOUND = 0.5
#: displacement below which an object is deemed not to have yielded (meters)
EPS_MOVE = 0.002

OPERABLE = "operable"
INOPERABLE = "inoperable"
UNKNOWN = "unknown"


class EstimationError(RuntimeError):
    """No estimate possible; carries the offending condition number."""

    def __init__(self, message: str, condition: float):
        super().__init__(message)
        self.condition = condition


@dataclass(frozen=True)
class PerceptionSample:
    """One time-step force-motion observation at a contact interface.

    dx: interface displacement over the tick (m)
    v:  interface compression rate (m/s)
    F:  measured normal force magnitude (N)
    """

    dx: float
    v: float
    F: float

    def __post_init__(self):
        if not (math.isfinite(self.dx) and math.isfinite(self.v) and math.isfinite(self.F)):
            raise ValueError(f"non-finite perception sample ({self.dx}, {self.v}, {self.F})")


@dataclass(frozen=True)
class ConfidenceReport:
    residual_rms: float
    condition_estimate: float
    sample_count: int
    confident: bool


class RegressorBuffer:
    """Sliding FIFO window of regressor rows ([dx, v, 1], F)."""

    def __init__(self, capacity: int = 256):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._rows = deque(maxlen=capacity)

    def __len__(self):
        return len(self._rows)

    @property
    def rows(self):
        return list(self._rows)

    def matrices(self):
        """(H, Y) as numpy arrays; H has columns [dx, v, 1]."""
        n = len(self._rows)
        H = np.empty((n, 3))
        Y = np.empty(n)
        for i, (reg, y) in enumerate(self._rows):
            H[i] = reg
            Y[i] = y
        return H, Y


def accumulate(buf: RegressorBuffer, s: PerceptionSample) -> RegressorBuffer:
    """Append one sample, evicting the oldest at capacity."""
    buf._rows.append(((s.dx, s.v, 1.0), s.F))
    return buf


def estimate_theta(
    buf: RegressorBuffer,
    min_samples: int = MIN_SAMPLES,
    condition_ceiling: float = CONDITION_CEILING,
    residual_bound: float = RESIDUAL_RMS_BOUND,
) -> tuple[OperableVector, ConfidenceReport]:
    """Least-squares fit of [K, D, C] minimizing sum (F - psi^T theta)^2.

    Raises EstimationError when fewer than 3 rows are buffered or the
    regressor matrix is numerically rank deficient, signalling the probe
    schedule to diversify excitation.
    """
    n = len(buf)
    if n < 3:
        raise EstimationError(f"need >= 3 samples, have {n}", condition=math.inf)
    H, Y = buf.matrices()
    sv = np.linalg.svd(H, compute_uv=False)
    cond = math.inf if sv[-1] == 0.0 else float(sv[0] / sv[-1])
    if cond > condition_ceiling:
        raise EstimationError(
            f"regressor matrix ill-conditioned (cond={cond:.3g})", condition=cond
        )
    theta, *_ = np.linalg.lstsq(H, Y, rcond=None)
    residual = Y - H @ theta
    rms = float(np.sqrt(np.mean(residual * residual)))
    confident = n >= min_samples and cond <= condition_ceiling and rms <= residual_bound
    report = ConfidenceReport(
        residual_rms=rms,
        condition_estimate=cond,
        sample_count=n,
        confident=confident,
    )
    return OperableVector(float(theta[0]), float(theta[1]), float(theta[2])), report


@dataclass(frozen=True)
class ProbeProfile:
    """Ramp-and-hold force schedule: 0 -> F_max ramp, then plateaus at
    0.5*F_max and F_max. The level changes excite both displacement and
    velocity regressor columns."""

    ramp_time: float = 1.0
    hold_time: float = 1.0
    tick: float = 0.02

    @property
    def duration(self) -> float:
        return self.ramp_time + 2.0 * self.hold_time

    @property
    def total_steps(self) -> int:
        return int(round(self.duration / self.tick))


def probe_schedule(step: int, F_max: float, profile: ProbeProfile = ProbeProfile()) -> float:
    """Commanded probe force magnitude at a given planner step."""
    if not F_max > 0:
        raise ValueError(f"F_max must be > 0, got {F_max}")
    if step < 0:
        raise ValueError("step must be >= 0")
    t = step * profile.tick
    if t < profile.ramp_time:
        return F_max * t / profile.ramp_time
    if t < profile.ramp_time + profile.hold_time:
        return 0.5 * F_max
    return F_max


def classify_operability(
    theta,
    report: ConfidenceReport | None,
    displacement_seen: float,
    F_max: float,
    eps_move: float = EPS_MOVE,
) -> str:
    """Classify an object once its estimate is trusted.

    Unknown until the report is confident; thereafter inoperable iff the
    object never yielded more than eps_move under the full probe force.
    """
    if report is None or not report.confident:
        return UNKNOWN
    if displacement_seen < eps_move:
        return INOPERABLE
    return OPERABLE
