"""Explicit time stepping for the reduced metric flows.

In the fixed x-chart both flows close as coupled systems for (f, g).
With w = g_x/f:

    torus:   f_t =  (d/dx w)^2 / (f g^2)
             g_t =  (w^2 + eps) (d/dx w) / (f g^2)
    sphere:  f_t = -(d/dx w)^2 / (f g^2)
             g_t = -(w^2 - 1) (d/dx w) / (f g^2)

In arc length these are g_t = (1/g^2)(g_s^2 + eps) g_ss for the torus
and g_t = (1/g^2)(1 - g_s^2) g_ss for the sphere, so the diffusion
coefficient is (w^2 + eps)/g^2 resp. (1 - w^2)/g^2. The torus equation
degenerates where g_s vanishes; eps > 0 restores uniform parabolicity
and eps = 0 is still steppable explicitly because the right-hand side
stays continuous. The sphere coefficient is uniformly positive under
the preserved slope bound sup|g_s| <= 1/4, so eps is ignored there.

Evolving (f, g) jointly in the fixed chart keeps the bookkeeping of the
drifting arc-length parametrisation automatic: along any run,
d/dt log f = +/- (1/g^2) g_ss^2 (+ torus, - sphere) holds node-wise up
to discretisation error.

Steps are classical 4-stage Runge-Kutta under a safety-scaled parabolic
stability cap. Runs are strictly sequential; distinct runs share no
state and may execute in parallel.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .claims import ClaimTolerances, SLOPE_BOUND
from .diagnostics import DiagnosticsRecord, functionals
from .geometry import BundleKind, MetricProfile, NumericOverflowError, _ddx, _first_nonfinite, s_derivative

__all__ = [
    "FlowConfig",
    "RunSummary",
    "SlopeConditionError",
    "StationaryFlowWarning",
    "StepFailureError",
    "validate_initial",
    "rhs",
    "stable_dt",
    "step",
    "evolve",
]

MAX_STEP_RETRIES = 10

RecordSink = Callable[[DiagnosticsRecord, MetricProfile], None]


class StationaryFlowWarning(UserWarning):
    """The initial data is a fixed point of the flow."""


class SlopeConditionError(ValueError):
    """Initial slope condition for the sphere family is violated."""

    def __init__(self, sup_gs: float, bound: float):
        self.sup_gs = sup_gs
        self.bound = bound
        super().__init__(
            f"sphere runs require sup|g_s| <= {bound} initially, got {sup_gs!r}"
        )


class StepFailureError(RuntimeError):
    """A time step lost positivity of f or g."""

    def __init__(self, t: float, dt: float, detail: str = "positivity lost"):
        self.t = t
        self.dt = dt
        super().__init__(f"step of dt={dt!r} from t={t!r} failed: {detail}")


@dataclass(frozen=True)
class FlowConfig:
    """Run parameters for `evolve`.

    record_every defaults to 0.01 * t_end. t_end is an absolute flow
    time, so resumed runs evolve from the profile's stored t to t_end.
    """

    kind: BundleKind
    t_end: float
    epsilon: float = 0.0
    safety: float = 0.25
    dt_max: float = 1.0
    record_every: float | None = None
    tolerances: ClaimTolerances = field(default_factory=ClaimTolerances)

    def __post_init__(self):
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon!r}")
        if not 0.0 < self.safety <= 1.0:
            raise ValueError(f"safety must be in (0, 1], got {self.safety!r}")
        if self.dt_max <= 0.0:
            raise ValueError(f"dt_max must be positive, got {self.dt_max!r}")
        if self.t_end <= 0.0:
            raise ValueError(f"t_end must be positive, got {self.t_end!r}")
        if self.record_every is None:
            object.__setattr__(self, "record_every", 0.01 * self.t_end)
        if self.record_every <= 0.0:
            raise ValueError(f"record_every must be positive, got {self.record_every!r}")


@dataclass
class RunSummary:
    steps: int = 0
    retries: int = 0
    dt_min: float = math.inf
    dt_max: float = 0.0
    records: int = 0
    t_final: float = math.nan


def validate_initial(profile: MetricProfile, kind: BundleKind) -> MetricProfile:
    """Check the initial profile against the family's standing hypotheses.

    Sphere runs are rejected unless sup|g_s| <= 1/4. Torus runs always
    pass, but constant g is flagged with a StationaryFlowWarning since
    the flow then never moves.
    """
    w = s_derivative(profile, profile.g)
    sup = float(np.max(np.abs(w)))
    if kind is BundleKind.SPHERE and sup > SLOPE_BOUND:
        raise SlopeConditionError(sup, SLOPE_BOUND)
    if kind is BundleKind.TORUS and float(np.ptp(profile.g)) == 0.0:
        warnings.warn(
            "initial g is constant: the torus flow is stationary",
            StationaryFlowWarning,
            stacklevel=2,
        )
    return profile


def _rhs_arrays(
    f: np.ndarray,
    g: np.ndarray,
    dx: float,
    kind: BundleKind,
    epsilon: float,
    t: float,
) -> tuple[np.ndarray, np.ndarray]:
    # overflow is detected below and reported with the node; silence numpy
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        w = _ddx(g, dx) / f
        dxw = _ddx(w, dx)
        fg2 = f * g * g
        if kind is BundleKind.TORUS:
            df = dxw * dxw / fg2
            dg = (w * w + epsilon) * dxw / fg2
        else:
            df = -(dxw * dxw) / fg2
            dg = -((w * w - 1.0) * dxw) / fg2
    for name, arr in (("df/dt", df), ("dg/dt", dg)):
        node = _first_nonfinite(arr)
        if node is not None:
            raise NumericOverflowError(name, node, t)
    return df, dg


def rhs(
    profile: MetricProfile, kind: BundleKind, epsilon: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives (df/dt, dg/dt) of the reduced system per node.

    epsilon regularises the torus diffusion coefficient (w^2 + eps) and
    is ignored for the sphere family.
    """
    return _rhs_arrays(profile.f, profile.g, profile.dx, kind, epsilon, profile.t)


def stable_dt(
    profile: MetricProfile,
    kind: BundleKind,
    epsilon: float = 0.0,
    safety: float = 0.25,
    dt_max: float = 1.0,
) -> float:
    """Diffusion-limited explicit step size.

    dt = min(dt_max, safety * min(f dx)^2 / D_max) with D_max the
    largest diffusion coefficient over the grid; dt_max when the
    coefficient degenerates to zero everywhere.
    """
    w = s_derivative(profile, profile.g)
    g2 = profile.g * profile.g
    if kind is BundleKind.TORUS:
        coeff = (w * w + epsilon) / g2
    else:
        coeff = np.maximum(1.0 - w * w, 0.0) / g2
    d_max = float(np.max(coeff))
    if d_max == 0.0:
        return dt_max
    ds_min = float(np.min(profile.f)) * profile.dx
    return min(dt_max, safety * ds_min * ds_min / d_max)


def step(
    profile: MetricProfile, kind: BundleKind, epsilon: float, dt: float
) -> MetricProfile:
    """Advance (f, g) together by one classical Runge-Kutta step.

    Raises StepFailureError if f or g loses positivity at any stage or
    in the result; the caller may retry with a smaller dt.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    f0, g0 = profile.f, profile.g
    dx, t = profile.dx, profile.t

    def stage(f, g):
        if np.any(f <= 0.0) or np.any(g <= 0.0):
            raise StepFailureError(t, dt, "positivity lost at an internal stage")
        return _rhs_arrays(f, g, dx, kind, epsilon, t)

    k1f, k1g = stage(f0, g0)
    k2f, k2g = stage(f0 + 0.5 * dt * k1f, g0 + 0.5 * dt * k1g)
    k3f, k3g = stage(f0 + 0.5 * dt * k2f, g0 + 0.5 * dt * k2g)
    k4f, k4g = stage(f0 + dt * k3f, g0 + dt * k3g)
    f1 = f0 + (dt / 6.0) * (k1f + 2.0 * k2f + 2.0 * k3f + k4f)
    g1 = g0 + (dt / 6.0) * (k1g + 2.0 * k2g + 2.0 * k3g + k4g)
    if np.any(f1 <= 0.0) or np.any(g1 <= 0.0):
        raise StepFailureError(t, dt)
    return MetricProfile(profile.n, profile.period, t + dt, f1, g1)


def _next_record_time(t: float, every: float) -> float:
    # boundary times are global multiples of `every`, so a resumed run
    # lands on exactly the grid of the original run
    m = math.floor(t / every + 1e-9) + 1
    return m * every


def evolve(
    profile: MetricProfile,
    config: FlowConfig,
    sink: RecordSink | None = None,
    stop_when: Callable[[DiagnosticsRecord], bool] | None = None,
) -> tuple[MetricProfile, RunSummary]:
    """Run the flow from the profile's time up to config.t_end.

    The sink is invoked with (record, profile) at the start time, at
    every global multiple of record_every, and at t_end; clamping steps
    to those boundaries makes the record stream deterministic and
    bit-reproducible across resumes. stop_when, if given, is evaluated
    on each record and ends the run early at that record's time.

    Steps that lose positivity are retried with halved dt up to 10
    times; the final failure propagates with the last good time in the
    message.
    """
    validate_initial(profile, config.kind)
    summary = RunSummary()
    t_end = config.t_end
    eps_t = 1e-12 * max(1.0, abs(t_end))

    def emit(prof: MetricProfile) -> DiagnosticsRecord:
        rec = functionals(prof, config.kind)
        summary.records += 1
        if sink is not None:
            sink(rec, prof)
        return rec

    rec = emit(profile)
    stopped = stop_when is not None and stop_when(rec)

    while not stopped and t_end - profile.t > eps_t:
        target = min(_next_record_time(profile.t, config.record_every), t_end)
        gap = target - profile.t
        base_dt = stable_dt(
            profile, config.kind, config.epsilon, config.safety, config.dt_max
        )
        lands = base_dt >= gap
        dt = gap if lands else base_dt
        for attempt in range(MAX_STEP_RETRIES + 1):
            try:
                advanced = step(profile, config.kind, config.epsilon, dt)
                break
            except StepFailureError:
                summary.retries += 1
                if attempt == MAX_STEP_RETRIES:
                    raise StepFailureError(
                        profile.t, dt,
                        f"still failing after {MAX_STEP_RETRIES} halvings; "
                        f"last good t={profile.t!r}",
                    ) from None
                dt *= 0.5
                lands = False
        summary.steps += 1
        summary.dt_min = min(summary.dt_min, dt)
        summary.dt_max = max(summary.dt_max, dt)
        if lands:
            # assign the boundary time exactly so record times stay on the
            # global grid regardless of floating-point accumulation
            advanced = replace(advanced, t=target)
        profile = advanced
        if lands:
            rec = emit(profile)
            stopped = stop_when is not None and stop_when(rec)

    summary.t_final = profile.t
    return profile, summary
