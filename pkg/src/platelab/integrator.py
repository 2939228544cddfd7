"""Semi-implicit time stepping for the damped plate model.

One step treats the stiff linear part (bending, foundation, both dampings)
implicitly through a single SPD solve and the nonlinearities (nonlocal
stiffness coefficient, local restoring term, static load) explicitly:

    e^n     = stiffness(||grad u^n||) Lap u^n - restoring(u^n) + load
              - (rigidity Lap^2 + foundation) u^n
    A v^{n+1} = v^n + dt e^n          (A from ImplicitOperatorSpec)
    u^{n+1} = u^n + dt v^{n+1}

The linear part is unconditionally stable for every dt > 0; the nonlocal
coefficient is frozen at the old time level within a step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from . import _stencils as st
from .energetics import standard_observers
from .grid import Field, phase_norm
from .model import Scenario, apply_restoring
from .operators import SolverError, conjugate_gradient
from .state import State, TrajectoryRecord

__all__ = [
    "BlowUpError",
    "DependenceReport",
    "StepReport",
    "continuous_dependence",
    "evolve",
    "step",
]

BLOWUP_LIMIT = 1e8


class BlowUpError(RuntimeError):
    """Explicit-term magnitude exceeded the blow-up guard (or went non-finite)."""

    def __init__(self, message: str, step_index: Optional[int] = None, partial: Optional[TrajectoryRecord] = None):
        super().__init__(message)
        self.step_index = step_index
        self.partial = partial


@dataclass(frozen=True)
class StepReport:
    """Per-step diagnostics: inner-solve effort and explicit-term sizes."""

    cg_iterations: int
    cg_residual: float
    stiffness_term_l2: float
    restoring_term_l2: float
    post_energy: float


def _l2(a: np.ndarray, vol: float) -> float:
    return float(np.sqrt(vol * np.sum(a * a)))


def _explicit_term(u: np.ndarray, sc: Scenario) -> tuple[np.ndarray, float, float]:
    """Explicit forcing e^n and the guarded magnitudes; raw-array core shared
    by step and evolve."""
    g = sc.grid
    h = g.spacing
    vol = g.cell_volume
    grad_sq = 0.0
    for comp in st.grad_components(u, h):
        grad_sq += vol * float(np.sum(comp * comp))
    fval = sc.nonlinearity.stiffness(math.sqrt(grad_sq))
    if not np.isfinite(fval) or abs(fval) > BLOWUP_LIMIT:
        raise BlowUpError(f"nonlocal stiffness coefficient {fval:g} tripped the blow-up guard")
    lap = st.laplacian(u, h)
    restoring = apply_restoring(sc.nonlinearity, Field(g, u)).data
    stiff_l2 = abs(fval) * _l2(lap, vol)
    rest_l2 = _l2(restoring, vol)
    if rest_l2 > BLOWUP_LIMIT or stiff_l2 > BLOWUP_LIMIT:
        raise BlowUpError(
            f"explicit term magnitude tripped the blow-up guard "
            f"(stiffness {stiff_l2:.3e}, restoring {rest_l2:.3e})"
        )
    bilap = st.laplacian(lap, h)
    e = fval * lap - restoring + sc.load.data - (sc.rigidity * bilap + sc.foundation * u)
    if not np.isfinite(e).all():
        raise BlowUpError("explicit term went non-finite")
    return e, stiff_l2, rest_l2


def step(state: State, sc: Scenario) -> tuple[State, StepReport]:
    """Advance one time step; raises BlowUpError or SolverError on failure."""
    if state.grid != sc.grid:
        raise ValueError("state is not on the scenario grid")
    spec = sc.implicit_spec()
    dt = sc.dt
    u, v = state.u.data, state.v.data
    try:
        e, stiff_l2, rest_l2 = _explicit_term(u, sc)
    except OverflowError as exc:
        raise BlowUpError(f"restoring term overflowed: {exc}") from exc
    rhs = v + dt * e
    cap = 10 * sc.grid.size
    v_new, iterations, residual = conjugate_gradient(spec.apply_raw, rhs, sc.cg_tol, cap)
    u_new = u + dt * v_new
    new_state = State(Field(sc.grid, u_new), Field(sc.grid, v_new), state.t + dt)

    vol = sc.grid.cell_volume
    lap_new = st.laplacian(u_new, sc.grid.spacing)
    post_energy = 0.5 * (
        vol * float(np.sum(v_new * v_new))
        + sc.rigidity * vol * float(np.sum(lap_new * lap_new))
        + sc.foundation * vol * float(np.sum(u_new * u_new))
    )
    report = StepReport(
        cg_iterations=iterations,
        cg_residual=residual,
        stiffness_term_l2=stiff_l2,
        restoring_term_l2=rest_l2,
        post_energy=post_energy,
    )
    return new_state, report


def _steps_for_horizon(horizon: float, dt: float) -> int:
    n = int(math.ceil(horizon / dt - 1e-12))
    return max(n, 1)


def evolve(
    state: State,
    sc: Scenario,
    horizon: float,
    observers: Optional[Mapping[str, object]] = None,
    stride: int = 1,
    record_snapshots: bool = False,
) -> TrajectoryRecord:
    """Step repeatedly to t >= t0 + horizon, recording observers every
    ``stride`` steps (and at the start). Deterministic for fixed inputs.

    On a blow-up guard halt the partial record (status
    "halted: blow-up guard") is attached to the raised BlowUpError.
    """
    if not horizon > 0.0:
        raise ValueError(f"horizon must be positive, got {horizon}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if observers is None:
        observers = standard_observers()

    n_steps = _steps_for_horizon(horizon, sc.dt)
    times: list[float] = []
    series: dict[str, list[float]] = {name: [] for name in observers}
    snapshots: list[State] | None = [] if record_snapshots else None

    def record(s: State) -> None:
        times.append(s.t)
        for name, fn in observers.items():
            series[name].append(float(fn(s, sc)))
        if snapshots is not None:
            snapshots.append(s)

    def build(terminal: State, status: str, halted: Optional[int]) -> TrajectoryRecord:
        return TrajectoryRecord(
            times=np.array(times),
            series={k: np.array(v) for k, v in series.items()},
            terminal=terminal,
            dt=sc.dt,
            stride=stride,
            snapshots=snapshots,
            status=status,
            halted_step=halted,
        )

    current = state
    record(current)
    for k in range(1, n_steps + 1):
        try:
            current, _report = step(current, sc)
        except BlowUpError as exc:
            partial = build(current, "halted: blow-up guard", k)
            raise BlowUpError(f"step {k}: {exc}", step_index=k, partial=partial) from exc
        except SolverError as exc:
            raise SolverError(f"step {k}: {exc}") from exc
        if k % stride == 0 or k == n_steps:
            record(current)
    return build(current, "completed", None)


@dataclass(frozen=True)
class DependenceReport:
    """Observed phase-space separation of twin trajectories started at a
    state and its perturbation."""

    times: np.ndarray
    distances: np.ndarray
    initial_distance: float
    sup_distance: float

    @property
    def amplification(self) -> float:
        if self.initial_distance == 0.0:
            return math.nan
        return self.sup_distance / self.initial_distance


def continuous_dependence(
    state: State,
    delta_u: Field,
    delta_v: Field,
    sc: Scenario,
    horizon: float,
    stride: int = 1,
) -> DependenceReport:
    """Run the trajectory and its perturbation in lockstep and report the
    phase-space distance over sampled times (a zero perturbation gives an
    identically zero distance series and an undefined amplification)."""
    initial = phase_norm(delta_u, delta_v)
    n_steps = _steps_for_horizon(horizon, sc.dt)
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    a = state
    b = State(state.u + delta_u, state.v + delta_v, state.t)
    times = [a.t]
    distances = [initial]
    for k in range(1, n_steps + 1):
        a, _ = step(a, sc)
        b, _ = step(b, sc)
        if k % stride == 0 or k == n_steps:
            times.append(a.t)
            distances.append(phase_norm(a.u - b.u, a.v - b.v))
    distances_arr = np.array(distances)
    return DependenceReport(
        times=np.array(times),
        distances=distances_arr,
        initial_distance=initial,
        sup_distance=float(distances_arr.max()),
    )
