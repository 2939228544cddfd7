"""Energy, Lyapunov functional, dissipation rate, and trajectory diagnostics.

All integrals use the same rectangle rule as the discrete norms, and the
strong-damping dissipation uses the face-difference pairing of the
divergence-form operator, so the discrete balance identities telescope
exactly and the per-interval residual of the balance law is governed by the
time step alone.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _stencils as st
from .grid import Field, NormKind, norm, phase_norm, tail_norm
from .model import Scenario, restoring_integral, stiffness_primitive_value
from .state import State, TrajectoryRecord

__all__ = [
    "EnergyBreakdown",
    "ResidualSeries",
    "difference_quotient_energy",
    "dissipation",
    "energy",
    "gradient_norm",
    "lyapunov",
    "energy_balance_residual",
    "standard_observers",
    "tail_series",
]


@dataclass(frozen=True)
class EnergyBreakdown:
    """Additive parts of the energy and Lyapunov functionals.

    kinetic + bending + foundation is the quadratic energy; the Lyapunov
    total adds the restoring primitive integral, the stiffness primitive at
    the squared gradient norm, and the (negative) load coupling.
    """

    kinetic: float
    bending: float
    foundation: float
    restoring: float = 0.0
    stiffness: float = 0.0
    load: float = 0.0

    @property
    def energy(self) -> float:
        return self.kinetic + self.bending + self.foundation

    @property
    def lyapunov(self) -> float:
        return self.energy + self.restoring + self.stiffness + self.load


def gradient_norm(u: Field) -> float:
    """L2 norm of the centered-difference gradient."""
    vol = u.grid.cell_volume
    total = 0.0
    for comp in st.grad_components(u.data, u.grid.spacing):
        total += vol * float(np.sum(comp * comp))
    return float(np.sqrt(total))


def _check_state(state: State, sc: Scenario) -> None:
    if state.grid != sc.grid:
        raise ValueError("state is not on the scenario grid")


def energy(state: State, sc: Scenario) -> EnergyBreakdown:
    """Quadratic energy parts: kinetic, bending, foundation."""
    _check_state(state, sc)
    vol = sc.grid.cell_volume
    v2 = vol * float(np.sum(state.v.data**2))
    lap = st.laplacian(state.u.data, sc.grid.spacing)
    lap2 = vol * float(np.sum(lap * lap))
    u2 = vol * float(np.sum(state.u.data**2))
    return EnergyBreakdown(
        kinetic=0.5 * v2,
        bending=0.5 * sc.rigidity * lap2,
        foundation=0.5 * sc.foundation * u2,
    )


def lyapunov(state: State, sc: Scenario) -> EnergyBreakdown:
    """Full breakdown including the nonlinear and load parts."""
    quad = energy(state, sc)
    q = gradient_norm(state.u)
    stiff = 0.5 * stiffness_primitive_value(sc.nonlinearity, q * q)
    rest = restoring_integral(sc.nonlinearity, state.u)
    vol = sc.grid.cell_volume
    load = -vol * float(np.sum(sc.load.data * state.u.data))
    return EnergyBreakdown(
        kinetic=quad.kinetic,
        bending=quad.bending,
        foundation=quad.foundation,
        restoring=rest,
        stiffness=stiff,
        load=load,
    )


def dissipation(state: State, sc: Scenario) -> float:
    """Instantaneous dissipation rate: the weak-damping velocity integral
    plus the strong-damping face form. Zero exactly when the weak damping
    kills the velocity and the strong damping kills its differences."""
    _check_state(state, sc)
    vol = sc.grid.cell_volume
    v = state.v.data
    weak_part = vol * float(np.sum(sc.damping.weak.data * v * v))
    spec = sc.implicit_spec()
    strong_part = st.face_quadratic(v, list(spec._strong_faces), sc.grid.spacing, vol)
    return weak_part + strong_part


@dataclass(frozen=True)
class ResidualSeries:
    """Per-interval residual of the discrete balance law and its maximum
    normalized by max(1, initial Lyapunov value)."""

    values: np.ndarray
    normalized_max: float

    def telescoped(self) -> float:
        return float(np.sum(self.values))


def energy_balance_residual(traj: TrajectoryRecord, sc: Scenario) -> ResidualSeries:
    """Residual of the balance law per step:

        rho_n = Lyap(t_{n+1}) - Lyap(t_n) + dt * D(t_{n+1}),

    with the dissipation evaluated at the new time level. Exact balance
    would make every rho_n zero; the semi-implicit scheme leaves a second
    order per-step remainder. Requires stride-1 recording of the
    ``lyapunov`` and ``dissipation`` observers.
    """
    if traj.stride != 1:
        raise ValueError(f"balance residual requires stride-1 recording, got stride {traj.stride}")
    lyap = traj.require("lyapunov")
    diss = traj.require("dissipation")
    rho = lyap[1:] - lyap[:-1] + traj.dt * diss[1:]
    scale = max(1.0, abs(float(lyap[0])))
    nmax = float(np.max(np.abs(rho))) / scale if rho.size else 0.0
    return ResidualSeries(values=rho, normalized_max=nmax)


def tail_series(traj: TrajectoryRecord, radii: Sequence[float]) -> dict[float, np.ndarray]:
    """Cutoff-weighted exterior norms of recorded snapshots, one series per
    radius."""
    if traj.snapshots is None:
        raise ValueError("trajectory has no recorded snapshots; rerun with snapshots enabled")
    out: dict[float, np.ndarray] = {}
    for r in radii:
        out[float(r)] = np.array(
            [tail_norm(s.u, s.v, float(r)) for s in traj.snapshots]
        )
    return out


def difference_quotient_energy(
    traj: TrajectoryRecord, sc: Scenario, lag: float
) -> tuple[np.ndarray, np.ndarray]:
    """Energy of the temporal difference quotient of the displacement.

    For lag sigma the quotient is q(t) = (u(t + sigma) - u(t)) / sigma, and
    the series is the quadratic energy of the pair (q, forward difference of
    q at the same lag). Bounded series indicate one extra order of temporal
    (hence spatial) regularity along the trajectory. The lag must be a
    positive multiple of the snapshot spacing.
    """
    if traj.snapshots is None:
        raise ValueError("difference quotients need recorded snapshots")
    sample_dt = traj.sample_dt
    steps = lag / sample_dt
    j = int(round(steps))
    if j < 1 or abs(steps - j) > 1e-9 * max(1.0, abs(steps)):
        raise ValueError(
            f"lag {lag} is not a positive multiple of the snapshot spacing {sample_dt}"
        )
    snaps = traj.snapshots
    count = len(snaps) - 2 * j
    if count <= 0:
        raise ValueError("trajectory too short for the requested lag")
    sigma = j * sample_dt
    times = np.empty(count)
    values = np.empty(count)
    for i in range(count):
        q0 = (snaps[i + j].u - snaps[i].u) * (1.0 / sigma)
        q1 = (snaps[i + 2 * j].u - snaps[i + j].u) * (1.0 / sigma)
        w = (q1 - q0) * (1.0 / sigma)
        pseudo = State(q0, w, snaps[i].t)
        values[i] = energy(pseudo, sc).energy
        times[i] = snaps[i].t
    return times, values


def standard_observers(radii: Sequence[float] = ()) -> Mapping[str, object]:
    """Default observer set: energy, Lyapunov, dissipation, phase norm,
    component norms, and one tail norm per requested radius."""
    obs = {
        "energy": lambda s, sc: energy(s, sc).energy,
        "lyapunov": lambda s, sc: lyapunov(s, sc).lyapunov,
        "dissipation": dissipation,
        "phase_norm": lambda s, sc: phase_norm(s.u, s.v),
        "u_h2": lambda s, sc: norm(s.u, NormKind.H2),
        "v_l2": lambda s, sc: norm(s.v, NormKind.L2),
    }
    for r in radii:
        obs[f"tail_r{float(r):g}"] = _tail_observer(float(r))
    return obs


def _tail_observer(r: float):
    def observer(s: State, sc: Scenario) -> float:
        return tail_norm(s.u, s.v, r)

    return observer
