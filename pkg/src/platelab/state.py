"""Phase-space states and recorded trajectories."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .grid import Field, Grid, phase_norm

__all__ = ["State", "TrajectoryRecord", "phase_distance"]


@dataclass(frozen=True)
class State:
    """One point of the phase space: displacement u, velocity v, time t."""

    u: Field
    v: Field
    t: float = 0.0

    def __post_init__(self) -> None:
        if self.u.grid != self.v.grid:
            raise ValueError("displacement and velocity live on different grids")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @classmethod
    def zero(cls, grid: Grid, t: float = 0.0) -> "State":
        return cls(Field.zeros(grid), Field.zeros(grid), t)

    def norm(self) -> float:
        """Phase-space norm sqrt(||u||_H2^2 + ||v||_L2^2)."""
        return phase_norm(self.u, self.v)


def phase_distance(a: State, b: State) -> float:
    """Phase-space distance between two states on the same grid."""
    return phase_norm(a.u - b.u, a.v - b.v)


@dataclass
class TrajectoryRecord:
    """Time series of observer values along one trajectory, with optional
    state snapshots and provenance metadata.

    ``series`` maps observer names to arrays aligned with ``times``;
    snapshots (when recorded) are the states at exactly those times.
    """

    times: np.ndarray
    series: dict[str, np.ndarray]
    terminal: State
    dt: float
    stride: int
    snapshots: Optional[list[State]] = None
    status: str = "completed"
    halted_step: Optional[int] = None
    config_hash: str = ""
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size and np.any(np.diff(self.times) <= 0.0):
            raise ValueError("trajectory sample times must be strictly increasing")
        for name, values in self.series.items():
            values = np.asarray(values, dtype=float)
            if values.shape != self.times.shape:
                raise ValueError(f"series {name!r} length does not match sample times")
            self.series[name] = values

    @property
    def sample_dt(self) -> float:
        return self.dt * self.stride

    def require(self, name: str) -> np.ndarray:
        if name not in self.series:
            raise KeyError(f"trajectory did not record the {name!r} observer")
        return self.series[name]
