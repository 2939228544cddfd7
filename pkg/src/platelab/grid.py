"""Uniform periodic grids, sampled fields, discrete Sobolev norms, radial cutoffs.

The domain is the periodic box [-half_width, half_width)^d with d in {1, 2}.
Everything downstream (damping profiles, loads, states, tail diagnostics)
lives on these grids as plain float64 sample arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _stencils as st

__all__ = [
    "Grid",
    "Field",
    "NormKind",
    "make_grid",
    "norm",
    "phase_norm",
    "radial_cutoff",
    "tail_norm",
]


class NormKind(enum.Enum):
    """Discrete Sobolev norms; H2/H3 use the stencil Laplacian as the
    second-derivative proxy (not all mixed partials)."""

    L2 = "l2"
    H1 = "h1"
    H2 = "h2"
    H3 = "h3"


@dataclass(frozen=True)
class Grid:
    """Uniform periodic box [-half_width, half_width)^dimension.

    points is the per-axis sample count N (even, >= 8); spacing is 2L/N and
    x(i) = -half_width + i * spacing. Index i and i + N address the same
    sample (periodic wrap).
    """

    dimension: int
    half_width: float
    points: int

    def __post_init__(self) -> None:
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.dimension}")
        if not (self.half_width > 0.0 and np.isfinite(self.half_width)):
            raise ValueError(f"half_width must be positive and finite, got {self.half_width}")
        if self.points < 8:
            raise ValueError(f"points must be >= 8, got {self.points}")
        if self.points % 2 != 0:
            raise ValueError(f"points must be even, got {self.points}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.dimension

    @property
    def size(self) -> int:
        return self.points**self.dimension

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dimension

    def axis_coordinates(self) -> np.ndarray:
        """Per-axis sample coordinates x(i) = -L + i h."""
        return -self.half_width + self.spacing * np.arange(self.points)

    def coordinate_arrays(self) -> list[np.ndarray]:
        """One array of shape ``self.shape`` per axis."""
        x = self.axis_coordinates()
        if self.dimension == 1:
            return [x]
        return list(np.meshgrid(x, x, indexing="ij"))

    def radius(self) -> np.ndarray:
        """Euclidean distance to the box center, minimal-image wrapped."""
        width = 2.0 * self.half_width
        total = np.zeros(self.shape)
        for axis_c in self.coordinate_arrays():
            delta = (axis_c + self.half_width) % width - self.half_width
            total += delta * delta
        return np.sqrt(total)


def make_grid(dimension: int, half_width: float, points: int) -> Grid:
    """Validated grid constructor (spacing * points == 2 * half_width)."""
    return Grid(dimension=dimension, half_width=float(half_width), points=int(points))


@dataclass(frozen=True)
class Field:
    """Real scalar samples on a grid, row-major axis order."""

    grid: Grid
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        if data.shape != self.grid.shape:
            raise ValueError(f"sample shape {data.shape} does not match grid shape {self.grid.shape}")
        object.__setattr__(self, "data", data)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def full(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable[..., np.ndarray]) -> "Field":
        """Sample fn(x) (d=1) or fn(x, y) (d=2) on the grid."""
        return cls(grid, np.asarray(fn(*grid.coordinate_arrays()), dtype=float))

    def copy(self) -> "Field":
        return Field(self.grid, self.data.copy())

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.data).all())

    def _match(self, other: "Field") -> None:
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")

    def __add__(self, other: "Field") -> "Field":
        self._match(other)
        return Field(self.grid, self.data + other.data)

    def __sub__(self, other: "Field") -> "Field":
        self._match(other)
        return Field(self.grid, self.data - other.data)

    def __mul__(self, other):
        if isinstance(other, Field):
            self._match(other)
            return Field(self.grid, self.data * other.data)
        return Field(self.grid, self.data * float(other))

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.data)


def _as_kind(kind) -> NormKind:
    if isinstance(kind, NormKind):
        return kind
    return NormKind(str(kind).lower())


def _l2_sq(a: np.ndarray, cell_volume: float) -> float:
    return cell_volume * float(np.sum(a * a))


def norm(u: Field, kind=NormKind.L2) -> float:
    """Discrete norm: L2 is the rectangle rule; H1/H2/H3 add centered-gradient,
    Laplacian and gradient-of-Laplacian terms respectively.

    Raises on non-finite samples.
    """
    if not u.is_finite():
        raise ValueError("norm of a field with non-finite samples")
    kind = _as_kind(kind)
    h = u.grid.spacing
    vol = u.grid.cell_volume
    total = _l2_sq(u.data, vol)
    if kind is NormKind.L2:
        return float(np.sqrt(total))
    for comp in st.grad_components(u.data, h):
        total += _l2_sq(comp, vol)
    if kind is NormKind.H1:
        return float(np.sqrt(total))
    lap = st.laplacian(u.data, h)
    total += _l2_sq(lap, vol)
    if kind is NormKind.H2:
        return float(np.sqrt(total))
    for comp in st.grad_components(lap, h):
        total += _l2_sq(comp, vol)
    return float(np.sqrt(total))


def phase_norm(u: Field, v: Field) -> float:
    """Norm of a phase-space point: sqrt(||u||_H2^2 + ||v||_L2^2)."""
    return float(np.sqrt(norm(u, NormKind.H2) ** 2 + norm(v, NormKind.L2) ** 2))


def _smoothstep(s: np.ndarray) -> np.ndarray:
    """Quintic smoothstep 6 s^5 - 15 s^4 + 10 s^3 on [0, 1]."""
    return s * s * s * (s * (6.0 * s - 15.0) + 10.0)


def radial_cutoff(grid: Grid, r: float) -> Field:
    """Radial cutoff: 0 for |x| <= r, 1 for |x| >= 2r, smooth monotone
    transition on the annulus. |x| is the minimal-image distance to the
    box center.

    Requires 0 < r and 2r < half_width so the transition band fits.
    """
    r = float(r)
    if not r > 0.0:
        raise ValueError(f"cutoff radius must be positive, got {r}")
    if not 2.0 * r < grid.half_width:
        raise ValueError(f"cutoff needs 2r < half_width, got r={r}, half_width={grid.half_width}")
    s = np.clip(grid.radius() / r - 1.0, 0.0, 1.0)
    return Field(grid, _smoothstep(s))


def tail_norm(u: Field, v: Field, r: float) -> float:
    """Cutoff-weighted exterior norm sqrt(||w u||_H2^2 + ||w v||_L2^2) with
    w the radial cutoff at r: a smooth surrogate for the norm restricted to
    the complement of the ball of radius r."""
    w = radial_cutoff(u.grid, r)
    return float(np.sqrt(norm(w * u, NormKind.H2) ** 2 + norm(w * v, NormKind.L2) ** 2))
