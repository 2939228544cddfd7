"""Matrix-free centered finite-difference operators and the implicit-step solver.

All stencils are periodic and translation invariant. The bilaplacian is the
exact composition of the Laplacian with itself, so <Lap^2 u, u> = ||Lap u||^2
holds to machine precision and the discrete energy identity telescopes
without quadrature mismatch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _stencils as st
from .grid import Field, Grid

__all__ = [
    "ImplicitOperatorSpec",
    "SolveInfo",
    "SolverError",
    "apply_implicit",
    "bilaplacian",
    "div_coeff_grad",
    "gradient",
    "laplacian",
    "solve_implicit",
    "solve_spd",
]


class SolverError(RuntimeError):
    """Iterative solve failed to reach tolerance within the iteration cap."""


def gradient(u: Field) -> tuple[Field, ...]:
    """Centered difference per axis: (u_{i+1} - u_{i-1}) / (2h), periodic."""
    h = u.grid.spacing
    return tuple(Field(u.grid, c) for c in st.grad_components(u.data, h))


def laplacian(u: Field) -> Field:
    """3-point (d=1) / 5-point (d=2) periodic Laplacian."""
    return Field(u.grid, st.laplacian(u.data, u.grid.spacing))


def bilaplacian(u: Field) -> Field:
    """Laplacian applied twice; exact composition, never a wide stencil."""
    h = u.grid.spacing
    return Field(u.grid, st.laplacian(st.laplacian(u.data, h), h))


def div_coeff_grad(u: Field, coeff: Field) -> Field:
    """Divergence-form operator div(c grad u) with arithmetic face averaging
    of the nonnegative coefficient. Symmetric and negative semidefinite."""
    if coeff.grid != u.grid:
        raise ValueError("coefficient and field live on different grids")
    cmin = float(coeff.data.min())
    if cmin < 0.0:
        raise ValueError(f"divergence-form coefficient must be nonnegative, min sample {cmin}")
    h = u.grid.spacing
    faces = [st.face_coefficients(coeff.data, axis) for axis in range(u.grid.dimension)]
    return Field(u.grid, st.div_coeff_grad(u.data, faces, h))


@dataclass(frozen=True)
class ImplicitOperatorSpec:
    """The symmetric positive definite operator of the implicit step:

        A w = w + dt * weak * w - dt * div(strong grad w)
                + dt^2 * (rigidity * Lap^2 w + foundation * w)

    with weak/strong the damping coefficient fields (nonnegative) and
    rigidity/foundation the bending and linear restoring coefficients.
    """

    dt: float
    rigidity: float
    foundation: float
    weak: Field
    strong: Field
    grid: Grid

    def __post_init__(self) -> None:
        if not self.dt > 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.rigidity > 0.0:
            raise ValueError(f"rigidity must be positive, got {self.rigidity}")
        if not self.foundation > 0.0:
            raise ValueError(f"foundation must be positive, got {self.foundation}")
        for name, field in (("weak", self.weak), ("strong", self.strong)):
            if field.grid != self.grid:
                raise ValueError(f"{name} damping field is not on the operator grid")
            if float(field.data.min()) < 0.0:
                raise ValueError(f"{name} damping field has negative samples")
        faces = tuple(
            st.face_coefficients(self.strong.data, axis) for axis in range(self.grid.dimension)
        )
        object.__setattr__(self, "_strong_faces", faces)

    def apply_raw(self, a: np.ndarray) -> np.ndarray:
        h = self.grid.spacing
        lap = st.laplacian(a, h)
        bilap = st.laplacian(lap, h)
        div = st.div_coeff_grad(a, list(self._strong_faces), h)
        return (
            a
            + self.dt * (self.weak.data * a)
            - self.dt * div
            + (self.dt * self.dt) * (self.rigidity * bilap + self.foundation * a)
        )


def apply_implicit(spec: ImplicitOperatorSpec, w: Field) -> Field:
    if w.grid != spec.grid:
        raise ValueError("field is not on the operator grid")
    return Field(spec.grid, spec.apply_raw(w.data))


@dataclass(frozen=True)
class SolveInfo:
    iterations: int
    residual: float
    relative_residual: float


def _euclid(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(a * a)))


def conjugate_gradient(apply_raw, b: np.ndarray, tol: float, cap: int):
    """Plain CG with zero initial guess; stops when the true residual
    ||A x - b|| <= tol * ||b||. Deterministic for identical inputs."""
    bnorm = _euclid(b)
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return x, 0, 0.0
    target = tol * bnorm
    r = b.copy()
    p = r.copy()
    rr = float(np.sum(r * r))
    iterations = 0
    while iterations < cap:
        ap = apply_raw(p)
        alpha = rr / float(np.sum(p * ap))
        x += alpha * p
        r -= alpha * ap
        iterations += 1
        rr_new = float(np.sum(r * r))
        if np.sqrt(rr_new) <= target:
            true_r = b - apply_raw(x)
            true_norm = _euclid(true_r)
            if true_norm <= target:
                return x, iterations, true_norm
            r = true_r
            rr_new = float(np.sum(r * r))
            p = r.copy()
            rr = rr_new
            continue
        beta = rr_new / rr
        p = r + beta * p
        rr = rr_new
    raise SolverError(
        f"conjugate gradient hit the iteration cap ({cap}) with relative residual "
        f"{_euclid(b - apply_raw(x)) / bnorm:.3e}; the implicit system looks "
        "ill-conditioned (check dt and the coefficient fields)"
    )


def solve_implicit(spec: ImplicitOperatorSpec, rhs: Field, tol: float = 1e-10) -> tuple[Field, SolveInfo]:
    """Solve A w = rhs by CG to relative residual tol; also returns solver info."""
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tolerance must lie in (0, 1), got {tol}")
    if rhs.grid != spec.grid:
        raise ValueError("right-hand side is not on the operator grid")
    cap = 10 * spec.grid.size
    x, iterations, residual = conjugate_gradient(spec.apply_raw, rhs.data, tol, cap)
    bnorm = _euclid(rhs.data)
    rel = residual / bnorm if bnorm > 0.0 else 0.0
    return Field(spec.grid, x), SolveInfo(iterations, residual, rel)


def solve_spd(spec: ImplicitOperatorSpec, rhs: Field, tol: float = 1e-10) -> Field:
    """Solve A w = rhs; see solve_implicit for the solver contract."""
    return solve_implicit(spec, rhs, tol)[0]
