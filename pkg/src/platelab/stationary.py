"""Stationary states of the plate model and distances to the stationary set.

A stationary state solves

    rigidity Lap^2 p + foundation p - stiffness(||grad p||) Lap p
        + restoring(p) = load.

The solver is a damped Newton iteration. The Jacobian is the symmetric
operator (bending + foundation - frozen-stiffness Laplacian + restoring
derivative) plus a rank-one term from differentiating the nonlocal
stiffness coefficient; when that term is absent and the restoring
derivative is nonnegative the inner solve is plain CG, otherwise CGLS on
the normal equations (which tracks the true residual).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import _stencils as st
from .energetics import gradient_norm
from .grid import Field, NormKind, norm
from .model import Scenario
from .state import State

__all__ = [
    "StationaryResult",
    "distance_to_stationary_set",
    "search_stationary",
    "solve_stationary",
    "stationary_residual",
]

_GRADIENT_FLOOR = 1e-12


@dataclass(frozen=True)
class StationaryResult:
    """Outcome of one Newton solve; converged implies the residual bound."""

    phi: Field
    residual_norm: float
    iterations: int
    converged: bool
    guess_tag: str
    message: str = ""


def stationary_residual(phi: Field, sc: Scenario) -> Field:
    """Residual field of the stationary equation at phi."""
    if phi.grid != sc.grid:
        raise ValueError("field is not on the scenario grid")
    h = sc.grid.spacing
    a = phi.data
    lap = st.laplacian(a, h)
    bilap = st.laplacian(lap, h)
    q = gradient_norm(phi)
    fval = sc.nonlinearity.stiffness(q)
    gval = np.asarray(sc.nonlinearity.restoring(a), dtype=float)
    r = sc.rigidity * bilap + sc.foundation * a - fval * lap + gval - sc.load.data
    return Field(sc.grid, r)


class _Jacobian:
    """Matrix-free Jacobian action at a fixed iterate."""

    def __init__(self, phi: Field, sc: Scenario):
        self.grid = sc.grid
        self.h = sc.grid.spacing
        self.vol = sc.grid.cell_volume
        self.rigidity = sc.rigidity
        self.foundation = sc.foundation
        a = phi.data
        self.q = gradient_norm(phi)
        self.fval = sc.nonlinearity.stiffness(self.q)
        self.gprime = np.asarray(sc.nonlinearity.restoring_deriv(a), dtype=float)
        self.lap_phi = st.laplacian(a, self.h)
        fprime = sc.nonlinearity.stiffness_deriv(self.q)
        if self.q <= _GRADIENT_FLOOR or fprime == 0.0:
            # the rank-one term's directional derivative is undefined at a
            # vanishing gradient; its prefactor Lap(phi) vanishes there in
            # the generic case, so the term is dropped
            self.rank_one_left = None
            self.rank_one_right = None
        else:
            self.rank_one_left = -(fprime / self.q) * self.lap_phi
            wide = np.zeros_like(a)
            for axis in range(a.ndim):
                wide += st.centered_diff(st.centered_diff(a, self.h, axis), self.h, axis)
            self.rank_one_right = -wide  # <grad phi, grad w> = vol * sum(right * w)

    @property
    def symmetric(self) -> bool:
        return self.rank_one_left is None and float(self.gprime.min()) >= 0.0

    def _symmetric_part(self, w: np.ndarray) -> np.ndarray:
        lap = st.laplacian(w, self.h)
        bilap = st.laplacian(lap, self.h)
        return (
            self.rigidity * bilap
            + self.foundation * w
            - self.fval * lap
            + self.gprime * w
        )

    def apply(self, w: np.ndarray) -> np.ndarray:
        out = self._symmetric_part(w)
        if self.rank_one_left is not None:
            coupling = self.vol * float(np.sum(self.rank_one_right * w))
            out = out + coupling * self.rank_one_left
        return out

    def apply_transpose(self, w: np.ndarray) -> np.ndarray:
        out = self._symmetric_part(w)
        if self.rank_one_left is not None:
            coupling = self.vol * float(np.sum(self.rank_one_left * w))
            out = out + coupling * self.rank_one_right
        return out


def _euclid(a: np.ndarray) -> float:
    return float(np.sqrt(np.sum(a * a)))


def _cgls(apply_j, apply_jt, b: np.ndarray, tol: float, cap: int) -> np.ndarray:
    """CGLS: least-squares CG on the normal equations, monitoring the true
    residual ||J x - b||. Returns the best iterate found."""
    x = np.zeros_like(b)
    bnorm = _euclid(b)
    if bnorm == 0.0:
        return x
    target = tol * bnorm
    s = b.copy()
    p = apply_jt(s)
    gamma = float(np.sum(p * p))
    iterations = 0
    while iterations < cap and _euclid(s) > target and gamma > 0.0:
        q = apply_j(p)
        qq = float(np.sum(q * q))
        if qq == 0.0:
            break
        alpha = gamma / qq
        x += alpha * p
        s -= alpha * q
        t = apply_jt(s)
        gamma_new = float(np.sum(t * t))
        beta = gamma_new / gamma
        p = t + beta * p
        gamma = gamma_new
        iterations += 1
    return x


def _cg_sym(apply_j, b: np.ndarray, tol: float, cap: int) -> np.ndarray:
    """Plain CG for the symmetric positive definite Jacobian case."""
    x = np.zeros_like(b)
    bnorm = _euclid(b)
    if bnorm == 0.0:
        return x
    target = tol * bnorm
    r = b.copy()
    p = r.copy()
    rr = float(np.sum(r * r))
    iterations = 0
    while iterations < cap and math.sqrt(rr) > target:
        ap = apply_j(p)
        denom = float(np.sum(p * ap))
        if denom <= 0.0:
            break
        alpha = rr / denom
        x += alpha * p
        r -= alpha * ap
        rr_new = float(np.sum(r * r))
        beta = rr_new / rr
        p = r + beta * p
        rr = rr_new
        iterations += 1
    return x


def solve_stationary(
    sc: Scenario,
    guess: Field,
    tol: float = 1e-10,
    max_iter: int = 50,
    inner_tol: float = 1e-8,
    guess_tag: str = "custom",
) -> StationaryResult:
    """Damped Newton iteration from a guess.

    Stops when the L2 norm of the stationary residual drops to ``tol``;
    otherwise returns the best iterate with ``converged=False``. The inner
    tolerance adapts near convergence so the final Newton step can land at
    the outer tolerance (a linear problem converges in one step).
    """
    if not tol > 0.0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if guess.grid != sc.grid:
        raise ValueError("guess is not on the scenario grid")

    vol_sqrt = math.sqrt(sc.grid.cell_volume)
    phi = guess.copy()
    r = stationary_residual(phi, sc)
    rnorm = _euclid(r.data) * vol_sqrt
    best_phi, best_rnorm = phi, rnorm
    cap = 10 * sc.grid.size

    for iteration in range(max_iter):
        if rnorm <= tol:
            return StationaryResult(phi, rnorm, iteration, True, guess_tag)
        jac = _Jacobian(phi, sc)
        eta = max(1e-15, min(inner_tol, 0.1 * tol / rnorm))
        if jac.symmetric:
            direction = _cg_sym(jac.apply, r.data, eta, cap)
        else:
            direction = _cgls(jac.apply, jac.apply_transpose, r.data, eta, cap)

        lam = 1.0
        accepted = False
        while lam >= 2.0**-20:
            trial = Field(sc.grid, phi.data - lam * direction)
            trial_r = stationary_residual(trial, sc)
            trial_norm = _euclid(trial_r.data) * vol_sqrt
            if trial_norm < (1.0 - 1e-4 * lam) * rnorm:
                phi, r, rnorm = trial, trial_r, trial_norm
                accepted = True
                break
            lam *= 0.5
        if not accepted:
            if rnorm < best_rnorm:
                best_phi, best_rnorm = phi, rnorm
            return StationaryResult(
                best_phi, best_rnorm, iteration + 1, best_rnorm <= tol, guess_tag,
                message="line-search stall",
            )
        if rnorm < best_rnorm:
            best_phi, best_rnorm = phi, rnorm

    converged = best_rnorm <= tol
    return StationaryResult(
        best_phi, best_rnorm, max_iter, converged, guess_tag,
        message="" if converged else "max iterations reached",
    )


def _random_low_pass(grid, rng: np.random.Generator, scale: float) -> Field:
    """Small smooth random field used to seed the multi-guess search."""
    x = grid.coordinate_arrays()
    k1 = math.pi / grid.half_width
    data = np.zeros(grid.shape)
    for m in range(1, 5):
        weight = 1.0 / (1.0 + m**3)
        coeffs = rng.standard_normal(2 * grid.dimension)
        for axis in range(grid.dimension):
            data += weight * coeffs[2 * axis] * np.cos(m * k1 * x[axis])
            data += weight * coeffs[2 * axis + 1] * np.sin(m * k1 * x[axis])
    peak = float(np.abs(data).max())
    if peak > 0.0:
        data *= scale / peak
    return Field(grid, data)


def search_stationary(
    sc: Scenario,
    guesses: Union[int, Sequence[Field]] = 5,
    seed: int = 0,
    tol: float = 1e-10,
    max_iter: int = 50,
    guess_scale: float = 0.5,
    dedupe_distance: float = 1e-6,
) -> list[StationaryResult]:
    """Newton solves from the zero guess plus a batch of seeded random
    guesses; converged results are deduplicated at the given H2 distance.
    The stationary set is bounded but not known to be finite, so this
    reports whatever the batch finds."""
    guess_fields: list[tuple[str, Field]] = [("zero", Field.zeros(sc.grid))]
    if isinstance(guesses, int):
        rng = np.random.default_rng(seed)
        for i in range(guesses):
            guess_fields.append((f"random-{i}", _random_low_pass(sc.grid, rng, guess_scale)))
    else:
        for i, g in enumerate(guesses):
            guess_fields.append((f"given-{i}", g))

    results = [
        solve_stationary(sc, g, tol=tol, max_iter=max_iter, guess_tag=tag)
        for tag, g in guess_fields
    ]
    kept: list[StationaryResult] = []
    for res in results:
        if not res.converged:
            kept.append(res)
            continue
        duplicate = False
        for other in kept:
            if other.converged and norm(res.phi - other.phi, NormKind.H2) <= dedupe_distance:
                duplicate = True
                break
        if not duplicate:
            kept.append(res)
    return kept


def distance_to_stationary_set(
    state: State, candidates: Sequence[Union[StationaryResult, Field]]
) -> float:
    """Phase-space distance from a state to a finite candidate set of
    stationary states (each paired with zero velocity)."""
    if len(candidates) == 0:
        raise ValueError("candidate set is empty")
    v_l2 = norm(state.v, NormKind.L2)
    best: Optional[float] = None
    for cand in candidates:
        phi = cand.phi if isinstance(cand, StationaryResult) else cand
        d = math.sqrt(norm(state.u - phi, NormKind.H2) ** 2 + v_l2**2)
        if best is None or d < best:
            best = d
    return float(best)
