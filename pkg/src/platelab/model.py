"""Problem-instance definition: damping profiles, nonlinearities, loads, scenarios.

A scenario bundles everything a run needs: the grid, the bending and linear
restoring coefficients, localized weak/strong damping fields with their
exterior floors, a nonlinearity pair (nonlocal stiffness + local restoring
term, each with an antiderivative), the static load, and numerics settings.

Admissibility of a scenario is checked samplewise:
  * damping fields nonnegative,
  * both fields at or above their declared floors outside the exterior radius,
  * weak + strong damping strictly positive at every sample,
  * stiffness nonnegative, restoring term sign-compatible (g(s) s >= 0),
  * restoring derivative within the declared polynomial growth bound.

Scenarios that violate them (counterexample demos) are constructible only
with ``allow_violation=True`` and record which rules were waived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .grid import Field, Grid, NormKind, norm, radial_cutoff

__all__ = [
    "DampingCoefficients",
    "Nonlinearity",
    "RuleCheck",
    "Scenario",
    "ValidationReport",
    "HypothesisViolation",
    "bump_load",
    "complementary_patch_damping",
    "constant_damping",
    "constant_stiffness",
    "cubic_restoring",
    "half_box_mask",
    "kirchhoff_stiffness",
    "power_restoring",
    "restoring_integral",
    "apply_restoring",
    "ring_profile",
    "saturating_stiffness",
    "stiffness_primitive_value",
    "stiffness_value",
    "validate_coefficients",
    "validate_nonlinearity",
    "zero_restoring",
]


# ---------------------------------------------------------------------------
# validation reports


@dataclass(frozen=True)
class RuleCheck:
    """Outcome of one admissibility rule, with the worst offending sample."""

    rule: str
    passed: bool
    detail: str
    worst_index: Optional[tuple] = None
    worst_value: Optional[float] = None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[RuleCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[RuleCheck]:
        return [c for c in self.checks if not c.passed]

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            msg = f"{status}  {c.rule}: {c.detail}"
            if not c.passed and c.worst_index is not None:
                msg += f" (worst at sample {c.worst_index}, value {c.worst_value:g})"
            out.append(msg)
        return out


class HypothesisViolation(ValueError):
    """A scenario failed admissibility validation and no override was given."""

    def __init__(self, report: ValidationReport):
        self.report = report
        rules = ", ".join(c.rule for c in report.failures())
        super().__init__(
            f"scenario violates admissibility rules [{rules}]; pass allow_violation=True "
            "to build it anyway (counterexample scenarios)"
        )


# ---------------------------------------------------------------------------
# damping coefficients


@dataclass(frozen=True)
class DampingCoefficients:
    """Localized damping pair: ``weak`` acts on the velocity, ``strong``
    through its gradient. Floors are the declared lower bounds that must
    hold outside the ball of ``exterior_radius``."""

    weak: Field
    strong: Field
    weak_floor: float
    strong_floor: float
    exterior_radius: float

    def __post_init__(self) -> None:
        if self.weak.grid != self.strong.grid:
            raise ValueError("weak and strong damping fields live on different grids")
        if not self.weak_floor > 0.0:
            raise ValueError(f"weak damping floor must be positive, got {self.weak_floor}")
        if not self.strong_floor > 0.0:
            raise ValueError(f"strong damping floor must be positive, got {self.strong_floor}")
        if not self.exterior_radius > 0.0:
            raise ValueError(f"exterior radius must be positive, got {self.exterior_radius}")

    @property
    def grid(self) -> Grid:
        return self.weak.grid


def _worst(mask_bad: np.ndarray, values: np.ndarray):
    """Index/value of the most offending sample among the flagged ones."""
    if not mask_bad.any():
        return None, None
    flat = np.where(mask_bad.ravel(), values.ravel(), np.inf)
    k = int(np.argmin(flat))
    idx = np.unravel_index(k, values.shape)
    return tuple(int(i) for i in idx), float(values[idx])


def validate_coefficients(cs: DampingCoefficients) -> ValidationReport:
    """Samplewise admissibility scan of a damping pair.

    Rules: nonnegativity of both fields, exterior floors outside the
    declared radius, and strict positivity of the sum everywhere.
    """
    a = cs.weak.data
    b = cs.strong.data
    exterior = cs.grid.radius() >= cs.exterior_radius
    checks = []

    for name, data in (("weak", a), ("strong", b)):
        bad = data < 0.0
        idx, val = _worst(bad, data)
        checks.append(
            RuleCheck(
                rule=f"damping-nonneg-{name}",
                passed=not bad.any(),
                detail=f"{name} damping >= 0 samplewise",
                worst_index=idx,
                worst_value=val,
            )
        )

    for name, data, floor in (("weak", a, cs.weak_floor), ("strong", b, cs.strong_floor)):
        bad = exterior & (data < floor)
        idx, val = _worst(bad, data)
        checks.append(
            RuleCheck(
                rule=f"exterior-floor-{name}",
                passed=not bad.any(),
                detail=f"{name} damping >= {floor:g} outside radius {cs.exterior_radius:g}",
                worst_index=idx,
                worst_value=val,
            )
        )

    total = a + b
    bad = total <= 0.0
    idx, val = _worst(bad, total)
    checks.append(
        RuleCheck(
            rule="damping-sum-positive",
            passed=not bad.any(),
            detail="weak + strong damping > 0 at every sample",
            worst_index=idx,
            worst_value=val,
        )
    )
    return ValidationReport(tuple(checks))


def ring_profile(grid: Grid, floor: float, exterior_radius: float, interior_mask: Optional[Field] = None) -> Field:
    """Damping profile that equals ``floor`` outside ``exterior_radius`` and
    vanishes near the center, optionally switched on inside by a mask.

    The base profile is floor times the radial cutoff at exterior_radius / 2
    (so it reaches the floor exactly at the exterior radius); a mask field
    with values in [0, 1] may raise the coefficient on interior subregions:
    the result is floor * max(cutoff, mask).
    """
    if not floor >= 0.0:
        raise ValueError(f"floor must be nonnegative, got {floor}")
    base = radial_cutoff(grid, exterior_radius / 2.0).data
    if interior_mask is not None:
        if interior_mask.grid != grid:
            raise ValueError("interior mask lives on a different grid")
        m = interior_mask.data
        if float(m.min()) < 0.0:
            raise ValueError("interior mask would make the coefficient negative")
        base = np.maximum(base, m)
    return Field(grid, floor * base)


def half_box_mask(grid: Grid, side: str) -> Field:
    """Indicator of the half box x >= 0 ('right') or x < 0 ('left') along
    the first axis; used to build complementary damping patches."""
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    x = grid.coordinate_arrays()[0]
    mask = (x >= 0.0) if side == "right" else (x < 0.0)
    return Field(grid, mask.astype(float))


def complementary_patch_damping(
    grid: Grid, weak_floor: float, strong_floor: float, exterior_radius: float
) -> DampingCoefficients:
    """Damping pair where each coefficient vanishes on one half of the
    interior ball and the other covers it: weak damping is off on the left
    half, strong damping off on the right half, both at their floors outside
    the exterior radius. The sum stays positive everywhere."""
    weak = ring_profile(grid, weak_floor, exterior_radius, half_box_mask(grid, "right"))
    strong = ring_profile(grid, strong_floor, exterior_radius, half_box_mask(grid, "left"))
    return DampingCoefficients(weak, strong, weak_floor, strong_floor, exterior_radius)


def constant_damping(
    grid: Grid,
    weak: float,
    strong: float,
    weak_floor: Optional[float] = None,
    strong_floor: Optional[float] = None,
    exterior_radius: Optional[float] = None,
) -> DampingCoefficients:
    """Spatially constant damping pair. Floors default to the constant values
    when those are positive (declared floors must be positive either way, so
    vanishing constants keep the declaration and fail validation, which is
    the point of counterexample profiles)."""
    wf = weak_floor if weak_floor is not None else (weak if weak > 0 else 1.0)
    sf = strong_floor if strong_floor is not None else (strong if strong > 0 else 1.0)
    r0 = exterior_radius if exterior_radius is not None else grid.half_width / 8.0
    return DampingCoefficients(
        Field.full(grid, weak), Field.full(grid, strong), wf, sf, r0
    )


# ---------------------------------------------------------------------------
# nonlinearities


@dataclass(frozen=True)
class Nonlinearity:
    """Nonlinearity pair of the plate model.

    ``stiffness`` is the nonlocal coefficient multiplying the Laplacian,
    evaluated at the L2 norm of the displacement gradient; ``restoring`` is
    the local zeroth-order term. Primitives are the antiderivatives entering
    the Lyapunov functional:

        stiffness_primitive(z) = int_0^z stiffness(sqrt(s)) ds,
        restoring_primitive(z) = int_0^z restoring(s) ds.

    Closed forms are used when registered; otherwise values fall back to
    adaptive quadrature (1e-10 absolute).
    """

    stiffness: Callable[[float], float]
    stiffness_deriv: Callable[[float], float]
    restoring: Callable[[np.ndarray], np.ndarray]
    restoring_deriv: Callable[[np.ndarray], np.ndarray]
    growth_exponent: float
    growth_constant: float
    stiffness_primitive: Optional[Callable[[float], float]] = None
    restoring_primitive: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: str = "custom"

    def __post_init__(self) -> None:
        if not self.growth_exponent >= 1.0:
            raise ValueError(f"growth exponent must be >= 1, got {self.growth_exponent}")
        if not self.growth_constant >= 0.0:
            raise ValueError(f"growth constant must be >= 0, got {self.growth_constant}")


def _nl(stiff, dstiff, stiff_prim, rest, drest, rest_prim, p, C, label) -> Nonlinearity:
    return Nonlinearity(
        stiffness=stiff,
        stiffness_deriv=dstiff,
        restoring=rest,
        restoring_deriv=drest,
        growth_exponent=p,
        growth_constant=C,
        stiffness_primitive=stiff_prim,
        restoring_primitive=rest_prim,
        label=label,
    )


# stiffness families ---------------------------------------------------------


def _kirchhoff_parts(a: float, b: float):
    stiff = lambda z: a + b * z * z
    dstiff = lambda z: 2.0 * b * z
    prim = lambda z: a * z + 0.5 * b * z * z
    return stiff, dstiff, prim


def _saturating_parts(cap: float):
    stiff = lambda z: cap * (1.0 - math.exp(-(z * z) / cap))
    dstiff = lambda z: 2.0 * z * math.exp(-(z * z) / cap)
    prim = lambda z: cap * z + cap * cap * (math.exp(-z / cap) - 1.0)
    return stiff, dstiff, prim


# restoring families ---------------------------------------------------------


def _cubic_parts():
    rest = lambda s: s**3
    drest = lambda s: 3.0 * s * s
    prim = lambda z: 0.25 * z**4
    return rest, drest, prim


def _power_parts(p: float):
    rest = lambda s: np.abs(s) ** (p - 1.0) * s
    drest = lambda s: p * np.abs(s) ** (p - 1.0)
    prim = lambda z: np.abs(z) ** (p + 1.0) / (p + 1.0)
    return rest, drest, prim


def _zero_parts():
    rest = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    drest = lambda s: np.zeros_like(np.asarray(s, dtype=float))
    prim = lambda z: np.zeros_like(np.asarray(z, dtype=float))
    return rest, drest, prim


_STIFFNESS_FAMILIES = {
    "constant": lambda value=1.0: (lambda z: float(value), lambda z: 0.0, lambda z: float(value) * z),
    "kirchhoff": lambda a=0.0, b=1.0: _kirchhoff_parts(float(a), float(b)),
    "saturating": lambda cap=1.0: _saturating_parts(float(cap)),
    "zero": lambda: (lambda z: 0.0, lambda z: 0.0, lambda z: 0.0),
}

_RESTORING_FAMILIES = {
    "zero": lambda: (*_zero_parts(), 1.0, 0.0),
    "cubic": lambda: (*_cubic_parts(), 3.0, 3.0),
    "power": lambda p=3.0: (*_power_parts(float(p)), float(p), float(p)),
}


def make_nonlinearity(stiffness_kind: str, restoring_kind: str, *, stiffness_params=None, restoring_params=None) -> Nonlinearity:
    """Build a nonlinearity from the built-in families by name."""
    sp = dict(stiffness_params or {})
    rp = dict(restoring_params or {})
    try:
        stiff, dstiff, sprim = _STIFFNESS_FAMILIES[stiffness_kind](**sp)
    except KeyError:
        raise ValueError(f"unknown stiffness family {stiffness_kind!r}; options: {sorted(_STIFFNESS_FAMILIES)}")
    try:
        rest, drest, rprim, p, C = _RESTORING_FAMILIES[restoring_kind](**rp)
    except KeyError:
        raise ValueError(f"unknown restoring family {restoring_kind!r}; options: {sorted(_RESTORING_FAMILIES)}")
    return _nl(stiff, dstiff, sprim, rest, drest, rprim, p, C, f"{stiffness_kind}+{restoring_kind}")


def constant_stiffness(value: float = 1.0, restoring: str = "zero", **kw) -> Nonlinearity:
    return make_nonlinearity("constant", restoring, stiffness_params={"value": value}, restoring_params=kw)


def kirchhoff_stiffness(a: float = 0.0, b: float = 1.0, restoring: str = "cubic", **kw) -> Nonlinearity:
    return make_nonlinearity("kirchhoff", restoring, stiffness_params={"a": a, "b": b}, restoring_params=kw)


def saturating_stiffness(cap: float = 1.0, restoring: str = "cubic", **kw) -> Nonlinearity:
    return make_nonlinearity("saturating", restoring, stiffness_params={"cap": cap}, restoring_params=kw)


def cubic_restoring(stiffness: str = "constant", **kw) -> Nonlinearity:
    return make_nonlinearity(stiffness, "cubic", stiffness_params=kw)


def power_restoring(p: float, stiffness: str = "constant", **kw) -> Nonlinearity:
    return make_nonlinearity(stiffness, "power", stiffness_params=kw, restoring_params={"p": p})


def zero_restoring(stiffness: str = "constant", **kw) -> Nonlinearity:
    return make_nonlinearity(stiffness, "zero", stiffness_params=kw)


def linear_nonlinearity() -> Nonlinearity:
    """No nonlocal stiffness, no restoring term (purely linear model)."""
    return make_nonlinearity("zero", "zero")


# nonlinearity evaluation -----------------------------------------------------


def stiffness_value(nl: Nonlinearity, z: float) -> float:
    """Evaluate the nonlocal stiffness coefficient at z >= 0."""
    z = float(z)
    if z < 0.0:
        raise ValueError(f"stiffness argument must be >= 0, got {z}")
    return float(nl.stiffness(z))


def stiffness_primitive_value(nl: Nonlinearity, z: float) -> float:
    """Antiderivative int_0^z stiffness(sqrt(s)) ds; closed form when
    registered, else adaptive quadrature to 1e-10 absolute."""
    z = float(z)
    if z < 0.0:
        raise ValueError(f"primitive argument must be >= 0, got {z}")
    if nl.stiffness_primitive is not None:
        return float(nl.stiffness_primitive(z))
    if z == 0.0:
        return 0.0
    value, _err = quad(lambda s: nl.stiffness(math.sqrt(s)), 0.0, z, epsabs=1e-12, epsrel=1e-12, limit=200)
    return float(value)


def _restoring_primitive_scalar(nl: Nonlinearity, z: float) -> float:
    if nl.restoring_primitive is not None:
        return float(nl.restoring_primitive(z))
    if z == 0.0:
        return 0.0
    value, _err = quad(lambda s: float(nl.restoring(s)), 0.0, z, epsabs=1e-12, epsrel=1e-12, limit=200)
    return float(value)


def apply_restoring(nl: Nonlinearity, u: Field) -> Field:
    """Samplewise restoring term g(u). Overflow at extreme samples is
    reported, never silently saturated."""
    if not u.is_finite():
        raise ValueError("restoring term of a field with non-finite samples")
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.asarray(nl.restoring(u.data), dtype=float)
    if not np.isfinite(values).all():
        bad = ~np.isfinite(values)
        idx, _ = _worst(bad, np.where(bad, -np.inf, 0.0))
        raise OverflowError(
            f"restoring term overflowed at sample {idx} (input {u.data[idx]:g})"
        )
    return Field(u.grid, values)


def restoring_integral(nl: Nonlinearity, u: Field) -> float:
    """Rectangle-rule integral of the restoring primitive over the box,
    same quadrature as all discrete norms. Nonnegative for admissible
    restoring terms."""
    if not u.is_finite():
        raise ValueError("restoring integral of a field with non-finite samples")
    if nl.restoring_primitive is not None:
        with np.errstate(over="ignore", invalid="ignore"):
            values = np.asarray(nl.restoring_primitive(u.data), dtype=float)
        if not np.isfinite(values).all():
            bad = ~np.isfinite(values)
            idx, _ = _worst(bad, np.where(bad, -np.inf, 0.0))
            raise OverflowError(f"restoring primitive overflowed at sample {idx}")
        return u.grid.cell_volume * float(np.sum(values))
    total = sum(_restoring_primitive_scalar(nl, float(z)) for z in u.data.ravel())
    return u.grid.cell_volume * total


def validate_nonlinearity(
    nl: Nonlinearity, sample_range: tuple[float, float] = (-10.0, 10.0), sample_count: int = 201
) -> ValidationReport:
    """Sampled admissibility scan of a nonlinearity pair.

    Checks stiffness nonnegativity, the restoring sign condition g(s) s >= 0,
    the declared polynomial growth bound on the restoring derivative, and
    finite-difference consistency of both registered derivatives.
    """
    if sample_count < 100:
        raise ValueError(f"sample count must be >= 100, got {sample_count}")
    lo, hi = sample_range
    s = np.linspace(lo, hi, sample_count)
    z = np.linspace(0.0, max(abs(lo), abs(hi)), sample_count)

    checks = []

    fv = np.array([nl.stiffness(zi) for zi in z])
    bad = fv < 0.0
    idx, val = _worst(bad, fv)
    checks.append(RuleCheck("stiffness-nonneg", not bad.any(), "stiffness >= 0 on sampled range", idx, val))

    gv = np.asarray(nl.restoring(s), dtype=float)
    sign = gv * s
    bad = sign < 0.0
    idx, val = _worst(bad, sign)
    checks.append(RuleCheck("restoring-sign", not bad.any(), "restoring(s) * s >= 0 on sampled range", idx, val))

    dgv = np.asarray(nl.restoring_deriv(s), dtype=float)
    bound = nl.growth_constant * (1.0 + np.abs(s) ** (nl.growth_exponent - 1.0))
    margin = bound - np.abs(dgv)
    bad = margin < -1e-12 * np.maximum(1.0, bound)
    idx, val = _worst(bad, margin)
    checks.append(
        RuleCheck(
            "growth-bound",
            not bad.any(),
            f"|restoring'(s)| <= C (1 + |s|^(p-1)) with C={nl.growth_constant:g}, p={nl.growth_exponent:g}",
            idx,
            val,
        )
    )

    fd_step = 1e-5
    for rule, fn, dfn, pts in (
        ("stiffness-deriv", nl.stiffness, nl.stiffness_deriv, z[z >= fd_step]),
        ("restoring-deriv", lambda x: float(nl.restoring(x)), lambda x: float(nl.restoring_deriv(x)), s),
    ):
        worst_idx, worst_rel = None, 0.0
        ok = True
        for j, x in enumerate(pts):
            approx = (fn(x + fd_step) - fn(x - fd_step)) / (2.0 * fd_step)
            exact = dfn(x)
            scale = max(1.0, abs(exact), abs(approx))
            rel = abs(approx - exact) / scale
            if rel > worst_rel:
                worst_rel, worst_idx = rel, (j,)
            if rel > 1e-4:
                ok = False
        checks.append(
            RuleCheck(rule, ok, "central-difference check of the registered derivative", worst_idx, worst_rel)
        )

    checks.append(
        RuleCheck(
            "dimension-growth",
            True,
            f"growth exponent p={nl.growth_exponent:g} recorded; the dimensional "
            "restriction on p is vacuous for dimension <= 4",
        )
    )
    return ValidationReport(tuple(checks))


# ---------------------------------------------------------------------------
# loads


def bump_load(grid: Grid, amplitude: float = 1.0, radius: float = 2.0) -> Field:
    """Compactly supported smooth bump A exp(1 / ((|x|/radius)^2 - 1)) inside
    |x| < radius, identically zero outside; keeps the load's exterior L2 norm
    equal to zero beyond the bump."""
    if not radius > 0.0:
        raise ValueError(f"bump radius must be positive, got {radius}")
    if not radius < grid.half_width:
        raise ValueError(f"bump radius {radius} does not fit in half_width {grid.half_width}")
    rr = grid.radius() / radius
    data = np.zeros(grid.shape)
    inside = rr < 1.0
    with np.errstate(divide="ignore", over="ignore"):
        data[inside] = amplitude * np.exp(1.0 / (rr[inside] ** 2 - 1.0))
    return Field(grid, data)


# ---------------------------------------------------------------------------
# scenario


@dataclass(frozen=True)
class Scenario:
    """Full problem instance.

    Construction always enforces the structural constraints (positive
    coefficients, truncation margin half_width >= 4 * exterior_radius,
    finite load); the samplewise admissibility rules raise
    HypothesisViolation unless allow_violation is set, in which case the
    waived rule names are recorded.
    """

    grid: Grid
    rigidity: float
    foundation: float
    damping: DampingCoefficients
    nonlinearity: Nonlinearity
    load: Field
    dt: Optional[float] = None
    cg_tol: float = 1e-10
    name: str = "scenario"
    seed: int = 0
    allow_violation: bool = False
    waived_rules: tuple[str, ...] = field(init=False, default=())

    def __post_init__(self) -> None:
        if not self.rigidity > 0.0:
            raise ValueError(f"rigidity must be positive, got {self.rigidity}")
        if not self.foundation > 0.0:
            raise ValueError(f"foundation must be positive, got {self.foundation}")
        if self.damping.grid != self.grid:
            raise ValueError("damping fields are not on the scenario grid")
        if self.load.grid != self.grid:
            raise ValueError("load is not on the scenario grid")
        if not self.load.is_finite():
            raise ValueError("load has non-finite samples")
        if not 0.0 < self.cg_tol < 1.0:
            raise ValueError(f"cg_tol must lie in (0, 1), got {self.cg_tol}")
        if self.grid.half_width < 4.0 * self.damping.exterior_radius:
            raise ValueError(
                "truncation margin violated: half_width must be >= 4 * exterior_radius "
                f"(got {self.grid.half_width} < 4 * {self.damping.exterior_radius})"
            )
        dt = self.dt if self.dt is not None else default_dt(self.grid)
        if not dt > 0.0:
            raise ValueError(f"dt must be positive, got {dt}")
        object.__setattr__(self, "dt", float(dt))

        report = self.validation_report()
        failures = tuple(c.rule for c in report.failures())
        if failures and not self.allow_violation:
            raise HypothesisViolation(report)
        object.__setattr__(self, "waived_rules", failures)
        object.__setattr__(self, "_implicit_spec_cache", None)

    def validation_report(self) -> ValidationReport:
        coeff = validate_coefficients(self.damping)
        nonlin = validate_nonlinearity(self.nonlinearity)
        return ValidationReport(coeff.checks + nonlin.checks)

    def implicit_spec(self):
        """Implicit-step operator for this scenario's dt (cached)."""
        from .operators import ImplicitOperatorSpec

        cached = getattr(self, "_implicit_spec_cache", None)
        if cached is None:
            cached = ImplicitOperatorSpec(
                dt=self.dt,
                rigidity=self.rigidity,
                foundation=self.foundation,
                weak=self.damping.weak,
                strong=self.damping.strong,
                grid=self.grid,
            )
            object.__setattr__(self, "_implicit_spec_cache", cached)
        return cached

    def load_l2(self) -> float:
        return norm(self.load, NormKind.L2)


def default_dt(grid: Grid) -> float:
    """Conservative default step: min(1e-3, h^2 / 4), safe for the explicit
    nonlocal stiffness term at desk scales."""
    return min(1e-3, grid.spacing**2 / 4.0)
