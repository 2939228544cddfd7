import math

import numpy as np
import pytest

from platelab import (
    Field,
    ImplicitOperatorSpec,
    NormKind,
    apply_implicit,
    bilaplacian,
    div_coeff_grad,
    gradient,
    laplacian,
    make_grid,
    norm,
    solve_implicit,
    solve_spd,
)
from _oracles import brute_force_divergence_pairing, laplacian_symbol, rectangle_inner
from conftest import random_field


def inner(u, w):
    return rectangle_inner(u.data, w.data, u.grid.cell_volume)


def sine_field(grid, m, amplitude=1.0):
    k = math.pi * m / grid.half_width
    return k, Field.from_function(grid, lambda x: amplitude * np.sin(k * x))


class TestGradient:
    def test_constant_is_zero(self, grid2d):
        for comp in gradient(Field.full(grid2d, 4.2)):
            assert np.all(comp.data == 0.0)

    def test_sine_convergence_order(self):
        # refinement oracle: error vs the analytic derivative k cos(kx)
        m, L = 3, math.pi
        errors = []
        for n in (64, 128, 256):
            g = make_grid(1, L, n)
            k, u = sine_field(g, m)
            exact = k * np.cos(k * g.axis_coordinates())
            errors.append(np.max(np.abs(gradient(u)[0].data - exact)))
        orders = [math.log2(errors[i] / errors[i + 1]) for i in range(2)]
        assert min(orders) >= 1.9

    def test_sharp_bump_seam(self):
        g = make_grid(1, 4.0, 64)
        x = g.axis_coordinates()
        u = Field(g, np.exp(-40.0 * x**2))
        (gx,) = gradient(u)
        assert np.isfinite(gx.data).all()
        # even bump about the center: derivative is odd, seam included
        flipped = -np.roll(gx.data[::-1], 1)
        assert np.allclose(gx.data, flipped, atol=1e-14)

    def test_linearity(self, grid2d, rng):
        u, w = random_field(grid2d, rng), random_field(grid2d, rng)
        for got, a, b in zip(gradient(u * 2.0 + w * -3.0), gradient(u), gradient(w)):
            assert np.allclose(got.data, 2.0 * a.data - 3.0 * b.data, atol=1e-13)


class TestLaplacian:
    def test_constant_is_zero(self, grid1d):
        assert np.all(laplacian(Field.full(grid1d, -7.0)).data == 0.0)

    def test_sine_eigenfunction(self):
        g = make_grid(1, math.pi, 64)
        k, u = sine_field(g, 4)
        mu = laplacian_symbol(k, g.spacing)
        got = laplacian(u)
        assert np.allclose(got.data, -mu * u.data, atol=1e-12 * mu)

    def test_adjointness(self, grid2d, rng):
        for _ in range(20):
            u, w = random_field(grid2d, rng), random_field(grid2d, rng)
            a, b = inner(laplacian(u), w), inner(u, laplacian(w))
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


class TestBilaplacian:
    def test_sine_eigenfunction(self):
        g = make_grid(1, math.pi, 64)
        k, u = sine_field(g, 3)
        mu = laplacian_symbol(k, g.spacing)
        got = bilaplacian(u)
        assert np.allclose(got.data, mu * mu * u.data, atol=1e-10 * mu * mu)

    def test_constant_is_zero(self, grid2d):
        assert np.all(bilaplacian(Field.full(grid2d, 1.0)).data == 0.0)

    def test_composition_identity(self, grid2d, rng):
        # <Lap^2 u, u> = ||Lap u||^2 >= 0 exactly by construction
        for _ in range(10):
            u = random_field(grid2d, rng)
            lhs = inner(bilaplacian(u), u)
            rhs = norm(laplacian(u), NormKind.L2) ** 2
            assert lhs == pytest.approx(rhs, rel=1e-12)
            assert lhs >= 0.0


class TestDivCoeffGrad:
    def test_constant_coefficient_collapses(self, grid2d, rng):
        u = random_field(grid2d, rng)
        got = div_coeff_grad(u, Field.full(grid2d, 2.5))
        want = 2.5 * laplacian(u).data
        assert np.allclose(got.data, want, atol=1e-12 * max(1.0, np.abs(want).max()))

    def test_zero_coefficient(self, grid1d, rng):
        u = random_field(grid1d, rng)
        assert np.all(div_coeff_grad(u, Field.zeros(grid1d)).data == 0.0)

    def test_rejects_negative_coefficient(self, grid1d, rng):
        u = random_field(grid1d, rng)
        c = Field.full(grid1d, 1.0).data.copy()
        c[5] = -1e-8
        with pytest.raises(ValueError):
            div_coeff_grad(u, Field(grid1d, c))

    @pytest.mark.parametrize("dimension", [1, 2])
    def test_green_identity_against_brute_force(self, dimension, rng):
        g = make_grid(dimension, 2.0, 16)
        for _ in range(5):
            u, w = random_field(g, rng), random_field(g, rng)
            coeff = Field(g, rng.random(g.shape))
            lhs = inner(div_coeff_grad(u, coeff), w)
            oracle = brute_force_divergence_pairing(u.data, w.data, coeff.data, g.spacing)
            assert lhs == pytest.approx(oracle, rel=1e-12, abs=1e-12)

    def test_symmetry_and_sign(self, grid2d, rng):
        for _ in range(10):
            u, w = random_field(grid2d, rng), random_field(grid2d, rng)
            coeff = Field(grid2d, rng.random(grid2d.shape))
            a = inner(div_coeff_grad(u, coeff), w)
            b = inner(u, div_coeff_grad(w, coeff))
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)
            assert inner(div_coeff_grad(u, coeff), u) <= 1e-12


def make_spec(grid, dt=1e-2, rigidity=1.0, foundation=1.0, weak=0.0, strong=0.0):
    return ImplicitOperatorSpec(
        dt=dt,
        rigidity=rigidity,
        foundation=foundation,
        weak=Field.full(grid, weak),
        strong=Field.full(grid, strong),
        grid=grid,
    )


class TestApplyImplicit:
    def test_zero_maps_to_zero(self, grid1d):
        spec = make_spec(grid1d, weak=0.3, strong=0.7)
        assert np.all(apply_implicit(spec, Field.zeros(grid1d)).data == 0.0)

    def test_sine_eigenvalue_formula(self):
        g = make_grid(1, math.pi, 64)
        k, u = sine_field(g, 2)
        dt, rigidity, foundation = 1e-2, 0.8, 1.3
        spec = make_spec(g, dt=dt, rigidity=rigidity, foundation=foundation)
        mu = laplacian_symbol(k, g.spacing)
        factor = 1.0 + dt * dt * (rigidity * mu * mu + foundation)
        got = apply_implicit(spec, u)
        assert np.allclose(got.data, factor * u.data, atol=1e-12 * factor)

    def test_coercivity(self, grid2d, rng):
        dt, foundation = 5e-2, 2.0
        spec = make_spec(grid2d, dt=dt, foundation=foundation, weak=0.5, strong=0.25)
        for _ in range(10):
            w = random_field(grid2d, rng)
            quad_form = inner(apply_implicit(spec, w), w)
            floor = (1.0 + dt * dt * foundation) * norm(w, NormKind.L2) ** 2
            assert quad_form >= floor * (1.0 - 1e-12)

    def test_grid_mismatch(self, grid1d, grid2d):
        spec = make_spec(grid1d)
        with pytest.raises(ValueError):
            apply_implicit(spec, Field.zeros(grid2d))

    def test_rejects_bad_parameters(self, grid1d):
        with pytest.raises(ValueError):
            make_spec(grid1d, dt=0.0)
        with pytest.raises(ValueError):
            make_spec(grid1d, rigidity=-1.0)
        with pytest.raises(ValueError):
            make_spec(grid1d, weak=-0.1)


class TestSolveSpd:
    def test_recovers_known_solution(self, grid2d, rng):
        spec = make_spec(grid2d, dt=5e-2, weak=0.2, strong=0.4)
        tol = 1e-10
        for _ in range(5):
            w_true = random_field(grid2d, rng)
            rhs = apply_implicit(spec, w_true)
            w = solve_spd(spec, rhs, tol=tol)
            err = norm(w - w_true, NormKind.L2) / norm(w_true, NormKind.L2)
            assert err <= 10 * tol

    def test_zero_rhs(self, grid1d):
        spec = make_spec(grid1d)
        w, info = solve_implicit(spec, Field.zeros(grid1d))
        assert np.all(w.data == 0.0)
        assert info.iterations <= 1

    def test_fourier_diagonal_solve(self):
        g = make_grid(1, math.pi, 64)
        k, u = sine_field(g, 5)
        dt, rigidity, foundation = 2e-2, 1.0, 1.0
        spec = make_spec(g, dt=dt, rigidity=rigidity, foundation=foundation)
        mu = laplacian_symbol(k, g.spacing)
        factor = 1.0 + dt * dt * (rigidity * mu * mu + foundation)
        w = solve_spd(spec, u, tol=1e-12)
        assert np.allclose(w.data, u.data / factor, atol=1e-10)

    def test_solve_after_apply_identity(self, grid1d, rng):
        spec = make_spec(grid1d, dt=1e-2, weak=0.1, strong=0.3)
        tol = 1e-11
        for _ in range(5):
            w = random_field(grid1d, rng)
            back = solve_spd(spec, apply_implicit(spec, w), tol=tol)
            assert norm(back - w, NormKind.L2) <= 10 * tol * max(1.0, norm(w, NormKind.L2))

    def test_rejects_bad_tolerance(self, grid1d):
        spec = make_spec(grid1d)
        with pytest.raises(ValueError):
            solve_spd(spec, Field.zeros(grid1d), tol=2.0)


def test_all_stencils_linear(grid2d, rng):
    u, w = random_field(grid2d, rng), random_field(grid2d, rng)
    combo = u * 1.5 + w * -0.5
    for op in (laplacian, bilaplacian):
        got = op(combo)
        want = 1.5 * op(u).data - 0.5 * op(w).data
        assert np.allclose(got.data, want, atol=1e-11)
