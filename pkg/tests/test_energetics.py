import math

import numpy as np
import pytest

from platelab import (
    DampingCoefficients,
    Field,
    Scenario,
    State,
    bump_load,
    complementary_patch_damping,
    constant_damping,
    difference_quotient_energy,
    dissipation,
    energy,
    energy_balance_residual,
    evolve,
    kirchhoff_stiffness,
    linear_nonlinearity,
    lyapunov,
    make_grid,
    standard_observers,
    tail_series,
    tail_norm,
)
from platelab.model import half_box_mask, ring_profile
from _oracles import brute_force_divergence_pairing, laplacian_symbol, mode_recurrence
from conftest import random_field


def linear_scenario(grid, weak=0.4, strong=0.6, dt=1e-3):
    return Scenario(
        grid=grid, rigidity=1.0, foundation=1.0,
        damping=constant_damping(grid, weak, strong, exterior_radius=grid.half_width / 8),
        nonlinearity=linear_nonlinearity(), load=Field.zeros(grid), dt=dt,
    )


class TestEnergy:
    def test_zero_state(self, grid1d):
        sc = linear_scenario(grid1d)
        assert energy(State.zero(grid1d), sc).energy == 0.0

    def test_constant_velocity(self):
        g = make_grid(1, 3.0, 64)
        sc = linear_scenario(g)
        c = 1.3
        s = State(Field.zeros(g), Field.full(g, c))
        got = energy(s, sc)
        assert got.kinetic == pytest.approx(0.5 * c * c * 2 * g.half_width, rel=1e-13)
        assert got.bending == 0.0
        # constant displacement costs foundation energy only
        s2 = State(Field.full(g, c), Field.zeros(g))
        assert energy(s2, sc).foundation == pytest.approx(0.5 * sc.foundation * c * c * 2 * g.half_width, rel=1e-13)

    def test_sine_mode_formula(self):
        g = make_grid(1, math.pi, 128)
        sc = linear_scenario(g)
        m = 3
        k = math.pi * m / g.half_width
        u = Field.from_function(g, lambda x: np.sin(k * x))
        mu = laplacian_symbol(k, g.spacing)
        # discrete rectangle rule integrates sin^2 over the box exactly to L
        sin_sq = g.half_width
        expected = 0.5 * (sc.rigidity * mu * mu + sc.foundation) * sin_sq
        got = energy(State(u, Field.zeros(g)), sc)
        assert got.energy == pytest.approx(expected, rel=1e-10)


class TestLyapunov:
    def test_zero_state_zero_load(self, grid1d):
        sc = linear_scenario(grid1d)
        assert lyapunov(State.zero(grid1d), sc).lyapunov == 0.0

    def test_reduces_to_energy_without_nonlinearity(self, grid1d, rng):
        sc = linear_scenario(grid1d)
        s = State(random_field(grid1d, rng), random_field(grid1d, rng))
        b = lyapunov(s, sc)
        assert b.lyapunov == b.energy
        assert b.restoring == 0.0 and b.stiffness == 0.0 and b.load == 0.0

    def test_constant_closed_form(self):
        # Kirchhoff stiffness with cubic restoring on a constant state:
        # gradient terms vanish, so only foundation + quartic parts remain
        g = make_grid(1, 3.0, 64)
        sc = Scenario(
            grid=g, rigidity=1.0, foundation=2.0,
            damping=constant_damping(g, 1.0, 1.0, exterior_radius=g.half_width / 8),
            nonlinearity=kirchhoff_stiffness(a=0.0, b=1.0), load=Field.zeros(g), dt=1e-3,
        )
        c, box = 0.9, 2 * g.half_width
        got = lyapunov(State(Field.full(g, c), Field.zeros(g)), sc)
        assert got.lyapunov == pytest.approx(0.5 * 2.0 * c * c * box + 0.25 * c**4 * box, rel=1e-12)

    def test_nonnegative_nonlinear_parts(self, grid1d, rng):
        g = grid1d
        sc = Scenario(
            grid=g, rigidity=1.0, foundation=1.0,
            damping=constant_damping(g, 1.0, 1.0, exterior_radius=g.half_width / 8),
            nonlinearity=kirchhoff_stiffness(a=0.5, b=2.0), load=Field.zeros(g), dt=1e-3,
        )
        for _ in range(5):
            s = State(random_field(g, rng), random_field(g, rng))
            b = lyapunov(s, sc)
            assert b.restoring >= 0.0
            assert b.stiffness >= 0.0

    def test_continuity_in_state(self, grid1d, rng):
        sc = linear_scenario(grid1d)
        s = State(random_field(grid1d, rng), random_field(grid1d, rng))
        base = lyapunov(s, sc).lyapunov
        for eps in (1e-6, 1e-8):
            ds = State(s.u + Field.full(grid1d, eps), s.v)
            assert abs(lyapunov(ds, sc).lyapunov - base) < 1e3 * eps


class TestDissipation:
    def test_zero_velocity(self, grid1d):
        sc = linear_scenario(grid1d)
        assert dissipation(State.zero(grid1d), sc) == 0.0

    def test_weak_only_constant(self):
        # strong damping identically zero is inadmissible (floor rule), so
        # this functional check builds the scenario with the override
        g = make_grid(1, 3.0, 64)
        sc = Scenario(
            grid=g, rigidity=1.0, foundation=1.0,
            damping=constant_damping(g, 1.0, 0.0, exterior_radius=g.half_width / 8),
            nonlinearity=linear_nonlinearity(), load=Field.zeros(g), dt=1e-3,
            allow_violation=True,
        )
        c = 0.8
        s = State(Field.zeros(g), Field.full(g, c))
        assert dissipation(s, sc) == pytest.approx(c * c * 2 * g.half_width, rel=1e-13)

    def test_patch_case_against_brute_force(self):
        g = make_grid(1, 20.0, 256)
        r0 = 4.0
        cs = complementary_patch_damping(g, 1.0, 1.0, r0)
        sc = Scenario(
            grid=g, rigidity=1.0, foundation=1.0, damping=cs,
            nonlinearity=linear_nonlinearity(), load=Field.zeros(g), dt=1e-3,
        )
        # velocity supported inside |x| <= r0/2 on the left, where the weak
        # coefficient vanishes: only the strong face form contributes
        x = g.axis_coordinates()
        v = np.where((x < 0) & (np.abs(x) < r0 / 2 - 3 * g.spacing), 1.0, 0.0)
        s = State(Field.zeros(g), Field(g, v))
        weak_part = g.cell_volume * float(np.sum(cs.weak.data * v * v))
        assert weak_part == 0.0
        oracle = -brute_force_divergence_pairing(v, v, cs.strong.data, g.spacing)
        assert dissipation(s, sc) == pytest.approx(oracle, rel=1e-12)

    def test_matches_operator_pairing(self, grid2d, rng):
        sc = linear_scenario(grid2d, weak=0.3, strong=0.9)
        from platelab import div_coeff_grad
        for _ in range(5):
            v = random_field(grid2d, rng)
            s = State(Field.zeros(grid2d), v)
            strong_pairing = -grid2d.cell_volume * float(
                np.sum(div_coeff_grad(v, sc.damping.strong).data * v.data)
            )
            weak_part = grid2d.cell_volume * float(np.sum(sc.damping.weak.data * v.data**2))
            assert dissipation(s, sc) == pytest.approx(weak_part + strong_pairing, rel=1e-12)

    def test_nonnegative(self, grid1d, rng):
        sc = linear_scenario(grid1d)
        for _ in range(10):
            s = State(random_field(grid1d, rng), random_field(grid1d, rng))
            assert dissipation(s, sc) >= 0.0


class TestBalanceResidual:
    def test_zero_trajectory(self, grid1d):
        sc = linear_scenario(grid1d)
        traj = evolve(State.zero(grid1d), sc, 20 * sc.dt)
        res = energy_balance_residual(traj, sc)
        assert np.all(res.values == 0.0)
        assert res.normalized_max == 0.0

    def test_linear_residual_small_and_first_order_in_dt(self):
        # smooth random data from the canonical sampler (bounded-set regime)
        from platelab import sample_initial_data

        g = make_grid(1, 10.0, 128)
        s0 = sample_initial_data({"kind": "fourier", "target_norm": 1.0}, g, seed=3)
        maxima = {}
        for dt in (1e-3, 5e-4):
            sc = linear_scenario(g, dt=dt)
            traj = evolve(s0, sc, 5.0)
            maxima[dt] = energy_balance_residual(traj, sc).normalized_max
        assert maxima[1e-3] <= 1e-2
        assert maxima[1e-3] / maxima[5e-4] >= 1.8

    def test_telescoping_identity_exact(self, grid1d, rng):
        sc = linear_scenario(grid1d)
        s0 = State(random_field(grid1d, rng), random_field(grid1d, rng))
        traj = evolve(s0, sc, 30 * sc.dt)
        res = energy_balance_residual(traj, sc)
        lyap = traj.series["lyapunov"]
        diss = traj.series["dissipation"]
        identity = lyap[-1] - lyap[0] + sc.dt * float(np.sum(diss[1:]))
        assert res.telescoped() == pytest.approx(identity, rel=1e-12, abs=1e-15)

    def test_requires_stride_one(self, grid1d, rng):
        sc = linear_scenario(grid1d)
        s0 = State(random_field(grid1d, rng), random_field(grid1d, rng))
        traj = evolve(s0, sc, 20 * sc.dt, stride=2)
        with pytest.raises(ValueError):
            energy_balance_residual(traj, sc)


class TestTailSeries:
    def test_zero_trajectory(self, grid1d):
        sc = linear_scenario(grid1d)
        traj = evolve(State.zero(grid1d), sc, 10 * sc.dt, record_snapshots=True)
        series = tail_series(traj, [1.0, 1.5])
        assert all(np.all(v == 0.0) for v in series.values())

    def test_radius_ordering_pointwise(self, rng):
        g = make_grid(1, 10.0, 128)
        sc = linear_scenario(g)
        s0 = State(random_field(g, rng), random_field(g, rng))
        traj = evolve(s0, sc, 10 * sc.dt, record_snapshots=True, stride=2)
        series = tail_series(traj, [2.0, 3.0, 4.0])
        assert np.all(series[3.0] <= series[2.0] + 1e-12)
        assert np.all(series[4.0] <= series[3.0] + 1e-12)

    def test_matches_observer_values(self, rng):
        g = make_grid(1, 10.0, 128)
        sc = linear_scenario(g)
        s0 = State(random_field(g, rng), random_field(g, rng))
        traj = evolve(
            s0, sc, 10 * sc.dt, observers=standard_observers(radii=[2.5]),
            record_snapshots=True,
        )
        series = tail_series(traj, [2.5])
        assert np.allclose(series[2.5], traj.series["tail_r2.5"], atol=0.0)

    def test_needs_snapshots(self, grid1d):
        sc = linear_scenario(grid1d)
        traj = evolve(State.zero(grid1d), sc, 5 * sc.dt)
        with pytest.raises(ValueError):
            tail_series(traj, [1.0])


class TestDifferenceQuotient:
    def test_stationary_trajectory_is_zero(self):
        # a load balanced by the foundation term freezes the dynamics:
        # start at the exact discrete equilibrium of the linear model
        g = make_grid(1, 5.0, 64)
        sc = linear_scenario(g)
        u_eq = Field.full(g, 0.7)
        load = Field(g, sc.foundation * u_eq.data)  # bilaplacian of a constant is zero
        sc_loaded = Scenario(
            grid=g, rigidity=sc.rigidity, foundation=sc.foundation, damping=sc.damping,
            nonlinearity=linear_nonlinearity(), load=load, dt=sc.dt,
        )
        traj = evolve(State(u_eq, Field.zeros(g)), sc_loaded, 40 * sc.dt, record_snapshots=True)
        times, values = difference_quotient_energy(traj, sc_loaded, 10 * sc.dt)
        assert np.all(values < 1e-22)

    def test_single_mode_matches_recurrence_oracle(self):
        g = make_grid(1, math.pi, 64)
        weak, strong = 0.4, 0.3
        sc = linear_scenario(g, weak=weak, strong=strong, dt=1e-3)
        m = 2
        k = math.pi * m / g.half_width
        mu = laplacian_symbol(k, g.spacing)
        u0, v0 = 0.8, -0.2
        s0 = State(
            Field.from_function(g, lambda x: u0 * np.sin(k * x)),
            Field.from_function(g, lambda x: v0 * np.sin(k * x)),
        )
        stride, j, n = 5, 2, 400
        traj = evolve(s0, sc, n * sc.dt, stride=stride, record_snapshots=True)
        sigma = j * stride * sc.dt
        times, values = difference_quotient_energy(traj, sc, sigma)

        us, _ = mode_recurrence(mu, weak, strong, 1.0, 1.0, sc.dt, n, u0, v0)
        u_samples = us[::stride]
        sin_sq = g.half_width  # discrete L2 norm of the mode over the box
        expected = []
        for i in range(len(values)):
            q0 = (u_samples[i + j] - u_samples[i]) / sigma
            q1 = (u_samples[i + 2 * j] - u_samples[i + j]) / sigma
            w = (q1 - q0) / sigma
            expected.append(0.5 * (w * w + (mu * mu + 1.0) * q0 * q0) * sin_sq)
        assert np.allclose(values, expected, rtol=1e-8, atol=1e-12)

    def test_lag_must_sit_on_snapshot_lattice(self, grid1d, rng):
        sc = linear_scenario(grid1d)
        s0 = State(random_field(grid1d, rng), random_field(grid1d, rng))
        traj = evolve(s0, sc, 40 * sc.dt, stride=4, record_snapshots=True)
        with pytest.raises(ValueError):
            difference_quotient_energy(traj, sc, 2.5 * sc.dt)

    def test_lag_halving_insensitivity_on_damped_run(self, rng):
        g = make_grid(1, 10.0, 128)
        sc = Scenario(
            grid=g, rigidity=1.0, foundation=1.0,
            damping=complementary_patch_damping(g, 0.3, 0.3, 2.0),
            nonlinearity=kirchhoff_stiffness(), load=bump_load(g, 1.0, 1.0), dt=1e-3,
        )
        s0 = State(random_field(g, rng, 0.2), random_field(g, rng, 0.2))
        traj = evolve(s0, sc, 4.0, stride=5, record_snapshots=True)
        _, coarse = difference_quotient_energy(traj, sc, 10 * sc.dt)
        _, fine = difference_quotient_energy(traj, sc, 5 * sc.dt)
        half = len(coarse) // 2
        plateau_coarse = float(np.median(coarse[half:]))
        plateau_fine = float(np.median(fine[half:len(coarse)]))
        assert abs(plateau_coarse - plateau_fine) / plateau_fine < 0.10
