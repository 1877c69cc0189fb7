"""Tests for bogs.analysis module."""

import math

import numpy as np
import pytest

from bogs.errors import ConfigError, InsufficientDataError
from bogs.spectral import Grid, DyadicCutoff, zero_field, l2_norm
from bogs.profiles import cosine, gaussian, random_ensemble
from bogs.evolution import Trajectory, SolverConfig
from bogs.equations import EquationKind, EquationSpec
from bogs.analysis import (
    MixedNormSpec,
    MixedNormAccumulator,
    dilate,
    x_norm,
    y_norm,
    mixed_norm,
    spacetime_l2,
    scaling_check,
    project_trajectory,
    resolvable_scales,
    trapezoid_weights,
    spacetime_l2_check,
    spacetime_l2_ensemble,
)

MBO = EquationSpec(EquationKind.MBO)
BO = EquationSpec(EquationKind.BO)


def _stationary(grid: Grid, samples: np.ndarray, times: list[float]) -> Trajectory:
    data = np.tile(samples, (len(times), 1))
    return Trajectory(MBO, grid, np.asarray(times), data)


class TestMixedNorm:
    def test_constant(self, small_grid: Grid):
        c = 0.7
        traj = _stationary(small_grid, np.full(small_grid.n_points, c), [0.0, 0.5, 1.0])
        L = small_grid.length
        assert mixed_norm(traj, MixedNormSpec('x', 2, 2)) == pytest.approx(c * math.sqrt(L))
        assert mixed_norm(traj, MixedNormSpec('x', 4, math.inf)) == pytest.approx(c * L**0.25)
        assert mixed_norm(traj, MixedNormSpec('t', 4, 2)) == pytest.approx(c * math.sqrt(L))

    def test_l2_matches_flat_norm(self, small_grid: Grid):
        times = np.linspace(0.0, 1.0, 5)
        data = np.stack([np.cos(small_grid.x / 4) * (1 + t) for t in times])
        traj = Trajectory(MBO, small_grid, times, data)
        assert mixed_norm(traj, MixedNormSpec('t', 2, 2)) == pytest.approx(spacetime_l2(traj))
        assert mixed_norm(traj, MixedNormSpec('x', 2, 2)) == pytest.approx(spacetime_l2(traj))

    def test_separable(self, small_grid: Grid):
        times = np.linspace(0.0, 2.0, 9)
        g = 1 + times
        f = np.exp(-(small_grid.x**2))
        traj = Trajectory(MBO, small_grid, times, np.outer(g, f))
        expected = (small_grid.dx * np.sum(f**4)) ** 0.25 * g.max()
        assert mixed_norm(traj, MixedNormSpec('x', 4, math.inf)) == pytest.approx(expected)
        sup_x = f.max()
        expected_t = math.sqrt(float(np.sum(trapezoid_weights(times) * (g * sup_x) ** 2)))
        assert mixed_norm(traj, MixedNormSpec('t', 2, math.inf)) == pytest.approx(expected_t)

    def test_invalid_spec(self):
        with pytest.raises(ConfigError):
            MixedNormSpec('x', 0.5, 2)
        with pytest.raises(ConfigError):
            MixedNormSpec('y', 2, 2)  # pyright: ignore[reportArgumentType]

    def test_empty_accumulator(self):
        acc = MixedNormAccumulator(MixedNormSpec('x', 2, 2), 0.1, [0.0, 1.0])
        with pytest.raises(InsufficientDataError):
            acc.result()

    def test_trapezoid_weights(self):
        w = trapezoid_weights([0.0, 0.5, 1.0, 1.5])
        np.testing.assert_allclose(w, [0.25, 0.5, 0.5, 0.25])
        assert trapezoid_weights([3.0]).tolist() == [0.0]


class TestXNorm:
    def test_zero_trajectory(self, small_grid: Grid):
        traj = _stationary(small_grid, np.zeros(small_grid.n_points), [0.0, 0.1, 0.2])
        report = x_norm(traj)
        assert report.total == 0.0
        assert set(report.blocks) == {'sup_Hs', 'smoothing', 'maximal_2', 'maximal_4'}

    def test_homogeneous(self, small_grid: Grid):
        traj = _stationary(small_grid, np.asarray(gaussian(small_grid, 1.0).samples), [0.0, 0.1, 0.2])
        base = x_norm(traj, 1.0)
        scaled = x_norm(traj.scaled(3.0), 1.0)
        for name, value in base.blocks.items():
            assert scaled.blocks[name] == pytest.approx(3.0 * value, rel=1e-12)

    def test_sup_block_of_cosine(self, small_grid: Grid):
        k = 2 * 2 * math.pi / small_grid.length
        a = 0.5
        traj = _stationary(small_grid, np.asarray(cosine(small_grid, a, k).samples), [0.0, 1.0])
        expected = a * math.sqrt(small_grid.length / 2) * (1 + k**2) ** 0.25
        assert x_norm(traj).blocks['sup_Hs'] == pytest.approx(expected, rel=1e-12)

    def test_s_below_half(self, small_grid: Grid):
        traj = _stationary(small_grid, np.zeros(small_grid.n_points), [0.0, 1.0])
        with pytest.raises(ConfigError, match='analysis.s'):
            x_norm(traj, 0.25)

    def test_rows_end_with_total(self, small_grid: Grid):
        traj = _stationary(small_grid, np.asarray(gaussian(small_grid, 1.0).samples), [0.0, 1.0])
        rows = x_norm(traj).rows()
        assert rows[-1][1] == 'total'
        assert rows[-1][2] == pytest.approx(sum(float(r[2]) for r in rows[:-1]))


class TestYNorm:
    def test_stationary_cosine(self, small_grid: Grid):
        k = 2 * 2 * math.pi / small_grid.length
        a = 0.5
        traj = _stationary(small_grid, np.asarray(cosine(small_grid, a, k).samples), [0.0, 0.5, 1.0])
        report = y_norm(traj)
        assert report.blocks['smoothing'] == pytest.approx(a * k, rel=1e-10)
        assert report.blocks['maximal_2'] == pytest.approx(a * math.sqrt(small_grid.length / 2))


class TestProjection:
    def test_blocks_sum_to_identity(self, small_grid: Grid):
        traj = _stationary(small_grid, np.asarray(gaussian(small_grid, 1.0, 1.0).samples), [0.0, 1.0])
        cutoff = DyadicCutoff()
        total = sum(
            (project_trajectory(traj, sel, cutoff).data for sel in cutoff.selectors(small_grid)),
            np.zeros_like(traj.data),
        )
        np.testing.assert_allclose(total, traj.data, atol=1e-12)

    def test_resolvable_scales(self, grid: Grid):
        assert resolvable_scales(grid) == [1, 2, 4, 8]
        assert resolvable_scales(grid, [2, 4]) == [2, 4]


class TestSpacetimeL2:
    def test_zero_data(self, small_grid: Grid):
        check = spacetime_l2_check(zero_field(small_grid), MBO, SolverConfig(dt=0.05, t_end=0.2))
        assert check.lhs == 0.0
        assert check.ratio == 0.0

    def test_sides_positive(self, small_grid: Grid):
        check = spacetime_l2_check(gaussian(small_grid, 0.3), MBO, SolverConfig(dt=0.05, t_end=0.2))
        assert check.lhs > 0
        assert check.rhs > 0
        assert math.isfinite(check.ratio)

    def test_ensemble_order(self, small_grid: Grid):
        fields = random_ensemble(small_grid, 2, 40, (0.1, 0.3), (0.0, 4.0), width=8.0)
        members = spacetime_l2_ensemble(fields, MBO, SolverConfig(dt=0.05, t_end=0.1))
        assert [m.seed for m in members] == [40, 41]
        assert all(m.check.ratio > 0 for m in members)


class TestScaling:
    def test_identity_scale(self, small_grid: Grid):
        report = scaling_check(gaussian(small_grid, 0.5), 1, MBO, SolverConfig(dt=0.01, t_end=0.1))
        assert report.static_error == 0.0
        assert report.dynamic_mismatch == 0.0

    def test_dilate_static(self, small_grid: Grid):
        u0 = gaussian(small_grid, 0.5)
        big = dilate(u0, 2)
        assert big.grid == Grid(256, 32 * math.pi)
        assert l2_norm(big) == pytest.approx(l2_norm(u0), rel=1e-10)

    def test_doubling(self, small_grid: Grid):
        report = scaling_check(gaussian(small_grid, 0.5, 4.0), 2, MBO, SolverConfig(dt=0.01, t_end=0.1))
        assert report.static_error < 1e-10
        assert report.hdot_ratio == pytest.approx(2**-0.5, rel=1e-10)
        assert report.dynamic_mismatch < 1e-8
        assert [row[0] for row in report.rows()] == [
            'lam',
            'l2_ratio',
            'hdot_half_ratio',
            'static_error',
            'dynamic_mismatch',
        ]

    def test_dilate_with_bo_exponent(self, small_grid: Grid):
        u0 = gaussian(small_grid, 0.5)
        big = dilate(u0, 2, 1.0)
        assert l2_norm(big) == pytest.approx(2**-0.5 * l2_norm(u0), rel=1e-10)
        assert float(np.abs(big.samples).max()) == pytest.approx(0.25, rel=1e-6)

    def test_bo_doubling(self, small_grid: Grid):
        u0 = gaussian(small_grid, 0.5, 4.0)
        report = scaling_check(u0, 2, BO, SolverConfig(dt=0.01, t_end=0.1))
        assert report.static_error < 1e-10
        assert report.l2_ratio == pytest.approx(2**-0.5, rel=1e-10)
        assert report.hdot_ratio == pytest.approx(2**-1, rel=1e-10)
        assert report.dynamic_mismatch < 1e-8

    def test_max_points_guard(self, small_grid: Grid):
        with pytest.raises(ConfigError, match='max_points'):
            scaling_check(
                gaussian(small_grid, 0.5), 4, MBO, SolverConfig(dt=0.01, t_end=0.1), max_points=256
            )

    @pytest.mark.parametrize('lam', [0, 2.5, True])
    def test_lam_must_be_positive_integer(self, small_grid: Grid, lam: int):
        with pytest.raises(ConfigError, match='analysis.lam'):
            scaling_check(gaussian(small_grid, 0.5), lam, MBO, SolverConfig(dt=0.01, t_end=0.1))


@pytest.mark.slow
class TestEnsembleStability:
    def test_doubling_changes_max_ratio_little(self, grid: Grid):
        fields = random_ensemble(grid, 40, 0, (0.1, 0.5), (0.0, 4.0), width=16.0)
        members = spacetime_l2_ensemble(fields, MBO, SolverConfig(dt=0.01, t_end=0.2))
        ratios = [m.check.ratio for m in members]
        assert all(math.isfinite(r) for r in ratios)
        first, full = max(ratios[:20]), max(ratios)
        assert (full - first) / first < 0.2
