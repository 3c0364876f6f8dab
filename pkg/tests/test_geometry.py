import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from masense.geometry import (
    AngleVector,
    DirectionVector,
    MovementRegion,
    Trajectory,
    angles_from_direction,
    apv_covariance,
    check_feasibility,
    direction_from_angles,
    position_covariance,
    position_covariance_quadratic,
    read_trajectory_csv,
    rotation_to_target,
    tangent_frame,
    trajectory_from_velocities,
    write_trajectory_csv,
)

angles = st.tuples(
    st.floats(min_value=0.0, max_value=np.pi),
    st.floats(min_value=0.0, max_value=2.0 * np.pi),
)


def random_rotation(rng):
    q, r = np.linalg.qr(rng.standard_normal((3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


class TestAngleVector:
    def test_rejects_out_of_range_theta(self):
        with pytest.raises(ValueError):
            AngleVector(-0.1, 0.0)
        with pytest.raises(ValueError):
            AngleVector(np.pi + 0.1, 0.0)

    def test_rejects_out_of_range_phi(self):
        with pytest.raises(ValueError):
            AngleVector(1.0, -0.5)
        with pytest.raises(ValueError):
            AngleVector(1.0, 2.0 * np.pi + 0.5)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            AngleVector(np.nan, 0.0)

    @given(angles)
    def test_accepts_full_domain(self, pair):
        chi = AngleVector(*pair)
        assert chi.theta == pair[0]
        assert chi.phi == pair[1]


class TestDirectionVector:
    def test_rejects_non_unit(self):
        with pytest.raises(ValueError):
            DirectionVector(np.array([1.0, 1.0, 0.0]))

    def test_pole_case(self):
        for phi in (0.0, 1.0, 5.0):
            eta = direction_from_angles(AngleVector(0.0, phi))
            np.testing.assert_allclose(eta.components, [0.0, 0.0, 1.0], atol=1e-15)

    def test_axis_case(self):
        eta = direction_from_angles(AngleVector(np.pi / 2, 0.0))
        np.testing.assert_allclose(eta.components, [1.0, 0.0, 0.0], atol=1e-15)

    def test_45_45_components(self):
        eta = direction_from_angles(AngleVector.from_degrees(45, 45))
        np.testing.assert_allclose(eta.components, [0.5, 0.5, np.sqrt(0.5)], atol=1e-12)

    @given(angles)
    @settings(max_examples=200)
    def test_round_trip_through_angles(self, pair):
        # arccos conditioning near the poles limits the round trip to
        # about sqrt(eps) in the direction components
        chi = AngleVector(*pair)
        eta = direction_from_angles(chi)
        back = direction_from_angles(angles_from_direction(eta))
        np.testing.assert_allclose(back.components, eta.components, atol=5e-8)


class TestTangentFrame:
    def test_frame_at_pole(self):
        frame = tangent_frame(AngleVector(0.0, 0.0))
        np.testing.assert_allclose(frame.f, [1.0, 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(frame.g, [0.0, 1.0, 0.0], atol=1e-15)

    def test_frame_at_equator(self):
        frame = tangent_frame(AngleVector(np.pi / 2, 0.0))
        np.testing.assert_allclose(frame.f, [0.0, 0.0, -1.0], atol=1e-15)
        np.testing.assert_allclose(frame.g, [0.0, 1.0, 0.0], atol=1e-15)

    def test_triad_orthonormal_bulk(self):
        # 1e4 random angle pairs, all triad products within 1e-12
        rng = np.random.default_rng(0)
        thetas = rng.uniform(0, np.pi, 10_000)
        phis = rng.uniform(0, 2 * np.pi, 10_000)
        st_, ct = np.sin(thetas), np.cos(thetas)
        sp, cp = np.sin(phis), np.cos(phis)
        eta = np.stack([st_ * cp, st_ * sp, ct])
        f = np.stack([ct * cp, ct * sp, -st_])
        g = np.stack([-sp, cp, np.zeros_like(sp)])
        assert np.abs((f * f).sum(0) - 1).max() < 1e-12
        assert np.abs((g * g).sum(0) - 1).max() < 1e-12
        assert np.abs((f * g).sum(0)).max() < 1e-12
        assert np.abs((f * eta).sum(0)).max() < 1e-12
        assert np.abs((g * eta).sum(0)).max() < 1e-12

    @given(angles)
    @settings(max_examples=100)
    def test_triad_orthonormal(self, pair):
        chi = AngleVector(*pair)
        frame = tangent_frame(chi)
        eta = direction_from_angles(chi).components
        assert abs(frame.f @ frame.g) < 1e-12
        assert abs(frame.f @ eta) < 1e-12
        assert abs(frame.g @ eta) < 1e-12


class TestRotationToTarget:
    def test_identity_at_pole(self):
        np.testing.assert_allclose(rotation_to_target(AngleVector(0.0, 0.0)), np.eye(3), atol=1e-15)

    def test_sends_target_to_z(self):
        chi = AngleVector.from_degrees(45, 45)
        q = rotation_to_target(chi)
        eta = np.array([0.5, 0.5, np.sqrt(0.5)])
        np.testing.assert_allclose(q @ eta, [0.0, 0.0, 1.0], atol=1e-12)

    @given(angles)
    @settings(max_examples=100)
    def test_orthonormal(self, pair):
        q = rotation_to_target(AngleVector(*pair))
        assert np.abs(q @ q.T - np.eye(3)).max() < 1e-12


class TestTrajectory:
    def test_zero_velocity_stays_put(self):
        traj = trajectory_from_velocities([1.0, 2.0, 3.0], np.zeros((3, 9)), 0.1)
        assert traj.n_snapshots == 10
        np.testing.assert_array_equal(traj.positions, np.tile([[1.0], [2.0], [3.0]], 10))

    def test_single_step(self):
        traj = trajectory_from_velocities(np.zeros(3), np.array([[1.0], [0.0], [0.0]]), 1.0)
        np.testing.assert_allclose(traj.positions[:, 1], [1.0, 0.0, 0.0])

    def test_two_equal_steps_accumulate(self):
        v = np.array([[0.0, 0.0], [0.0, 0.0], [2.0, 2.0]])
        traj = trajectory_from_velocities(np.zeros(3), v, 0.5)
        np.testing.assert_allclose(traj.positions[:, 2], [0.0, 0.0, 2.0])

    def test_requires_two_snapshots(self):
        with pytest.raises(ValueError):
            Trajectory(np.zeros(3), np.zeros((3, 0)), 1.0)

    def test_requires_positive_period(self):
        with pytest.raises(ValueError):
            Trajectory(np.zeros(3), np.zeros((3, 2)), 0.0)

    @given(st.integers(min_value=2, max_value=40), st.floats(min_value=0.01, max_value=10.0))
    @settings(max_examples=50)
    def test_cumulative_sum_relation(self, n, ts):
        rng = np.random.default_rng(n)
        v = rng.standard_normal((3, n - 1))
        r1 = rng.standard_normal(3)
        traj = Trajectory(r1, v, ts)
        expected = r1[:, None] + ts * np.concatenate(
            [np.zeros((3, 1)), np.cumsum(v, axis=1)], axis=1
        )
        np.testing.assert_array_equal(traj.positions, expected)

    def test_positions_read_only(self):
        traj = trajectory_from_velocities(np.zeros(3), np.ones((3, 3)), 1.0)
        with pytest.raises(ValueError):
            traj.positions[0, 0] = 5.0


class TestApvCovariance:
    def test_two_point_variance(self):
        traj = Trajectory.from_positions(np.array([[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]), 1.0)
        np.testing.assert_allclose(apv_covariance(traj).u, np.diag([0.25, 0.0, 0.0]), atol=1e-15)

    def test_uniform_circle(self):
        # closed-form sums of cos^2/sin^2 over uniform angles give r^2/2
        n, r = 16, 2.5
        ang = 2 * np.pi * np.arange(n) / n
        pos = np.vstack([r * np.cos(ang), r * np.sin(ang), np.zeros(n)])
        u = position_covariance(pos)
        np.testing.assert_allclose(u, np.diag([r**2 / 2, r**2 / 2, 0.0]), atol=1e-12 * r**2)

    def test_three_orthogonal_circles(self):
        # brute-force summation oracle for the composite path
        n, r = 120, 1.7
        m = n // 3
        ang = 2 * np.pi * np.arange(m) / m
        circles = [
            np.vstack([r * np.cos(ang), np.zeros(m), r * np.sin(ang)]),
            np.vstack([r * np.cos(ang), r * np.sin(ang), np.zeros(m)]),
            np.vstack([np.zeros(m), r * np.cos(ang), r * np.sin(ang)]),
        ]
        pos = np.concatenate(circles, axis=1)
        brute = np.zeros((3, 3))
        mean = pos.mean(axis=1)
        for i in range(n):
            d = pos[:, i] - mean
            brute += np.outer(d, d)
        brute /= n
        u = position_covariance(pos)
        np.testing.assert_allclose(u, brute, atol=1e-12 * r**2)
        np.testing.assert_allclose(u, (r**2 / 3) * np.eye(3), atol=1e-9 * r**2)

    def test_translation_invariance(self):
        rng = np.random.default_rng(3)
        pos = rng.standard_normal((3, 50))
        u = position_covariance(pos)
        shifted = position_covariance(pos + rng.standard_normal(3)[:, None])
        np.testing.assert_allclose(shifted, u, atol=1e-12 * np.abs(u).max())

    def test_rotation_covariance(self):
        rng = np.random.default_rng(4)
        pos = rng.standard_normal((3, 50))
        u = position_covariance(pos)
        q = random_rotation(rng)
        np.testing.assert_allclose(
            position_covariance(q @ pos), q @ u @ q.T, atol=1e-12 * np.abs(u).max()
        )

    def test_quadratic_form_agreement(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            pos = rng.standard_normal((3, int(rng.integers(2, 100))))
            u1 = position_covariance(pos)
            u2 = position_covariance_quadratic(pos)
            assert np.abs(u1 - u2).max() <= 1e-12 * max(np.abs(u1).max(), 1e-30)


class TestCheckFeasibility:
    def region(self):
        return MovementRegion.cube(2.0)

    def test_stationary_center_feasible(self):
        traj = trajectory_from_velocities(np.zeros(3), np.zeros((3, 5)), 1.0)
        report = check_feasibility(traj, self.region(), vmax=1.0)
        assert report.feasible
        assert report.worst_speed_excess == 0.0

    def test_exact_boundary_step_feasible(self):
        v = np.array([[1.0], [0.0], [0.0]])
        traj = trajectory_from_velocities([-0.5, 0.0, 0.0], v, 1.0)
        assert check_feasibility(traj, self.region(), vmax=1.0).feasible

    def test_overspeed_reported_with_magnitude(self):
        v = np.array([[1.01], [0.0], [0.0]])
        traj = trajectory_from_velocities([-0.5, 0.0, 0.0], v, 1.0)
        report = check_feasibility(traj, self.region(), vmax=1.0)
        assert not report.feasible
        assert report.speed_violations[0][0] == 0
        assert abs(report.worst_speed_excess - 0.01) < 1e-12

    def test_region_violation_indices(self):
        v = np.array([[10.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
        traj = trajectory_from_velocities(np.zeros(3), v, 1.0)
        report = check_feasibility(traj, self.region(), vmax=100.0)
        assert not report.feasible
        assert [i for i, _ in report.region_violations] == [1, 2]
        assert abs(report.worst_region_excess - 9.0) < 1e-12

    def test_movement_region_validation(self):
        with pytest.raises(ValueError):
            MovementRegion(np.zeros(3), [1.0, 0.0, 1.0])


class TestTrajectoryCsv:
    def test_round_trip_bits(self, tmp_path):
        rng = np.random.default_rng(9)
        traj = Trajectory(rng.standard_normal(3), rng.standard_normal((3, 17)), 1e-3)
        path = tmp_path / "traj.csv"
        write_trajectory_csv(traj, path)
        back = read_trajectory_csv(path)
        np.testing.assert_array_equal(back.positions, traj.positions)
        np.testing.assert_array_equal(back.velocities, traj.velocities)
        assert back.sampling_period == traj.sampling_period
        # a second write must be byte-identical
        path2 = tmp_path / "traj2.csv"
        write_trajectory_csv(back, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(ValueError):
            read_trajectory_csv(path)
