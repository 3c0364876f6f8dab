import numpy as np
import pytest

from masense.benchmarks import gen_circle, gen_circle3
from masense.geometry import (
    AngleVector,
    Trajectory,
    angles_from_direction,
    direction_from_angles,
    position_covariance,
    trajectory_from_velocities,
)
from masense.metrics import (
    SensingScenario,
    correlation_map,
    crb_from_fim,
    fim_oracle,
    geometry_factor,
    geometry_factor_trace_form,
    isotropy_report,
    msaeb,
    msaeb_from_covariance,
    msaeb_single_direction_rotated,
    planar_decomposition,
    steering_vector,
)

LAM = 0.05


def make_scenario(n, snr_db=0.0):
    return SensingScenario.from_snr_db(snr_db, LAM, n, sampling_period=1e-3)


def random_walk(rng, n, scale=0.05, planar=False):
    ts = 1e-3
    v = (scale / ts) * rng.standard_normal((3, n - 1))
    if planar:
        v[2] = 0.0
    r1 = scale * rng.standard_normal(3)
    if planar:
        r1[2] = 0.0
    return Trajectory(r1, v, ts)


class TestSensingScenario:
    def test_rho_value(self):
        scen = SensingScenario(LAM, 2.0, 0.5, 1.0 + 1.0j, 1e-3, 100)
        expected = 0.5 * LAM**2 / (8 * np.pi**2 * 2.0 * 100 * 2.0)
        assert abs(scen.rho - expected) <= 1e-12 * expected

    def test_validation(self):
        with pytest.raises(ValueError):
            SensingScenario(0.0, 1.0, 1.0, 1.0, 1e-3, 10)
        with pytest.raises(ValueError):
            SensingScenario(LAM, 1.0, 1.0, 1.0, 1e-3, 1)


class TestSteeringVector:
    def test_stationary_gives_ones(self):
        traj = trajectory_from_velocities(np.zeros(3), np.zeros((3, 7)), 1.0)
        alpha = steering_vector(traj, direction_from_angles(AngleVector(0.3, 0.4)), LAM)
        np.testing.assert_allclose(alpha, np.ones(8), atol=1e-14)

    def test_half_wavelength_alternation(self):
        n = 8
        pos = np.vstack([LAM / 2 * np.arange(n), np.zeros(n), np.zeros(n)])
        traj = Trajectory.from_positions(pos, 1.0)
        alpha = steering_vector(traj, np.array([1.0, 0.0, 0.0]), LAM)
        np.testing.assert_allclose(alpha, (-1.0 + 0j) ** np.arange(n), atol=1e-12)

    def test_unit_modulus(self):
        rng = np.random.default_rng(0)
        traj = random_walk(rng, 50)
        alpha = steering_vector(traj, direction_from_angles(AngleVector(1.0, 2.0)), LAM)
        assert np.abs(np.abs(alpha) - 1.0).max() < 1e-12


class TestGeometryFactor:
    def test_isotropic_covariance(self):
        tau = 0.37
        rng = np.random.default_rng(1)
        for _ in range(20):
            chi = AngleVector(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
            assert abs(geometry_factor(tau * np.eye(3), chi) - 2.0 / tau) < 1e-12 / tau

    def test_planar_circle_at_pole(self):
        r = 0.2
        u = np.diag([r**2 / 2, r**2 / 2, 0.0])
        assert abs(geometry_factor(u, AngleVector(0.0, 0.0)) - 4.0 / r**2) < 1e-10 / r**2

    def test_planar_circle_at_equator_diverges(self):
        r = 0.2
        u = np.diag([r**2 / 2, r**2 / 2, 0.0])
        assert geometry_factor(u, AngleVector(np.pi / 2, 0.3)) == np.inf

    def test_trace_form_agreement(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            traj = random_walk(rng, int(rng.integers(8, 40)))
            chi = AngleVector(rng.uniform(0.05, np.pi - 0.05), rng.uniform(0, 2 * np.pi))
            u = position_covariance(traj.positions)
            a = geometry_factor(u, chi)
            b = geometry_factor_trace_form(u, chi)
            assert abs(a - b) <= 1e-10 * a


class TestMsaeb:
    def test_isotropic_trajectory_uniform_bound(self):
        traj = gen_circle3(240, 1e-3)
        scen = make_scenario(traj.n_snapshots)
        rng = np.random.default_rng(3)
        values = [
            msaeb(traj, AngleVector(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)), scen).msaeb
            for _ in range(100)
        ]
        assert max(values) / min(values) - 1.0 < 1e-9

    def test_circle_at_pole_value(self):
        traj = gen_circle(100, 1e-3)
        scen = make_scenario(traj.n_snapshots)
        u = position_covariance(traj.positions)
        r2 = 2 * u[0, 0]  # radius squared
        res = msaeb(traj, AngleVector(0.0, 0.0), scen)
        assert abs(res.msaeb - 4.0 * scen.rho / r2) < 1e-10 * res.msaeb

    def test_planar_bound_grows_toward_plane(self):
        traj = gen_circle(100, 1e-3)
        scen = make_scenario(traj.n_snapshots)
        low = msaeb(traj, AngleVector.from_degrees(30, 10), scen).msaeb
        high = msaeb(traj, AngleVector.from_degrees(60, 10), scen).msaeb
        assert high > low

    def test_decomposition_identity(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            traj = random_walk(rng, 30)
            chi = AngleVector(rng.uniform(0.05, np.pi - 0.05), rng.uniform(0, 2 * np.pi))
            res = msaeb(traj, chi, make_scenario(30))
            recon = res.crb_theta + np.sin(chi.theta) ** 2 * res.crb_phi
            assert abs(recon - res.msaeb) <= 1e-10 * res.msaeb

    def test_snapshot_mismatch_rejected(self):
        traj = gen_circle(100, 1e-3)
        with pytest.raises(ValueError):
            msaeb(traj, AngleVector(1.0, 1.0), make_scenario(99))


class TestRotatedForm:
    def test_motion_along_target_is_invisible(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            traj = random_walk(rng, 40)
            chi = AngleVector(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
            scen = make_scenario(40)
            base = msaeb_single_direction_rotated(traj, chi, scen).msaeb
            eta = direction_from_angles(chi).components
            drift = np.outer(eta, rng.standard_normal(40))
            shifted = Trajectory.from_positions(traj.positions + drift, traj.sampling_period)
            moved = msaeb_single_direction_rotated(shifted, chi, scen).msaeb
            assert abs(moved - base) <= 1e-10 * base

    def test_agreement_with_closed_form(self):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            traj = random_walk(rng, int(rng.integers(4, 24)))
            chi = AngleVector(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
            scen = make_scenario(traj.n_snapshots)
            a = msaeb(traj, chi, scen).msaeb
            b = msaeb_single_direction_rotated(traj, chi, scen).msaeb
            if np.isfinite(a):
                assert abs(a - b) <= 1e-10 * a
            else:
                assert not np.isfinite(b)

    def test_line_trajectory_unbounded(self):
        n = 20
        pos = np.vstack([np.arange(n, dtype=float), np.zeros(n), np.zeros(n)])
        traj = Trajectory.from_positions(pos, 1.0)
        res = msaeb_single_direction_rotated(traj, AngleVector(0.3, 0.9), make_scenario(n))
        assert res.msaeb == np.inf


class TestFimOracle:
    def test_gain_block_closed_form(self):
        rng = np.random.default_rng(7)
        traj = random_walk(rng, 32)
        scen = make_scenario(32)
        blocks = fim_oracle(traj, AngleVector(1.0, 2.0), scen=scen)
        expected = (2 * scen.snapshots / scen.noise_power) * np.eye(2)
        np.testing.assert_allclose(blocks.j_betabeta, expected, rtol=1e-10)

    def test_oracle_matches_closed_form(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            traj = random_walk(rng, int(rng.integers(8, 65)))
            chi = AngleVector(rng.uniform(np.deg2rad(5), np.deg2rad(175)), rng.uniform(0, 2 * np.pi))
            scen = SensingScenario(
                LAM,
                float(rng.uniform(0.5, 2)),
                float(rng.uniform(0.5, 2)),
                complex(rng.standard_normal(), rng.standard_normal()),
                1e-3,
                traj.n_snapshots,
            )
            res = msaeb(traj, chi, scen)
            crb_t, crb_p = crb_from_fim(fim_oracle(traj, chi, scen=scen))
            assert abs(res.crb_theta - crb_t) <= 1e-6 * crb_t
            assert abs(res.crb_phi - crb_p) <= 1e-6 * crb_p

    def test_analytic_vs_finite_difference(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            traj = random_walk(rng, 24)
            chi = AngleVector(rng.uniform(0.2, np.pi - 0.2), rng.uniform(0, 2 * np.pi))
            scen = make_scenario(24)
            a = fim_oracle(traj, chi, scen=scen, derivatives="analytic")
            b = fim_oracle(traj, chi, scen=scen, derivatives="finite-difference")
            for lhs, rhs in zip(crb_from_fim(a), crb_from_fim(b)):
                assert abs(lhs - rhs) <= 1e-5 * lhs

    def test_pole_reports_unbounded(self):
        rng = np.random.default_rng(10)
        traj = random_walk(rng, 16)
        blocks = fim_oracle(traj, AngleVector(0.0, 0.0), scen=make_scenario(16))
        assert crb_from_fim(blocks)[1] == np.inf

    def test_lambda_block_symmetric_psd(self):
        rng = np.random.default_rng(20)
        for _ in range(20):
            traj = random_walk(rng, 24)
            chi = AngleVector(rng.uniform(0.2, np.pi - 0.2), rng.uniform(0, 2 * np.pi))
            lam = fim_oracle(traj, chi, scen=make_scenario(24)).lam
            assert np.abs(lam - lam.T).max() <= 1e-10 * np.abs(lam).max()
            assert np.linalg.eigvalsh(0.5 * (lam + lam.T)).min() >= -1e-12 * np.abs(lam).max()


class TestIsotropyReport:
    def test_scaled_identity(self):
        report = isotropy_report(2.0 * np.eye(3))
        assert report.is_isotropic
        assert report.tau == 2.0
        assert report.deviation == 0.0

    def test_planar_matrix_not_isotropic(self):
        assert not isotropy_report(np.diag([1.0, 1.0, 0.0])).is_isotropic

    def test_three_circle_trajectory(self):
        traj = gen_circle3(1200, 1e-4)
        report = isotropy_report(position_covariance(traj.positions))
        assert report.is_isotropic
        assert report.deviation < 1e-9


class TestPlanarDecomposition:
    def test_circle_coefficients(self):
        r = 0.15
        u = np.diag([r**2 / 2, r**2 / 2, 0.0])
        rng = np.random.default_rng(11)
        for _ in range(10):
            split = planar_decomposition(u, float(rng.uniform(0, 2 * np.pi)))
            assert abs(split.a_coeff - 2 / r**2) < 1e-9 / r**2
            assert abs(split.b_coeff - 2 / r**2) < 1e-9 / r**2

    def test_reconstruction_at_pole(self):
        r = 0.15
        u = np.diag([r**2 / 2, r**2 / 2, 0.0])
        split = planar_decomposition(u, 1.0)
        assert abs(split.reconstruct(0.0) - geometry_factor(u, AngleVector(0.0, 1.0))) < 1e-10 / r**2

    def test_reconstruction_random_elevations(self):
        rng = np.random.default_rng(12)
        traj = random_walk(rng, 40, planar=True)
        u = position_covariance(traj.positions)
        phi = 0.7
        split = planar_decomposition(u, phi)
        for theta in rng.uniform(0.01, np.pi / 2 - 0.05, 100):
            expected = geometry_factor(u, AngleVector(theta, phi))
            assert abs(split.reconstruct(theta) - expected) <= 1e-10 * expected

    def test_non_planar_rejected(self):
        with pytest.raises(ValueError):
            planar_decomposition(np.eye(3), 0.0)


class TestCorrelationMap:
    def test_self_correlation_is_one(self):
        traj = gen_circle(64, 1e-3)
        chi = AngleVector(0.8, 1.1)
        eta = direction_from_angles(chi)
        value = correlation_map(traj, eta, [chi], LAM)[0]
        assert abs(value - 1.0) < 1e-12

    def test_stationary_trajectory_flat(self):
        traj = trajectory_from_velocities(np.zeros(3), np.zeros((3, 9)), 1.0)
        grid = [AngleVector(t, p) for t in (0.1, 1.0, 2.0) for p in (0.0, 2.0, 4.0)]
        values = correlation_map(traj, direction_from_angles(AngleVector(0.5, 0.5)), grid, LAM)
        np.testing.assert_allclose(values, 1.0, atol=1e-12)

    def test_bounded_by_one(self):
        rng = np.random.default_rng(13)
        traj = random_walk(rng, 48)
        grid = [
            AngleVector(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi)) for _ in range(300)
        ]
        values = correlation_map(traj, direction_from_angles(AngleVector(1.2, 0.3)), grid, LAM)
        assert values.max() <= 1.0 + 1e-12
        assert values.min() >= 0.0


class TestInvariants:
    def test_rotation_invariance_of_bound(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            traj = random_walk(rng, 24)
            chi = AngleVector(rng.uniform(0.2, np.pi - 0.2), rng.uniform(0, 2 * np.pi))
            scen = make_scenario(24)
            q, r = np.linalg.qr(rng.standard_normal((3, 3)))
            q = q @ np.diag(np.sign(np.diag(r)))
            if np.linalg.det(q) < 0:
                q[:, 0] = -q[:, 0]
            base = msaeb(traj, chi, scen).msaeb
            chi_rot = angles_from_direction(q @ direction_from_angles(chi).components)
            rotated = msaeb(traj.rotated(q), chi_rot, scen).msaeb
            assert abs(base - rotated) <= 1e-9 * base

    def test_scale_law(self):
        rng = np.random.default_rng(15)
        for _ in range(20):
            traj = random_walk(rng, 30)
            chi = AngleVector(rng.uniform(0.1, np.pi - 0.1), rng.uniform(0, 2 * np.pi))
            c = float(rng.uniform(0.2, 5.0))
            u = position_covariance(traj.positions)
            u_scaled = position_covariance(c * traj.positions)
            np.testing.assert_allclose(u_scaled, c**2 * u, rtol=1e-12)
            f1 = geometry_factor(u, chi)
            f2 = geometry_factor(u_scaled, chi)
            assert abs(f2 - f1 / c**2) <= 1e-12 * abs(f1 / c**2)

    def test_isotropy_anisotropy_contrast(self):
        # eigenvalue-separated covariance: extreme bounds over the
        # principal directions follow the pairwise inverse-eigenvalue sums
        eigs = np.array([1.0, 1.1, 1.25])
        u = np.diag(eigs)
        scen = make_scenario(100)
        values = []
        for axis in np.eye(3):
            chi = angles_from_direction(axis)
            values.append(msaeb_from_covariance(u, chi, scen).msaeb)
        expected = [
            scen.rho * (1 / eigs[1] + 1 / eigs[2]),
            scen.rho * (1 / eigs[0] + 1 / eigs[2]),
            scen.rho * (1 / eigs[0] + 1 / eigs[1]),
        ]
        np.testing.assert_allclose(values, expected, rtol=1e-10)
        assert max(values) / min(values) - 1.0 > 1e-3
