"""Closed-form direction-estimation error bounds and their numeric oracle.

Implements the mean square angular error lower bound (MSAEB) for a
movable antenna sampling a line-of-sight return along a trajectory: the
per-angle elevation/azimuth CRBs expressed through the trajectory's
position covariance, the equivalent rotated-frame two-coordinate form,
isotropy and planar-divergence diagnostics, steering-vector correlation
maps, and a fully independent Fisher-information oracle that rebuilds
the same bounds numerically from signal derivatives.

The closed-form route and the oracle route never share intermediate
code: the oracle works from steering-vector derivatives (analytic or
finite-difference), the closed form from covariance quadratic forms, so
agreement between them is a genuine cross-check.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .geometry import (
    AngleVector,
    CovarianceMatrix,
    DirectionVector,
    Trajectory,
    direction_from_angles,
    position_covariance,
    rotation_to_target,
    tangent_frame,
    FLOAT_FORMAT,
)

__all__ = [
    "SensingScenario",
    "MsaebResult",
    "FimBlocks",
    "IsotropyReport",
    "PlanarDecomposition",
    "steering_vector",
    "geometry_factor",
    "geometry_factor_trace_form",
    "msaeb",
    "msaeb_from_covariance",
    "msaeb_single_direction_rotated",
    "fim_oracle",
    "crb_from_fim",
    "isotropy_report",
    "planar_decomposition",
    "correlation_map",
    "correlation_map_grid",
    "write_angle_map_csv",
]

#: Denominators at or below this value are treated as rank-deficient
#: geometry: the direction is unidentifiable and the bound is +inf.
DEGENERATE_DET = 1e-30


@dataclass(frozen=True)
class SensingScenario:
    """Physical constants of the sensing link.

    Parameters
    ----------
    wavelength : float
        Carrier wavelength, meters.
    tx_power : float
        Average probing signal power P, watts.
    noise_power : float
        Average noise power sigma^2 per snapshot, watts.
    channel_gain : complex
        Line-of-sight channel gain beta at the region origin.
    sampling_period : float
        Snapshot spacing Ts, seconds.
    snapshots : int
        Number of received snapshots N (for replicated fixed arrays,
        the total sample count).
    """

    wavelength: float
    tx_power: float
    noise_power: float
    channel_gain: complex
    sampling_period: float
    snapshots: int

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if not self.tx_power > 0:
            raise ValueError("tx_power must be positive")
        if not self.noise_power > 0:
            raise ValueError("noise_power must be positive")
        if not self.sampling_period > 0:
            raise ValueError("sampling_period must be positive")
        if int(self.snapshots) < 2:
            raise ValueError("snapshots must be at least 2")
        object.__setattr__(self, "snapshots", int(self.snapshots))
        object.__setattr__(self, "channel_gain", complex(self.channel_gain))
        if self.rho <= 0 or not np.isfinite(self.rho):
            raise ValueError("derived noise-to-aperture scale must be positive")

    @property
    def snr(self):
        """Average received SNR, P |beta|^2 / sigma^2 (linear)."""
        return self.tx_power * abs(self.channel_gain) ** 2 / self.noise_power

    @property
    def rho(self):
        """Scale factor sigma^2 lambda^2 / (8 pi^2 P N |beta|^2), rad^2 m^2."""
        return (
            self.noise_power
            * self.wavelength**2
            / (8.0 * np.pi**2 * self.tx_power * self.snapshots * abs(self.channel_gain) ** 2)
        )

    @classmethod
    def from_snr_db(cls, snr_db, wavelength, snapshots, sampling_period=1e-3):
        """Unit-power convenience constructor: P = 1, beta = 1, sigma^2 from SNR."""
        return cls(
            wavelength=wavelength,
            tx_power=1.0,
            noise_power=10.0 ** (-snr_db / 10.0),
            channel_gain=1.0 + 0.0j,
            sampling_period=sampling_period,
            snapshots=snapshots,
        )


@dataclass(frozen=True)
class MsaebResult:
    """Angular error bound and its per-angle CRB decomposition.

    ``msaeb = crb_theta + sin(theta)^2 * crb_phi`` whenever the entries
    are finite; all entries are in rad^2 except ``f_value`` (1/m^2),
    the scenario-independent geometry factor.
    """

    msaeb: float
    crb_theta: float
    crb_phi: float
    f_value: float


@dataclass(frozen=True, eq=False)
class FimBlocks:
    """2x2 blocks of the Fisher information for (angles, complex gain).

    ``lam`` is the angle block of the inverse information (the Schur
    complement inverse); its diagonal carries the numeric CRBs for
    elevation and azimuth, +inf when the information is singular.
    """

    j_chichi: np.ndarray
    j_chibeta: np.ndarray
    j_betabeta: np.ndarray
    lam: np.ndarray


@dataclass(frozen=True)
class IsotropyReport:
    is_isotropic: bool
    tau: float
    deviation: float


@dataclass(frozen=True)
class PlanarDecomposition:
    """Elevation-independent coefficients of a planar trajectory's factor.

    For a trajectory confined to the x-y plane the geometry factor
    splits as ``a_coeff / cos(theta)^2 + b_coeff`` with both
    coefficients functions of the azimuth only.
    """

    a_coeff: float
    b_coeff: float

    def reconstruct(self, theta):
        c2 = np.cos(theta) ** 2
        with np.errstate(divide="ignore"):
            return np.where(c2 > 0, self.a_coeff / np.where(c2 > 0, c2, 1.0), np.inf) + self.b_coeff


def _as_cov_array(u) -> np.ndarray:
    if isinstance(u, CovarianceMatrix):
        return u.u
    return np.asarray(u, dtype=float).reshape(3, 3)


def _as_direction_array(eta) -> np.ndarray:
    if isinstance(eta, DirectionVector):
        return eta.components
    return np.asarray(eta, dtype=float).reshape(3)


def steering_vector(traj: Trajectory, eta, wavelength) -> np.ndarray:
    """Complex per-snapshot phases exp(j 2 pi / lambda * eta . r_n).

    Every entry has unit modulus; the vector encodes how the moving
    antenna samples the incident planar wavefront.
    """
    e = _as_direction_array(eta)
    phase = (2.0 * np.pi / float(wavelength)) * (e @ traj.positions)
    return np.exp(1j * phase)


def _quadratic_forms(u, chi: AngleVector):
    frame = tangent_frame(chi)
    uf = u @ frame.f
    ug = u @ frame.g
    return float(frame.f @ uf), float(frame.g @ ug), float(frame.f @ ug)


def geometry_factor(u, chi: AngleVector) -> float:
    """Scenario-independent part of the angular error bound, 1/m^2.

    Returns ``(f'Uf + g'Ug) / ((f'Uf)(g'Ug) - (f'Ug)^2)`` where (f, g)
    is the tangent frame at ``chi``.  Rank-deficient geometry (the
    denominator at or below ``DEGENERATE_DET``) yields +inf: the
    direction is unidentifiable there, which is an answer rather than
    an error.
    """
    fuf, gug, fug = _quadratic_forms(_as_cov_array(u), chi)
    den = fuf * gug - fug * fug
    if den <= DEGENERATE_DET:
        return np.inf
    return (fuf + gug) / den


def geometry_factor_trace_form(u, chi: AngleVector) -> float:
    """Geometry factor as the trace of a 2x2 inverse (equivalent route).

    Computes Tr((Phi' U Phi)^-1) with Phi = [f, g]; used as a second
    implementation path for cross-checking :func:`geometry_factor`.
    """
    phi = tangent_frame(chi).basis
    m = phi.T @ _as_cov_array(u) @ phi
    if np.linalg.det(m) <= DEGENERATE_DET:
        return np.inf
    return float(np.trace(np.linalg.inv(m)))


def msaeb_from_covariance(u, chi: AngleVector, scen: SensingScenario) -> MsaebResult:
    """Angular error bound from a precomputed position covariance."""
    fuf, gug, fug = _quadratic_forms(_as_cov_array(u), chi)
    den = fuf * gug - fug * fug
    rho = scen.rho
    if den <= DEGENERATE_DET:
        return MsaebResult(np.inf, np.inf, np.inf, np.inf)
    f_value = (fuf + gug) / den
    crb_theta = rho * gug / den
    sin2 = np.sin(chi.theta) ** 2
    crb_phi = rho * fuf / den / sin2 if sin2 > 0.0 else np.inf
    return MsaebResult(rho * f_value, crb_theta, crb_phi, f_value)


def msaeb(traj: Trajectory, chi: AngleVector, scen: SensingScenario) -> MsaebResult:
    """Closed-form lower bound on the mean square angular error.

    The bound is ``rho * F`` with ``rho`` the scenario scale and ``F``
    the geometry factor of the trajectory covariance; the elevation and
    azimuth CRBs it decomposes into are reported alongside.  The
    scenario's snapshot count must match the trajectory.
    """
    if scen.snapshots != traj.n_snapshots:
        raise ValueError(
            f"scenario snapshots ({scen.snapshots}) do not match trajectory ({traj.n_snapshots})"
        )
    return msaeb_from_covariance(position_covariance(traj.positions), chi, scen)


def msaeb_single_direction_rotated(traj: Trajectory, chi: AngleVector, scen: SensingScenario) -> MsaebResult:
    """Bound evaluated in the frame whose z-axis points at the target.

    Rotates the trajectory so the target direction becomes the pole and
    evaluates the two-coordinate form
    ``(var(x) + var(y)) / (var(x) var(y) - cov(x, y)^2)`` on the
    in-plane coordinates.  Motion along the target direction drops out
    entirely; the value equals :func:`msaeb` up to float rounding.

    The reported CRBs are those of the rotated representation, where
    the target sits at the pole: the azimuth CRB is +inf there.
    """
    if scen.snapshots != traj.n_snapshots:
        raise ValueError(
            f"scenario snapshots ({scen.snapshots}) do not match trajectory ({traj.n_snapshots})"
        )
    q = rotation_to_target(chi)
    xy = q[:2, :] @ traj.positions
    centered = xy - xy.mean(axis=1, keepdims=True)
    u2 = (centered @ centered.T) / xy.shape[1]
    vx, vy, cxy = u2[0, 0], u2[1, 1], u2[0, 1]
    den = vx * vy - cxy * cxy
    rho = scen.rho
    if den <= DEGENERATE_DET:
        return MsaebResult(np.inf, np.inf, np.inf, np.inf)
    f_value = (vx + vy) / den
    return MsaebResult(rho * f_value, rho * vy / den, np.inf, f_value)


def _derivative_vectors_analytic(traj, chi, wavelength):
    frame = tangent_frame(chi)
    k = 2.0 * np.pi / wavelength
    alpha = steering_vector(traj, direction_from_angles(chi), wavelength)
    f_proj = traj.positions.T @ frame.f
    g_proj = np.sin(chi.theta) * (traj.positions.T @ frame.g)
    d_theta = 1j * k * f_proj * alpha
    d_phi = 1j * k * g_proj * alpha
    return alpha, d_theta, d_phi


def _raw_steering(traj, theta, phi, wavelength):
    # direction computed from raw floats: finite-difference probes may
    # step a hair outside the closed angle domain
    eta = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    return np.exp(1j * (2.0 * np.pi / wavelength) * (eta @ traj.positions))


def _derivative_vectors_fd(traj, chi, wavelength, step):
    alpha = _raw_steering(traj, chi.theta, chi.phi, wavelength)
    d_theta = (
        _raw_steering(traj, chi.theta + step, chi.phi, wavelength)
        - _raw_steering(traj, chi.theta - step, chi.phi, wavelength)
    ) / (2.0 * step)
    d_phi = (
        _raw_steering(traj, chi.theta, chi.phi + step, wavelength)
        - _raw_steering(traj, chi.theta, chi.phi - step, wavelength)
    ) / (2.0 * step)
    return alpha, d_theta, d_phi


def fim_oracle(
    traj: Trajectory,
    chi: AngleVector,
    beta_tilde=None,
    scen: SensingScenario = None,
    derivatives="analytic",
    fd_step=1e-6,
) -> FimBlocks:
    """Numeric Fisher-information blocks for (theta, phi, Re/Im gain).

    Builds the information matrix of the noise-free signal model
    ``u = beta_tilde * alpha`` directly from signal derivatives and
    inverts its angle block via the Schur complement.  This is the
    independent oracle against which the closed-form bounds are
    verified; it shares no covariance machinery with them.

    Parameters
    ----------
    beta_tilde : complex, optional
        Effective gain beta * s.  Defaults to ``beta * sqrt(P)`` from
        the scenario (a deterministic unit-modulus pilot scaled to the
        probing power).
    derivatives : {"analytic", "finite-difference"}
        Analytic derivative vectors, or central finite differences of
        the signal with step ``fd_step`` radians.  The two variants are
        themselves independent of each other.
    """
    if scen is None:
        raise ValueError("a SensingScenario is required")
    if beta_tilde is None:
        beta_tilde = scen.channel_gain * np.sqrt(scen.tx_power)
    beta_tilde = complex(beta_tilde)
    lam_carrier = scen.wavelength
    sigma2 = scen.noise_power

    if derivatives == "analytic":
        alpha, d_theta, d_phi = _derivative_vectors_analytic(traj, chi, lam_carrier)
    elif derivatives == "finite-difference":
        alpha, d_theta, d_phi = _derivative_vectors_fd(traj, chi, lam_carrier, fd_step)
    else:
        raise ValueError(f"unknown derivative mode {derivatives!r}")

    # signal derivatives w.r.t. (theta, phi, Re(beta_tilde), Im(beta_tilde))
    du = np.column_stack([beta_tilde * d_theta, beta_tilde * d_phi, alpha, 1j * alpha])
    fim = (2.0 / sigma2) * np.real(du.conj().T @ du)
    j_cc = fim[:2, :2]
    j_cb = fim[:2, 2:]
    j_bb = fim[2:, 2:]

    schur = j_cc - j_cb @ np.linalg.solve(j_bb, j_cb.T)
    det = np.linalg.det(schur)
    scale = max(np.abs(schur).max(), 1.0)
    if det <= 1e-14 * scale**2:
        lam = np.full((2, 2), np.inf)
        lam[0, 1] = lam[1, 0] = 0.0
    else:
        lam = np.linalg.inv(schur)
    return FimBlocks(j_chichi=j_cc, j_chibeta=j_cb, j_betabeta=j_bb, lam=lam)


def crb_from_fim(blocks: FimBlocks):
    """(elevation, azimuth) CRBs from oracle blocks, +inf when singular."""
    return float(blocks.lam[0, 0]), float(blocks.lam[1, 1])


def isotropy_report(u, tol=1e-9) -> IsotropyReport:
    """Measure how close a covariance is to a scaled identity.

    A scaled-identity covariance is exactly the condition for the
    angular error bound to be constant over every direction, so the
    relative Frobenius deviation from ``tau * I`` quantifies sensing
    isotropy.  Non-positive ``tau`` reports +inf deviation.
    """
    mat = _as_cov_array(u)
    tau = float(np.trace(mat)) / 3.0
    if tau <= 0.0:
        return IsotropyReport(False, tau, np.inf)
    deviation = float(np.linalg.norm(mat - tau * np.eye(3), "fro")) / tau
    return IsotropyReport(deviation <= tol, tau, deviation)


def planar_decomposition(u, phi) -> PlanarDecomposition:
    """Split a planar trajectory's geometry factor into A/cos^2 + B.

    Requires the third row and column of the covariance to vanish (the
    trajectory lies in the x-y plane); the returned coefficients depend
    on the azimuth only and reconstruct the full factor at any
    elevation via ``a_coeff / cos(theta)^2 + b_coeff``.
    """
    mat = _as_cov_array(u)
    scale = max(1.0, float(np.abs(mat).max()))
    planar_leak = max(np.abs(mat[2, :]).max(), np.abs(mat[:, 2]).max())
    if planar_leak > 1e-14 * scale:
        raise ValueError("planar decomposition undefined: covariance has out-of-plane power")
    vx, vy, cxy = mat[0, 0], mat[1, 1], mat[0, 1]
    sp, cp = np.sin(phi), np.cos(phi)
    u_gg = sp * sp * vx + cp * cp * vy - 2.0 * sp * cp * cxy
    u_ff = cp * cp * vx + sp * sp * vy + 2.0 * sp * cp * cxy
    u_fg = sp * cp * (vy - vx) + (cp * cp - sp * sp) * cxy
    den = u_ff * u_gg - u_fg * u_fg
    if den <= DEGENERATE_DET:
        raise ValueError("planar decomposition undefined: in-plane covariance is singular")
    return PlanarDecomposition(a_coeff=u_gg / den, b_coeff=u_ff / den)


def correlation_map(traj: Trajectory, eta_true, grid, wavelength) -> np.ndarray:
    """Normalized squared steering correlation against candidate angles.

    For each candidate in ``grid`` (a sequence of :class:`AngleVector`)
    returns ``|alpha(eta)^H alpha(eta_bar)|^2 / N^2``, a value in
    [0, 1] that equals 1 exactly at the true direction.
    """
    ref = steering_vector(traj, eta_true, wavelength)
    n = traj.n_snapshots
    out = np.empty(len(grid))
    k = 2.0 * np.pi / float(wavelength)
    # batch the candidate directions to keep the phase matrix small
    dirs = np.array([direction_from_angles(c).components for c in grid])
    chunk = max(1, int(4e6) // max(n, 1))
    for start in range(0, len(grid), chunk):
        block = dirs[start : start + chunk]
        phases = np.exp(1j * k * (block @ traj.positions))
        out[start : start + chunk] = np.abs(phases @ ref.conj()) ** 2 / n**2
    return out


def correlation_map_grid(traj: Trajectory, eta_true, theta_deg, phi_deg, wavelength):
    """Correlation over a product grid; returns (theta x phi) matrix."""
    grid = [
        AngleVector.from_degrees(t, p) for t in np.atleast_1d(theta_deg) for p in np.atleast_1d(phi_deg)
    ]
    vals = correlation_map(traj, eta_true, grid, wavelength)
    return vals.reshape(len(np.atleast_1d(theta_deg)), len(np.atleast_1d(phi_deg)))


def write_angle_map_csv(path, theta_deg, phi_deg, values):
    """Write an angle-gridded map as theta_deg,phi_deg,value (row-major)."""
    theta_deg = np.atleast_1d(theta_deg)
    phi_deg = np.atleast_1d(phi_deg)
    values = np.asarray(values).reshape(len(theta_deg), len(phi_deg))
    fmt = lambda x: format(x, FLOAT_FORMAT)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta_deg", "phi_deg", "value"])
        for i, t in enumerate(theta_deg):
            for j, p in enumerate(phi_deg):
                writer.writerow([fmt(float(t)), fmt(float(p)), fmt(float(values[i, j]))])
