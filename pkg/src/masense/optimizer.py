"""Min-max trajectory optimization by successive convex approximation.

Minimizes the worst-case direction-estimation geometry factor over a
discretized angular region by alternating between (a) a convex
subproblem in which the trajectory covariance is replaced by its affine
matrix lower bound at the current iterate, and (b) re-expansion at the
new iterate.  The surrogate majorizes the true objective and is tight
at the expansion point, so accepted iterates never increase the true
worst case.

The convex subproblems are parametrized by the initial position and
block-shared velocities, which eliminates the cumulative-sum constraint
by construction, and are solved with an interior-point solver through
cvxpy.  Solves run in units normalized to a characteristic length so
conditioning stays flat across problem scales.

A reduced solver handles the single-direction case entirely inside the
plane orthogonal to the target direction: motion along the target
contributes nothing to the objective, so the out-of-plane coordinate is
held constant.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .benchmarks import circle3_radius, gen_circle3
from .geometry import (
    AngleVector,
    MovementRegion,
    Trajectory,
    check_feasibility,
    position_covariance,
    rotation_to_target,
    tangent_frame,
)
from .metrics import DEGENERATE_DET

__all__ = [
    "AngularRegion",
    "OptimizationProblem",
    "ScaIteration",
    "ScaTrace",
    "SubproblemResult",
    "discretize_region",
    "surrogate_covariance",
    "surrogate_objective",
    "worst_case_factor",
    "solve_subproblem_p2",
    "sca_optimize",
    "optimize_single_direction",
    "default_initial_trajectory",
]

_MONOTONE_SLACK = 1e-8


def _solve_quiet(prob):
    """Interior-point solve at tight tolerances with a fallback chain.

    An uncertified ("inaccurate") status is tolerable here: the outer
    loop accepts an iterate only after re-evaluating the true objective
    and checking monotone progress, so a slightly loose subproblem
    solve can stall but never corrupt the trace.  Hard solver failures
    (typically from flat, degenerate directions at an already optimal
    expansion point) fall back to progressively more forgiving solves
    before giving up.
    """
    attempts = (
        dict(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10),
        dict(solver=cp.CLARABEL),
        dict(solver=cp.SCS, eps=1e-9, max_iters=100_000),
    )
    last_error = None
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="Solution may be inaccurate")
        for kwargs in attempts:
            try:
                prob.solve(**kwargs)
                return
            except cp.error.SolverError as exc:
                last_error = exc
    raise RuntimeError(f"convex subproblem solver failed: {last_error}")


@dataclass(frozen=True)
class AngularRegion:
    """Rectangle of candidate target angles with a grid budget.

    ``grid_count`` points are spread over the rectangle by
    :func:`discretize_region`; a single-point budget collapses to the
    rectangle center.
    """

    theta_range: tuple
    phi_range: tuple
    grid_count: int

    def __post_init__(self):
        t_lo, t_hi = (float(v) for v in self.theta_range)
        p_lo, p_hi = (float(v) for v in self.phi_range)
        if not 0.0 <= t_lo <= t_hi <= np.pi:
            raise ValueError("theta_range must satisfy 0 <= lo <= hi <= pi")
        if not 0.0 <= p_lo <= p_hi <= 2.0 * np.pi:
            raise ValueError("phi_range must satisfy 0 <= lo <= hi <= 2*pi")
        if self.grid_count < 1:
            raise ValueError("grid_count must be at least 1")
        object.__setattr__(self, "theta_range", (t_lo, t_hi))
        object.__setattr__(self, "phi_range", (p_lo, p_hi))
        object.__setattr__(self, "grid_count", int(self.grid_count))

    @property
    def center(self) -> AngleVector:
        return AngleVector(
            0.5 * (self.theta_range[0] + self.theta_range[1]),
            0.5 * (self.phi_range[0] + self.phi_range[1]),
        )


@dataclass(frozen=True)
class OptimizationProblem:
    """Full description of one trajectory optimization run."""

    region: MovementRegion
    vmax: float
    sampling_period: float
    n_snapshots: int
    angular: AngularRegion
    velocity_block: int = 1
    sca_tol: float = 1e-4
    max_outer_iters: int = 50
    grid_layout: str = "product"
    dense_grid_count: int = 1000

    def __post_init__(self):
        if not self.vmax > 0:
            raise ValueError("vmax must be positive")
        if not self.sampling_period > 0:
            raise ValueError("sampling_period must be positive")
        if self.n_snapshots < 2:
            raise ValueError("n_snapshots must be at least 2")
        if self.velocity_block < 1:
            raise ValueError("velocity_block must be at least 1")
        if not self.sca_tol > 0:
            raise ValueError("sca_tol must be positive")
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be at least 1")
        if self.grid_layout not in ("product", "fibonacci"):
            raise ValueError("grid_layout must be 'product' or 'fibonacci'")

    @property
    def step_length(self):
        """Maximum travel per snapshot interval, vmax * Ts."""
        return self.vmax * self.sampling_period


@dataclass(frozen=True)
class ScaIteration:
    index: int
    delta_grid: float
    delta_dense: float
    seconds: float
    status: str


@dataclass
class ScaTrace:
    """Per-iteration record of the outer loop.

    ``delta_grid`` is the true worst-case factor over the optimization
    grid at each accepted iterate (non-increasing up to solver slack);
    ``delta_dense`` the worst case over a dense evaluation grid.
    """

    iterations: list = field(default_factory=list)
    stop_reason: str = ""

    def record(self, index, delta_grid, delta_dense, seconds, status):
        self.iterations.append(ScaIteration(index, delta_grid, delta_dense, seconds, status))

    @property
    def deltas_grid(self):
        return np.array([it.delta_grid for it in self.iterations])

    @property
    def deltas_dense(self):
        return np.array([it.delta_dense for it in self.iterations])

    @property
    def final_delta(self):
        return self.iterations[-1].delta_grid if self.iterations else np.inf


def _product_counts(q, theta_span, phi_span):
    if q == 1:
        return 1, 1
    if theta_span == 0.0:
        return 1, q
    if phi_span == 0.0:
        return q, 1
    n_theta = 1
    for d in range(1, int(np.sqrt(q)) + 1):
        if q % d == 0:
            n_theta = d
    return n_theta, q // n_theta


def discretize_region(angular: AngularRegion, layout="product"):
    """Spread ``grid_count`` angle points over the angular rectangle.

    The product layout factors the budget into an elevation count times
    an azimuth count (elevation rows include the range endpoints so the
    worst-case boundary is represented; azimuth columns are cell
    centers, which avoids duplicating a wrapped 0/2*pi column).  The
    fibonacci layout staggers azimuths by the golden-ratio conjugate
    for a low-discrepancy covering.  A budget of one returns the
    rectangle center.
    """
    t_lo, t_hi = angular.theta_range
    p_lo, p_hi = angular.phi_range
    q = angular.grid_count
    if q == 1:
        return [angular.center]
    if layout == "fibonacci":
        golden = (np.sqrt(5.0) - 1.0) / 2.0
        thetas = t_lo + (t_hi - t_lo) * (np.arange(q) + 0.5) / q
        phis = p_lo + (p_hi - p_lo) * ((np.arange(q) * golden + 0.5) % 1.0)
        return [AngleVector(t, p) for t, p in zip(thetas, phis)]
    if layout != "product":
        raise ValueError(f"unknown grid layout {layout!r}")
    n_theta, n_phi = _product_counts(q, t_hi - t_lo, p_hi - p_lo)
    thetas = np.array([0.5 * (t_lo + t_hi)]) if n_theta == 1 else np.linspace(t_lo, t_hi, n_theta)
    if n_phi == 1:
        phis = np.array([0.5 * (p_lo + p_hi)])
    else:
        phis = p_lo + (p_hi - p_lo) * (np.arange(n_phi) + 0.5) / n_phi
    return [AngleVector(t, p) for t in thetas for p in phis]


def _frames_array(grid):
    """Stack of 3x2 tangent bases, one per grid point."""
    return np.array([tangent_frame(chi).basis for chi in grid])


def _factors_from_cov(u, frames):
    m = np.einsum("qji,jk,qkl->qil", frames, u, frames)
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    tr = m[:, 0, 0] + m[:, 1, 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(det > DEGENERATE_DET, tr / np.where(det > DEGENERATE_DET, det, 1.0), np.inf)
    return vals


def worst_case_factor(positions, frames):
    """(max factor, argmax index) over a stack of tangent bases."""
    vals = _factors_from_cov(position_covariance(positions), frames)
    idx = int(np.argmax(vals))
    return float(vals[idx]), idx


def surrogate_covariance(positions, positions_prev) -> np.ndarray:
    """Affine-in-R matrix lower bound of the covariance at an expansion point.

    Equals the true covariance exactly when ``positions`` coincides
    with the expansion point, and the gap ``U - Ubar`` is PSD for any
    pair (it is a centered quadratic in the difference).
    """
    r = np.asarray(positions, dtype=float)
    rp = np.asarray(positions_prev, dtype=float)
    if r.shape != rp.shape:
        raise ValueError("position matrices must share a shape")
    n = r.shape[1]
    rc = r - r.mean(axis=1, keepdims=True)
    rpc = rp - rp.mean(axis=1, keepdims=True)
    cross = rpc @ rc.T / n
    return cross + cross.T - (rpc @ rpc.T) / n


def surrogate_objective(positions, positions_prev, chi: AngleVector):
    """Value and gradient of the convex surrogate factor at one angle.

    The surrogate is the trace of the inverse of the tangent-frame
    restriction of the affine covariance bound; it majorizes the true
    factor with equality at the expansion point.  When the restriction
    is singular the value is +inf and the returned array is a
    subgradient whose negative is the steepest increase direction of
    the restriction's minimum eigenvalue (the natural recovery move).
    """
    r = np.asarray(positions, dtype=float)
    rp = np.asarray(positions_prev, dtype=float)
    n = r.shape[1]
    phi = tangent_frame(chi).basis
    ubar = surrogate_covariance(r, rp)
    m = phi.T @ ubar @ phi
    m = 0.5 * (m + m.T)
    rpc = rp - rp.mean(axis=1, keepdims=True)
    eigvals, eigvecs = np.linalg.eigh(m)
    if eigvals[0] <= DEGENERATE_DET:
        v = phi @ eigvecs[:, 0]
        grad = -(2.0 / n) * np.outer(v, v @ rpc)
        return np.inf, grad
    minv = eigvecs @ np.diag(1.0 / eigvals) @ eigvecs.T
    value = float(np.trace(minv))
    grad = -(2.0 / n) * (phi @ (minv @ minv) @ phi.T) @ rpc
    return value, grad


@dataclass(frozen=True)
class SubproblemResult:
    trajectory: Trajectory
    delta: float
    status: str


def _velocity_blocks(n_snapshots, block):
    """Block index of every velocity column; the last block may be short."""
    idx = np.arange(n_snapshots - 1) // block
    return idx, int(idx[-1]) + 1


def _block_count_matrix(blocks, k, n_snapshots):
    """G[k, n] = number of steps of block k taken before snapshot n."""
    g = np.zeros((k, n_snapshots))
    for n in range(1, n_snapshots):
        g[:, n] = g[:, n - 1]
        g[blocks[n - 1], n] += 1.0
    return g


def _characteristic_length(problem: OptimizationProblem):
    speed_radius = problem.n_snapshots * problem.step_length / (2.0 * np.pi)
    return float(min(problem.region.half_extent.max(), speed_radius))


class _P2Model:
    """Reusable convex subproblem: min delta over surrogate factor caps.

    Variables are the initial position and block velocities in units of
    a characteristic length, which eliminates the cumulative-sum
    constraint and keeps the interior-point scaling benign.  Only the
    expansion-point parameters change between outer iterations, so the
    compiled problem is reused.
    """

    def __init__(self, problem: OptimizationProblem, frames):
        self.problem = problem
        n = problem.n_snapshots
        self.blocks, self.k = _velocity_blocks(n, problem.velocity_block)
        self.g = _block_count_matrix(self.blocks, self.k, n)
        gc = self.g - self.g.mean(axis=1, keepdims=True)
        self.h = gc @ gc.T / n
        self.length = _characteristic_length(problem)

        k = self.k
        self.param_cross = cp.Parameter((3, k))
        self.param_anchor = cp.Parameter((3, 3), symmetric=True)
        self.var_r1 = cp.Variable((3, 1))
        self.var_vb = cp.Variable((3, k))
        self.var_delta = cp.Variable()

        ubar = self.param_cross @ self.var_vb.T + self.var_vb @ self.param_cross.T - self.param_anchor
        vb_max = problem.vmax * problem.sampling_period / self.length
        constraints = [cp.norm(self.var_vb[:, j]) <= vb_max for j in range(k)]
        r_expr = self.var_r1 @ np.ones((1, n)) + self.var_vb @ self.g
        lo = (problem.region.center - problem.region.half_extent)[:, None] / self.length
        hi = (problem.region.center + problem.region.half_extent)[:, None] / self.length
        constraints += [r_expr >= lo, r_expr <= hi]
        eye2 = np.eye(2)
        for basis in frames:
            m = basis.T @ ubar @ basis
            constraints.append(cp.matrix_frac(eye2, 0.5 * (m + m.T)) <= self.var_delta)
        self._prob = cp.Problem(cp.Minimize(self.var_delta), constraints)

    def normalized_blocks(self, traj: Trajectory):
        """Block velocities of a trajectory in solver units."""
        vb = np.empty((3, self.k))
        for j in range(self.k):
            vb[:, j] = traj.velocities[:, self.blocks == j].mean(axis=1)
        return vb * self.problem.sampling_period / self.length

    def solve(self, vb_prev_norm):
        self.param_cross.value = vb_prev_norm @ self.h
        self.param_anchor.value = vb_prev_norm @ self.h @ vb_prev_norm.T
        _solve_quiet(self._prob)
        if self.var_vb.value is None:
            raise RuntimeError(f"convex subproblem returned no solution (status {self._prob.status})")
        status = "optimal" if self._prob.status == cp.OPTIMAL else self._prob.status
        delta = float(self.var_delta.value) / self.length**2
        return np.asarray(self.var_r1.value), np.asarray(self.var_vb.value), delta, status

    def to_trajectory(self, r1_norm, vb_norm):
        """Solver units back to an exactly feasible trajectory."""
        problem = self.problem
        r1 = (r1_norm * self.length).reshape(3)
        vb = vb_norm * self.length / problem.sampling_period
        # clip block speeds that exceed the budget by solver slack
        norms = np.linalg.norm(vb, axis=0)
        over = norms > problem.vmax
        if np.any(over):
            vb[:, over] *= problem.vmax / norms[over]
        traj = Trajectory(r1, vb[:, self.blocks], problem.sampling_period)
        # pull any box overshoot back by shrinking about the region center
        center = problem.region.center[:, None]
        ratios = np.abs(traj.positions - center) / problem.region.half_extent[:, None]
        worst = ratios.max()
        if worst > 1.0:
            traj = traj.scaled(1.0 / worst, center=problem.region.center)
        return traj


def solve_subproblem_p2(problem: OptimizationProblem, traj_prev: Trajectory, model=None, frames=None) -> SubproblemResult:
    """One convex subproblem solve at the given expansion trajectory.

    Returns a strictly feasible trajectory together with the certified
    surrogate worst case ``delta``; by the majorization property the
    true worst case of the returned trajectory never exceeds ``delta``
    by more than solver slack.
    """
    if frames is None:
        frames = _frames_array(discretize_region(problem.angular, problem.grid_layout))
    if model is None:
        model = _P2Model(problem, frames)
    vb_prev = model.normalized_blocks(traj_prev)
    r1_n, vb_n, delta, status = model.solve(vb_prev)
    return SubproblemResult(model.to_trajectory(r1_n, vb_n), delta, status)


def default_initial_trajectory(problem: OptimizationProblem) -> Trajectory:
    """Feasible isotropic starting point: a scaled three-circle tour.

    The snapshot count is padded to a multiple of 12 for generation
    and truncated back, the velocities are averaged per block, and the
    result is shrunk into the movement region.  The covariance starts
    well-conditioned in every direction, which the surrogate needs.
    """
    n = problem.n_snapshots
    n_gen = max(12, ((n + 11) // 12) * 12)
    radius_cap = 0.999 * float(problem.region.half_extent.min())
    base = gen_circle3(n_gen, problem.step_length, problem.sampling_period)
    r_gen = circle3_radius(n_gen, problem.step_length)
    if r_gen > radius_cap:
        base = base.scaled(radius_cap / r_gen)
    positions = base.positions[:, :n] + problem.region.center[:, None]
    return _project_to_blocks(Trajectory.from_positions(positions, problem.sampling_period), problem)


def _project_to_blocks(traj: Trajectory, problem: OptimizationProblem) -> Trajectory:
    """Average velocities within blocks and restore strict feasibility."""
    blocks, k = _velocity_blocks(problem.n_snapshots, problem.velocity_block)
    vb = np.empty((3, k))
    for j in range(k):
        vb[:, j] = traj.velocities[:, blocks == j].mean(axis=1)
    norms = np.linalg.norm(vb, axis=0)
    over = norms > problem.vmax
    if np.any(over):
        vb[:, over] *= problem.vmax / norms[over]
    out = Trajectory(traj.r1, vb[:, blocks], problem.sampling_period)
    center = problem.region.center[:, None]
    ratios = np.abs(out.positions - center) / problem.region.half_extent[:, None]
    worst = ratios.max()
    if worst > 1.0:
        out = out.scaled(1.0 / worst, center=problem.region.center)
    return out


def _degenerate_region(problem: OptimizationProblem):
    return bool(np.any(2.0 * problem.region.half_extent < problem.step_length))


def _stationary_result(problem: OptimizationProblem, frames, dense_frames):
    traj = Trajectory(
        problem.region.center,
        np.zeros((3, problem.n_snapshots - 1)),
        problem.sampling_period,
    )
    trace = ScaTrace(stop_reason="degenerate-region")
    worst, _ = worst_case_factor(traj.positions, frames)
    dense, _ = worst_case_factor(traj.positions, dense_frames)
    trace.record(0, worst, dense, 0.0, "degenerate-region")
    return traj, trace


def sca_optimize(problem: OptimizationProblem, r_init: Trajectory = None):
    """Outer successive-convex-approximation loop for the min-max problem.

    Starting from a feasible trajectory, repeatedly solves the convex
    surrogate subproblem and re-expands at the accepted iterate.  An
    iterate is accepted only if the true worst-case factor does not
    increase beyond solver slack, so the recorded trace is monotone;
    the loop stops when the decrease falls below ``sca_tol``, when a
    candidate is rejected (solver noise floor), or when the iteration
    budget runs out (best feasible iterate is returned with the trace
    noting the reason).

    Returns ``(trajectory, trace)``.
    """
    grid = discretize_region(problem.angular, problem.grid_layout)
    frames = _frames_array(grid)
    dense_region = AngularRegion(
        problem.angular.theta_range, problem.angular.phi_range, problem.dense_grid_count
    )
    dense_frames = _frames_array(discretize_region(dense_region, "product"))

    if _degenerate_region(problem):
        return _stationary_result(problem, frames, dense_frames)

    if r_init is None:
        current = default_initial_trajectory(problem)
    else:
        report = check_feasibility(r_init, problem.region, problem.vmax)
        if not report.feasible:
            raise ValueError("initial trajectory is infeasible for the problem region/speed")
        current = _project_to_blocks(r_init, problem)

    model = _P2Model(problem, frames)
    trace = ScaTrace()
    prev, _ = worst_case_factor(current.positions, frames)
    dense, _ = worst_case_factor(current.positions, dense_frames)
    trace.record(0, prev, dense, 0.0, "init")

    for it in range(1, problem.max_outer_iters + 1):
        tic = time.perf_counter()
        try:
            result = solve_subproblem_p2(problem, current, model=model, frames=frames)
        except RuntimeError:
            trace.stop_reason = "solver-failure"
            break
        worst, _ = worst_case_factor(result.trajectory.positions, frames)
        elapsed = time.perf_counter() - tic
        if worst > prev + _MONOTONE_SLACK * max(1.0, abs(prev)):
            trace.stop_reason = "stalled"
            break
        current = result.trajectory
        dense, _ = worst_case_factor(current.positions, dense_frames)
        trace.record(it, worst, dense, elapsed, result.status)
        decrease = prev - worst
        prev = worst
        if abs(decrease) <= problem.sca_tol:
            trace.stop_reason = "converged"
            break
    else:
        trace.stop_reason = "max-iterations"
    return current, trace


class _P4Model:
    """Reduced subproblem in the plane orthogonal to one target direction."""

    def __init__(self, problem: OptimizationProblem, chi: AngleVector):
        self.problem = problem
        self.rotation = rotation_to_target(chi)
        n = problem.n_snapshots
        self.blocks, self.k = _velocity_blocks(n, problem.velocity_block)
        self.g = _block_count_matrix(self.blocks, self.k, n)
        gc = self.g - self.g.mean(axis=1, keepdims=True)
        self.h = gc @ gc.T / n
        self.length = _characteristic_length(problem)
        self.plane_offset = float(self.rotation[2, :] @ problem.region.center)

        k = self.k
        self.param_cross = cp.Parameter((2, k))
        self.param_anchor = cp.Parameter((2, 2), symmetric=True)
        self.var_r1 = cp.Variable((2, 1))
        self.var_vb = cp.Variable((2, k))

        ubar = self.param_cross @ self.var_vb.T + self.var_vb @ self.param_cross.T - self.param_anchor
        vb_max = problem.vmax * problem.sampling_period / self.length
        constraints = [cp.norm(self.var_vb[:, j]) <= vb_max for j in range(k)]
        xy = self.var_r1 @ np.ones((1, n)) + self.var_vb @ self.g
        z_row = np.full((1, n), self.plane_offset / self.length)
        r_orig = self.rotation.T @ cp.vstack([xy, z_row])
        lo = (problem.region.center - problem.region.half_extent)[:, None] / self.length
        hi = (problem.region.center + problem.region.half_extent)[:, None] / self.length
        constraints += [r_orig >= lo, r_orig <= hi]
        objective = cp.matrix_frac(np.eye(2), 0.5 * (ubar + ubar.T))
        self._prob = cp.Problem(cp.Minimize(objective), constraints)

    def normalized_blocks(self, traj: Trajectory):
        v_rot = self.rotation[:2, :] @ traj.velocities
        vb = np.empty((2, self.k))
        for j in range(self.k):
            vb[:, j] = v_rot[:, self.blocks == j].mean(axis=1)
        return vb * self.problem.sampling_period / self.length

    def solve(self, vb_prev_norm):
        self.param_cross.value = vb_prev_norm @ self.h
        self.param_anchor.value = vb_prev_norm @ self.h @ vb_prev_norm.T
        _solve_quiet(self._prob)
        if self.var_vb.value is None:
            raise RuntimeError(f"convex subproblem returned no solution (status {self._prob.status})")
        status = "optimal" if self._prob.status == cp.OPTIMAL else self._prob.status
        delta = float(self._prob.value) / self.length**2
        return np.asarray(self.var_r1.value), np.asarray(self.var_vb.value), delta, status

    def to_trajectory(self, r1_norm, vb_norm):
        problem = self.problem
        vb_xy = vb_norm * self.length / problem.sampling_period
        norms = np.linalg.norm(vb_xy, axis=0)
        over = norms > problem.vmax
        if np.any(over):
            vb_xy[:, over] *= problem.vmax / norms[over]
        r1_rot = np.array([r1_norm[0, 0], r1_norm[1, 0], self.plane_offset / self.length]) * self.length
        r1 = self.rotation.T @ r1_rot
        v_full = self.rotation.T @ np.vstack([vb_xy, np.zeros((1, self.k))])
        traj = Trajectory(r1, v_full[:, self.blocks], problem.sampling_period)
        center = problem.region.center[:, None]
        ratios = np.abs(traj.positions - center) / problem.region.half_extent[:, None]
        worst = ratios.max()
        if worst > 1.0:
            traj = traj.scaled(1.0 / worst, center=problem.region.center)
        return traj

    def factor(self, traj: Trajectory):
        xy = self.rotation[:2, :] @ traj.positions
        centered = xy - xy.mean(axis=1, keepdims=True)
        u2 = centered @ centered.T / xy.shape[1]
        det = u2[0, 0] * u2[1, 1] - u2[0, 1] ** 2
        if det <= DEGENERATE_DET:
            return np.inf
        return float((u2[0, 0] + u2[1, 1]) / det)


def _initial_plane_circle(problem: OptimizationProblem, chi: AngleVector) -> Trajectory:
    rot = rotation_to_target(chi)
    e1, e2 = rot[0, :], rot[1, :]
    center = problem.region.center
    amp = np.sqrt(e1**2 + e2**2)
    fit = np.min(np.where(amp > 0, problem.region.half_extent / np.where(amp > 0, amp, 1.0), np.inf))
    n = problem.n_snapshots
    speed_radius = problem.step_length / (2.0 * np.sin(np.pi / n))
    radius = 0.999 * min(fit, speed_radius)
    ang = 2.0 * np.pi * np.arange(n) / n
    positions = (
        center[:, None]
        + radius * np.outer(e1, np.cos(ang))
        + radius * np.outer(e2, np.sin(ang))
    )
    return _project_to_blocks(Trajectory.from_positions(positions, problem.sampling_period), problem)


def optimize_single_direction(problem: OptimizationProblem, chi: AngleVector = None, r_init: Trajectory = None):
    """Trajectory optimization when the angular region is one direction.

    Works in the rotated frame whose z-axis points at the target:
    motion along the target direction cannot improve the objective, so
    only the two in-plane coordinates are optimized and the out-of-plane
    coordinate stays pinned at the region center's plane.  Constraints
    (speed, box in the original frame, block sharing) are unchanged.

    Returns ``(trajectory, trace)`` like :func:`sca_optimize`.
    """
    if chi is None:
        chi = problem.angular.center
    frames = _frames_array([chi])

    if _degenerate_region(problem):
        return _stationary_result(problem, frames, frames)

    model = _P4Model(problem, chi)
    if r_init is None:
        current = _initial_plane_circle(problem, chi)
    else:
        report = check_feasibility(r_init, problem.region, problem.vmax)
        if not report.feasible:
            raise ValueError("initial trajectory is infeasible for the problem region/speed")
        current = _project_to_blocks(r_init, problem)

    trace = ScaTrace()
    prev = model.factor(current)
    trace.record(0, prev, prev, 0.0, "init")
    for it in range(1, problem.max_outer_iters + 1):
        tic = time.perf_counter()
        try:
            r1_n, vb_n, _, status = model.solve(model.normalized_blocks(current))
        except RuntimeError:
            trace.stop_reason = "solver-failure"
            break
        candidate = model.to_trajectory(r1_n, vb_n)
        worst = model.factor(candidate)
        elapsed = time.perf_counter() - tic
        if worst > prev + _MONOTONE_SLACK * max(1.0, abs(prev)):
            trace.stop_reason = "stalled"
            break
        current = candidate
        trace.record(it, worst, worst, elapsed, status)
        decrease = prev - worst
        prev = worst
        if abs(decrease) <= problem.sca_tol:
            trace.stop_reason = "converged"
            break
    else:
        trace.stop_reason = "max-iterations"
    return current, trace
