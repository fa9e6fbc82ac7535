"""Waypoint-tracking trajectory optimization for a differential-drive base.

Finds bounded (v, omega) sequences whose Euler rollout tracks a sequence
of desired planar waypoints. The objective is a weighted sum of squared
position error, wrapped squared yaw error, and first-difference command
smoothness, minimized by projected gradient descent with an Armijo line
search and a small multi-start. A brute-force grid enumerator serves as
an independent oracle for small instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidArgumentError, NumericalFailureError
from .geometry import Pose2, VelocityCommand, wrap
from .ingest import WaypointTrack

ARMIJO_C = 1e-4
BACKTRACK = 0.5


@dataclass(frozen=True)
class RetargetConfig:
    lambda_pos: float = 32.0
    lambda_yaw: float = 2.0
    lambda_smooth: float = 1.0
    v_min: float = -1.0
    v_max: float = 1.0
    omega_min: float = -math.pi
    omega_max: float = math.pi
    dt: float = 0.16  # 0.02 s frame period x 8-frame sampling step
    max_iters: int = 500
    grad_tol: float = 1e-6
    n_starts: int = 3
    window: int = 10  # waypoints per optimization window
    seed: int = 0

    def __post_init__(self):
        if not self.v_min < self.v_max:
            raise InvalidArgumentError("v_min must be < v_max")
        if not self.omega_min < self.omega_max:
            raise InvalidArgumentError("omega_min must be < omega_max")
        if not self.dt > 0:
            raise InvalidArgumentError("dt must be positive")
        for name in ("lambda_pos", "lambda_yaw", "lambda_smooth"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be >= 0")


@dataclass(frozen=True)
class RetargetProblem:
    start: Pose2
    desired: tuple[Pose2, ...]  # waypoints (x_d, y_d, theta_d), yaws wrapped
    config: RetargetConfig = field(default_factory=RetargetConfig)
    prev_cmd: VelocityCommand = VelocityCommand(0.0, 0.0)

    def __post_init__(self):
        if len(self.desired) == 0:
            raise InvalidArgumentError("desired waypoint sequence is empty")


@dataclass(frozen=True)
class RetargetSolution:
    cmds: tuple[VelocityCommand, ...]
    cost_total: float
    cost_pos: float
    cost_yaw: float
    cost_smooth: float
    iterations: int
    converged: bool


def _states(z, prob: RetargetProblem):
    """Euler rollout; returns lists x, y, theta of length K+1 (index 0 = start)."""
    dt = prob.config.dt
    zl = z.tolist() if isinstance(z, np.ndarray) else [list(c) for c in z]
    K = len(zl)
    xs = [0.0] * (K + 1)
    ys = [0.0] * (K + 1)
    ths = [0.0] * (K + 1)
    xs[0], ys[0], ths[0] = prob.start.x, prob.start.y, prob.start.theta
    for k in range(K):
        v, w = zl[k]
        c = math.cos(ths[k])
        s = math.sin(ths[k])
        xs[k + 1] = xs[k] + v * c * dt
        ys[k + 1] = ys[k] + v * s * dt
        ths[k + 1] = wrap(ths[k] + w * dt)
    return xs, ys, ths


def cost(z, prob: RetargetProblem) -> tuple[float, float, float, float]:
    """Evaluate the tracking objective; returns (total, pos, yaw, smooth)."""
    z = np.asarray(z, dtype=float).reshape(-1, 2)
    if len(z) != len(prob.desired):
        raise InvalidArgumentError(
            f"command count {len(z)} != waypoint count {len(prob.desired)}"
        )
    cfg = prob.config
    xs, ys, ths = _states(z, prob)
    zl = z.tolist()
    c_pos = 0.0
    c_yaw = 0.0
    for k, d in enumerate(prob.desired, start=1):
        c_pos += (xs[k] - d.x) ** 2 + (ys[k] - d.y) ** 2
        c_yaw += wrap(ths[k] - d.theta) ** 2
    c_pos *= cfg.lambda_pos
    c_yaw *= cfg.lambda_yaw
    pv, pw = prob.prev_cmd.v, prob.prev_cmd.omega
    c_smooth = 0.0
    for v, w in zl:
        c_smooth += (v - pv) ** 2 + (w - pw) ** 2
        pv, pw = v, w
    c_smooth *= cfg.lambda_smooth
    return c_pos + c_yaw + c_smooth, c_pos, c_yaw, c_smooth


def gradient(z, prob: RetargetProblem) -> np.ndarray:
    """Exact gradient of :func:`cost` by backward recursion through the rollout.

    The angle wrap is differentiated as identity; residuals are kept off
    the +/-pi seam by pre-wrapping the desired yaws.
    """
    z = np.asarray(z, dtype=float).reshape(-1, 2)
    if len(z) != len(prob.desired):
        raise InvalidArgumentError(
            f"command count {len(z)} != waypoint count {len(prob.desired)}"
        )
    cfg = prob.config
    dt = cfg.dt
    K = len(z)
    zl = z.tolist()
    xs, ys, ths = _states(z, prob)
    gv = [0.0] * K
    gw = [0.0] * K

    ax = ay = ath = 0.0  # adjoint of state (x_k, y_k, theta_k)
    for k in range(K, 0, -1):
        d = prob.desired[k - 1]
        ax += 2.0 * cfg.lambda_pos * (xs[k] - d.x)
        ay += 2.0 * cfg.lambda_pos * (ys[k] - d.y)
        ath += 2.0 * cfg.lambda_yaw * wrap(ths[k] - d.theta)
        c = math.cos(ths[k - 1])
        s = math.sin(ths[k - 1])
        v = zl[k - 1][0]
        gv[k - 1] += (ax * c + ay * s) * dt
        gw[k - 1] += ath * dt
        # chain rule into theta_{k-1} through the dynamics
        ath += (-ax * v * s + ay * v * c) * dt

    pv, pw = prob.prev_cmd.v, prob.prev_cmd.omega
    lam = cfg.lambda_smooth
    for k in range(K):
        dv = zl[k][0] - (pv if k == 0 else zl[k - 1][0])
        dw = zl[k][1] - (pw if k == 0 else zl[k - 1][1])
        gv[k] += 2.0 * lam * dv
        gw[k] += 2.0 * lam * dw
        if k > 0:
            gv[k - 1] -= 2.0 * lam * dv
            gw[k - 1] -= 2.0 * lam * dw
    return np.column_stack([gv, gw])


def _project(z: np.ndarray, cfg: RetargetConfig) -> np.ndarray:
    out = z.copy()
    out[:, 0] = np.clip(out[:, 0], cfg.v_min, cfg.v_max)
    out[:, 1] = np.clip(out[:, 1], cfg.omega_min, cfg.omega_max)
    return out


def _fd_inversion_init(prob: RetargetProblem) -> np.ndarray:
    """Initialize by finite-difference inversion of the desired waypoints."""
    cfg = prob.config
    dt = cfg.dt
    z = np.zeros((len(prob.desired), 2))
    prev = prob.start
    for k, d in enumerate(prob.desired):
        c = math.cos(prev.theta)
        s = math.sin(prev.theta)
        z[k, 0] = ((d.x - prev.x) * c + (d.y - prev.y) * s) / dt
        z[k, 1] = wrap(d.theta - prev.theta) / dt
        prev = d
    return _project(z, cfg)


def _pgd(z0: np.ndarray, prob: RetargetProblem):
    """Projected gradient descent with Armijo backtracking on the projected arc."""
    cfg = prob.config
    z = _project(z0, cfg)
    f, *_ = cost(z, prob)
    if not math.isfinite(f):
        raise NumericalFailureError("initial cost is not finite", last_iterate=z)
    t = 1.0
    iters = 0
    converged = False
    for iters in range(1, cfg.max_iters + 1):
        g = gradient(z, prob)
        pg = z - _project(z - g, cfg)
        if float(np.linalg.norm(pg)) <= cfg.grad_tol:
            converged = True
            break
        accepted = False
        while t >= 1e-14:
            d = _project(z - t * g, cfg) - z
            f_new, *_ = cost(z + d, prob)
            if not math.isfinite(f_new):
                raise NumericalFailureError("cost became non-finite during line "
                                            "search", last_iterate=z)
            if f_new <= f + ARMIJO_C * float(np.sum(g * d)):
                z = z + d
                f = f_new
                t = min(t * 2.0, 1e6)
                accepted = True
                break
            t *= BACKTRACK
        if not accepted:
            break  # step stalled below machine precision
    return z, f, iters, converged


def solve(prob: RetargetProblem, init=None) -> RetargetSolution:
    """Minimize the tracking objective over box-bounded commands.

    Multi-start (zeros, finite-difference inversion of the waypoints, and
    seeded uniform random commands) guards against local minima of the
    nonconvex shooting objective; the lowest-cost run wins.
    """
    cfg = prob.config
    K = len(prob.desired)
    starts: list[np.ndarray] = []
    if init is not None:
        starts.append(_project(np.asarray(init, dtype=float).reshape(-1, 2), cfg))
    starts.append(np.zeros((K, 2)))
    if cfg.n_starts >= 2:
        starts.append(_fd_inversion_init(prob))
    if cfg.n_starts >= 3:
        rng = np.random.default_rng(cfg.seed)
        rand = np.empty((K, 2))
        rand[:, 0] = rng.uniform(cfg.v_min, cfg.v_max, K)
        rand[:, 1] = rng.uniform(cfg.omega_min, cfg.omega_max, K)
        starts.append(rand)

    best = None
    for z0 in starts:
        z, f, iters, conv = _pgd(z0, prob)
        if best is None or f < best[1]:
            best = (z, f, iters, conv)
    z, _, iters, conv = best
    total, c_pos, c_yaw, c_smooth = cost(z, prob)
    cmds = tuple(VelocityCommand(float(v), float(w)) for v, w in z)
    return RetargetSolution(cmds, float(total), float(c_pos), float(c_yaw),
                            float(c_smooth), iters, conv)


def brute_force(prob: RetargetProblem, grid_per_axis: int) -> tuple[np.ndarray, float]:
    """Exhaustive grid minimizer of the objective; oracle for small instances.

    Enumerates (grid_per_axis^2)^K command sequences uniformly spanning
    the bounds (endpoints included) and returns the best by exact cost.
    """
    cfg = prob.config
    K = len(prob.desired)
    if K > 4 or grid_per_axis > 15:
        raise InvalidArgumentError("brute force limited to K <= 4 and grid <= 15")
    vs = np.linspace(cfg.v_min, cfg.v_max, grid_per_axis)
    ws = np.linspace(cfg.omega_min, cfg.omega_max, grid_per_axis)
    pairs = np.array([(v, w) for v in vs for w in ws])  # (g^2, 2)
    m = len(pairs)
    n = m ** K
    idx = np.arange(n)
    # decode the mixed-radix index into one command pair per step
    z_all = np.empty((n, K, 2))
    for k in range(K - 1, -1, -1):
        z_all[:, k, :] = pairs[idx % m]
        idx //= m

    dt = cfg.dt
    x = np.full(n, prob.start.x)
    y = np.full(n, prob.start.y)
    th = np.full(n, prob.start.theta)
    total = np.zeros(n)
    pv = np.full(n, prob.prev_cmd.v)
    pw = np.full(n, prob.prev_cmd.omega)
    for k in range(K):
        v = z_all[:, k, 0]
        w = z_all[:, k, 1]
        x = x + v * np.cos(th) * dt
        y = y + v * np.sin(th) * dt
        th = th + w * dt
        d = prob.desired[k]
        total += cfg.lambda_pos * ((x - d.x) ** 2 + (y - d.y) ** 2)
        dyaw = np.mod(th - d.theta, 2.0 * math.pi)
        dyaw = np.where(dyaw > math.pi, dyaw - 2.0 * math.pi, dyaw)
        total += cfg.lambda_yaw * dyaw ** 2
        total += cfg.lambda_smooth * ((v - pv) ** 2 + (w - pw) ** 2)
        pv, pw = v, w
    best = int(np.argmin(total))
    return z_all[best].copy(), float(total[best])


def retarget_track(track: WaypointTrack,
                   cfg: Optional[RetargetConfig] = None) -> list[RetargetSolution]:
    """Solve a whole waypoint track in chained windows.

    The first waypoint is the start pose; subsequent waypoints are the
    desired sequence, split into windows of ``cfg.window``. Each window
    starts from the previous window's rollout endpoint with the previous
    final command anchoring the smoothness term.
    """
    cfg = cfg or RetargetConfig()
    poses = [p for _, p in track.waypoints]
    if len(poses) < 2:
        raise InvalidArgumentError("need at least 2 waypoints to retarget")
    desired = poses[1:]
    start = poses[0]
    prev_cmd = VelocityCommand(0.0, 0.0)
    solutions = []
    for w0 in range(0, len(desired), cfg.window):
        window = tuple(p.normalized() for p in desired[w0:w0 + cfg.window])
        prob = RetargetProblem(start, window, cfg, prev_cmd)
        try:
            sol = solve(prob)
        except NumericalFailureError as exc:
            raise NumericalFailureError(
                f"window {w0 // cfg.window}: {exc}", exc.last_iterate
            ) from exc
        solutions.append(sol)
        z = np.array([[c.v, c.omega] for c in sol.cmds])
        xs, ys, ths = _states(z, prob)
        start = Pose2(xs[-1], ys[-1], ths[-1])
        prev_cmd = sol.cmds[-1]
    return solutions


def write_command_file(path, solutions: Sequence[RetargetSolution],
                       dt: float) -> None:
    """Plain-text command table: one (window, v, omega, dt) row per command.

    Window cost breakdowns are recorded in '#!' comment rows so the file
    round-trips through :func:`read_command_file`.
    """
    with open(path, "w") as fh:
        fh.write("# window v omega dt\n")
        fh.write(f"#! dt={dt!r}\n")
        for i, sol in enumerate(solutions):
            fh.write(
                f"#! window={i} cost_total={sol.cost_total!r} "
                f"cost_pos={sol.cost_pos!r} cost_yaw={sol.cost_yaw!r} "
                f"cost_smooth={sol.cost_smooth!r} iterations={sol.iterations} "
                f"converged={int(sol.converged)}\n"
            )
            for c in sol.cmds:
                fh.write(f"{i} {c.v!r} {c.omega!r} {dt!r}\n")


def read_command_file(path) -> tuple[list[RetargetSolution], float]:
    """Rebuild solutions (commands + reported costs) from a command file."""
    metas: dict[int, dict] = {}
    cmds: dict[int, list[VelocityCommand]] = {}
    dt = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#!"):
                fields = dict(kv.split("=") for kv in line[2:].split())
                if "window" in fields:
                    metas[int(fields["window"])] = fields
                else:
                    dt = float(fields["dt"])
            elif line.startswith("#") or not line:
                continue
            else:
                w, v, omega, dt_s = line.split()
                cmds.setdefault(int(w), []).append(
                    VelocityCommand(float(v), float(omega)))
                dt = float(dt_s)
    solutions = []
    for w in sorted(cmds):
        m = metas[w]
        solutions.append(RetargetSolution(
            tuple(cmds[w]), float(m["cost_total"]), float(m["cost_pos"]),
            float(m["cost_yaw"]), float(m["cost_smooth"]),
            int(m["iterations"]), bool(int(m["converged"]))))
    if dt is None:
        raise InvalidArgumentError(f"command file {path} has no dt record")
    return solutions, dt
