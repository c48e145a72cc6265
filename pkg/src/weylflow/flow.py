"""Geodesic-Euler heat flow for the Weyl tension field, with the run
monitors, outcome classification, geodesic homotopies, and the
parallel-section detector for pull-back bundles."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import HomotopyUndefinedError, SolverFailureError
from .higgs import HiggsField
from .maps import MapField, differential, energy, pullback_metric, tension, weyl_tension
from .metrics import ChristoffelField, MetricField, domain_christoffels
from .targets import Circle, Euclidean, FlatTorus, ambient_weight

__all__ = [
    "FlowConfig",
    "FlowState",
    "FlowReport",
    "flow_step",
    "flow_run",
    "geodesic_homotopy",
    "GeodesicHomotopy",
    "parallel_section_detect",
]

DIVERGENCE_GUARD = 1e6


@dataclass(frozen=True)
class FlowConfig:
    """Time-stepping and stopping policy for the heat flow.

    dt          : fixed step, used when cfl_lambda is None
    cfl_lambda  : dt = lambda * h_min^2 / (2 n sup g^{aa}); must be in (0, 1/2]
    tension_tol : convergence when sup |tau^W| drops below this
    max_steps   : hard budget
    monitor_cadence   : record monitors every k steps
    traveling_window  : number of monitor samples for the constant-speed test
    traveling_rel_sd  : relative std-dev threshold within the window
    traveling_min_speed : speeds below this never classify as traveling waves
    snapshot_cadence  : keep a map snapshot every k steps (0 = only initial)
    """

    dt: float | None = None
    cfl_lambda: float | None = 0.25
    tension_tol: float = 1e-8
    max_steps: int = 100000
    monitor_cadence: int = 1
    traveling_window: int = 200
    traveling_rel_sd: float = 1e-3
    traveling_min_speed: float = 1e-6
    snapshot_cadence: int = 0

    def __post_init__(self):
        if self.cfl_lambda is not None and not 0.0 < self.cfl_lambda <= 0.5:
            raise ValueError("CFL fraction must lie in (0, 1/2]")
        if self.cfl_lambda is None and (self.dt is None or self.dt <= 0):
            raise ValueError("need a positive fixed dt or a CFL fraction")
        if self.tension_tol <= 0:
            raise ValueError("tolerances must be positive")

    def step_size(self, metric: MetricField) -> float:
        if self.cfl_lambda is None:
            return float(self.dt)
        h2 = min(h * h for h in metric.grid.spacings)
        sup_diag = float(
            max(metric.inverse[..., a, a].max() for a in range(metric.n))
        )
        return self.cfl_lambda * h2 / (2.0 * metric.n * sup_diag)


@dataclass(frozen=True)
class FlowState:
    """One snapshot of the flow: time, map, and the velocity tau^W there."""

    t: float
    u: MapField
    velocity: np.ndarray
    du: np.ndarray
    step: int = 0

    def sup_speed_sq(self) -> float:
        sq = self.u.space.inner(self.u.values, self.velocity, self.velocity)
        return float(sq.max())


@dataclass
class FlowReport:
    outcome: str  # converged | traveling_wave | budget_exhausted | diverged
    final_sup_tension: float
    steps: int
    series: dict
    wall_time: float
    velocity_sq_per_step: np.ndarray
    final_map: MapField
    asymptotic_speed: float | None = None
    snapshots: list = field(default_factory=list)

    def max_velocity_sq_increase(self) -> float:
        """Largest step-to-step increase of sup |du/dt|^2 (claim-c1 monitor,
        sampled every step regardless of the monitor cadence)."""
        v = np.asarray(self.velocity_sq_per_step)
        if len(v) < 2:
            return 0.0
        return float(np.diff(v).max())


def initial_state(u0: MapField, metric: MetricField, higgs=None, christoffels=None) -> FlowState:
    if christoffels is None:
        christoffels = domain_christoffels(metric)
    du = differential(u0)
    v = weyl_tension(u0, metric, higgs, christoffels=christoffels, du=du)
    return FlowState(0.0, u0, v, du, 0)


def flow_step(
    state: FlowState,
    metric: MetricField,
    higgs,
    dt: float,
    christoffels: ChristoffelField | None = None,
) -> FlowState:
    """One geodesic Euler step u <- exp_u(dt * tau^W(u)) with re-projection."""
    if christoffels is None:
        christoffels = domain_christoffels(metric)
    u = state.u
    stepped = u.space.project(u.space.exp(u.values, dt * state.velocity))
    u_new = u.with_values(stepped)
    du = differential(u_new)
    v = weyl_tension(u_new, metric, higgs, christoffels=christoffels, du=du)
    return FlowState(state.t + dt, u_new, v, du, state.step + 1)


def _rho_to_initial(u: MapField, u0_values: np.ndarray) -> np.ndarray:
    """Distance to the initial map in the class fixed by the flow path.

    Flat kinds store lifts, so the plain lift difference is the distance along
    the flow homotopy; curved model targets use the ambient distance (globally
    valid for the hyperboloid, valid below the divergence guard for spheres).
    """
    space = u.space
    if isinstance(space, (Euclidean, FlatTorus)):
        return np.linalg.norm(u.values - u0_values, axis=-1)
    if isinstance(space, Circle):
        return space.radius * np.abs(u.values[..., 0] - u0_values[..., 0])
    return space.dist(u.values, u0_values)


def flow_run(
    u0: MapField,
    metric: MetricField,
    higgs: HiggsField | None,
    config: FlowConfig,
) -> FlowReport:
    """Run the heat flow du/dt = tau^W(u) from u0 and classify the outcome.

    Monitors per sample: t, energy, sup |tau^W|, sup |du/dt|^2, sup |du|^2,
    and the sup/inf of the distance to u0.  Convergence means
    sup |tau^W| < tension_tol; a traveling wave is a nonzero speed plateau
    (relative sd below the configured threshold across the window).
    """
    t_start = time.perf_counter()
    christoffels = domain_christoffels(metric)
    dt = config.step_size(metric)
    state = initial_state(u0, metric, higgs, christoffels)
    u0_values = u0.values.copy()

    cols = ("step", "t", "energy", "sup_tension", "sup_velocity_sq", "sup_du_sq", "rho_sup", "rho_inf")
    series = {c: [] for c in cols}
    snapshots = [(0, u0)]
    window = []
    velocity_sq_steps = []

    def speed_sq(st: FlowState) -> float:
        sq = st.u.space.inner(st.u.values, st.velocity, st.velocity)
        return float(sq.max())

    def record(st: FlowState, sup_v_sq: float) -> float:
        e, _ = energy(st.u, metric, du=st.du)
        h = pullback_metric(st.u, st.du)
        du_sq = np.einsum("...ab,...ab->...", metric.inverse, h)
        rho = _rho_to_initial(st.u, u0_values)
        series["step"].append(st.step)
        series["t"].append(st.t)
        series["energy"].append(e)
        series["sup_tension"].append(float(np.sqrt(sup_v_sq)))
        series["sup_velocity_sq"].append(sup_v_sq)
        series["sup_du_sq"].append(float(du_sq.max()))
        series["rho_sup"].append(float(rho.max()))
        series["rho_inf"].append(float(rho.min()))
        window.append(float(np.sqrt(sup_v_sq)))
        if len(window) > config.traveling_window:
            window.pop(0)
        return float(du_sq.max())

    sup_v_sq = speed_sq(state)
    velocity_sq_steps.append(sup_v_sq)
    record(state, sup_v_sq)

    def finish(outcome, asymptotic=None):
        return FlowReport(
            outcome=outcome,
            final_sup_tension=float(np.sqrt(max(sup_v_sq, 0.0))),
            steps=state.step,
            series={k: np.asarray(v) for k, v in series.items()},
            wall_time=time.perf_counter() - t_start,
            velocity_sq_per_step=np.asarray(velocity_sq_steps),
            final_map=state.u,
            asymptotic_speed=asymptotic,
            snapshots=snapshots,
        )

    if np.sqrt(sup_v_sq) < config.tension_tol:
        return finish("converged")

    while state.step < config.max_steps:
        state = flow_step(state, metric, higgs, dt, christoffels)
        sup_v_sq = speed_sq(state)
        velocity_sq_steps.append(sup_v_sq)
        if not np.isfinite(sup_v_sq):
            return finish("diverged")
        if state.step % config.monitor_cadence == 0:
            sup_du_sq = record(state, sup_v_sq)
            if sup_du_sq > DIVERGENCE_GUARD**2:
                return finish("diverged")
            if np.sqrt(sup_v_sq) < config.tension_tol:
                return finish("converged")
            if len(window) == config.traveling_window:
                arr = np.asarray(window)
                mean = arr.mean()
                if mean > config.traveling_min_speed and arr.std() / mean < config.traveling_rel_sd:
                    return finish("traveling_wave", asymptotic=float(mean))
        if config.snapshot_cadence and state.step % config.snapshot_cadence == 0:
            snapshots.append((state.step, state.u))
    return finish("budget_exhausted")


# ---------------------------------------------------------------------------
# geodesic homotopies


@dataclass(frozen=True)
class GeodesicHomotopy:
    s_values: np.ndarray
    maps: list
    rho: np.ndarray
    rho_sup: float
    rho_inf: float
    slice_sup_tension: np.ndarray | None = None


def geodesic_homotopy(
    u: MapField,
    v: MapField,
    s_values=None,
    metric: MetricField | None = None,
    higgs: HiggsField | None = None,
) -> GeodesicHomotopy:
    """Pointwise geodesic family u_s = exp_u(s log_u(v)) for s in [0, 1].

    Reports rho(x) = dist(u(x), v(x)) and, when a metric is supplied, the
    sup of |tau^W| on every slice.
    """
    if u.grid is not v.grid and not u.grid.same_layout(v.grid):
        raise HomotopyUndefinedError("maps live on different grids")
    if u.space is not v.space and u.space.kind != v.space.kind:
        raise HomotopyUndefinedError("maps have different targets")
    if not u.equivariance.compatible_with(v.equivariance):
        raise HomotopyUndefinedError("equivariance data differ between the maps")
    space = u.space
    if space.kind == "sphere":
        if float(space.dist(u.values, v.values).max()) > np.pi * space.radius - 1e-6:
            raise HomotopyUndefinedError("maps reach the spherical cut locus")
    try:
        direction = space.log(u.values, v.values)
    except Exception as exc:
        raise HomotopyUndefinedError(str(exc)) from exc
    rho = space.dist(u.values, v.values)
    if s_values is None:
        s_values = np.linspace(0.0, 1.0, 5)
    s_values = np.asarray(s_values, dtype=float)
    maps = []
    sups = [] if metric is not None else None
    for s in s_values:
        us = u.with_values(space.project(space.exp(u.values, s * direction)))
        maps.append(us)
        if metric is not None:
            tw = weyl_tension(us, metric, higgs)
            sq = space.inner(us.values, tw, tw)
            sups.append(float(np.sqrt(sq.max())))
    return GeodesicHomotopy(
        s_values,
        maps,
        rho,
        float(rho.max()),
        float(rho.min()),
        None if sups is None else np.asarray(sups),
    )


# ---------------------------------------------------------------------------
# parallel-section detector


def _tangent_frames(u: MapField) -> np.ndarray:
    """Deterministic g'-orthonormal frame of u*TM' per grid point,
    shape (*sizes, point_dim, fiber_dim)."""
    space = u.space
    p = u.values
    ambient = space.point_dim
    fiber = {
        "euclidean": ambient,
        "circle": 1,
        "flat_torus": ambient,
        "sphere": ambient - 1,
        "hyperbolic": ambient - 1,
    }[space.kind]
    if space.kind in ("euclidean", "flat_torus", "circle"):
        frame = np.broadcast_to(np.eye(ambient)[:, :fiber], p.shape + (fiber,)).copy()
        return frame
    # project the ambient basis onto the tangent space, then Gram-Schmidt in
    # fixed axis order, keeping the `fiber` most independent columns
    cols = []
    for k in range(ambient):
        e = np.zeros(ambient)
        e[k] = 1.0
        cols.append(space.project_tangent(p, np.broadcast_to(e, p.shape).copy()))
    frame = []
    for c in cols:
        w = c.copy()
        for f in frame:
            w = w - (space.inner(p, f, w) / space.inner(p, f, f))[..., None] * f
        norm2 = space.inner(p, w, w)
        if float(norm2.min()) > 1e-12:
            frame.append(w)
        if len(frame) == fiber:
            break
    if len(frame) < fiber:
        raise SolverFailureError("failed to build a tangent frame")
    frame = [f / np.sqrt(space.inner(p, f, f))[..., None] for f in frame]
    return np.stack(frame, axis=-1)


def parallel_section_detect(u: MapField, n_iter: int = 200, tol: float = 1e-12, seed: int = 0):
    """Smallest Rayleigh quotient of the discrete connection Laplacian on
    sections of u*TM', by shifted inverse-power iteration.

    A quotient near zero certifies a parallel section (holonomy-free bundle);
    a quotient bounded away from zero is the obstruction measure.  Returns
    (quotient, witness) where witness is an ambient section field.
    """
    space, grid = u.space, u.grid
    frame = _tangent_frames(u)
    fiber = frame.shape[-1]
    npts = grid.num_points
    dim = npts * fiber

    flat_index = np.arange(npts).reshape(grid.sizes)
    vol = np.full(grid.sizes, grid.cell_volume)
    mass = np.repeat(vol.ravel(), fiber)

    # Edge energy along each axis: E = sum w |T c(y) - c(x)|^2 where c are
    # frame coefficients and T[a,b] = <frame_a(x), P_{y->x} frame_b(y)>.
    # With orthonormal frames T is orthogonal, so L has identity diagonal
    # blocks and -w T cross blocks.
    data_rows, data_cols, data_vals = [], [], []
    gw = ambient_weight(space, u.values)
    for axis in range(grid.n):
        h = grid.spacings[axis]
        q = u.neighbor_values(axis, 1)
        # twists act on the ambient (last) axis; frame stores fiber last
        fr_roll = np.swapaxes(
            u.neighbor_tangent(np.swapaxes(frame, -1, -2), axis, 1), -1, -2
        )
        moved = np.stack(
            [space.transport(q, u.values, fr_roll[..., k]) for k in range(fiber)],
            axis=-1,
        )
        t_mat = np.einsum("...pa,...p,...pb->...ab", frame, gw, moved)
        w = (vol / (h * h)).ravel()
        i_here = flat_index.ravel()
        i_next = np.roll(flat_index, -1, axis=axis).ravel()
        tm = t_mat.reshape(npts, fiber, fiber)
        for a in range(fiber):
            data_rows.append(i_here * fiber + a)
            data_cols.append(i_here * fiber + a)
            data_vals.append(w)
            data_rows.append(i_next * fiber + a)
            data_cols.append(i_next * fiber + a)
            data_vals.append(w)
            for b in range(fiber):
                r = i_here * fiber + a
                c = i_next * fiber + b
                data_rows.append(r)
                data_cols.append(c)
                data_vals.append(-w * tm[:, a, b])
                data_rows.append(c)
                data_cols.append(r)
                data_vals.append(-w * tm[:, a, b])

    L = sp.csr_matrix(
        (np.concatenate(data_vals), (np.concatenate(data_rows), np.concatenate(data_cols))),
        shape=(dim, dim),
    )
    L = 0.5 * (L + L.T)
    M = sp.diags(mass)

    shift = 1e-8 * float(vol.sum())
    lu = spla.splu((L + shift * M).tocsc())
    rng = np.random.default_rng(seed)
    v = rng.normal(size=dim)
    v /= np.sqrt(v @ (M @ v))
    q_prev = np.inf
    for _ in range(n_iter):
        v = lu.solve(M @ v)
        v /= np.sqrt(v @ (M @ v))
        quotient = float(v @ (L @ v))
        if abs(quotient - q_prev) < tol * max(1.0, abs(quotient)):
            break
        q_prev = quotient
    else:
        raise SolverFailureError("inverse-power iteration did not settle", residual=q_prev)

    coeffs = v.reshape(*grid.sizes, fiber)
    witness = np.einsum("...pk,...k->...p", frame, coeffs)
    return quotient, witness


