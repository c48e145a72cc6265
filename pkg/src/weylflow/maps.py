"""Discrete maps into model targets: differentials, second fundamental
forms, tension fields, energy and rank diagnostics.

The differential is computed in log coordinates: neighbouring map values are
pulled back to the tangent space at u(x) before differencing, so tension
fields are tangent by construction and linear (geodesic-affine) maps are
differentiated exactly.  Stencils wrap each periodic axis through the
equivariance twist of that axis.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import CutLocusError, ResolutionError
from .grids import DomainGrid
from .metrics import ChristoffelField, MetricField, domain_christoffels, require_same_grid
from .targets import EquivarianceData, TargetSpace

__all__ = [
    "MapField",
    "differential",
    "second_fundamental_form",
    "tension",
    "weyl_tension",
    "energy",
    "rank_profile",
    "RankProfile",
]

_WRAP_TOL = 1e-12


@dataclass(frozen=True)
class MapField:
    """Map u: grid -> target, stored as ambient values of shape
    (*sizes, point_dim), together with the equivariance twists applied when
    stencils wrap each periodic axis."""

    grid: DomainGrid
    space: TargetSpace
    values: np.ndarray
    equivariance: EquivarianceData

    def __post_init__(self):
        if self.values.shape != self.grid.sizes + (self.space.point_dim,):
            raise ValueError("map values shape does not match grid/target")
        if len(self.equivariance.twists) != self.grid.n:
            raise ValueError("need one twist per domain axis")
        c = self.space.check_point(self.values)
        if c > 1e-10:
            raise ValueError(f"map values violate the ambient constraint ({c:.3e})")

    @classmethod
    def create(cls, grid, space, values, equivariance=None) -> "MapField":
        if equivariance is None:
            equivariance = EquivarianceData.trivial(space, grid.n)
        values = space.project(np.asarray(values, dtype=float))
        return cls(grid, space, values, equivariance)

    def with_values(self, values: np.ndarray) -> "MapField":
        return replace(self, values=values)

    def wrap_consistency(self) -> float:
        """Sup residual of twist . twist^{-1} = id on the stored values."""
        worst = 0.0
        for t in self.equivariance.twists:
            back = t.inverse().apply_point(t.apply_point(self.values))
            worst = max(worst, float(np.abs(back - self.values).max()))
        return worst

    def neighbor_values(self, axis: int, steps: int) -> np.ndarray:
        """Map values at x + steps*h*e_axis with the wrap twist applied."""
        return _twisted_shift(self, self.values, axis, steps, tangent=False)

    def neighbor_tangent(self, field: np.ndarray, axis: int, steps: int) -> np.ndarray:
        """Shift a tangent-vector field (values in T_{u(x)}) the same way."""
        return _twisted_shift(self, field, axis, steps, tangent=True)


def _twisted_shift(u: MapField, field: np.ndarray, axis: int, steps: int, tangent: bool):
    """np.roll with the axis twist applied to the slab that wrapped."""
    if steps == 0:
        return field
    out = field
    unit = 1 if steps > 0 else -1
    twist = u.equivariance.twist(axis)
    action = twist if unit > 0 else twist.inverse()
    size = u.grid.sizes[axis]
    for _ in range(abs(steps)):
        out = np.roll(out, -unit, axis=axis)  # fresh array, safe to mutate
        idx = [slice(None)] * out.ndim
        idx[axis] = size - 1 if unit > 0 else 0
        idx = tuple(idx)
        if tangent:
            out[idx] = action.apply_tangent(None, out[idx])
        else:
            out[idx] = action.apply_point(out[idx])
    return out


def _stencil_taps(order: int):
    if order == 2:
        return ((1, 0.5), (-1, -0.5))
    return ((2, -1.0 / 12.0), (1, 8.0 / 12.0), (-1, -8.0 / 12.0), (-2, 1.0 / 12.0))


class _NeighborCache:
    """Per-map cache of twisted neighbour values, shared between the
    differential and the second fundamental form within one evaluation."""

    def __init__(self, u: MapField):
        self.u = u
        self._vals = {}

    def values(self, axis: int, step: int) -> np.ndarray:
        key = (axis, step)
        if key not in self._vals:
            self._vals[key] = _twisted_shift(self.u, self.u.values, axis, step, tangent=False)
        return self._vals[key]


def differential(u: MapField, cache: "_NeighborCache | None" = None) -> np.ndarray:
    """du per point, shape (*sizes, n, point_dim); du[..., a, :] = du(d_a),
    a tangent vector at u(x).

    All stencil taps are pulled back through one batched log call.
    """
    grid, space = u.grid, u.space
    cache = cache or _NeighborCache(u)
    taps = _stencil_taps(grid.order)
    stacked = np.stack(
        [cache.values(a, step) for a in range(grid.n) for step, _ in taps], axis=0
    )
    try:
        logs = space.log(u.values[None], stacked)
    except CutLocusError as exc:  # neighbour out of log range
        raise ResolutionError("a stencil neighbour lies beyond the injectivity radius") from exc
    du = np.zeros(grid.sizes + (grid.n, space.point_dim))
    k = 0
    for a in range(grid.n):
        h = grid.spacings[a]
        acc = np.zeros(grid.sizes + (space.point_dim,))
        for _, w in taps:
            acc += w * logs[k]
            k += 1
        du[..., a, :] = acc / h
    return du


def section_derivative(u: MapField, section: np.ndarray, axis: int) -> np.ndarray:
    """Covariant derivative along a grid axis of a section of u*TM'.

    Neighbouring section values are parallel-transported to u(x) along the
    shortest target geodesics before centered differencing.
    """
    grid, space = u.grid, u.space
    h = grid.spacings[axis]
    acc = np.zeros_like(section)
    for step, w in _stencil_taps(grid.order):
        q = u.neighbor_values(axis, step)
        s = u.neighbor_tangent(section, axis, step)
        acc += w * space.transport(q, u.values, s)
    return acc / h


def second_fundamental_form(
    u: MapField,
    connection: ChristoffelField,
    du: np.ndarray | None = None,
    pair_mask: np.ndarray | None = None,
    cache: "_NeighborCache | None" = None,
) -> np.ndarray:
    """D2u(d_a, d_b) = grad_a(du)(d_b), shape (*sizes, n, n, point_dim).

    ``connection`` selects the domain connection (Levi-Civita or Weyl); the
    target side always uses parallel transport of the model space.  When
    ``pair_mask`` is given, pairs flagged False are left as zeros (used to
    skip components with vanishing trace weight).  Transports for all needed
    (pair, tap) combinations go through one batched call per tap.
    """
    grid, space = u.grid, u.space
    cache = cache or _NeighborCache(u)
    if du is None:
        du = differential(u, cache=cache)
    n = grid.n
    pairs = [
        (a, b)
        for a in range(n)
        for b in range(n)
        if pair_mask is None or pair_mask[a, b]
    ]
    d2 = np.zeros(grid.sizes + (n, n, space.point_dim))
    taps = _stencil_taps(grid.order)
    moved_sum = np.zeros((len(pairs),) + grid.sizes + (space.point_dim,))
    for step, w in taps:
        q = np.stack([cache.values(a, step) for a, _ in pairs], axis=0)
        s = np.stack(
            [_twisted_shift(u, du[..., b, :], a, step, tangent=True) for a, b in pairs],
            axis=0,
        )
        moved_sum += w * space.transport(q, u.values[None], s)
    for idx, (a, b) in enumerate(pairs):
        d2[..., a, b, :] = moved_sum[idx] / grid.spacings[a]
    if np.any(connection.gamma):
        correction = np.einsum("...kab,...kp->...abp", connection.gamma, du)
        if pair_mask is not None:
            correction = correction * pair_mask[:, :, None]
        d2 = d2 - correction
    return d2


def _nonzero_pairs(ginv: np.ndarray, n: int) -> np.ndarray:
    flat = np.abs(ginv).reshape(-1, n, n).max(axis=0)
    return flat > 0.0


def tension(
    u: MapField,
    metric: MetricField,
    christoffels: ChristoffelField | None = None,
    du: np.ndarray | None = None,
    cache: "_NeighborCache | None" = None,
) -> np.ndarray:
    """Harmonic tension field trace_g D2u, shape (*sizes, point_dim)."""
    require_same_grid(u, metric)
    if christoffels is None:
        christoffels = domain_christoffels(metric)
    cache = cache or _NeighborCache(u)
    if du is None:
        du = differential(u, cache=cache)
    mask = _nonzero_pairs(metric.inverse, metric.n)
    d2 = second_fundamental_form(u, christoffels, du=du, pair_mask=mask, cache=cache)
    tau = np.einsum("...ab,...abp->...p", metric.inverse, d2)
    return u.space.project_tangent(u.values, tau)


def weyl_tension(
    u: MapField,
    metric: MetricField,
    higgs,
    christoffels: ChristoffelField | None = None,
    du: np.ndarray | None = None,
    cache: "_NeighborCache | None" = None,
) -> np.ndarray:
    """Weyl tension tau - ((n-2)/2) du(theta_sharp).

    In dimension two this is the harmonic tension for every Higgs field.
    """
    cache = cache or _NeighborCache(u)
    if du is None:
        du = differential(u, cache=cache)
    tau = tension(u, metric, christoffels=christoffels, du=du, cache=cache)
    n = u.grid.n
    if n == 2 or higgs is None:
        return tau
    pull = np.einsum("...a,...ap->...p", higgs.sharp, du)
    return tau - 0.5 * (n - 2) * pull


def energy(u: MapField, metric: MetricField, du: np.ndarray | None = None):
    """Dirichlet energy and its density field.

    E(u) = 1/2 * integral of |du|^2 dVol_g with the uniform periodic
    quadrature (exact trapezoid on the torus).
    """
    require_same_grid(u, metric)
    if du is None:
        du = differential(u)
    h = pullback_metric(u, du)
    density = 0.5 * np.einsum("...ab,...ab->...", metric.inverse, h)
    return metric.integrate(density), density


def pullback_metric(u: MapField, du: np.ndarray | None = None) -> np.ndarray:
    """h_{ab} = <du(d_a), du(d_b)>_{g'}, shape (*sizes, n, n)."""
    if du is None:
        du = differential(u)
    n = u.grid.n
    h = np.zeros(u.grid.sizes + (n, n))
    for a in range(n):
        for b in range(a, n):
            val = u.space.inner(u.values, du[..., a, :], du[..., b, :])
            h[..., a, b] = val
            if b != a:
                h[..., b, a] = val
    return h


@dataclass(frozen=True)
class RankProfile:
    ranks: np.ndarray
    histogram: np.ndarray
    max_rank: int
    singular_values: np.ndarray


def rank_profile(u: MapField, metric: MetricField, tol: float = 1e-6) -> RankProfile:
    """Pointwise rank of du: singular values of du as a map
    (T_x M, g) -> (T_u M', g'), thresholded at tol * (s_max + eps)."""
    du = differential(u)
    h = pullback_metric(u, du)
    evals, evecs = np.linalg.eigh(metric.g)
    inv_sqrt = np.einsum(
        "...ik,...k,...jk->...ij", evecs, 1.0 / np.sqrt(evals), evecs
    )
    pencil = np.einsum("...ia,...ab,...bj->...ij", inv_sqrt, h, inv_sqrt)
    s = np.sqrt(np.maximum(np.linalg.eigvalsh(pencil), 0.0))
    smax = s[..., -1]
    thresh = tol * (smax + 1e-30)
    ranks = np.sum(s > thresh[..., None], axis=-1)
    hist = np.bincount(ranks.ravel(), minlength=metric.n + 1)
    return RankProfile(ranks, hist, int(ranks.max()), s)
