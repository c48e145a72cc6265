"""Higgs 1-forms, Weyl connections, Ricci-Weyl curvature, classification of
Weyl structures and Gauduchon gauge fixing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverFailureError
from .grids import DomainGrid
from .metrics import (
    ChristoffelField,
    MetricField,
    domain_christoffels,
    domain_ricci,
    require_same_grid,
    scalar_laplacian,
)

__all__ = [
    "HiggsField",
    "WeylClass",
    "weyl_connection",
    "compatibility_residual",
    "ricci_weyl",
    "covariant_derivative_covector",
    "exterior_derivative",
    "classify_higgs",
    "gauduchon_fix",
    "GauduchonResult",
    "weyl_laplacian_scalar",
    "codifferential",
]

EXACTNESS_TOL = 1e-8


@dataclass(frozen=True)
class HiggsField:
    """Covector field theta with cached g-sharp and squared norm.

    theta   : (*sizes, n)
    sharp   : (*sizes, n), g^{ab} theta_b
    norm_sq : (*sizes,), |theta|_g^2
    """

    grid: DomainGrid
    theta: np.ndarray
    sharp: np.ndarray
    norm_sq: np.ndarray

    @classmethod
    def from_theta(cls, metric: MetricField, theta: np.ndarray) -> "HiggsField":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != metric.grid.sizes + (metric.n,):
            raise ValueError("Higgs field shape does not match grid")
        sharp = metric.sharp(theta)
        norm_sq = np.einsum("...a,...a->...", theta, sharp)
        return cls(metric.grid, theta, sharp, norm_sq)

    @classmethod
    def zero(cls, metric: MetricField) -> "HiggsField":
        z = np.zeros(metric.grid.sizes + (metric.n,))
        return cls(metric.grid, z, z.copy(), np.zeros(metric.grid.sizes))

    def sharp_residual(self, metric: MetricField) -> float:
        """Sup of |g(theta_sharp, .) - theta|; consistency of the cache."""
        back = metric.flat_index(self.sharp)
        return float(np.abs(back - self.theta).max())


@dataclass(frozen=True)
class WeylClass:
    """Classification of a Weyl structure on the torus domain."""

    tag: str  # exact | closed_nonexact | nonclosed
    d_theta_sup: float
    periods: tuple


def weyl_connection(
    metric: MetricField,
    higgs: HiggsField,
    christoffels: ChristoffelField | None = None,
) -> ChristoffelField:
    """Coefficients of the Weyl connection of (g, theta):

    Gamma^W = Gamma - 1/2 (theta_i d^k_j + theta_j d^k_i) + 1/2 g_{ij} theta^k.
    """
    require_same_grid(metric, higgs)
    gam = (christoffels or domain_christoffels(metric)).gamma
    n = metric.n
    eye = np.eye(n)
    th = higgs.theta
    correction = (
        -0.5 * np.einsum("...i,kj->...kij", th, eye)
        - 0.5 * np.einsum("...j,ki->...kij", th, eye)
        + 0.5 * np.einsum("...ij,...k->...kij", metric.g, higgs.sharp)
    )
    return ChristoffelField(metric.grid, gam + correction, kind="weyl")


def compatibility_residual(metric: MetricField, higgs: HiggsField) -> float:
    """Sup residual of grad^W g = theta x g, assembled with the shared
    centered stencils: (grad^W_k g)_{ij} = d_k g_{ij} - G^l_{ki} g_{lj}
    - G^l_{kj} g_{il}.  Zero to rounding for constant-coefficient data."""
    grid = metric.grid
    gw = weyl_connection(metric, higgs).gamma  # gw[..., l, k, i] = Gamma^l_{ki}
    worst = 0.0
    for k in range(grid.n):
        dk = grid.diff(metric.g, k)
        term1 = np.einsum("...li,...lj->...ij", gw[..., :, k, :], metric.g)
        term2 = np.einsum("...lj,...il->...ij", gw[..., :, k, :], metric.g)
        resid = dk - term1 - term2 - higgs.theta[..., k, None, None] * metric.g
        worst = max(worst, float(np.abs(resid).max()))
    return worst


def ricci_weyl(
    metric: MetricField,
    higgs: HiggsField,
    ricci: np.ndarray | None = None,
    christoffels: ChristoffelField | None = None,
) -> np.ndarray:
    """Symmetric part of the Ricci curvature of the Weyl connection:

    Ricci^W = Ricci + (n-2)/2 * sym(grad theta)
                    - (n-2)/4 * (|theta|^2 g - theta x theta).
    """
    require_same_grid(metric, higgs)
    grid, n = metric.grid, metric.n
    if christoffels is None:
        christoffels = domain_christoffels(metric)
    if ricci is None:
        ricci = domain_ricci(metric, christoffels)
    grad_theta = covariant_derivative_covector(metric, higgs.theta, christoffels)
    sym = 0.5 * (grad_theta + np.swapaxes(grad_theta, -1, -2))
    quad = higgs.norm_sq[..., None, None] * metric.g - np.einsum(
        "...i,...j->...ij", higgs.theta, higgs.theta
    )
    c = n - 2
    return ricci + 0.5 * c * sym - 0.25 * c * quad


def covariant_derivative_covector(
    metric: MetricField, omega: np.ndarray, christoffels: ChristoffelField | None = None
) -> np.ndarray:
    """(grad_i omega)_j = d_i omega_j - Gamma^k_{ij} omega_k, (*sizes, n, n)."""
    grid = metric.grid
    gam = (christoffels or domain_christoffels(metric)).gamma
    d = np.stack([grid.diff(omega, i) for i in range(grid.n)], axis=-2)
    return d - np.einsum("...kij,...k->...ij", gam, omega)


def exterior_derivative(grid: DomainGrid, omega: np.ndarray) -> np.ndarray:
    """(d omega)_{ij} = d_i omega_j - d_j omega_i by centered differences."""
    d = np.stack([grid.diff(omega, i) for i in range(grid.n)], axis=-2)
    return d - np.swapaxes(d, -1, -2)


def classify_higgs(higgs: HiggsField, metric: MetricField, tol: float = EXACTNESS_TOL) -> WeylClass:
    """Classify theta as exact / closed_nonexact / nonclosed.

    d(theta) is measured in sup norm; periods are trapezoidal line integrals
    over the axis cycles through the origin.  Exactness requires every
    |period| < tol * L and sup|d theta| < tol.
    """
    grid = higgs.grid
    d_sup = float(np.abs(exterior_derivative(grid, higgs.theta)).max())
    periods = tuple(grid.line_integral(higgs.theta, a) for a in range(grid.n))
    if d_sup >= tol:
        tag = "nonclosed"
    elif all(abs(p) < tol * L for p, L in zip(periods, grid.lengths)):
        tag = "exact"
    else:
        tag = "closed_nonexact"
    return WeylClass(tag, d_sup, periods)


def weyl_laplacian_scalar(
    metric: MetricField,
    higgs: HiggsField | None,
    f: np.ndarray,
    christoffels: ChristoffelField | None = None,
) -> np.ndarray:
    """Weyl Laplacian on functions, trace_g grad^W d f.

    Coefficient-level trace; algebraically identical to
    lap_g f - (n-2)/2 * theta(grad f).
    """
    grid = metric.grid
    if christoffels is None:
        christoffels = domain_christoffels(metric)
    lap = scalar_laplacian(metric, f, christoffels)
    if higgs is None or grid.n == 2:
        return lap
    df = grid.gradient(f)
    return lap - 0.5 * (grid.n - 2) * np.einsum("...a,...a->...", higgs.sharp, df)


def codifferential(metric: MetricField, omega: np.ndarray) -> np.ndarray:
    """d* omega = -(1/sqrt g) d_a (sqrt g g^{ab} omega_b), centered."""
    grid = metric.grid
    flux = metric.sqrt_det[..., None] * metric.sharp(omega)
    div = sum(grid.diff(flux[..., a], a) for a in range(grid.n))
    return -div / metric.sqrt_det


@dataclass(frozen=True)
class GauduchonResult:
    f: np.ndarray
    residual_sup: float
    outer_iterations: int
    converged: bool


def _parity_modes(grid: DomainGrid) -> np.ndarray:
    """The 2^n sign-product fields annihilated by every centered first
    difference; they span the kernel of the centered div-grad operator."""
    modes = []
    for bits in range(2 ** grid.n):
        field = np.ones(grid.sizes)
        for a in range(grid.n):
            if (bits >> a) & 1:
                shape = [1] * grid.n
                shape[a] = grid.sizes[a]
                field = field * ((-1.0) ** np.arange(grid.sizes[a])).reshape(shape)
        modes.append(field.ravel())
    m = np.stack(modes, axis=0)
    return m / np.linalg.norm(m, axis=1, keepdims=True)


def _deflated_cg(apply_op, rhs, modes, tol, max_iter):
    """Conjugate gradients for the (negated) centered div-grad operator,
    restricted to the orthogonal complement of its parity kernel."""

    def project(x):
        return x - modes.T @ (modes @ x)

    b = project(rhs)
    x = np.zeros_like(b)
    r = b.copy()
    p = r.copy()
    rs = float(r @ r)
    b_norm = np.sqrt(float(b @ b)) or 1.0
    for k in range(max_iter):
        if np.sqrt(rs) <= tol * b_norm:
            return x, True
        ap = project(apply_op(p))
        alpha = rs / float(p @ ap)
        x += alpha * p
        r -= alpha * ap
        rs_new = float(r @ r)
        p = r + (rs_new / rs) * p
        rs = rs_new
        if k % 50 == 49:
            x = project(x)
            r = project(b - apply_op(x))
            rs = float(r @ r)
            p = r.copy()
    return x, np.sqrt(rs) <= tol * b_norm


def gauduchon_fix(
    metric: MetricField,
    higgs: HiggsField,
    tol: float = 1e-8,
    max_outer: int = 200,
    damping: float = 0.5,
    inner_tol: float = 1e-10,
) -> GauduchonResult:
    """Find the conformal gauge in which the Higgs field is co-closed.

    Returns a mean-zero f such that with g' = e^f g and theta' = theta + df
    the co-differential d*_{g'} theta' has sup norm below ``tol``.  Damped
    Picard iteration on f; the linearized problem (coefficients frozen) is
    solved by deflated conjugate gradients.
    """
    require_same_grid(metric, higgs)
    grid, n = metric.grid, metric.n
    npts = grid.num_points
    modes = _parity_modes(grid)
    sqrt_g = metric.sqrt_det
    ginv = metric.inverse

    def full_residual(f):
        w = np.exp(0.5 * (n - 2) * f)
        theta_p = higgs.theta + grid.gradient(f)
        flux = (w * sqrt_g)[..., None] * np.einsum("...ab,...b->...a", ginv, theta_p)
        div = sum(grid.diff(flux[..., a], a) for a in range(grid.n))
        return -div * np.exp(-0.5 * n * f) / sqrt_g

    f = np.zeros(grid.sizes)
    res = float(np.abs(full_residual(f)).max())
    if res < tol:
        return GauduchonResult(f, res, 0, True)

    for outer in range(1, max_outer + 1):
        w = np.exp(0.5 * (n - 2) * f)
        coeff = (w * sqrt_g)[..., None, None] * ginv

        def apply_op(x):
            field = x.reshape(grid.sizes)
            grad = grid.gradient(field)
            flux = np.einsum("...ab,...b->...a", coeff, grad)
            div = sum(grid.diff(flux[..., a], a) for a in range(grid.n))
            return -div.ravel()

        flux0 = np.einsum("...ab,...b->...a", coeff, higgs.theta)
        rhs = sum(grid.diff(flux0[..., a], a) for a in range(grid.n)).ravel()
        sol, ok = _deflated_cg(apply_op, rhs, modes, inner_tol, max_iter=20 * npts)
        f_new = sol.reshape(grid.sizes)
        f_new -= f_new.mean()
        f = f + damping * (f_new - f)
        f -= f.mean()
        res = float(np.abs(full_residual(f)).max())
        if res < tol:
            return GauduchonResult(f, res, outer, True)
    raise SolverFailureError(
        f"gauduchon gauge fix did not reach {tol} in {max_outer} iterations",
        residual=res,
    )
