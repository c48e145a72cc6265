"""Riemannian metrics on periodic grids and their finite-difference geometry.

Sign conventions: the scalar Laplacian is ``trace_g grad d`` (so it is
non-positive: ``lap(sin) = -sin`` on a 2*pi period), and the Ricci tensor of a
2-d conformal metric ``exp(2*phi)*delta`` equals ``(-lap0 phi) * delta``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError, InvalidMetricError
from .grids import DomainGrid

__all__ = [
    "MetricField",
    "ChristoffelField",
    "domain_christoffels",
    "domain_ricci",
    "scalar_laplacian",
]

_SPD_INVERSE_TOL = 1e-12


@dataclass(frozen=True)
class MetricField:
    """Symmetric positive definite metric sampled per grid point.

    g        : (*sizes, n, n)
    inverse  : (*sizes, n, n), cached
    sqrt_det : (*sizes,), cached volume density
    """

    grid: DomainGrid
    g: np.ndarray
    inverse: np.ndarray
    sqrt_det: np.ndarray

    @classmethod
    def from_array(cls, grid: DomainGrid, g: np.ndarray) -> "MetricField":
        g = np.asarray(g, dtype=float)
        n = grid.n
        if g.shape != grid.sizes + (n, n):
            raise InvalidMetricError(f"metric shape {g.shape} does not match grid")
        if not np.allclose(g, np.swapaxes(g, -1, -2), atol=1e-13):
            raise InvalidMetricError("metric is not symmetric")
        g = 0.5 * (g + np.swapaxes(g, -1, -2))
        eigvals = np.linalg.eigvalsh(g)
        min_eig = float(eigvals.min())
        if min_eig <= 0.0:
            raise InvalidMetricError(f"metric not positive definite (min eigenvalue {min_eig})")
        inverse = np.linalg.inv(g)
        ident = np.eye(n)
        resid = np.abs(np.einsum("...ij,...jk->...ik", inverse, g) - ident).max()
        if resid > _SPD_INVERSE_TOL * max(1.0, float(np.abs(g).max())):
            raise InvalidMetricError(f"inverse residual {resid} too large")
        det = np.linalg.det(g)
        return cls(grid, g, inverse, np.sqrt(det))

    @classmethod
    def flat(cls, grid: DomainGrid) -> "MetricField":
        g = np.broadcast_to(np.eye(grid.n), grid.sizes + (grid.n, grid.n)).copy()
        return cls.from_array(grid, g)

    @classmethod
    def conformally_flat(cls, grid: DomainGrid, phi: np.ndarray) -> "MetricField":
        """Metric exp(2*phi) * delta from a scalar field phi."""
        phi = np.asarray(phi, dtype=float)
        if phi.shape != grid.sizes:
            raise InvalidMetricError("conformal factor shape does not match grid")
        g = np.exp(2.0 * phi)[..., None, None] * np.eye(grid.n)
        return cls.from_array(grid, g)

    @property
    def n(self) -> int:
        return self.grid.n

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.g).min())

    def norm_sq_vector(self, v: np.ndarray) -> np.ndarray:
        """|v|_g^2 for a vector field v of shape (*sizes, n)."""
        return np.einsum("...ij,...i,...j->...", self.g, v, v)

    def norm_sq_covector(self, w: np.ndarray) -> np.ndarray:
        return np.einsum("...ij,...i,...j->...", self.inverse, w, w)

    def sharp(self, w: np.ndarray) -> np.ndarray:
        """Raise the index of a covector field."""
        return np.einsum("...ij,...j->...i", self.inverse, w)

    def flat_index(self, v: np.ndarray) -> np.ndarray:
        """Lower the index of a vector field."""
        return np.einsum("...ij,...j->...i", self.g, v)

    def volume_weights(self) -> np.ndarray:
        """Quadrature weight sqrt(det g) * prod(h) per point."""
        return self.sqrt_det * self.grid.cell_volume

    def integrate(self, scalar: np.ndarray) -> float:
        return float(np.sum(scalar * self.sqrt_det) * self.grid.cell_volume)


@dataclass(frozen=True)
class ChristoffelField:
    """Connection coefficients, gamma[..., k, i, j] = Gamma^k_{ij}."""

    grid: DomainGrid
    gamma: np.ndarray
    kind: str = "levi_civita"

    def trace_with(self, ginv: np.ndarray) -> np.ndarray:
        """g^{ij} Gamma^k_{ij}, shape (*sizes, n)."""
        return np.einsum("...ij,...kij->...k", ginv, self.gamma)


def require_same_grid(*fields) -> None:
    grids = [f.grid for f in fields]
    base = grids[0]
    for g in grids[1:]:
        if g is not base and not base.same_layout(g):
            raise GridMismatchError("fields live on different grids")


def domain_christoffels(metric: MetricField) -> ChristoffelField:
    """Levi-Civita coefficients from centered differences of the metric.

    Gamma^k_{ij} = (1/2) g^{kl} (d_i g_{lj} + d_j g_{li} - d_l g_{ij});
    symmetric in (i, j) by construction.
    """
    grid = metric.grid
    dg = np.stack([grid.diff(metric.g, a) for a in range(grid.n)], axis=-3)
    # dg[..., l, i, j] = d_l g_{ij}
    sym = np.einsum("...ilj->...lij", dg) + np.einsum("...jli->...lij", dg) - dg
    return ChristoffelField(grid, 0.5 * np.einsum("...kl,...lij->...kij", metric.inverse, sym))


def domain_ricci(metric: MetricField, christoffels: ChristoffelField | None = None) -> np.ndarray:
    """Ricci tensor from the finite-difference Riemann tensor.

    Ricci_{ij} = d_k Gamma^k_{ij} - d_i Gamma^k_{kj}
                 + Gamma^k_{kl} Gamma^l_{ij} - Gamma^k_{il} Gamma^l_{kj},
    returned symmetrized, shape (*sizes, n, n).
    """
    grid = metric.grid
    gam = (christoffels or domain_christoffels(metric)).gamma
    n = grid.n
    term1 = sum(grid.diff(gam[..., k, :, :], k) for k in range(n))
    contr = np.einsum("...kkj->...j", gam)
    term2 = np.stack([grid.diff(contr, i) for i in range(n)], axis=-2)
    term3 = np.einsum("...kkl,...lij->...ij", gam, gam)
    term4 = np.einsum("...kil,...lkj->...ij", gam, gam)
    ricci = term1 - term2 + term3 - term4
    return 0.5 * (ricci + np.swapaxes(ricci, -1, -2))


def scalar_laplacian(
    metric: MetricField,
    f: np.ndarray,
    christoffels: ChristoffelField | None = None,
) -> np.ndarray:
    """Laplace-Beltrami of a scalar field, trace_g (grad d f).

    Uses composed centered stencils for the second derivatives so that it
    shares discretization with the map-calculus second fundamental form.
    """
    grid = metric.grid
    gam = (christoffels or domain_christoffels(metric)).gamma
    df = grid.gradient(f)
    hess = np.stack(
        [np.stack([grid.diff(df[..., j], i) for j in range(grid.n)], axis=-1) for i in range(grid.n)],
        axis=-2,
    )
    correction = np.einsum("...kij,...k->...ij", gam, df)
    return np.einsum("...ij,...ij->...", metric.inverse, hess - correction)
