"""Model target spaces with closed-form geodesic geometry.

Points are stored in ambient embeddings:

* ``Euclidean(m)``   -- vectors in R^m
* ``Circle(r)``      -- angle lifts, shape (..., 1); tangents are arclength
* ``FlatTorus(m,P)`` -- coordinate lifts in R^m with periods P
* ``Sphere(m,r)``    -- unit vectors in R^{m+1}; the metric is r^2 * dot
* ``Hyperbolic(m)``  -- Minkowski hyperboloid sheet <x,x> = -1, x0 > 0

All operations broadcast over arbitrary leading axes, so whole grid fields
are processed at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CutLocusError, TangencyError

__all__ = [
    "TargetSpace",
    "Euclidean",
    "Circle",
    "FlatTorus",
    "Sphere",
    "Hyperbolic",
    "IdentityTwist",
    "RotationTwist",
    "TranslationTwist",
    "MatrixTwist",
    "EquivarianceData",
]

_TANGENCY_TOL = 1e-10
_CONSTRAINT_TOL = 1e-10
_SPHERE_CUT_MARGIN = 1e-6


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def minkowski_dot(a, b):
    return np.einsum("...i,...i->...", a, b) - 2.0 * a[..., 0] * b[..., 0]


class TargetSpace:
    """Common interface of the model targets; see module docstring."""

    kind: str
    point_dim: int  # ambient components per point
    curvature_sign: int  # -1 / 0 / +1

    # constant sectional curvature used by the curvature tensor
    @property
    def kappa(self) -> float:
        return 0.0

    def check_point(self, p: np.ndarray) -> float:
        """Sup-norm residual of the ambient constraint (0 for flat kinds)."""
        return 0.0

    def project(self, p: np.ndarray) -> np.ndarray:
        """Re-project onto the ambient constraint set (identity for flat kinds)."""
        return p

    def tangency_residual(self, p, v) -> float:
        return 0.0

    def project_tangent(self, p, v):
        return v

    def require_tangent(self, p, v):
        r = self.tangency_residual(p, v)
        scale = max(1.0, float(np.abs(v).max(initial=0.0)))
        if r > _TANGENCY_TOL * scale:
            raise TangencyError(f"tangency residual {r:.3e}")

    def inner(self, p, v, w):
        """Riemannian inner product of tangents at p."""
        raise NotImplementedError

    def norm(self, p, v):
        return np.sqrt(np.maximum(self.inner(p, v, v), 0.0))

    def exp(self, p, v):
        raise NotImplementedError

    def log(self, p, q):
        raise NotImplementedError

    def dist(self, p, q):
        return self.norm(p, self.log(p, q))

    def transport(self, p, q, v):
        """Parallel transport of v from p to q along the shortest geodesic."""
        raise NotImplementedError

    def curvature(self, p, x, y, z):
        """Constant-curvature tensor R(x,y)z = kappa*(<y,z> x - <x,z> y)."""
        k = self.kappa
        if k == 0.0:
            return np.zeros_like(z)
        return k * (
            self.inner(p, y, z)[..., None] * x - self.inner(p, x, z)[..., None] * y
        )

    # sampling helpers for tests
    def random_point(self, rng, shape=()):
        raise NotImplementedError

    def random_tangent(self, rng, p, scale=1.0):
        """Random tangent with |v|_g uniform in (0, scale]."""
        raw = self.project_tangent(p, rng.normal(size=p.shape))
        nrm = np.sqrt(np.maximum(self.inner(p, raw, raw), 1e-300))
        target = rng.uniform(0.05, 1.0, size=nrm.shape) * scale
        return raw * (target / nrm)[..., None]


# ---------------------------------------------------------------------------
# flat kinds


class Euclidean(TargetSpace):
    kind = "euclidean"
    curvature_sign = 0

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.point_dim = self.dim

    def inner(self, p, v, w):
        return _dot(v, w)

    def exp(self, p, v):
        return p + v

    def log(self, p, q):
        return q - p

    def transport(self, p, q, v):
        return v

    def random_point(self, rng, shape=()):
        return rng.normal(size=(*shape, self.dim))



class Circle(TargetSpace):
    """Circle of given radius; points are angle lifts, tangents arclength."""

    kind = "circle"
    curvature_sign = 0

    def __init__(self, radius: float = 1.0):
        self.radius = float(radius)
        self.point_dim = 1

    def inner(self, p, v, w):
        return _dot(v, w)

    def exp(self, p, v):
        return p + v / self.radius

    def log(self, p, q):
        # principal branch; stored lifts keep smooth fields well inside it
        d = np.remainder(q - p + np.pi, 2.0 * np.pi) - np.pi
        return self.radius * d

    def transport(self, p, q, v):
        return v

    def random_point(self, rng, shape=()):
        return rng.uniform(0.0, 2.0 * np.pi, size=(*shape, 1))



class FlatTorus(TargetSpace):
    """Flat torus R^m / (P_1 Z x ... x P_m Z); points stored as lifts."""

    kind = "flat_torus"
    curvature_sign = 0

    def __init__(self, dim: int, periods):
        self.dim = int(dim)
        self.periods = np.asarray(periods, dtype=float)
        if self.periods.shape != (self.dim,):
            raise ValueError("need one period per torus dimension")
        self.point_dim = self.dim

    def inner(self, p, v, w):
        return _dot(v, w)

    def exp(self, p, v):
        return p + v

    def log(self, p, q):
        d = q - p
        return np.remainder(d + 0.5 * self.periods, self.periods) - 0.5 * self.periods

    def transport(self, p, q, v):
        return v

    def random_point(self, rng, shape=()):
        return rng.uniform(0.0, 1.0, size=(*shape, self.dim)) * self.periods



# ---------------------------------------------------------------------------
# curved kinds


class Sphere(TargetSpace):
    """Round sphere of dimension m; unit-vector embedding, metric r^2 * dot."""

    kind = "sphere"
    curvature_sign = 1

    def __init__(self, dim: int, radius: float = 1.0):
        self.dim = int(dim)
        self.radius = float(radius)
        self.point_dim = self.dim + 1

    @property
    def kappa(self) -> float:
        return 1.0 / self.radius**2

    def check_point(self, p):
        return float(np.abs(_dot(p, p) - 1.0).max())

    def project(self, p):
        return p / np.linalg.norm(p, axis=-1, keepdims=True)

    def tangency_residual(self, p, v):
        return float(np.abs(_dot(p, v)).max())

    def project_tangent(self, p, v):
        return v - _dot(p, v)[..., None] * p

    def inner(self, p, v, w):
        return self.radius**2 * _dot(v, w)

    def exp(self, p, v):
        # ambient angle traversed = |v|_ambient (metric norm / radius)
        theta = np.linalg.norm(v, axis=-1, keepdims=True)
        small = theta < 1e-300
        direction = np.where(small, 0.0, v / np.where(small, 1.0, theta))
        return np.cos(theta) * p + np.sin(theta) * direction

    @staticmethod
    def _angle(p, q):
        """Angle between unit vectors via chord lengths; well conditioned at
        both ends (arccos alone cannot resolve below sqrt(eps))."""
        chord = np.linalg.norm(q - p, axis=-1)
        anti = np.linalg.norm(q + p, axis=-1)
        near = 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))
        far = np.pi - 2.0 * np.arcsin(np.clip(0.5 * anti, 0.0, 1.0))
        return np.where(_dot(p, q) >= 0.0, near, far)

    def log(self, p, q):
        theta = self._angle(p, q)
        if np.any(theta > np.pi - _SPHERE_CUT_MARGIN):
            raise CutLocusError("antipodal points: spherical log undefined")
        c = np.clip(_dot(p, q), -1.0, 1.0)
        perp = q - c[..., None] * p
        norm = np.linalg.norm(perp, axis=-1)
        safe = np.where(norm < 1e-300, 1.0, norm)
        return (theta / safe)[..., None] * perp

    def dist(self, p, q):
        return self.radius * self._angle(p, q)

    def transport(self, p, q, v):
        """Rotate the along-geodesic component, keep the orthogonal part."""
        u = self.log(p, q)
        theta = np.linalg.norm(u, axis=-1)
        safe = np.where(theta < 1e-300, 1.0, theta)
        w = u / safe[..., None]
        a = _dot(w, v)
        tangent_rot = np.cos(theta)[..., None] * w - np.sin(theta)[..., None] * p
        out = v + a[..., None] * (tangent_rot - w)
        return np.where(theta[..., None] < 1e-300, v, out)

    def random_point(self, rng, shape=()):
        p = rng.normal(size=(*shape, self.point_dim))
        return self.project(p)



class Hyperbolic(TargetSpace):
    """Hyperboloid sheet model of curvature -1."""

    kind = "hyperbolic"
    curvature_sign = -1

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.point_dim = self.dim + 1

    @property
    def kappa(self) -> float:
        return -1.0

    def check_point(self, p):
        return float(
            max(np.abs(minkowski_dot(p, p) + 1.0).max(), max(0.0, -(p[..., 0].min() - 0.0)))
        )

    def project(self, p):
        q = p.copy()
        q[..., 0] = np.abs(q[..., 0])
        s = np.sqrt(np.maximum(-minkowski_dot(q, q), 1e-300))
        return q / s[..., None]

    def tangency_residual(self, p, v):
        return float(np.abs(minkowski_dot(p, v)).max())

    def project_tangent(self, p, v):
        return v + minkowski_dot(p, v)[..., None] * p

    def inner(self, p, v, w):
        return minkowski_dot(v, w)

    def exp(self, p, v):
        t = np.sqrt(np.maximum(minkowski_dot(v, v), 0.0))
        small = t < 1e-300
        safe = np.where(small, 1.0, t)
        out = np.cosh(t)[..., None] * p + (np.sinh(t) / safe)[..., None] * v
        return self.project(out)

    def log(self, p, q):
        c = np.maximum(-minkowski_dot(p, q), 1.0)
        direction = q - c[..., None] * p  # Minkowski projection of q onto T_p
        # |direction|_M = sinh(dist) exactly, so arcsinh avoids the arccosh
        # cancellation at small separations
        s = np.sqrt(np.maximum(minkowski_dot(direction, direction), 0.0))
        d = np.arcsinh(s)
        safe = np.where(s < 1e-300, 1.0, s)
        factor = np.where(s < 1e-8, 1.0, d / safe)  # d/s -> 1 smoothly
        # separations below hyperboloid resolution are exact coincidences
        factor = np.where(s < 1e-14, 0.0, factor)
        return factor[..., None] * direction

    def dist(self, p, q):
        c = np.maximum(-minkowski_dot(p, q), 1.0)
        direction = q - c[..., None] * p
        s = np.sqrt(np.maximum(minkowski_dot(direction, direction), 0.0))
        return np.where(s < 1e-14, 0.0, np.arcsinh(s))

    def transport(self, p, q, v):
        u = self.log(p, q)
        t = np.sqrt(np.maximum(minkowski_dot(u, u), 0.0))
        safe = np.where(t < 1e-300, 1.0, t)
        w = u / safe[..., None]
        a = minkowski_dot(w, v)
        # (cosh t - 1) w + sinh t p without the subtractive form
        bump = 2.0 * np.sinh(0.5 * t) ** 2
        out = v + a[..., None] * (bump[..., None] * w + np.sinh(t)[..., None] * p)
        return np.where(t[..., None] < 1e-300, v, out)

    def random_point(self, rng, shape=()):
        x = rng.normal(size=(*shape, self.dim))
        p = np.concatenate([np.sqrt(1.0 + _dot(x, x))[..., None], x], axis=-1)
        return p



# ---------------------------------------------------------------------------
# equivariance twists


class Twist:
    """Isometry of the model target applied when a stencil wraps an axis."""

    def apply_point(self, p):
        raise NotImplementedError

    def apply_tangent(self, p, v):
        raise NotImplementedError

    def inverse(self) -> "Twist":
        raise NotImplementedError

    def commutes_with(self, other: "Twist", space: TargetSpace, rng) -> bool:
        p = space.random_point(rng, (8,))
        a = self.apply_point(other.apply_point(p))
        b = other.apply_point(self.apply_point(p))
        return bool(np.abs(a - b).max() < 1e-10)

    def isometry_residual(self, space: TargetSpace) -> float:
        return 0.0


class IdentityTwist(Twist):
    def apply_point(self, p):
        return p

    def apply_tangent(self, p, v):
        return v

    def inverse(self):
        return self


class RotationTwist(Twist):
    """Circle rotation by an angle lift (may exceed 2*pi to carry winding)."""

    def __init__(self, angle: float):
        self.angle = float(angle)

    def apply_point(self, p):
        return p + self.angle

    def apply_tangent(self, p, v):
        return v

    def inverse(self):
        return RotationTwist(-self.angle)


class TranslationTwist(Twist):
    """Translation on Euclidean / flat-torus targets (vector of lifts)."""

    def __init__(self, vector):
        self.vector = np.asarray(vector, dtype=float)

    def apply_point(self, p):
        return p + self.vector

    def apply_tangent(self, p, v):
        return v

    def inverse(self):
        return TranslationTwist(-self.vector)


class MatrixTwist(Twist):
    """Ambient linear isometry (orthogonal for spheres, Lorentz for
    hyperboloids)."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=float)

    def apply_point(self, p):
        return np.einsum("ij,...j->...i", self.matrix, p)

    def apply_tangent(self, p, v):
        return np.einsum("ij,...j->...i", self.matrix, v)

    def inverse(self):
        return MatrixTwist(np.linalg.inv(self.matrix))

    def isometry_residual(self, space: TargetSpace) -> float:
        m = self.matrix
        if isinstance(space, Sphere):
            form = np.eye(space.point_dim)
        elif isinstance(space, Hyperbolic):
            form = np.diag([-1.0] + [1.0] * space.dim)
        else:
            form = np.eye(m.shape[0])
        return float(np.abs(m.T @ form @ m - form).max())


def ambient_weight(space: TargetSpace, p: np.ndarray) -> np.ndarray:
    """Diagonal ambient weight w with <a, b>_{g'} = sum_i w_i a_i b_i."""
    if space.kind == "sphere":
        return np.full(p.shape, space.radius**2)
    if space.kind == "hyperbolic":
        w = np.ones(p.shape)
        w[..., 0] = -1.0
        return w
    return np.ones(p.shape)


def boost_matrix(dim: int, s: float, axis: int = 1) -> np.ndarray:
    """Lorentz boost by arclength s along the hyperboloid geodesic through
    the base point in coordinate direction ``axis``."""
    m = np.eye(dim + 1)
    c, sh = np.cosh(s), np.sinh(s)
    m[0, 0] = c
    m[axis, axis] = c
    m[0, axis] = sh
    m[axis, 0] = sh
    return m


@dataclass(frozen=True)
class EquivarianceData:
    """One target twist per domain axis; applied when stencils wrap."""

    space: TargetSpace
    twists: tuple

    def __post_init__(self):
        object.__setattr__(self, "twists", tuple(self.twists))
        rng = np.random.default_rng(0)
        for t in self.twists:
            r = t.isometry_residual(self.space)
            if r > 1e-12:
                raise ValueError(f"twist is not an isometry (residual {r:.3e})")
        for i, a in enumerate(self.twists):
            for b in self.twists[i + 1 :]:
                if not a.commutes_with(b, self.space, rng):
                    raise ValueError("equivariance generators must commute")

    @classmethod
    def trivial(cls, space: TargetSpace, n_axes: int) -> "EquivarianceData":
        return cls(space, tuple(IdentityTwist() for _ in range(n_axes)))

    def twist(self, axis: int) -> Twist:
        return self.twists[axis]

    def compatible_with(self, other: "EquivarianceData") -> bool:
        if len(self.twists) != len(other.twists):
            return False
        rng = np.random.default_rng(1)
        p = self.space.random_point(rng, (8,))
        for a, b in zip(self.twists, other.twists):
            if np.abs(a.apply_point(p) - b.apply_point(p)).max() > 1e-10:
                return False
        return True
