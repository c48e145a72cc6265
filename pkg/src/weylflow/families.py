"""Named analytic families for metrics, Higgs fields and initial maps.

Configs refer to fields by string ids with parameter arrays so that
experiments stay declarative and diffable.  Scalar families are evaluated on
the grid; everything downstream differentiates them with the shared stencils.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .grids import DomainGrid
from .higgs import HiggsField
from .maps import MapField
from .metrics import MetricField
from .targets import (
    Circle,
    EquivarianceData,
    Euclidean,
    FlatTorus,
    Hyperbolic,
    IdentityTwist,
    MatrixTwist,
    RotationTwist,
    Sphere,
    TranslationTwist,
    boost_matrix,
)

__all__ = [
    "scalar_family",
    "build_metric",
    "build_higgs",
    "build_target",
    "build_equivariance",
    "build_map",
    "random_fourier_scalar",
]


def scalar_family(grid: DomainGrid, spec) -> np.ndarray:
    """Evaluate a named analytic scalar family on the grid.

    Specs (dicts):
      {"id": "zero"}
      {"id": "sin_axis", "amplitude": a, "axis": j, "mode": m, "phase": p}
      {"id": "sinsin", "amplitude": a, "axes": [i, j], "modes": [mi, mj]}
      {"id": "constant", "value": c}
    Modes are integers; the argument is 2*pi*m*x/L so every family is
    periodic on the torus regardless of the axis lengths.
    """
    x = grid.coordinates()
    kind = spec.get("id")
    if kind == "zero":
        return np.zeros(grid.sizes)
    if kind == "constant":
        return float(spec.get("value", 0.0)) * np.ones(grid.sizes)
    if kind == "sin_axis":
        a = float(spec.get("amplitude", 1.0))
        j = int(spec.get("axis", 0))
        m = int(spec.get("mode", 1))
        p = float(spec.get("phase", 0.0))
        w = 2.0 * np.pi * m / grid.lengths[j]
        return a * np.sin(w * x[..., j] + p)
    if kind == "sinsin":
        a = float(spec.get("amplitude", 1.0))
        i, j = (int(v) for v in spec.get("axes", [0, 1]))
        mi, mj = (int(v) for v in spec.get("modes", [1, 1]))
        wi = 2.0 * np.pi * mi / grid.lengths[i]
        wj = 2.0 * np.pi * mj / grid.lengths[j]
        return a * np.sin(wi * x[..., i]) * np.sin(wj * x[..., j])
    raise ConfigError(f"unknown scalar family {kind!r}")


def random_fourier_scalar(grid: DomainGrid, rng, amplitude=0.3, max_mode=2) -> np.ndarray:
    """Smooth random periodic scalar: a few low random Fourier modes."""
    x = grid.coordinates()
    out = np.zeros(grid.sizes)
    for _ in range(4):
        modes = rng.integers(-max_mode, max_mode + 1, size=grid.n)
        phase = rng.uniform(0, 2 * np.pi)
        coef = rng.normal() * amplitude / 4.0
        arg = sum(
            2.0 * np.pi * modes[a] * x[..., a] / grid.lengths[a] for a in range(grid.n)
        )
        out += coef * np.sin(arg + phase)
    return out


def build_metric(grid: DomainGrid, spec) -> MetricField:
    family = spec.get("family", "flat")
    if family == "flat":
        return MetricField.flat(grid)
    if family == "conformal":
        phi = scalar_family(grid, spec.get("phi", {"id": "zero"}))
        return MetricField.conformally_flat(grid, phi)
    if family == "array":
        return MetricField.from_array(grid, np.asarray(spec["values"], dtype=float))
    raise ConfigError(f"unknown metric family {family!r}")


def discrete_exact_higgs(grid: DomainGrid, v: np.ndarray) -> np.ndarray:
    """Higgs field of an exact structure at the grid level.

    theta_k = -e^{V} D_k e^{-V}, the logarithmic derivative of the conformal
    factor e^{-V} as seen by the centered stencils.  With this convention the
    Weyl connection of (flat g, theta) coincides coefficient-by-coefficient
    with the finite-difference Levi-Civita connection of e^{-V} g, so the
    exact-structure equivalence holds on the grid to rounding, not merely to
    O(h^2).
    """
    w = np.exp(-v)
    return np.stack([-np.exp(v) * grid.diff(w, a) for a in range(grid.n)], axis=-1)


def build_higgs(grid: DomainGrid, metric: MetricField, spec) -> HiggsField:
    family = spec.get("family", "zero")
    if family == "zero":
        return HiggsField.zero(metric)
    if family == "constant":
        comps = np.asarray(spec.get("components"), dtype=float)
        if comps.shape != (grid.n,):
            raise ConfigError("constant Higgs family needs one component per axis")
        theta = np.broadcast_to(comps, grid.sizes + (grid.n,)).copy()
        return HiggsField.from_theta(metric, theta)
    if family == "exact":
        v = scalar_family(grid, spec.get("potential", {"id": "zero"}))
        return HiggsField.from_theta(metric, discrete_exact_higgs(grid, v))
    if family == "nonclosed":
        # a * sin(2 pi m x^j / L_j) dx^k with j != k
        a = float(spec.get("amplitude", 1.0))
        j = int(spec.get("depends_on", 1))
        k = int(spec.get("component", 0))
        m = int(spec.get("mode", 1))
        x = grid.coordinates()
        theta = np.zeros(grid.sizes + (grid.n,))
        theta[..., k] = a * np.sin(2.0 * np.pi * m * x[..., j] / grid.lengths[j])
        return HiggsField.from_theta(metric, theta)
    if family == "array":
        return HiggsField.from_theta(metric, np.asarray(spec["values"], dtype=float))
    raise ConfigError(f"unknown Higgs family {family!r}")


def build_target(spec):
    kind = spec.get("kind")
    if kind == "euclidean":
        return Euclidean(int(spec.get("dim", 1)))
    if kind == "circle":
        return Circle(float(spec.get("radius", 1.0)))
    if kind == "flat_torus":
        return FlatTorus(int(spec["dim"]), spec["periods"])
    if kind == "sphere":
        return Sphere(int(spec.get("dim", 2)), float(spec.get("radius", 1.0)))
    if kind == "hyperbolic":
        return Hyperbolic(int(spec.get("dim", 2)))
    raise ConfigError(f"unknown target kind {kind!r}")


def build_equivariance(space, grid: DomainGrid, spec) -> EquivarianceData:
    """Per-axis twist list; entries may be
    {"type": "identity"} | {"type": "rotation", "angle": a}
    | {"type": "translation", "vector": [...]}
    | {"type": "matrix", "matrix": [[...]]}
    | {"type": "boost", "arclength": s, "axis": i}   (hyperbolic targets)
    """
    if spec is None:
        return EquivarianceData.trivial(space, grid.n)
    gens = spec.get("generators")
    if gens is None or len(gens) != grid.n:
        raise ConfigError("equivariance needs one generator per domain axis")
    twists = []
    for g in gens:
        t = g.get("type", "identity")
        if t == "identity":
            twists.append(IdentityTwist())
        elif t == "rotation":
            twists.append(RotationTwist(float(g["angle"])))
        elif t == "translation":
            twists.append(TranslationTwist(np.asarray(g["vector"], dtype=float)))
        elif t == "matrix":
            twists.append(MatrixTwist(np.asarray(g["matrix"], dtype=float)))
        elif t == "boost":
            twists.append(
                MatrixTwist(
                    boost_matrix(space.dim, float(g["arclength"]), int(g.get("axis", 1)))
                )
            )
        else:
            raise ConfigError(f"unknown twist type {t!r}")
    return EquivarianceData(space, tuple(twists))


def _linear_phase(grid: DomainGrid, speeds) -> np.ndarray:
    """sum_a speeds[a] * x^a evaluated on the grid."""
    x = grid.coordinates()
    return sum(float(speeds[a]) * x[..., a] for a in range(grid.n))


def build_map(grid: DomainGrid, space, spec, equivariance=None) -> MapField:
    """Initial map families.

    constant          : {"family": "constant", "point": [...]}
    linear            : {"family": "linear", "winding": [...]} (circle:
                        integer winding per axis; flat_torus: integer matrix;
                        hyperbolic/euclidean: arclength speeds per axis)
    perturbed_linear  : linear plus {"perturbation": scalar-family-spec}
                        applied along the map direction
    """
    family = spec.get("family", "constant")

    if family == "constant":
        point = np.asarray(spec.get("point"), dtype=float)
        values = np.broadcast_to(point, grid.sizes + (space.point_dim,)).copy()
        eq = equivariance or EquivarianceData.trivial(space, grid.n)
        return MapField.create(grid, space, values, eq)

    perturb = np.zeros(grid.sizes)
    if family == "perturbed_linear":
        perturb = scalar_family(grid, spec.get("perturbation", {"id": "zero"}))

    if family in ("linear", "perturbed_linear"):
        if space.kind == "circle":
            winding = np.asarray(spec.get("winding"), dtype=float)
            speeds = [2.0 * np.pi * winding[a] / grid.lengths[a] for a in range(grid.n)]
            phase = _linear_phase(grid, speeds) + perturb / space.radius
            values = phase[..., None]
            eq = equivariance or EquivarianceData(
                space, tuple(RotationTwist(2.0 * np.pi * w) for w in winding)
            )
            return MapField.create(grid, space, values, eq)
        if space.kind == "flat_torus":
            winding = np.asarray(spec.get("winding"), dtype=float)  # (m, n) matrix
            x = grid.coordinates()
            values = np.einsum(
                "ma,...a->...m",
                winding * (space.periods[:, None] / np.asarray(grid.lengths)),
                x,
            )
            values = values + perturb[..., None] * np.asarray(
                spec.get("direction", [1.0] * space.dim)
            )
            eq = equivariance or EquivarianceData(
                space,
                tuple(
                    TranslationTwist(winding[:, a] * space.periods) for a in range(grid.n)
                ),
            )
            return MapField.create(grid, space, values, eq)
        if space.kind == "hyperbolic":
            speeds = spec.get("speeds", [0.0] * grid.n)
            phase = _linear_phase(grid, speeds) + perturb
            base = np.zeros(space.point_dim)
            base[0] = 1.0
            values = np.zeros(grid.sizes + (space.point_dim,))
            values[..., 0] = np.cosh(phase)
            values[..., 1] = np.sinh(phase)
            if space.point_dim > 2:
                values[..., 2:] = 0.0
            eq = equivariance or EquivarianceData(
                space,
                tuple(
                    MatrixTwist(boost_matrix(space.dim, speeds[a] * grid.lengths[a]))
                    for a in range(grid.n)
                ),
            )
            return MapField.create(grid, space, values, eq)
        if space.kind == "euclidean":
            speeds = spec.get("speeds", [0.0] * grid.n)
            phase = _linear_phase(grid, speeds) + perturb
            direction = np.asarray(spec.get("direction", [1.0] * space.dim), dtype=float)
            values = phase[..., None] * direction
            eq = equivariance or EquivarianceData(
                space,
                tuple(
                    TranslationTwist(direction * speeds[a] * grid.lengths[a])
                    for a in range(grid.n)
                ),
            )
            return MapField.create(grid, space, values, eq)
        raise ConfigError(f"linear family not available for target {space.kind!r}")
    raise ConfigError(f"unknown map family {family!r}")
