"""weylflow: a finite-difference laboratory for harmonic and Weyl-harmonic
map calculus on periodic domains with closed-form model targets."""

from .grids import DomainGrid
from .metrics import (
    ChristoffelField,
    MetricField,
    domain_christoffels,
    domain_ricci,
    scalar_laplacian,
)
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
from .higgs import (
    HiggsField,
    WeylClass,
    classify_higgs,
    codifferential,
    gauduchon_fix,
    ricci_weyl,
    weyl_connection,
    weyl_laplacian_scalar,
)
from .maps import (
    MapField,
    differential,
    energy,
    rank_profile,
    second_fundamental_form,
    tension,
    weyl_tension,
)

__version__ = "0.1.0"
