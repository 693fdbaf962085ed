"""affval: convex-function calculus on polytopal domains.

Piecewise-affine and piecewise linear-quadratic convex functions, Legendre
transforms, infimal convolutions, box-constrained Moreau envelopes,
Monge-Ampere measures, and valuations of the form c0 + c1*V_n(dom) + Z_zeta.
"""

from .funcs import (
    AffineFn,
    ConvexFn,
    PAFn,
    PLQFn,
    QuadFn,
    QuadraticFn,
    SubdiffSet,
    certify_plq,
    join,
    lipschitz_constant,
    make_cylinder,
    meet,
    subdifferential,
)
from .geometry import (
    AffineMap,
    Polytope,
    affine_image,
    box,
    cube,
    hull,
    intersect,
    minkowski_sum,
    segment,
)
from .measures import MAMeasure, ma_total_mass, ma_weak_probe, monge_ampere_pa
from .report import CheckReport
from .transforms import (
    EnvelopeFn,
    conjugate_identities_check,
    envelope_eval,
    inf_conv_pa,
    legendre_pa,
    legendre_quadratic,
    moreau_box,
    tangential_extension,
)
from .valuations import (
    ConcFn,
    Valuation,
    apply,
    extract_zeta,
    invariance_check,
    power_zeta,
    sqrt_zeta,
    validate_conc,
    valuation_identity_check,
    z_zeta,
    z_zeta_numeric,
    z_zeta_plq,
    zeta_dual,
)

__all__ = [
    "AffineFn",
    "AffineMap",
    "CheckReport",
    "ConcFn",
    "ConvexFn",
    "EnvelopeFn",
    "MAMeasure",
    "PAFn",
    "PLQFn",
    "Polytope",
    "QuadFn",
    "QuadraticFn",
    "SubdiffSet",
    "Valuation",
    "affine_image",
    "apply",
    "box",
    "certify_plq",
    "conjugate_identities_check",
    "cube",
    "envelope_eval",
    "extract_zeta",
    "hull",
    "inf_conv_pa",
    "intersect",
    "invariance_check",
    "join",
    "legendre_pa",
    "legendre_quadratic",
    "lipschitz_constant",
    "ma_total_mass",
    "ma_weak_probe",
    "make_cylinder",
    "meet",
    "minkowski_sum",
    "monge_ampere_pa",
    "moreau_box",
    "power_zeta",
    "segment",
    "sqrt_zeta",
    "subdifferential",
    "tangential_extension",
    "validate_conc",
    "valuation_identity_check",
    "z_zeta",
    "z_zeta_numeric",
    "z_zeta_plq",
    "zeta_dual",
]
