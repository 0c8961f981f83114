"""Conormal-symbol calculus for cone- and edge-degenerate operators."""

__version__ = "0.1.0"

from .mero import MatPolynomial, MeroMatrix, mero_inverse, polyeig
from .cone import (
    FuchsOperator,
    NotEllipticError,
    SpectralModel,
    check_conormal_ellipticity,
    conormal_hierarchy,
    translation_product,
)
from .asymptypes import AsymptoticType, RemainderClass, WeightData, remainder_compose
from .parametrix import operator_recursion, parametrix_hierarchy, verify_parametrix
from .solver import SingularExpansion, apply_fuchs, apply_parametrix, kernel_probe, solve_asymptotics
from .frobenius import frobenius_oracle, oracle_equivalence
from .edge import (
    EdgeDegenerateOperator,
    check_edge_ellipticity,
    conormal_inverse_field,
    edge_parametrix_hierarchy,
    reduce_to_cone,
    subordinate_conormal,
)
from .models import build_model
