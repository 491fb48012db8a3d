"""Witness measures: reports, exact constructions and numerical search."""

from .reports import (
    CONSTRUCTION,
    FIXTURE,
    I_CLASS,
    SEARCH,
    VerificationResult,
    WitnessReport,
    build_report,
    class_residuals,
    verify_witness,
)
from .constructions import (
    FIXTURE_NAMES,
    CollisionError,
    ConstraintViolation,
    Fixture,
    collision_from_vector,
    collision_witness,
    factorizing_family,
    find_embedding_collision,
    fixture,
    parity_family,
    parity_family_corners,
    parity_sums,
    three_bit_kernel,
)
from .search import INCONCLUSIVE_MESSAGE, SearchResult, search_I_witness

__all__ = [
    "CONSTRUCTION",
    "FIXTURE",
    "FIXTURE_NAMES",
    "I_CLASS",
    "INCONCLUSIVE_MESSAGE",
    "SEARCH",
    "CollisionError",
    "ConstraintViolation",
    "Fixture",
    "SearchResult",
    "VerificationResult",
    "WitnessReport",
    "build_report",
    "class_residuals",
    "collision_from_vector",
    "collision_witness",
    "factorizing_family",
    "find_embedding_collision",
    "fixture",
    "parity_family",
    "parity_family_corners",
    "parity_sums",
    "search_I_witness",
    "three_bit_kernel",
    "verify_witness",
]
