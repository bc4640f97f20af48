"""Digit-class factorization of numbers ending in 1 and the bounds that go with it."""
from .numeric import ALL_CASES, Case, Outcome, Representation, Verdict
from .factor import (
    DRange, d_bounds, dsearch_representations, lambda_representations, oracle_representations,
)
from .checks import BoundCheck, Claim

__all__ = [
    "ALL_CASES", "Case", "Outcome", "Representation", "Verdict", "DRange", "d_bounds",
    "dsearch_representations", "lambda_representations", "oracle_representations",
    "BoundCheck", "Claim",
]
