"""Conceptualization-augmented knowledge expansion and QA synthesis."""

__version__ = "0.1.0"

from .kb_core import (
    AbstractTriple,
    ConceptEntry,
    ConstraintSet,
    Relation,
    Triple,
    build_constraint,
    disjoint,
    extract_keywords,
)

__all__ = [
    "AbstractTriple",
    "ConceptEntry",
    "ConstraintSet",
    "Relation",
    "Triple",
    "build_constraint",
    "disjoint",
    "extract_keywords",
    "__version__",
]
