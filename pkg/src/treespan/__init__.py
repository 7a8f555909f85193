"""Symbolic reduction of unitrivalent graph diagrams to tree combinations.

Core layers: diagrams and canonical forms, exact STU relation algebra,
the rewriting engine with replayable certificates, clasper shadows, and
exhaustive enumeration.  A FastAPI service wraps the core; the CLI is a
thin client of that service.
"""

from .diagram import (
    CIRCLE,
    INTERVAL,
    Diagram,
    Skeleton,
    SkeletonComponent,
    betti,
    build_diagram,
    degree,
    internal_components,
    skeleton,
)
from .canonical import (
    CanonicalDiagram,
    canonicalize,
    diagram_from_digest,
    degree_of_digest,
    digest_of,
    is_isomorphic,
    skeleton_from_digest,
)
__version__ = "0.1.0"
