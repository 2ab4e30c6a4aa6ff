"""Provenance capture SDK for ML training scripts."""

from .client import (
    ContentRef,
    InclusionTimeout,
    IntegrityError,
    NodeRejectedError,
    ProMLClient,
    ProMLClientError,
    WORKFLOW_ACTIVITIES,
    __version__,
)

__all__ = [
    "ContentRef",
    "InclusionTimeout",
    "IntegrityError",
    "NodeRejectedError",
    "ProMLClient",
    "ProMLClientError",
    "WORKFLOW_ACTIVITIES",
    "__version__",
]
