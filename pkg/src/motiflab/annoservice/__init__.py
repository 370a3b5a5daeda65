"""A/B human-evaluation service: pair scheduling, vote intake, aggregation."""

from .model import AXES, AggregateResult, PairTask, VoteRecord
from .service import AnnotationService, SessionConfig
from .store import VoteLog

__all__ = [
    "AXES", "AggregateResult", "PairTask", "VoteRecord",
    "AnnotationService", "SessionConfig", "VoteLog",
]
