"""Primer-payload collision detection."""

from .index import Collision, CollisionIndex, CollisionStats, count_statistics
from .scanner import DEFAULT_RULE, CollisionRule, Scanner, scan, verify_cut

__all__ = [
    "Collision", "CollisionIndex", "CollisionRule", "CollisionStats", "DEFAULT_RULE", "Scanner",
    "count_statistics", "scan", "verify_cut",
]
