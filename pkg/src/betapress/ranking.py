"""
Ranking of candidate models by predictive power.

Candidates are compared on P^2 first: the closer to one, the better the
model predicts. Candidates whose fit failed sort after every competitive
one, and ties keep the order in which candidates were given.
"""

import math
from typing import Any, Dict, List


def _descending(value) -> float:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return math.inf
    return -float(value)


def rank_candidates(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """
    Rank candidate rows by predictive power.

    Prioritizes rows in this order:
    1. Competitive rows (fit succeeded) before failed ones
    2. Higher P^2
    3. Higher P^2_bg
    4. Input order

    Each returned row gets a 1-based "rank" and a "selected" flag on the
    best competitive row.

    Args:
        rows: Dicts with at least "p2", "p2_bg" and "failed"

    Returns:
        New list of row dicts, best first

    Examples:
        >>> rows = [
        ...     {"name": "a", "p2": 0.41, "p2_bg": 0.30, "failed": False},
        ...     {"name": "b", "p2": None, "p2_bg": None, "failed": True},
        ...     {"name": "c", "p2": 0.69, "p2_bg": 0.20, "failed": False},
        ... ]
        >>> [r["name"] for r in rank_candidates(rows)]
        ['c', 'a', 'b']
    """
    if not rows:
        return []

    def sort_key(indexed) -> tuple:
        position, row = indexed
        failed = 1 if row.get("failed") else 0
        return (failed, _descending(row.get("p2")), _descending(row.get("p2_bg")), position)

    ordered = [dict(row) for _, row in sorted(enumerate(rows), key=sort_key)]
    for rank, row in enumerate(ordered, start=1):
        row["rank"] = rank
        row["selected"] = False
    if not ordered[0].get("failed"):
        ordered[0]["selected"] = True
    return ordered
