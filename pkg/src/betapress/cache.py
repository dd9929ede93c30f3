"""
Caching of fitted models.

Features:
- Content keys: md5 over the response, both designs, coefficient names,
  links and fit options, so the same model fitted twice hits the same entry
- LRU eviction when max entries reached
- Cache stats for monitoring

Model selection fits the null model once per response and the MCP tools
refit the same dataset across calls; both go through this cache.
"""

import hashlib
import logging
from collections import OrderedDict
from typing import Optional

from .model import FittedModel, ModelSpec
from .scoring import FitOptions, fit

logger = logging.getLogger(__name__)


def make_fit_key(spec: ModelSpec, options: FitOptions) -> str:
    """Stable digest of everything a fit depends on."""
    digest = hashlib.md5()
    for arr in (spec.y, spec.X, spec.Z):
        digest.update(str(arr.shape).encode("utf-8"))
        digest.update(arr.tobytes())
    for names in (spec.mean_names, spec.precision_names):
        digest.update(("\x1f".join(names) + "\x1e").encode("utf-8"))
    digest.update(f"|{spec.mean_link.value}|{spec.precision_link.value}|".encode("utf-8"))
    digest.update(options.model_dump_json().encode("utf-8"))
    return digest.hexdigest()


class FitCache:
    """LRU cache of FittedModel keyed by spec content and options."""

    def __init__(self, max_entries: int = 128):
        self._cache: OrderedDict[str, FittedModel] = OrderedDict()
        self._max_entries = max_entries
        self._hits = 0
        self._misses = 0

    def get(self, spec: ModelSpec, options: FitOptions) -> Optional[FittedModel]:
        key = make_fit_key(spec, options)
        if key not in self._cache:
            self._misses += 1
            return None
        self._cache.move_to_end(key)
        self._hits += 1
        logger.debug(f"Cache HIT: fit (key={key[:8]})")
        return self._cache[key]

    def put(self, spec: ModelSpec, options: FitOptions, fitted: FittedModel) -> None:
        """Store a fit. Non-converged fits are not cached."""
        if not fitted.converged:
            return
        key = make_fit_key(spec, options)
        while len(self._cache) >= self._max_entries:
            self._cache.popitem(last=False)
        self._cache[key] = fitted
        logger.debug(f"Cache PUT: fit (key={key[:8]})")

    def fit(self, spec: ModelSpec, options: Optional[FitOptions] = None) -> FittedModel:
        """Return the cached fit or compute and store it."""
        options = options or FitOptions()
        cached = self.get(spec, options)
        if cached is not None:
            return cached
        fitted = fit(spec, options)
        self.put(spec, options, fitted)
        return fitted

    def invalidate(self) -> int:
        count = len(self._cache)
        self._cache.clear()
        return count

    def stats(self) -> dict:
        """Return cache statistics."""
        total = self._hits + self._misses
        return {
            "entries": len(self._cache),
            "max_entries": self._max_entries,
            "hits": self._hits,
            "misses": self._misses,
            "hit_rate": f"{self._hits / total * 100:.1f}%" if total > 0 else "N/A",
            "total_requests": total,
        }


# Global singleton cache instance
_cache = FitCache(max_entries=128)


def get_fit_cache() -> FitCache:
    """Get the global fit cache."""
    return _cache
