"""Modality-bridge re-ranking.

Same-modality edges of the query-gallery and gallery-gallery maps are
multiplied by ``lam``; each query-gallery distance is then replaced by the
cheapest single-hop path ``query -> bridge -> target`` through any gallery
sample, which is one row of a min-plus matrix product. The target itself is
a valid bridge (the gallery map has a zero diagonal), so the direct edge is
always a candidate.
"""
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import DistanceMap, ReRankConfig, pairwise_distances
from .errors import ConfigError


@dataclass(frozen=True, eq=False)
class OptimizedDistanceMap:
    base: DistanceMap
    entries: np.ndarray
    argmin_bridge: np.ndarray

    @property
    def shape(self):
        return self.entries.shape

    @property
    def row_modality(self):
        return self.base.row_modality

    @property
    def col_modality(self):
        return self.base.col_modality

    def direct_fraction(self):
        """Share of entries whose best path is the direct edge."""
        cols = np.arange(self.entries.shape[1])
        return float(np.mean(self.argmin_bridge == cols[None, :]))


def scale_same_modality(dmap, cfg=None):
    cfg = cfg or ReRankConfig()
    if dmap.scaled:
        raise ConfigError("distance map is already modality-scaled")
    entries = np.where(dmap.same_modality_mask(), cfg.lam * dmap.entries, dmap.entries)
    return DistanceMap(entries, dmap.row_modality, dmap.col_modality, scaled=True, symmetric=dmap.symmetric)


def bridge_optimize(qg, gg):
    if not (qg.scaled and gg.scaled):
        raise ConfigError("bridge_optimize expects modality-scaled maps")
    n_g = qg.cols
    if gg.rows != n_g or gg.cols != n_g:
        raise ConfigError(f"shape mismatch: query-gallery map {qg.shape} vs gallery map {gg.shape}")
    entries, arg = _kernels.minplus(qg.entries, gg.entries)
    entries.setflags(write=False)
    arg.setflags(write=False)
    return OptimizedDistanceMap(qg, entries, arg)


def rerank(query, gallery, cfg=None, return_raw=False):
    """Bridge-optimized query-gallery distances for two embedding sets.

    With ``return_raw=True`` also returns the unscaled query-gallery map.
    """
    cfg = cfg or ReRankConfig()
    raw_qg = pairwise_distances(query, gallery)
    raw_gg = pairwise_distances(gallery, gallery)
    out = bridge_optimize(scale_same_modality(raw_qg, cfg), scale_same_modality(raw_gg, cfg))
    if return_raw:
        return out, raw_qg
    return out
