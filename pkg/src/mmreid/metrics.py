"""CMC, mAP and mINP over ranked galleries.

The gallery keeps every remaining image of every identity ("multi-shot
all"); no same-camera exclusion is applied. INP for a query is the number
of true matches divided by the 1-based rank of the last true match.
"""
import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ProtocolError

DEFAULT_RANKS = (1, 5, 10)


@dataclass(frozen=True, eq=False)
class RankedList:
    query_index: int
    order: np.ndarray
    match_flags: np.ndarray

    @property
    def valid(self):
        return bool(self.match_flags.any())

    @property
    def num_matches(self):
        return int(self.match_flags.sum())

    @property
    def first_match_rank(self):
        hits = np.flatnonzero(self.match_flags)
        return int(hits[0]) + 1 if hits.size else None


@dataclass
class QueryResult:
    query_index: int
    ap: float
    inp: float
    first_match_rank: int


@dataclass
class EvalReport:
    cmc: dict
    mAP: float
    mINP: float
    per_query: list
    num_valid_queries: int
    num_invalid_queries: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        doc = {
            "ranks": {str(r): v for r, v in sorted(self.cmc.items())},
            "mAP": self.mAP,
            "mINP": self.mINP,
            "num_valid_queries": self.num_valid_queries,
            "num_invalid_queries": self.num_invalid_queries,
            "per_query": [
                {"query_index": q.query_index, "AP": q.ap, "INP": q.inp, "first_match_rank": q.first_match_rank}
                for q in self.per_query
            ],
        }
        doc.update(self.extra)
        return doc

    def to_json(self, **extra):
        doc = self.to_dict()
        doc.update(extra)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def summary_row(self):
        row = {f"rank{r}": v for r, v in sorted(self.cmc.items())}
        row.update(mAP=self.mAP, mINP=self.mINP, num_valid_queries=self.num_valid_queries)
        return row

    def to_csv(self):
        """Per-query table: query_index, AP, INP, first_match_rank."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["query_index", "AP", "INP", "first_match_rank"])
        for q in self.per_query:
            w.writerow([q.query_index, repr(q.ap), repr(q.inp), q.first_match_rank])
        return buf.getvalue()


def rank_gallery(distances, query, gallery):
    """Sort each query row ascending, ties by gallery index."""
    entries = np.asarray(getattr(distances, "entries", distances))
    if entries.shape != (len(query), len(gallery)):
        raise ConfigError(f"distance shape {entries.shape} does not match "
                          f"{len(query)} queries x {len(gallery)} gallery samples")
    order = np.argsort(entries, axis=1, kind="stable")
    flags = gallery.identities[order] == query.identities[:, None]
    return [RankedList(i, order[i], flags[i]) for i in range(len(query))]


def _flags(r):
    flags = np.asarray(getattr(r, "match_flags", r), dtype=bool)
    if not flags.any():
        raise ProtocolError("ranked list has no true match")
    return flags


def average_precision(r):
    flags = _flags(r)
    hits = np.flatnonzero(flags) + 1
    precision = np.arange(1, hits.size + 1) / hits
    return float(precision.sum() / hits.size)


def inverse_negative_penalty(r):
    flags = _flags(r)
    hits = np.flatnonzero(flags)
    return float(hits.size / (hits[-1] + 1))


def cmc_curve(lists, ranks=DEFAULT_RANKS):
    valid = [r for r in lists if r.valid]
    if not valid:
        raise ProtocolError("no query has a true match in the gallery")
    n_g = len(valid[0].match_flags)
    for k in ranks:
        if not 1 <= k <= n_g:
            raise ConfigError(f"rank {k} outside [1, {n_g}]")
    first = np.array([r.first_match_rank for r in valid])
    return {int(k): float(np.count_nonzero(first <= k) / first.size) for k in ranks}


def evaluate(distances, query, gallery, ranks=DEFAULT_RANKS):
    """Rank, score and aggregate; queries without a true match are excluded."""
    lists = rank_gallery(distances, query, gallery)
    n_g = len(gallery)
    ranks = tuple(k for k in ranks if k <= n_g) or (1,)
    per_query = [
        QueryResult(r.query_index, average_precision(r), inverse_negative_penalty(r), r.first_match_rank)
        for r in lists if r.valid
    ]
    cmc = cmc_curve(lists, ranks)
    aps = np.array([q.ap for q in per_query])
    inps = np.array([q.inp for q in per_query])
    return EvalReport(
        cmc=cmc,
        mAP=float(aps.mean()),
        mINP=float(inps.mean()),
        per_query=per_query,
        num_valid_queries=len(per_query),
        num_invalid_queries=len(lists) - len(per_query),
    )
