"""Mix-modality query/gallery splits.

For a visible fraction ``r`` in the query (ratio ``a:b`` means
``r = a / (a + b)``), each identity contributes ``round_half_up(r * n_vis)``
visible and ``round_half_up((1 - r) * n_ir)`` infrared images to the query;
everything else goes to the gallery.

Shuffling is portable: a SplitMix64 stream seeded with ``seed`` drives a
Fisher-Yates shuffle of each identity's visible list and then its infrared
list, identities visited in ascending label order. Bounded draws use
rejection sampling so the result never depends on platform integers.
"""
import json
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .core import Modality
from .errors import ConfigError, FormatError, ProtocolError

_MASK64 = (1 << 64) - 1
SPLIT_FORMAT = "mmreid-split/1"


class SplitPolicy(str, Enum):
    MULTI_SHOT_ALL = "MultiShotAll"


class SplitMix64:
    def __init__(self, seed):
        self.state = int(seed) & _MASK64

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n):
        """Uniform integer in ``[0, n)``."""
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            x = self.next()
            if x < limit:
                return x % n

    def shuffle(self, items):
        items = list(items)
        for i in range(len(items) - 1, 0, -1):
            j = self.below(i + 1)
            items[i], items[j] = items[j], items[i]
        return items


def parse_ratio(text):
    """``"3:7"`` -> ``Fraction(3, 10)``; also accepts a fraction or decimal."""
    if isinstance(text, (Fraction, int, float)):
        value = Fraction(text).limit_denominator(10**9) if isinstance(text, float) else Fraction(text)
    else:
        s = str(text).strip()
        try:
            if ":" in s:
                a, b = (Fraction(p.strip()) for p in s.split(":", 1))
                if a < 0 or b < 0 or a + b == 0:
                    raise ConfigError(f"invalid ratio {text!r}")
                value = a / (a + b)
            else:
                value = Fraction(s)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"invalid ratio {text!r}") from None
    if not 0 <= value <= 1:
        raise ConfigError(f"ratio must lie in [0, 1], got {value}")
    return value


def round_half_up(x):
    x = Fraction(x)
    return int((x + Fraction(1, 2)).__floor__())


@dataclass(frozen=True)
class SplitSpec:
    ratio_visible_in_query: Fraction = Fraction(3, 10)
    seed: int = 0
    policy: SplitPolicy = SplitPolicy.MULTI_SHOT_ALL

    def __post_init__(self):
        object.__setattr__(self, "ratio_visible_in_query", parse_ratio(self.ratio_visible_in_query))
        object.__setattr__(self, "policy", SplitPolicy(self.policy))
        if not 0 <= int(self.seed) <= _MASK64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def ratio_text(self):
        r = self.ratio_visible_in_query
        a = r * 10
        if a.denominator == 1:
            return f"{a.numerator}:{10 - a.numerator}"
        return f"{r.numerator}:{r.denominator - r.numerator}"

    def to_dict(self):
        return {"ratio": self.ratio_text, "ratio_visible_in_query": str(self.ratio_visible_in_query),
                "seed": int(self.seed), "policy": self.policy.value}


@dataclass(frozen=True)
class IdentityCounts:
    identity: int
    visible_in_query: int
    infrared_in_query: int
    visible_in_gallery: int
    infrared_in_gallery: int


@dataclass(frozen=True)
class SplitResult:
    query_indices: tuple
    gallery_indices: tuple
    per_identity_counts: tuple
    spec: SplitSpec
    identities: tuple = ()
    modalities: tuple = ()

    def to_dict(self):
        q = set(self.query_indices)
        return {
            "format": SPLIT_FORMAT,
            "spec": self.spec.to_dict(),
            "query_indices": list(self.query_indices),
            "gallery_indices": list(self.gallery_indices),
            "per_identity_counts": [
                [c.identity, c.visible_in_query, c.infrared_in_query, c.visible_in_gallery, c.infrared_in_gallery]
                for c in self.per_identity_counts
            ],
            "assignments": [
                {"index": i, "identity": int(self.identities[i]), "modality": Modality(self.modalities[i]).short,
                 "set": "query" if i in q else "gallery"}
                for i in range(len(self.identities))
            ],
        }

    def to_json(self, **extra):
        doc = self.to_dict()
        doc.update(extra)
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, doc):
        if doc.get("format") != SPLIT_FORMAT:
            raise FormatError(f"not a split file (format={doc.get('format')!r})")
        try:
            spec = doc["spec"]
            assignments = doc["assignments"]
            return cls(
                query_indices=tuple(int(i) for i in doc["query_indices"]),
                gallery_indices=tuple(int(i) for i in doc["gallery_indices"]),
                per_identity_counts=tuple(IdentityCounts(*map(int, c)) for c in doc["per_identity_counts"]),
                spec=SplitSpec(Fraction(spec["ratio_visible_in_query"]), int(spec["seed"]), spec["policy"]),
                identities=tuple(int(a["identity"]) for a in assignments),
                modalities=tuple(int(Modality.parse(a["modality"])) for a in assignments),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed split document: {exc}") from None

    def check_pool(self, pool):
        """Verify that ``pool`` carries the labels this split was built from."""
        if (len(pool.identities) != len(self.identities)
                or not np.array_equal(pool.identities, self.identities)
                or not np.array_equal(pool.modalities, self.modalities)):
            raise ProtocolError("split file does not match the feature pool (labels differ)")


def build_split(pool, spec):
    """Assign every pool index to the query or gallery side.

    ``pool`` may be an :class:`EmbeddingSet` or any object exposing
    ``identities`` and ``modalities`` arrays (a label-only manifest).
    """
    identities = np.asarray(pool.identities, dtype=np.int64)
    modalities = np.asarray(pool.modalities, dtype=np.int64)
    if identities.size == 0:
        raise ProtocolError("cannot split an empty pool")
    rng = SplitMix64(spec.seed)
    r = spec.ratio_visible_in_query
    query, counts = [], []
    for ident in np.unique(identities).tolist():
        vis = np.flatnonzero((identities == ident) & (modalities == Modality.VISIBLE)).tolist()
        ir = np.flatnonzero((identities == ident) & (modalities == Modality.INFRARED)).tolist()
        nv = round_half_up(r * len(vis))
        nt = round_half_up((1 - r) * len(ir))
        if nv + nt == len(vis) + len(ir):
            raise ProtocolError(f"identity {ident}: query would consume all {nv + nt} images, "
                                f"leaving no gallery match")
        vis = rng.shuffle(vis)
        ir = rng.shuffle(ir)
        query += vis[:nv] + ir[:nt]
        counts.append(IdentityCounts(ident, nv, nt, len(vis) - nv, len(ir) - nt))
    query = sorted(query)
    qset = set(query)
    gallery = [i for i in range(identities.size) if i not in qset]
    return SplitResult(tuple(query), tuple(gallery), tuple(counts), spec,
                       tuple(identities.tolist()), tuple(modalities.tolist()))
