"""Labeled embedding sets, distance maps and configuration records."""
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import _kernels
from .errors import ConfigError, DimensionMismatch

NO_CAMERA = -1


class Modality(IntEnum):
    VISIBLE = 0
    INFRARED = 1

    @classmethod
    def parse(cls, value):
        if isinstance(value, Modality):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip().upper()
        aliases = {"V": cls.VISIBLE, "VIS": cls.VISIBLE, "VISIBLE": cls.VISIBLE, "RGB": cls.VISIBLE,
                   "I": cls.INFRARED, "IR": cls.INFRARED, "INFRARED": cls.INFRARED, "T": cls.INFRARED,
                   "0": cls.VISIBLE, "1": cls.INFRARED}
        try:
            return aliases[key]
        except KeyError:
            raise ConfigError(f"unknown modality {value!r}") from None

    @property
    def short(self):
        return "V" if self is Modality.VISIBLE else "I"


@dataclass(frozen=True)
class SampleRecord:
    identity: int
    modality: Modality
    feature: np.ndarray
    camera: int | None = None


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


class EmbeddingSet:
    """Feature matrix with per-row identity, modality and camera labels.

    Row order is the identity of a sample for the whole run: every index
    produced downstream (ranked lists, splits, bridge indices) refers to it.
    Features are held as float64 regardless of the source precision.
    """

    __slots__ = ("features", "identities", "modalities", "cameras")

    def __init__(self, features, identities, modalities, cameras=None):
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2:
            raise ConfigError(f"features must be a 2-D array, got shape {features.shape}")
        n, dim = features.shape
        if dim < 1:
            raise ConfigError("embedding dimension must be >= 1")
        if not np.all(np.isfinite(features)):
            raise ConfigError("features contain NaN or Inf")
        identities = np.asarray(identities)
        if identities.shape != (n,):
            raise ConfigError(f"expected {n} identity labels, got shape {identities.shape}")
        if n and (not np.issubdtype(identities.dtype, np.integer) or identities.min() < 0):
            raise ConfigError("identity labels must be non-negative integers")
        modalities = np.asarray([int(Modality.parse(m)) for m in np.asarray(modalities).tolist()],
                                dtype=np.int8).reshape(-1)
        if modalities.shape != (n,):
            raise ConfigError(f"expected {n} modality labels, got shape {modalities.shape}")
        if cameras is None:
            cameras = np.full(n, NO_CAMERA, dtype=np.int64)
        else:
            cameras = np.array([NO_CAMERA if c is None else int(c) for c in np.asarray(cameras, dtype=object)],
                               dtype=np.int64).reshape(-1)
            if cameras.shape != (n,):
                raise ConfigError(f"expected {n} camera labels, got shape {cameras.shape}")
            if np.any(cameras < NO_CAMERA):
                raise ConfigError("camera labels must be non-negative or absent")
        object.__setattr__(self, "features", _frozen(features))
        object.__setattr__(self, "identities", _frozen(identities.astype(np.int64)))
        object.__setattr__(self, "modalities", _frozen(modalities))
        object.__setattr__(self, "cameras", _frozen(cameras))

    def __setattr__(self, name, value):
        raise AttributeError("EmbeddingSet is immutable")

    @classmethod
    def from_records(cls, records, dimension=None):
        records = list(records)
        if not records:
            if dimension is None:
                raise ConfigError("cannot infer dimension of an empty record list")
            return cls(np.empty((0, dimension)), np.empty(0, np.int64), np.empty(0, np.int8))
        lengths = {len(r.feature) for r in records}
        if len(lengths) != 1:
            raise ConfigError(f"records have differing feature lengths {sorted(lengths)}")
        if dimension is not None and lengths != {dimension}:
            raise DimensionMismatch(dimension, lengths.pop(), "set and records")
        return cls(np.array([np.asarray(r.feature, dtype=np.float64) for r in records]),
                   np.array([r.identity for r in records], dtype=np.int64),
                   [r.modality for r in records],
                   [r.camera for r in records])

    @property
    def dimension(self):
        return self.features.shape[1]

    def __len__(self):
        return self.features.shape[0]

    def __getitem__(self, i):
        cam = int(self.cameras[i])
        return SampleRecord(int(self.identities[i]), Modality(int(self.modalities[i])),
                            self.features[i], None if cam == NO_CAMERA else cam)

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def records(self):
        return list(self)

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return EmbeddingSet(self.features[idx], self.identities[idx], self.modalities[idx], self.cameras[idx])

    def identity_codes(self):
        """Compact identity labels to ``0..n_ids-1`` in ascending label order.

        Returns ``(codes, labels)`` with ``labels[codes] == identities``.
        """
        labels, codes = np.unique(self.identities, return_inverse=True)
        return codes.astype(np.int64), labels

    def same_as(self, other):
        return (self.features.shape == other.features.shape
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.identities, other.identities)
                and np.array_equal(self.modalities, other.modalities)
                and np.array_equal(self.cameras, other.cameras))

    def __repr__(self):
        return f"EmbeddingSet(n={len(self)}, dimension={self.dimension}, identities={len(np.unique(self.identities))})"


class MiniBatch:
    """Training-style batch of ``P`` identities with ``K`` samples per modality.

    Records are stored in canonical order: identities ascending, then the
    ``K`` visible samples, then the ``K`` infrared samples of that identity,
    each block keeping the order of the source set.
    """

    def __init__(self, set, P, K):
        if P < 1 or K < 1:
            raise ConfigError("P and K must be positive")
        if len(set) != 2 * P * K:
            raise ConfigError(f"mini-batch needs 2*P*K = {2 * P * K} records, got {len(set)}")
        ids = set.identities.reshape(P, 2 * K)
        mods = set.modalities.reshape(P, 2, K)
        if not (np.all(ids == ids[:, :1]) and np.all(np.diff(ids[:, 0]) > 0)):
            raise ConfigError("mini-batch records are not grouped by ascending identity")
        if not (np.all(mods[:, 0] == Modality.VISIBLE) and np.all(mods[:, 1] == Modality.INFRARED)):
            raise ConfigError("each identity block must hold K visible then K infrared records")
        self.set = set
        self.P = P
        self.K = K

    @classmethod
    def from_set(cls, set):
        """Reorder an arbitrary set into canonical batch order, inferring P and K."""
        if len(set) == 0:
            raise ConfigError("empty mini-batch")
        order = np.lexsort((np.arange(len(set)), set.modalities, set.identities))
        ids = np.unique(set.identities)
        per = {}
        for i, m in zip(set.identities.tolist(), set.modalities.tolist()):
            per[(i, m)] = per.get((i, m), 0) + 1
        sizes = {per.get((i, m), 0) for i in ids.tolist() for m in (0, 1)}
        if len(sizes) != 1 or 0 in sizes:
            raise ConfigError("every identity needs the same number K >= 1 of samples in each modality")
        return cls(set.subset(order), len(ids), sizes.pop())

    @property
    def features(self):
        return self.set.features

    def blocks(self):
        """Features viewed as ``(P, 2, K, D)``: identity, modality, sample, coordinate."""
        return self.set.features.reshape(self.P, 2, self.K, self.set.dimension)

    def __len__(self):
        return len(self.set)

    def __repr__(self):
        return f"MiniBatch(P={self.P}, K={self.K}, D={self.set.dimension})"


@dataclass(frozen=True, eq=False)
class DistanceMap:
    """Dense edge-weight matrix between two labeled sets.

    ``scaled`` records whether same-modality edges have already been
    multiplied by the re-ranking factor.
    """

    entries: np.ndarray
    row_modality: np.ndarray
    col_modality: np.ndarray
    scaled: bool = False
    symmetric: bool = field(default=False)

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.float64)
        if e.ndim != 2 or e.shape[0] < 1 or e.shape[1] < 1:
            raise ConfigError(f"distance map must be a non-empty 2-D matrix, got shape {e.shape}")
        if not np.all(np.isfinite(e)) or np.any(e < 0):
            raise ConfigError("distance map entries must be finite and non-negative")
        rm = np.asarray(self.row_modality, dtype=np.int8)
        cm = np.asarray(self.col_modality, dtype=np.int8)
        if rm.shape != (e.shape[0],) or cm.shape != (e.shape[1],):
            raise ConfigError("modality label lengths do not match the map shape")
        object.__setattr__(self, "entries", _frozen(e))
        object.__setattr__(self, "row_modality", _frozen(rm))
        object.__setattr__(self, "col_modality", _frozen(cm))

    @property
    def rows(self):
        return self.entries.shape[0]

    @property
    def cols(self):
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    def same_modality_mask(self):
        return self.row_modality[:, None] == self.col_modality[None, :]


@dataclass(frozen=True)
class LossConfig:
    margin: float = 0.3
    delta: float = 0.2

    def __post_init__(self):
        if not (np.isfinite(self.margin) and self.margin >= 0):
            raise ConfigError(f"margin must be >= 0, got {self.margin}")
        if not (np.isfinite(self.delta) and self.delta >= 0):
            raise ConfigError(f"delta must be >= 0, got {self.delta}")


@dataclass(frozen=True)
class ReRankConfig:
    lam: float = 0.999

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise ConfigError(f"lambda must be > 0, got {self.lam}")


def euclidean_distance(a, b):
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise DimensionMismatch(a.shape[0], b.shape[0])
    if a.size == 0:
        raise ConfigError("feature vectors must have at least one coordinate")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ConfigError("feature vectors contain NaN or Inf")
    # same kernel as pairwise_distances so single cells agree bit for bit
    return float(_kernels.euclidean_matrix(a[None, :], b[None, :])[0, 0])


def pairwise_distances(rows, cols):
    """Unscaled Euclidean distance map between every row and column sample."""
    if len(rows) == 0 or len(cols) == 0:
        raise ConfigError("cannot build a distance map from an empty set")
    if rows.dimension != cols.dimension:
        raise DimensionMismatch(rows.dimension, cols.dimension, "embedding sets")
    entries = _kernels.euclidean_matrix(rows.features, cols.features)
    return DistanceMap(entries, rows.modalities, cols.modalities, scaled=False, symmetric=rows is cols)
