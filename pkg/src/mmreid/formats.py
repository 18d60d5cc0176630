"""On-disk formats.

Binary feature file (all fields little-endian, no padding)::

    offset  size  field
    0       4     magic b"MMRE"
    4       4     u32 format version (1)
    8       4     u32 dimension D
    12      8     u64 record count N
    20      ...   N records of 7 + 4*D bytes:
                    u32 identity, u8 modality (0 visible, 1 infrared),
                    u16 camera (0xFFFF = absent), D x f32 feature

CSV twin: header ``identity,modality,camera,f1,...,fD``; modality is ``V``
or ``I`` (``0``/``1`` also accepted), an empty camera cell means absent.
Features are narrowed to float32 on load in both formats.
"""
import csv
import json
import struct
from pathlib import Path

import numpy as np

from .core import NO_CAMERA, DistanceMap, EmbeddingSet, Modality
from .errors import (BadMagic, BadRecord, ConfigError, FormatError, NonFiniteFeature, TrailingBytes,
                     TruncatedPayload, UnsupportedVersion, ZeroDimension)

MAGIC = b"MMRE"
VERSION = 1
HEADER = struct.Struct("<4sIIQ")
CAMERA_ABSENT = 0xFFFF


def record_dtype(dim):
    return np.dtype([("identity", "<u4"), ("modality", "u1"), ("camera", "<u2"), ("feature", "<f4", (dim,))])


def _check_writable(es):
    if len(es) == 0:
        raise ConfigError("refusing to write an empty embedding set")
    if es.identities.max() > 0xFFFFFFFF:
        raise ConfigError("identity labels exceed the u32 range of the file format")
    if es.cameras.max() >= CAMERA_ABSENT:
        raise ConfigError("camera labels must be below 65535")
    f32 = es.features.astype(np.float32)
    if not np.all(np.isfinite(f32)):
        raise ConfigError("features overflow float32")
    return f32


def save_features(es, path):
    f32 = _check_writable(es)
    rec = np.empty(len(es), dtype=record_dtype(es.dimension))
    rec["identity"] = es.identities
    rec["modality"] = es.modalities
    rec["camera"] = np.where(es.cameras == NO_CAMERA, CAMERA_ABSENT, es.cameras)
    rec["feature"] = f32
    payload = HEADER.pack(MAGIC, VERSION, es.dimension, len(es)) + rec.tobytes()
    Path(path).write_bytes(payload)


def _finish(features, identities, modalities, cameras, path):
    if not np.all(np.isfinite(features)):
        raise NonFiniteFeature("features contain NaN or Inf", path)
    if np.any(modalities > 1):
        raise BadRecord("modality byte must be 0 or 1", path)
    cameras = np.where(cameras == CAMERA_ABSENT, NO_CAMERA, cameras.astype(np.int64))
    return EmbeddingSet(features.astype(np.float64), identities.astype(np.int64), modalities, cameras)


def load_features(path):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return load_features_csv(path)
    data = path.read_bytes()
    if len(data) < 4 or data[:4] != MAGIC:
        raise BadMagic("bad magic (not an MMRE feature file)", path)
    if len(data) < HEADER.size:
        raise TruncatedPayload("truncated payload (incomplete header)", path)
    _, version, dim, n = HEADER.unpack_from(data)
    if version != VERSION:
        raise UnsupportedVersion(f"unsupported format version {version}", path)
    if dim == 0:
        raise ZeroDimension("dimension D = 0", path)
    dt = record_dtype(dim)
    expected = HEADER.size + n * dt.itemsize
    if len(data) < expected:
        raise TruncatedPayload(f"truncated payload: header declares {n} records "
                               f"({expected} bytes) but file has {len(data)} bytes", path)
    if len(data) > expected:
        raise TrailingBytes(f"{len(data) - expected} unexpected bytes after {n} records", path)
    if n == 0:
        raise FormatError("file holds no records", path)
    rec = np.frombuffer(data, dtype=dt, count=n, offset=HEADER.size)
    return _finish(rec["feature"], rec["identity"], rec["modality"], rec["camera"], path)


def save_features_csv(es, path):
    f32 = _check_writable(es)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["identity", "modality", "camera"] + [f"f{k + 1}" for k in range(es.dimension)])
        for i in range(len(es)):
            cam = int(es.cameras[i])
            # repr of the widened float32 is exact and round-trips
            w.writerow([int(es.identities[i]), Modality(int(es.modalities[i])).short,
                        "" if cam == NO_CAMERA else cam] + [repr(float(x)) for x in f32[i]])


def load_features_csv(path):
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip().lower() for c in rows[0][:3]] != ["identity", "modality", "camera"]:
        raise BadMagic("CSV header must start with identity,modality,camera", path)
    dim = len(rows[0]) - 3
    if dim == 0:
        raise ZeroDimension("CSV has no feature columns", path)
    body = [r for r in rows[1:] if r]
    if not body:
        raise FormatError("file holds no records", path)
    ids = np.empty(len(body), np.int64)
    mods = np.empty(len(body), np.uint8)
    cams = np.empty(len(body), np.int64)
    feats = np.empty((len(body), dim), np.float32)
    for k, r in enumerate(body):
        if len(r) != dim + 3:
            raise TruncatedPayload(f"row {k + 2}: expected {dim + 3} cells, got {len(r)}", path)
        try:
            ids[k] = int(r[0])
            mods[k] = int(Modality.parse(r[1]))
            cams[k] = CAMERA_ABSENT if r[2].strip() == "" else int(r[2])
            feats[k] = [float(x) for x in r[3:]]
        except (ValueError, ConfigError) as exc:
            raise BadRecord(f"row {k + 2}: {exc}", path) from None
    if ids.min() < 0 or ids.max() > 0xFFFFFFFF:
        raise BadRecord("identity outside the u32 range", path)
    return _finish(feats, ids, mods, cams, path)


def save_distance_map(path, dmap, optimized=None, provenance=None):
    """Persist a map (and optionally its bridge-optimized counterpart) as ``.npz``.

    ``provenance`` is stored verbatim as a JSON string.
    """
    arrays = dict(entries=dmap.entries, row_modality=dmap.row_modality, col_modality=dmap.col_modality,
                  scaled=np.array(dmap.scaled))
    if optimized is not None:
        arrays.update(optimized=optimized.entries, argmin_bridge=optimized.argmin_bridge)
    if provenance is not None:
        arrays.update(provenance=np.array(json.dumps(provenance, sort_keys=True)))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_map_provenance(path):
    with np.load(path, allow_pickle=False) as z:
        return json.loads(str(z["provenance"])) if "provenance" in z.files else None


def load_distance_map(path):
    """Return ``(DistanceMap, optimized_entries or None, argmin_bridge or None)``."""
    try:
        with np.load(path, allow_pickle=False) as z:
            dmap = DistanceMap(z["entries"], z["row_modality"], z["col_modality"], scaled=bool(z["scaled"]))
            opt = z["optimized"] if "optimized" in z.files else None
            arg = z["argmin_bridge"] if "argmin_bridge" in z.files else None
    except (OSError, KeyError, ValueError) as exc:
        raise FormatError(f"cannot read distance map: {exc}", path) from None
    return dmap, opt, arg
