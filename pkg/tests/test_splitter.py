from fractions import Fraction
from types import SimpleNamespace

import numpy as np
import pytest

from mmreid.errors import ConfigError, ProtocolError
from mmreid.splitter import SplitMix64, SplitResult, SplitSpec, build_split, parse_ratio, round_half_up


def manifest(per_identity):
    """``per_identity``: list of (identity, n_visible, n_infrared)."""
    ids, mods = [], []
    for ident, nv, nt in per_identity:
        ids += [ident] * (nv + nt)
        mods += [0] * nv + [1] * nt
    return SimpleNamespace(identities=np.array(ids), modalities=np.array(mods))


def side_counts(pool, indices):
    out = {}
    for i in indices:
        key = (int(pool.identities[i]), int(pool.modalities[i]))
        out[key] = out.get(key, 0) + 1
    return out


def test_splitmix_reference_values():
    # published SplitMix64 output for seed 0
    g = SplitMix64(0)
    assert [g.next() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_ratio_parsing():
    assert parse_ratio("3:7") == Fraction(3, 10)
    assert parse_ratio("1:1") == Fraction(1, 2)
    assert parse_ratio(0.25) == Fraction(1, 4)
    for bad in ("3:-1", "0:0", "x", 1.5):
        with pytest.raises(ConfigError):
            parse_ratio(bad)


def test_round_half_up():
    assert [round_half_up(Fraction(n, 2)) for n in range(6)] == [0, 1, 1, 2, 2, 3]


def test_three_to_seven_ten_plus_ten():
    pool = manifest([(0, 10, 10), (1, 10, 10), (2, 10, 10)])
    r = build_split(pool, SplitSpec("3:7", seed=1))
    q, g = side_counts(pool, r.query_indices), side_counts(pool, r.gallery_indices)
    for ident in range(3):
        assert (q[(ident, 0)], q[(ident, 1)]) == (3, 7)
        assert (g[(ident, 0)], g[(ident, 1)]) == (7, 3)
    assert [(c.visible_in_query, c.infrared_in_query, c.visible_in_gallery, c.infrared_in_gallery)
            for c in r.per_identity_counts] == [(3, 7, 7, 3)] * 3


@pytest.mark.parametrize("ratio,expect", [("0:10", (0, 6, 5, 0)), ("10:0", (5, 0, 0, 6))])
def test_boundary_ratios(ratio, expect):
    pool = manifest([(4, 5, 6), (9, 5, 6)])
    r = build_split(pool, SplitSpec(ratio))
    for c in r.per_identity_counts:
        assert (c.visible_in_query, c.infrared_in_query, c.visible_in_gallery, c.infrared_in_gallery) == expect


def test_rounding_rule_counts():
    pool = manifest([(0, 5, 5), (1, 3, 7), (2, 1, 4)])
    r = build_split(pool, SplitSpec("1:1"))
    got = [(c.visible_in_query, c.infrared_in_query) for c in r.per_identity_counts]
    # 2.5 -> 3, 2.5 -> 3; 1.5 -> 2, 3.5 -> 4; 0.5 -> 1, 2 -> 2
    assert got == [(3, 3), (2, 4), (1, 2)]


def test_disjoint_and_covering():
    rng = np.random.default_rng(0)
    pool = manifest([(i, int(rng.integers(1, 9)), int(rng.integers(1, 9))) for i in range(20)])
    r = build_split(pool, SplitSpec("7:3", seed=5))
    q, g = set(r.query_indices), set(r.gallery_indices)
    assert not q & g
    assert q | g == set(range(len(pool.identities)))
    qids = {int(pool.identities[i]) for i in q}
    assert qids <= {int(pool.identities[i]) for i in g}


def test_seed_determinism():
    pool = manifest([(i, 10, 10) for i in range(5)])
    a = build_split(pool, SplitSpec("3:7", seed=42))
    b = build_split(pool, SplitSpec("3:7", seed=42))
    c = build_split(pool, SplitSpec("3:7", seed=43))
    assert a.to_json() == b.to_json()
    assert a.per_identity_counts == c.per_identity_counts
    assert a.query_indices != c.query_indices


def test_json_round_trip():
    pool = manifest([(3, 4, 4), (8, 2, 6)])
    r = build_split(pool, SplitSpec("5:5", seed=7))
    back = SplitResult.from_dict(__import__("json").loads(r.to_json()))
    assert back == r
    back.check_pool(pool)
    with pytest.raises(ProtocolError):
        back.check_pool(manifest([(3, 4, 4), (8, 3, 5)]))


def test_identity_fully_consumed():
    # a single image of each modality with ratio 1:1 puts both in the query
    with pytest.raises(ProtocolError, match="identity 11"):
        build_split(manifest([(2, 4, 4), (11, 1, 1)]), SplitSpec("1:1"))


def test_empty_pool():
    with pytest.raises(ProtocolError):
        build_split(manifest([]), SplitSpec())
