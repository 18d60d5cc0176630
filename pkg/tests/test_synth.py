import numpy as np
import pytest

from mmreid.cidhl import cidhl_loss
from mmreid.core import MiniBatch, pairwise_distances
from mmreid.errors import ConfigError
from mmreid.synth import SynthSpec, generate_synthetic


def test_same_seed_bit_identical():
    spec = SynthSpec(5, 3, 7, sigma_id=0.2, sigma_mod=1.0, seed=9)
    a, b = generate_synthetic(spec), generate_synthetic(spec)
    assert a.same_as(b) and np.array_equal(a.features, b.features)
    assert not np.array_equal(a.features, generate_synthetic(SynthSpec(5, 3, 7, 0.2, 1.0, seed=10)).features)


def test_zero_spread_coincides_and_loss_vanishes():
    es = generate_synthetic(SynthSpec(4, 3, 6, sigma_id=0.0, sigma_mod=0.0, seed=1, anchor_scale=50.0))
    F = es.features.reshape(4, 6, 6)
    assert np.all(F == F[:, :1])
    assert cidhl_loss(MiniBatch(es, 4, 3)).l_cid == 0.0


def test_modality_offset_is_shared_direction():
    es = generate_synthetic(SynthSpec(3, 1, 5, sigma_id=0.0, sigma_mod=2.0, seed=4))
    F = es.features.reshape(3, 2, 5)
    diff = F[:, 0] - F[:, 1]
    assert np.allclose(diff, diff[0], atol=1e-12)
    assert np.linalg.norm(diff[0]) == pytest.approx(4.0, rel=1e-12)


def test_confusion_nearest_neighbor_is_visible_impostor():
    es = generate_synthetic(SynthSpec(10, 5, 8, sigma_id=0.05, sigma_mod=10.0, seed=0))
    D = pairwise_distances(es, es).entries.copy()
    np.fill_diagonal(D, np.inf)
    for i in np.flatnonzero(es.modalities == 0):
        same_id = es.identities == es.identities[i]
        # exclude own-identity visible samples: the cross-set question is impostor vs cross-modality match
        candidates = np.where(same_id & (es.modalities == 0), np.inf, D[i])
        j = int(np.argmin(candidates))
        assert es.modalities[j] == 0 and es.identities[j] != es.identities[i]


def test_spec_validation():
    with pytest.raises(ConfigError):
        SynthSpec(0, 1, 1)
    with pytest.raises(ConfigError):
        SynthSpec(1, 1, 1, sigma_id=-1)
