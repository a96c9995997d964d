"""Tests for the baseline summarizers."""

from __future__ import annotations

import numpy as np
import pytest

from scenesum.baselines import (
    change_detect_summary,
    random_summary,
    uniform_summary,
    vsumm_centroid,
)
from scenesum.clustering import partition_from_labels
from scenesum.dataset import SceneDataset
from scenesum.selector import AutoencoderParams, select_keyframes


def test_uniform_evenly_spaced():
    assert uniform_summary(7, 3).frame_indices == [0, 3, 6]
    assert uniform_summary(10, 1).frame_indices == [0]
    assert uniform_summary(5, 5).frame_indices == [0, 1, 2, 3, 4]


def test_uniform_spans_full_range():
    for n, k in ((100, 7), (31, 4), (9, 2)):
        frames = uniform_summary(n, k).frame_indices
        assert frames[0] == 0 and frames[-1] == n - 1
        assert frames == sorted(frames)
        assert len(set(frames)) == k


def test_random_summary_is_seeded():
    a = random_summary(50, 6, seed=3)
    b = random_summary(50, 6, seed=3)
    c = random_summary(50, 6, seed=4)
    assert a.frame_indices == b.frame_indices
    assert a.frame_indices != c.frame_indices
    assert a.frame_indices == sorted(a.frame_indices)
    assert len(set(a.frame_indices)) == 6
    assert all(0 <= f < 50 for f in a.frame_indices)


def test_vsumm_picks_one_frame_per_blob():
    rng = np.random.default_rng(0)
    centers = np.array([[0.0, 0.0], [20.0, 0.0], [0.0, 20.0]])
    feats = np.vstack([c + 0.05 * rng.standard_normal((5, 2)) for c in centers])
    result = vsumm_centroid(feats, 3, seed=1)
    blobs = sorted(f // 5 for f in result.frame_indices)
    assert blobs == [0, 1, 2]


def test_vsumm_identical_frames_falls_back_to_lowest_indices():
    result = vsumm_centroid(np.ones((6, 3)), 3, seed=0)
    assert result.frame_indices == [0, 1, 2]


def test_vsumm_agrees_with_identity_encoder_selection():
    # Equal-size tight blobs: the balanced partition equals the k-means one and
    # each cluster's feature mean is its centroid, so both selectors coincide.
    rng = np.random.default_rng(2)
    centers = np.array([[0.0, 0.0], [30.0, 0.0], [0.0, 30.0]])
    feats = np.vstack([c + 0.1 * rng.standard_normal((4, 2)) for c in centers]).astype(np.float32)
    vs = vsumm_centroid(feats, 3, seed=0)

    ds = SceneDataset("blobs", feats)
    labels = np.repeat(np.arange(3), 4)
    eye, zero = np.eye(2), np.zeros(2)
    identity = AutoencoderParams(input_dim=2, hidden_dims=(), latent_dim=2,
                                 encoder=[(eye, zero)], decoder=[(eye, zero)])
    # align cluster ids with the k-means labels used by vsumm
    from scenesum.clustering import kmeans

    _, km_labels = kmeans(feats, 3, seed=0)
    part = partition_from_labels(km_labels, 3, np.zeros((3, 2)))
    ours = select_keyframes(identity, ds, part)
    assert sorted(ours.frame_indices) == sorted(vs.frame_indices)


def test_change_detect_constant_features():
    result = change_detect_summary(np.ones((8, 3)), 3)
    assert result.frame_indices == [0, 1, 2]


def test_change_detect_finds_the_jump():
    feats = np.zeros((10, 4))
    feats[5:] = 10.0  # one step change between frames 4 and 5
    result = change_detect_summary(feats, 1)
    assert result.frame_indices == [5]
    top3 = change_detect_summary(feats, 3)
    assert top3.frame_indices == [0, 1, 5]  # zero-score ties resolve to lowest


def test_change_detect_single_frame():
    assert change_detect_summary(np.ones((1, 2)), 1).frame_indices == [0]


def test_baselines_validate_k():
    with pytest.raises(ValueError):
        uniform_summary(5, 6)
    with pytest.raises(ValueError):
        uniform_summary(5, 0)
    with pytest.raises(ValueError):
        random_summary(5, 6)
    with pytest.raises(ValueError):
        vsumm_centroid(np.ones((5, 2)), 6)
    with pytest.raises(ValueError):
        change_detect_summary(np.ones((5, 2)), 0)


def test_method_tags():
    assert uniform_summary(4, 2).method == "uniform"
    assert random_summary(4, 2).method == "random"
    assert vsumm_centroid(np.eye(4), 2).method == "vsumm"
    assert change_detect_summary(np.eye(4), 2).method == "change"
