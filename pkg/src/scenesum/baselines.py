"""Classic summarizers used for comparison: evenly spaced frames, seeded random
frames, nearest-to-centroid cluster representatives, and content-change peaks.
Every baseline returns k distinct frame indices."""

from __future__ import annotations

import math

import numpy as np

from .clustering import kmeans
from .selector import SummaryResult


def _check_k(n: int, k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k > n:
        raise ValueError(f"k ({k}) exceeds number of frames ({n})")


def uniform_summary(n: int, k: int) -> SummaryResult:
    """Evenly spaced indices round(i * (n-1) / (k-1)); frame 0 alone when k=1."""
    _check_k(n, k)
    if k == 1:
        frames = [0]
    else:
        frames = [int(math.floor(i * (n - 1) / (k - 1) + 0.5)) for i in range(k)]
    return SummaryResult(method="uniform", frame_indices=frames, config={"n": n, "k": k})


def random_summary(n: int, k: int, seed: int = 0) -> SummaryResult:
    """k distinct frames drawn uniformly, sorted ascending; deterministic per seed."""
    _check_k(n, k)
    rng = np.random.default_rng(seed)
    frames = sorted(int(i) for i in rng.choice(n, size=k, replace=False))
    return SummaryResult(method="random", frame_indices=frames,
                         config={"n": n, "k": k, "seed": seed})


def vsumm_centroid(features, k: int, seed: int = 0) -> SummaryResult:
    """k-means on features; each cluster is represented by the frame nearest its
    centroid (ties to the lowest index).  Empty clusters, which only occur for
    degenerate inputs such as all-identical frames, fall back to the lowest
    frames not yet selected so the summary stays k distinct indices."""
    x = np.asarray(features, dtype=np.float64)
    _check_k(x.shape[0], k)
    centroids, labels = kmeans(x, k, seed=seed)
    frames = []
    used = set()
    fallback = []
    for j in range(k):
        members = np.flatnonzero(labels == j)
        if members.size == 0:
            frames.append(None)
            fallback.append(j)
            continue
        d = ((x[members] - centroids[j]) ** 2).sum(axis=1)
        pick = int(members[int(np.argmin(d))])
        frames.append(pick)
        used.add(pick)
    spare = (i for i in range(x.shape[0]) if i not in used)
    for j in fallback:
        frames[j] = next(spare)
    return SummaryResult(method="vsumm", frame_indices=frames,
                         config={"n": x.shape[0], "k": k, "seed": seed})


def change_detect_summary(features, k: int) -> SummaryResult:
    """Top-k frames by L1 change against the previous frame, sorted ascending.

    Frame 0 scores 0; score ties resolve to the lowest frame index.
    """
    x = np.asarray(features, dtype=np.float64)
    n = x.shape[0]
    _check_k(n, k)
    scores = np.zeros(n)
    if n > 1:
        scores[1:] = np.abs(np.diff(x, axis=0)).sum(axis=1)
    ranked = np.lexsort((np.arange(n), -scores))
    frames = sorted(int(i) for i in ranked[:k])
    return SummaryResult(method="change", frame_indices=frames, config={"n": n, "k": k})
