"""Stage two: train an MLP autoencoder with a contrastive pair loss, then pick
one keyframe per cluster.

The encoder maps frame features to a latent space; each cluster's sampled
latents are pooled into a single vector.  Training minimizes reconstruction
error plus a pairwise InfoNCE term that pushes pooled vectors of different
clusters apart (optionally plus a pull toward ground-truth keyframe encodings).
Gradients are computed by hand in float64 and checked against finite
differences in the test suite.
"""

from __future__ import annotations

import math
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .clustering import ClusterPartition, sample_cluster
from .dataset import SceneDataset

_COS_EPS = 1e-12  # norm guard on the training path
_TINY = np.finfo(np.float64).tiny
_MAGIC = b"SSAE"
_CHECKPOINT_VERSION = 1
_MODES = ("self_supervised", "supervised")
_POOLINGS = ("mean", "max")


@dataclass
class AutoencoderParams:
    """Weights of a mirrored MLP autoencoder.

    Each layer is a (weight, bias) pair with weight shape (fan_in, fan_out).
    Hidden layers use tanh; the encoder output and decoder output are linear.
    """

    input_dim: int
    hidden_dims: tuple[int, ...]
    latent_dim: int
    encoder: list[tuple[np.ndarray, np.ndarray]]
    decoder: list[tuple[np.ndarray, np.ndarray]]

    def __post_init__(self):
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)
        enc_dims = _dim_chain(self.input_dim, self.hidden_dims, self.latent_dim)
        dec_dims = _dim_chain(self.latent_dim, self.hidden_dims[::-1], self.input_dim)
        for name, layers, dims in (("encoder", self.encoder, enc_dims),
                                   ("decoder", self.decoder, dec_dims)):
            if len(layers) != len(dims):
                raise ValueError(f"{name} must have {len(dims)} layers, got {len(layers)}")
            for i, ((w, b), (din, dout)) in enumerate(zip(layers, dims)):
                if w.shape != (din, dout) or b.shape != (dout,):
                    raise ValueError(f"{name} layer {i} has shape {w.shape}/{b.shape}, "
                                     f"expected {(din, dout)}/{(dout,)}")
                if not (np.isfinite(w).all() and np.isfinite(b).all()):
                    raise ValueError(f"{name} layer {i} contains NaN or Inf")


def _dim_chain(first: int, middles: tuple[int, ...], last: int) -> list[tuple[int, int]]:
    dims = [first, *middles, last]
    return list(zip(dims[:-1], dims[1:]))


def init_params(input_dim: int, hidden_dims, latent_dim: int,
                rng: np.random.Generator | int = 0) -> AutoencoderParams:
    """Uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases."""
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(rng)
    hidden_dims = tuple(hidden_dims)

    def make(dims):
        layers = []
        for din, dout in dims:
            bound = 1.0 / math.sqrt(din)
            layers.append((rng.uniform(-bound, bound, size=(din, dout)),
                           rng.uniform(-bound, bound, size=dout)))
        return layers

    return AutoencoderParams(
        input_dim=input_dim, hidden_dims=hidden_dims, latent_dim=latent_dim,
        encoder=make(_dim_chain(input_dim, hidden_dims, latent_dim)),
        decoder=make(_dim_chain(latent_dim, hidden_dims[::-1], input_dim)),
    )


def _forward(layers, x: np.ndarray) -> list[np.ndarray]:
    """Run the affine/tanh chain; returns activations, input first, output last."""
    acts = [x]
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        z = acts[-1] @ w + b
        acts.append(np.tanh(z) if i < last else z)
    return acts


def _backward(layers, acts, d_out: np.ndarray):
    """Backprop d_out through the chain; returns per-layer grads and input grad."""
    grads = [None] * len(layers)
    d = d_out
    last = len(layers) - 1
    for i in range(last, -1, -1):
        w, _ = layers[i]
        dz = d if i == last else d * (1.0 - acts[i + 1] ** 2)
        grads[i] = (acts[i].T @ dz, dz.sum(axis=0))
        d = dz @ w.T
    return grads, d


def _check_batch(x, want_dim: int, what: str) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.ndim != 2 or x.shape[1] != want_dim:
        raise ValueError(f"{what} expects vectors of dimension {want_dim}, got shape {x.shape}")
    return x, single


def encode(params: AutoencoderParams, x) -> np.ndarray:
    """Latent features for a vector or a batch of row vectors."""
    x, single = _check_batch(x, params.input_dim, "encode")
    h = _forward(params.encoder, x)[-1]
    return h[0] if single else h


def decode(params: AutoencoderParams, h) -> np.ndarray:
    """Reconstruction for a latent vector or a batch of row vectors."""
    h, single = _check_batch(h, params.latent_dim, "decode")
    x = _forward(params.decoder, h)[-1]
    return x[0] if single else x


def pool(h) -> np.ndarray:
    """Arithmetic mean over the rows of h."""
    h = np.atleast_2d(np.asarray(h, dtype=np.float64))
    if h.shape[0] == 0 or h.size == 0:
        raise ValueError("cannot pool an empty set of vectors")
    return h.mean(axis=0)


def _pool_rows(h: np.ndarray, pooling: str):
    if pooling == "mean":
        return h.mean(axis=0), None
    if pooling == "max":
        amax = np.argmax(h, axis=0)  # first (lowest) row on ties
        return h[amax, np.arange(h.shape[1])], amax
    raise ValueError(f"pooling must be one of {_POOLINGS}, got {pooling!r}")


def recon_loss(x, x_hat) -> float:
    """Mean over samples of the squared L2 reconstruction error."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    x_hat = np.atleast_2d(np.asarray(x_hat, dtype=np.float64))
    if x.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {x_hat.shape}")
    return float(((x - x_hat) ** 2).sum(axis=1).mean())


def cosine_sim(a, b) -> float:
    """Cosine similarity of two vectors; rejects zero vectors."""
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for zero vectors")
    return float(a @ b) / (na * nb)


def infonce_pair(p_a, p_b) -> float:
    """Contrastive pair loss -log(e^sim(a,a) / (e^sim(a,a) + e^sim(a,b))).

    With cosine similarity the positive logit is 1, so the loss reduces to
    log(1 + e^(sim(a,b) - 1)).
    """
    s = cosine_sim(p_a, p_b)
    return float(np.log1p(np.exp(s - 1.0)))


def _zero_grads(layers):
    return [(np.zeros_like(w), np.zeros_like(b)) for w, b in layers]


def _accumulate(target, grads):
    for (tw, tb), (gw, gb) in zip(target, grads):
        tw += gw
        tb += gb


def _evaluate(params, features, samples, gt_keyframes, lam_recon, lam_nce, lam_gt,
              pooling, want_grad):
    k = len(samples)
    if k < 2:
        raise ValueError(f"need at least 2 clusters for the contrastive term, got {k}")
    xs = [features[s.frame_indices] for s in samples]
    enc_acts = [_forward(params.encoder, x) for x in xs]
    dec_acts = [_forward(params.decoder, acts[-1]) for acts in enc_acts]

    pooled = []
    amaxes = []
    for acts in enc_acts:
        p, amax = _pool_rows(acts[-1], pooling)
        pooled.append(p)
        amaxes.append(amax)
    pools = np.stack(pooled)

    n_total = sum(x.shape[0] for x in xs)
    recon = sum(float(((x - acts[-1]) ** 2).sum()) for x, acts in zip(xs, dec_acts)) / n_total

    # Pairwise contrastive term over ordered cluster pairs, with guarded norms.
    norms = np.sqrt((pools * pools).sum(axis=1))
    guarded = norms + _COS_EPS
    nce = 0.0
    d_pools = np.zeros_like(pools) if want_grad else None
    for a in range(k):
        for b in range(k):
            if a == b:
                continue
            s = float(pools[a] @ pools[b]) / (guarded[a] * guarded[b])
            e = math.exp(s - 1.0)
            nce += math.log1p(e)
            if want_grad:
                w = lam_nce * e / (1.0 + e)
                d_pools[a] += w * (pools[b] / (guarded[a] * guarded[b])
                                   - s * pools[a] / (guarded[a] * max(norms[a], _TINY)))
                d_pools[b] += w * (pools[a] / (guarded[a] * guarded[b])
                                   - s * pools[b] / (guarded[b] * max(norms[b], _TINY)))

    supervised = gt_keyframes is not None
    breakdown = {"recon": recon, "infonce": nce}
    total = lam_recon * recon + lam_nce * nce
    if supervised:
        gt_idx = np.asarray([gt_keyframes[s.cluster_id] for s in samples], dtype=np.int64)
        gt_acts = _forward(params.encoder, features[gt_idx])
        gt_diff = gt_acts[-1] - pools
        gt_term = float((gt_diff * gt_diff).sum()) / k
        breakdown["gt"] = gt_term
        total += lam_gt * gt_term

    if not want_grad:
        return total, breakdown, None

    enc_grads = _zero_grads(params.encoder)
    dec_grads = _zero_grads(params.decoder)
    if supervised:
        d_pools += lam_gt * (-2.0 / k) * gt_diff
        g, _ = _backward(params.encoder, gt_acts, lam_gt * (2.0 / k) * gt_diff)
        _accumulate(enc_grads, g)
    for q in range(k):
        x, e_acts, d_acts = xs[q], enc_acts[q], dec_acts[q]
        dxp = lam_recon * (2.0 / n_total) * (d_acts[-1] - x)
        g, dh = _backward(params.decoder, d_acts, dxp)
        _accumulate(dec_grads, g)
        if pooling == "mean":
            dh = dh + d_pools[q] / x.shape[0]
        else:
            dh = dh.copy()
            dh[amaxes[q], np.arange(dh.shape[1])] += d_pools[q]
        g, _ = _backward(params.encoder, e_acts, dh)
        _accumulate(enc_grads, g)

    grads = AutoencoderParams(input_dim=params.input_dim, hidden_dims=params.hidden_dims,
                              latent_dim=params.latent_dim, encoder=enc_grads, decoder=dec_grads)
    return total, breakdown, grads


def total_loss(params: AutoencoderParams, features, samples, gt_keyframes=None, *,
               lambda_recon: float = 1.0, lambda_nce: float = 1.0, lambda_gt: float = 1.0,
               pooling: str = "mean"):
    """Weighted training loss over one batch of cluster samples.

    Returns (total, breakdown) where breakdown holds the unweighted terms under
    keys 'recon', 'infonce', and (supervised only) 'gt'.
    """
    features = np.asarray(features, dtype=np.float64)
    total, breakdown, _ = _evaluate(params, features, samples, gt_keyframes,
                                    lambda_recon, lambda_nce, lambda_gt, pooling, False)
    return total, breakdown


def grad(params: AutoencoderParams, features, samples, gt_keyframes=None, *,
         lambda_recon: float = 1.0, lambda_nce: float = 1.0, lambda_gt: float = 1.0,
         pooling: str = "mean") -> AutoencoderParams:
    """Analytic gradient of total_loss, shaped exactly like params."""
    features = np.asarray(features, dtype=np.float64)
    _, _, g = _evaluate(params, features, samples, gt_keyframes,
                        lambda_recon, lambda_nce, lambda_gt, pooling, True)
    return g


@dataclass
class TrainConfig:
    """Training hyperparameters; defaults are desk-scale except where noted."""

    batch_size: int = 64
    learning_rate: float = 1e-3
    epochs: int = 100
    latent_dim: int = 64  # reference runs use 2048; validated but not required here
    hidden_dims: tuple[int, ...] = (128,)
    sample_size: int = 8
    mode: str = "self_supervised"
    lambda_recon: float = 1.0
    lambda_nce: float = 1.0
    lambda_gt: float = 1.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    pooling: str = "mean"

    def __post_init__(self):
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.latent_dim < 1:
            raise ValueError(f"latent_dim must be >= 1, got {self.latent_dim}")
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError(f"hidden dims must be >= 1, got {self.hidden_dims}")
        if self.sample_size < 1:
            raise ValueError(f"sample_size must be >= 1, got {self.sample_size}")
        if self.mode not in _MODES:
            raise ValueError(f"mode must be one of {_MODES}, got {self.mode!r}")
        for name in ("lambda_recon", "lambda_nce", "lambda_gt"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        for name in ("beta1", "beta2"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {v}")
        if self.adam_eps <= 0:
            raise ValueError(f"adam_eps must be > 0, got {self.adam_eps}")
        if self.pooling not in _POOLINGS:
            raise ValueError(f"pooling must be one of {_POOLINGS}, got {self.pooling!r}")


@dataclass
class AdamState:
    """First/second moment accumulators, one pair per parameter array."""

    m_encoder: list
    v_encoder: list
    m_decoder: list
    v_decoder: list
    t: int = 0

    @classmethod
    def for_params(cls, params: AutoencoderParams) -> "AdamState":
        return cls(m_encoder=_zero_grads(params.encoder), v_encoder=_zero_grads(params.encoder),
                   m_decoder=_zero_grads(params.decoder), v_decoder=_zero_grads(params.decoder))


def adam_step(params: AutoencoderParams, grads: AutoencoderParams, state: AdamState, *,
              learning_rate: float, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> None:
    """One bias-corrected Adam update, in place.  A zero gradient is a no-op."""
    state.t += 1
    bc1 = 1.0 - beta1 ** state.t
    bc2 = 1.0 - beta2 ** state.t
    for layers, gs, ms, vs in ((params.encoder, grads.encoder, state.m_encoder, state.v_encoder),
                               (params.decoder, grads.decoder, state.m_decoder, state.v_decoder)):
        for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(layers, gs, ms, vs):
            for theta, g, m, v in ((w, gw, mw, vw), (b, gb, mb, vb)):
                m *= beta1
                m += (1.0 - beta1) * g
                v *= beta2
                v += (1.0 - beta2) * g * g
                theta -= learning_rate * (m / bc1) / (np.sqrt(v / bc2) + eps)


def train(ds: SceneDataset, partition: ClusterPartition, cfg: TrainConfig):
    """Fit the autoencoder on cluster samples; returns (params, per-epoch mean loss).

    Each epoch runs ceil(n_frames / (k * N)) steps; each step draws one
    ClusterSample of N frames per cluster.  N is reduced with a warning if
    k * N would exceed cfg.batch_size.  Fully deterministic given cfg.seed.
    """
    if partition.n_frames != ds.n_frames:
        raise ValueError(f"partition covers {partition.n_frames} frames, dataset has {ds.n_frames}")
    k = partition.k
    if k < 2:
        raise ValueError(f"training needs at least 2 clusters, got k={k}")
    supervised = cfg.mode == "supervised"
    gt = partition.gt_keyframes if supervised else None
    if supervised and gt is None:
        raise ValueError("supervised training requires a partition with gt_keyframes")

    n_sample = cfg.sample_size
    if k * n_sample > cfg.batch_size:
        n_sample = max(1, cfg.batch_size // k)
        warnings.warn(f"reducing per-cluster sample size {cfg.sample_size} -> {n_sample} "
                      f"so k*N stays within batch_size={cfg.batch_size}")

    rng = np.random.default_rng(cfg.seed)
    params = init_params(ds.dim, cfg.hidden_dims, cfg.latent_dim, rng)
    features = np.asarray(ds.features, dtype=np.float64)
    state = AdamState.for_params(params)
    steps = max(1, math.ceil(ds.n_frames / (k * n_sample)))

    history = []
    for _ in range(cfg.epochs):
        step_losses = []
        for _ in range(steps):
            samples = [sample_cluster(partition, j, n_sample, rng) for j in range(k)]
            total, _, g = _evaluate(params, features, samples, gt, cfg.lambda_recon,
                                    cfg.lambda_nce, cfg.lambda_gt, cfg.pooling, True)
            adam_step(params, g, state, learning_rate=cfg.learning_rate,
                      beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.adam_eps)
            step_losses.append(total)
        history.append(float(np.mean(step_losses)))
    return params, history


@dataclass
class PooledFeature:
    """Pooled latent vector representing one cluster."""

    cluster_id: int
    p: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64)
        if self.p.ndim != 1 or not np.isfinite(self.p).all():
            raise ValueError("pooled feature must be a finite 1-d vector")


def cluster_pools(params: AutoencoderParams, features, partition: ClusterPartition,
                  pooling: str = "mean") -> list[PooledFeature]:
    """Encode every member of each cluster and pool, in cluster-id order."""
    features = np.asarray(features, dtype=np.float64)
    out = []
    for j in range(partition.k):
        members = partition.members[j]
        if members.size == 0:
            raise ValueError(f"cluster {j} is empty")
        h = encode(params, features[members])
        p, _ = _pool_rows(h, pooling)
        out.append(PooledFeature(cluster_id=j, p=p))
    return out


@dataclass
class SummaryResult:
    """Selected keyframes with the method tag and the config that produced them."""

    method: str
    frame_indices: list[int]
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        self.frame_indices = [int(i) for i in self.frame_indices]
        if any(i < 0 for i in self.frame_indices):
            raise ValueError("frame indices must be non-negative")
        if len(set(self.frame_indices)) != len(self.frame_indices):
            raise ValueError("frame indices must be distinct")

    @property
    def k(self) -> int:
        return len(self.frame_indices)

    def as_dict(self) -> dict:
        return {"method": self.method, "k": self.k, "frames": list(self.frame_indices),
                "config": dict(self.config)}


def select_keyframes(params: AutoencoderParams, ds: SceneDataset, partition: ClusterPartition,
                     method: str = "scenesum", pooling: str = "mean",
                     config: dict | None = None) -> SummaryResult:
    """Per cluster, the frame whose encoding is nearest the pooled cluster vector.

    Pooling runs over the full cluster membership.  Ties go to the lowest
    frame index.  Frames are listed in cluster-id order.
    """
    features = np.asarray(ds.features, dtype=np.float64)
    frames = []
    for pf in cluster_pools(params, features, partition, pooling):
        members = partition.members[pf.cluster_id]
        h = encode(params, features[members])
        d = ((h - pf.p) ** 2).sum(axis=1)
        frames.append(int(members[int(np.argmin(d))]))
    return SummaryResult(method=method, frame_indices=frames, config=dict(config or {}))


def save_params(params: AutoencoderParams, path) -> None:
    """Serialize weights as float32: magic, version, layer dims, then per-layer
    weights and biases, encoder layers first."""
    layers = list(params.encoder) + list(params.decoder)
    buf = bytearray()
    buf += _MAGIC
    buf += struct.pack("<II", _CHECKPOINT_VERSION, len(layers))
    for w, _ in layers:
        buf += struct.pack("<II", w.shape[0], w.shape[1])
    for w, b in layers:
        buf += np.ascontiguousarray(w, dtype="<f4").tobytes()
        buf += np.ascontiguousarray(b, dtype="<f4").tobytes()
    Path(path).write_bytes(bytes(buf))


def load_params(path) -> AutoencoderParams:
    """Read a checkpoint written by save_params; validates the mirror structure."""
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise ValueError(f"not an autoencoder checkpoint: bad magic {data[:4]!r}")
    version, n_layers = struct.unpack_from("<II", data, 4)
    if version != _CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    if n_layers < 2 or n_layers % 2:
        raise ValueError(f"layer count must be even and >= 2, got {n_layers}")
    pos = 12
    dims = []
    for _ in range(n_layers):
        din, dout = struct.unpack_from("<II", data, pos)
        dims.append((din, dout))
        pos += 8

    half = n_layers // 2
    enc_dims, dec_dims = dims[:half], dims[half:]
    for i in range(half - 1):
        if enc_dims[i][1] != enc_dims[i + 1][0]:
            raise ValueError("encoder layer dimensions do not chain")
    for i, (din, dout) in enumerate(dec_dims):
        mirrored = enc_dims[half - 1 - i]
        if (din, dout) != (mirrored[1], mirrored[0]):
            raise ValueError("decoder does not mirror the encoder")

    def take(count):
        nonlocal pos
        end = pos + count * 4
        if end > len(data):
            raise ValueError("checkpoint truncated")
        arr = np.frombuffer(data, dtype="<f4", count=count, offset=pos).astype(np.float64)
        pos = end
        return arr

    layers = []
    for din, dout in dims:
        w = take(din * dout).reshape(din, dout)
        b = take(dout)
        layers.append((w, b))
    if pos != len(data):
        raise ValueError(f"checkpoint has {len(data) - pos} trailing bytes")

    input_dim = enc_dims[0][0]
    latent_dim = enc_dims[-1][1]
    hidden_dims = tuple(d for _, d in enc_dims[:-1])
    return AutoencoderParams(input_dim=input_dim, hidden_dims=hidden_dims, latent_dim=latent_dim,
                             encoder=layers[:half], decoder=layers[half:])
