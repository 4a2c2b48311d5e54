"""Trainable hyperedge convolution with exact gradients.

One layer is edge-to-node aggregation (mean over incident edge features,
concatenated with the node's cluster one-hot) followed by node-to-edge
summarization (a spread statistic over member node features, optional
bilinear lift, linear map, nonlinearity). Two stacked layers score
arbitrary query sets of nodes; the backward pass returns exact weight
gradients for both layers.
"""

from __future__ import annotations

import logging
import weakref
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hypergraph import Hypergraph

logger = logging.getLogger(__name__)

OMEGA_KINDS = ("mean", "var", "minmax")
AGG_KINDS = ("mean", "harmonic")
HARMONIC_EPS = 1e-6


@dataclass
class LayerParams:
    """One trainable layer: weight matrix plus its nonlinearity tag."""

    weight: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        if self.weight.ndim != 2 or self.weight.shape[0] < 1:
            raise ValueError("weight must be a 2-d matrix with out_dim >= 1")
        if not np.isfinite(self.weight).all():
            raise ValueError("weight contains NaN or Inf")
        if self.activation not in ("relu", "identity"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def out_dim(self) -> int:
        return self.weight.shape[0]


def init_layer(
    out_dim: int,
    omega_dim: int,
    rng: np.random.Generator,
    bilinear: bool = True,
    activation: str = "relu",
) -> LayerParams:
    """Uniform init in [-a, a] with a = sqrt(6 / (fan_in + fan_out))."""
    fan_in = omega_dim * omega_dim if bilinear else omega_dim
    a = np.sqrt(6.0 / (fan_in + out_dim))
    weight = rng.uniform(-a, a, size=(out_dim, fan_in))
    return LayerParams(weight, activation)


def _act(pre: np.ndarray, tag: str) -> np.ndarray:
    return np.maximum(pre, 0.0) if tag == "relu" else pre


def _act_grad(pre: np.ndarray, tag: str) -> np.ndarray:
    return (pre > 0.0).astype(np.float64) if tag == "relu" else np.ones_like(pre)


def omega(kind: str, vectors) -> np.ndarray:
    """Component-wise summary of a nonempty stack of equal-length vectors.

    mean: arithmetic mean. var: population variance (divide by count).
    minmax: max minus min.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] == 0:
        raise ValueError("omega of an empty vector set")
    if kind == "mean":
        return x.mean(axis=0)
    if kind == "var":
        return x.var(axis=0)
    if kind == "minmax":
        return x.max(axis=0) - x.min(axis=0)
    raise ValueError(f"unknown omega kind {kind!r}")


def bilinear_flat(v: np.ndarray) -> np.ndarray:
    """Row-major flattening of the outer product v v^T."""
    v = np.asarray(v, dtype=np.float64)
    return np.outer(v, v).reshape(-1)


# ---------------------------------------------------------------------------
# cached flat incidence arrays per hypergraph


class _GraphArrays:
    """CSR incidence (nodes x edges) plus degree scalings for one hypergraph."""

    def __init__(self, h: Hypergraph):
        n, m = h.num_nodes, h.num_edges
        indptr = np.zeros(n + 1, dtype=np.int64)
        for v in range(n):
            indptr[v + 1] = indptr[v] + len(h.node_incidence[v])
        indices = np.fromiter(
            (e for inc in h.node_incidence for e in inc),
            dtype=np.int64,
            count=int(indptr[-1]),
        )
        data = np.ones(len(indices), dtype=np.float64)
        self.incidence = sp.csr_matrix((data, indices, indptr), shape=(n, m))
        self.deg = np.diff(indptr).astype(np.float64)
        with np.errstate(divide="ignore"):
            inv = np.where(self.deg > 0, 1.0 / np.maximum(self.deg, 1.0), 0.0)
        self.inv_deg = inv
        self.num_isolated = int((self.deg == 0).sum())


_graph_cache: "weakref.WeakKeyDictionary[Hypergraph, _GraphArrays]" = (
    weakref.WeakKeyDictionary()
)


def _graph_arrays(h: Hypergraph) -> _GraphArrays:
    ga = _graph_cache.get(h)
    if ga is None:
        ga = _GraphArrays(h)
        _graph_cache[h] = ga
    return ga


# ---------------------------------------------------------------------------
# edge-to-node aggregation


def _e2n_forward(ga: _GraphArrays, edge_features: np.ndarray, node_x: np.ndarray, agg: str):
    if agg == "mean":
        agg_part = (ga.incidence @ edge_features) * ga.inv_deg[:, None]
        aux = None
    elif agg == "harmonic":
        recip = 1.0 / (edge_features + HARMONIC_EPS)
        s = ga.incidence @ recip
        agg_part = np.where(s != 0.0, ga.deg[:, None] / np.where(s != 0.0, s, 1.0), 0.0)
        aux = (s, recip)
    else:
        raise ValueError(f"unknown aggregation {agg!r}")
    return np.concatenate([agg_part, node_x], axis=1), aux


def _e2n_backward(
    ga: _GraphArrays,
    grad_agg_part: np.ndarray,
    edge_features: np.ndarray,
    agg: str,
    aux,
) -> np.ndarray:
    if agg == "mean":
        return ga.incidence.T @ (grad_agg_part * ga.inv_deg[:, None])
    s, recip = aux
    with np.errstate(divide="ignore", invalid="ignore"):
        gs = np.where(s != 0.0, grad_agg_part * ga.deg[:, None] / np.square(np.where(s != 0.0, s, 1.0)), 0.0)
    return (ga.incidence.T @ gs) * np.square(recip)


def e2n(
    h: Hypergraph,
    edge_features: np.ndarray,
    node_x: np.ndarray,
    agg: str = "mean",
) -> np.ndarray:
    """Per-node features: aggregated incident edge features, then the
    node's own tag vector appended.

    Isolated nodes get a zero aggregate (counted and logged, not fatal).
    """
    ga = _graph_arrays(h)
    if edge_features.shape[0] != h.num_edges:
        raise ValueError("edge feature row count does not match hypergraph")
    if node_x.shape[0] != h.num_nodes:
        raise ValueError("node tag row count does not match hypergraph")
    if ga.num_isolated:
        logger.debug("%d isolated nodes aggregate to zero", ga.num_isolated)
    out, _ = _e2n_forward(ga, np.asarray(edge_features, dtype=np.float64),
                          np.asarray(node_x, dtype=np.float64), agg)
    return out


# ---------------------------------------------------------------------------
# grouped variable-size set reduction


class _SetBatch:
    """Node-id sets grouped by size for vectorized Omega reduction.

    Sets are canonicalized to sorted unique ids, which also pins the
    lowest-index tie-break used by the minmax subgradient.
    """

    def __init__(self, sets: Sequence[Sequence[int]], canonical: bool = False):
        if canonical:
            self.sets = [tuple(s) for s in sets]
        else:
            self.sets = [tuple(sorted(set(s))) for s in sets]
        self.count = len(self.sets)
        groups: dict[int, list[int]] = {}
        for t, s in enumerate(self.sets):
            if not s:
                raise ValueError(f"empty node set at position {t}")
            groups.setdefault(len(s), []).append(t)
        self.groups = {}
        for size, positions in sorted(groups.items()):
            pos = np.asarray(positions, dtype=np.int64)
            ids = np.asarray([self.sets[t] for t in positions], dtype=np.int64)
            self.groups[size] = (pos, ids)

    def reduce(self, kind: str, feats: np.ndarray):
        """Omega over each set's feature rows; returns (out, cache)."""
        d = feats.shape[1]
        out = np.empty((self.count, d), dtype=np.float64)
        cache: dict[int, tuple] = {}
        for size, (pos, ids) in self.groups.items():
            x = feats[ids]  # (cnt, size, d)
            if kind == "mean":
                out[pos] = x.mean(axis=1)
                cache[size] = ()
            elif kind == "var":
                mu = x.mean(axis=1)
                out[pos] = np.square(x - mu[:, None, :]).mean(axis=1)
                cache[size] = (x, mu)
            elif kind == "minmax":
                amax = x.argmax(axis=1)
                amin = x.argmin(axis=1)
                hi = np.take_along_axis(x, amax[:, None, :], axis=1)[:, 0, :]
                lo = np.take_along_axis(x, amin[:, None, :], axis=1)[:, 0, :]
                out[pos] = hi - lo
                cache[size] = (amax, amin)
            else:
                raise ValueError(f"unknown omega kind {kind!r}")
        return out, cache

    def backward(self, kind: str, grad_out: np.ndarray, dfeats: np.ndarray, cache) -> None:
        """Scatter-accumulate d(reduce)/d(feats) into ``dfeats``."""
        d = grad_out.shape[1]
        for size, (pos, ids) in self.groups.items():
            g = grad_out[pos]  # (cnt, d)
            if kind == "mean":
                contrib = np.repeat(g[:, None, :] / size, size, axis=1)
                np.add.at(dfeats, ids.reshape(-1), contrib.reshape(-1, d))
            elif kind == "var":
                x, mu = cache[size]
                contrib = (2.0 / size) * (x - mu[:, None, :]) * g[:, None, :]
                np.add.at(dfeats, ids.reshape(-1), contrib.reshape(-1, d))
            elif kind == "minmax":
                amax, amin = cache[size]
                cols = np.broadcast_to(np.arange(d)[None, :], g.shape)
                rows_hi = np.take_along_axis(ids, amax, axis=1)
                rows_lo = np.take_along_axis(ids, amin, axis=1)
                np.add.at(dfeats, (rows_hi.reshape(-1), cols.reshape(-1)), g.reshape(-1))
                np.subtract.at(dfeats, (rows_lo.reshape(-1), cols.reshape(-1)), g.reshape(-1))


# ---------------------------------------------------------------------------
# linear map over (optionally bilinear-lifted) summary vectors


def _affine_forward(weight: np.ndarray, z: np.ndarray, bilinear: bool) -> np.ndarray:
    """weight @ flat(z z^T) per row without materializing the outer products."""
    if not bilinear:
        return z @ weight.T
    t, d = z.shape
    out_dim = weight.shape[0]
    if weight.shape[1] != d * d:
        raise ValueError(
            f"weight expects input dim {weight.shape[1]}, bilinear gives {d * d}"
        )
    pre = np.empty((t, out_dim), dtype=np.float64)
    for j in range(out_dim):
        mj = weight[j].reshape(d, d)
        pre[:, j] = np.einsum("ti,ti->t", z @ mj, z)
    return pre


def _affine_backward(
    weight: np.ndarray,
    z: np.ndarray,
    grad_pre: np.ndarray,
    bilinear: bool,
    need_dz: bool = True,
):
    if not bilinear:
        dw = grad_pre.T @ z
        dz = grad_pre @ weight if need_dz else None
        return dw, dz
    t, d = z.shape
    out_dim = weight.shape[0]
    dw = np.empty_like(weight)
    dz = np.zeros_like(z) if need_dz else None
    for j in range(out_dim):
        gj = grad_pre[:, j]
        dw[j] = (z.T @ (z * gj[:, None])).reshape(-1)
        if need_dz:
            mj = weight[j].reshape(d, d)
            dz += gj[:, None] * (z @ (mj + mj.T))
    return dw, dz


def n2e(
    params: LayerParams,
    kind: str,
    node_features: np.ndarray,
    target_sets: Sequence[Sequence[int]],
    bilinear: bool = True,
) -> np.ndarray:
    """Summarize each node set and map it through the trainable layer.

    Works identically for real hyperedge member sets and for arbitrary
    query sets.
    """
    node_features = np.asarray(node_features, dtype=np.float64)
    batch = _SetBatch(target_sets)
    z, _ = batch.reduce(kind, node_features)
    pre = _affine_forward(params.weight, z, bilinear)
    return _act(pre, params.activation)


# ---------------------------------------------------------------------------
# the two-layer edge-to-edge stack


@dataclass
class E2ECache:
    """Intermediates of one forward pass, consumed by e2e_backward."""

    kind: str
    bilinear: bool
    agg: str
    layers: tuple[LayerParams, ...]
    ga: _GraphArrays
    needed_edges: np.ndarray
    batch1: _SetBatch
    z1: np.ndarray
    pre1: np.ndarray
    ef1: np.ndarray
    e2n2_aux: object
    batch2: _SetBatch
    red2_cache: dict
    z2: np.ndarray
    pre2: np.ndarray


def _needed_edges_for(h: Hypergraph, targets: Sequence[Sequence[int]]) -> np.ndarray:
    seen: set[int] = set()
    for s in targets:
        for v in s:
            seen.update(h.node_incidence[v])
    return np.asarray(sorted(seen), dtype=np.int64)


def e2e_forward(
    layers: Sequence[LayerParams],
    kind: str,
    h: Hypergraph,
    edge_init: np.ndarray,
    node_x: np.ndarray,
    targets: Sequence[Sequence[int]],
    bilinear: bool = True,
    agg: str = "mean",
) -> tuple[np.ndarray, E2ECache]:
    """Run the stacked convolution and score the target node sets.

    The first layer summarizes real hyperedges; the second summarizes the
    targets, which may be real edges or arbitrary candidate sets. Only
    edges incident to target nodes are materialized at the first layer
    since nothing else can influence the output.
    """
    if len(layers) != 2:
        raise ValueError("the stack is two layers")
    if kind not in OMEGA_KINDS:
        raise ValueError(f"unknown omega kind {kind!r}")
    edge_init = np.asarray(edge_init, dtype=np.float64)
    node_x = np.asarray(node_x, dtype=np.float64)
    ga = _graph_arrays(h)
    if edge_init.shape[0] != h.num_edges or node_x.shape[0] != h.num_nodes:
        raise ValueError("feature row counts do not match hypergraph")
    layer1, layer2 = layers[0], layers[1]

    nf1, _ = _e2n_forward(ga, edge_init, node_x, agg)

    needed = _needed_edges_for(h, targets)
    batch1 = _SetBatch([h.edge_members[int(e)] for e in needed], canonical=True)
    z1, _ = batch1.reduce(kind, nf1)
    pre1 = _affine_forward(layer1.weight, z1, bilinear)
    ef1 = np.zeros((h.num_edges, layer1.out_dim), dtype=np.float64)
    ef1[needed] = _act(pre1, layer1.activation)

    nf2, aux2 = _e2n_forward(ga, ef1, node_x, agg)

    batch2 = _SetBatch(targets)
    z2, red2_cache = batch2.reduce(kind, nf2)
    pre2 = _affine_forward(layer2.weight, z2, bilinear)
    out = _act(pre2, layer2.activation)

    cache = E2ECache(
        kind=kind,
        bilinear=bilinear,
        agg=agg,
        layers=tuple(layers),
        ga=ga,
        needed_edges=needed,
        batch1=batch1,
        z1=z1,
        pre1=pre1,
        ef1=ef1,
        e2n2_aux=aux2,
        batch2=batch2,
        red2_cache=red2_cache,
        z2=z2,
        pre2=pre2,
    )
    return out, cache


def e2e_backward(cache: E2ECache, upstream: np.ndarray) -> dict[str, np.ndarray]:
    """Exact gradients of both layer weights for a cached forward pass."""
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != cache.pre2.shape:
        raise ValueError(
            f"upstream gradient shape {upstream.shape} does not match "
            f"forward output {cache.pre2.shape} (stale cache?)"
        )
    layer1, layer2 = cache.layers

    g2 = upstream * _act_grad(cache.pre2, layer2.activation)
    dw2, dz2 = _affine_backward(layer2.weight, cache.z2, g2, cache.bilinear)

    d2 = cache.ga.incidence.shape[0]
    dnf2 = np.zeros((d2, cache.z2.shape[1]), dtype=np.float64)
    cache.batch2.backward(cache.kind, dz2, dnf2, cache.red2_cache)

    out1 = layer1.out_dim
    def1 = _e2n_backward(
        cache.ga, dnf2[:, :out1], cache.ef1, cache.agg, cache.e2n2_aux
    )
    g1 = def1[cache.needed_edges] * _act_grad(cache.pre1, layer1.activation)
    dw1, _ = _affine_backward(layer1.weight, cache.z1, g1, cache.bilinear, need_dz=False)
    return {"W1": dw1, "W2": dw2}
