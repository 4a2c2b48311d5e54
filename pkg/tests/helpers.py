"""Independent reference implementations and random-instance generators.

Everything here is deliberately naive (python loops, exhaustive
enumeration) so the fast library code is checked against a second
opinion, not against itself.
"""

import itertools
import math

import numpy as np

from hyperconv.hypergraph import Hypergraph, build_hypergraph


def random_hypergraph(
    rng: np.random.Generator,
    max_nodes: int = 12,
    max_edges: int = 8,
    max_size: int | None = None,
) -> Hypergraph:
    n = int(rng.integers(2, max_nodes + 1))
    m = int(rng.integers(1, max_edges + 1))
    cap = min(n, max_size if max_size is not None else 5)
    edges = []
    for _ in range(m):
        size = int(rng.integers(1, cap + 1))
        edges.append(sorted(rng.choice(n, size=size, replace=False).tolist()))
    return build_hypergraph(edges, num_nodes=n)


def recount_cut(h: Hypergraph, labels) -> int:
    labels = list(labels)
    total = 0
    for members in h.edge_members:
        seen = []
        for v in members:
            if labels[v] not in seen:
                seen.append(labels[v])
        total += len(seen) - 1
    return total


def balance_cap(n: int, k: int, eps: float = 0.05) -> int:
    return int(math.ceil((1.0 + eps) * n / k - 1e-9))


def optimal_balanced_cut(h: Hypergraph, k: int, eps: float = 0.05) -> int:
    """Exhaustive minimum cut over every balanced labeling. Exponential."""
    n = h.num_nodes
    cap = balance_cap(n, k, eps)
    best = None
    for labels in itertools.product(range(k), repeat=n):
        counts = [0] * k
        for c in labels:
            counts[c] += 1
        if max(counts) > cap:
            continue
        value = recount_cut(h, labels)
        if best is None or value < best:
            best = value
    assert best is not None, "no balanced labeling exists"
    return best


def naive_omega(kind: str, rows: list[list[float]]) -> list[float]:
    d = len(rows[0])
    out = []
    for j in range(d):
        col = [r[j] for r in rows]
        if kind == "mean":
            out.append(sum(col) / len(col))
        elif kind == "var":
            mu = sum(col) / len(col)
            out.append(sum((x - mu) ** 2 for x in col) / len(col))
        elif kind == "minmax":
            out.append(max(col) - min(col))
        else:
            raise ValueError(kind)
    return out


def naive_e2n(h: Hypergraph, edge_feats, node_x) -> np.ndarray:
    """Mean over incident edges, then the node tag, all by explicit loops."""
    edge_feats = np.asarray(edge_feats, dtype=np.float64)
    node_x = np.asarray(node_x, dtype=np.float64)
    d_e = edge_feats.shape[1]
    rows = []
    for v in range(h.num_nodes):
        inc = h.node_incidence[v]
        agg = [0.0] * d_e
        for e in inc:
            for j in range(d_e):
                agg[j] += edge_feats[e, j]
        if inc:
            agg = [a / len(inc) for a in agg]
        rows.append(agg + node_x[v].tolist())
    return np.asarray(rows, dtype=np.float64)


def naive_n2e(weight, activation, kind, node_feats, sets, bilinear) -> np.ndarray:
    """Scalar-loop reference for the trainable set-summary layer."""
    weight = np.asarray(weight, dtype=np.float64)
    node_feats = np.asarray(node_feats, dtype=np.float64)
    out = []
    for s in sets:
        uniq = sorted(set(int(v) for v in s))
        z = naive_omega(kind, [node_feats[v].tolist() for v in uniq])
        if bilinear:
            z = [zi * zj for zi in z for zj in z]
        row = []
        for i in range(weight.shape[0]):
            acc = 0.0
            for j in range(weight.shape[1]):
                acc += weight[i, j] * z[j]
            row.append(max(acc, 0.0) if activation == "relu" else acc)
        out.append(row)
    return np.asarray(out, dtype=np.float64)


def numeric_grad(fn, arr: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function of one array."""
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        keep = flat[i]
        flat[i] = keep + step
        hi = fn()
        flat[i] = keep - step
        lo = fn()
        flat[i] = keep
        gflat[i] = (hi - lo) / (2.0 * step)
    return grad


def gradcheck_max_error(
    rng: np.random.Generator, trials: int, kinds, bilinears, step: float = 1e-6
) -> float:
    """Worst analytic-vs-central-difference error over random small models.

    Error is relative with an absolute floor at magnitude 1, so entries
    whose true gradient is numerically zero are judged by absolute
    difference instead of a 0/0 ratio.
    """
    from hyperconv.convolution import e2e_backward, e2e_forward, init_layer

    worst = 0.0
    for _ in range(trials):
        for kind in kinds:
            for bilinear in bilinears:
                h = random_hypergraph(rng, max_nodes=7, max_edges=5, max_size=4)
                k = 3
                d_e = int(rng.integers(2, 4))
                edge_init = rng.normal(size=(h.num_edges, d_e))
                node_x = rng.normal(size=(h.num_nodes, k))
                layer1 = init_layer(int(rng.integers(2, 4)), d_e + k, rng, bilinear, "relu")
                layer2 = init_layer(
                    int(rng.integers(2, 4)), layer1.out_dim + k, rng, bilinear, "identity"
                )
                layers = (layer1, layer2)
                targets = [
                    sorted(
                        rng.choice(
                            h.num_nodes,
                            size=int(rng.integers(1, min(4, h.num_nodes) + 1)),
                            replace=False,
                        ).tolist()
                    )
                    for _ in range(int(rng.integers(1, 4)))
                ]
                probe = rng.normal(size=(len(targets), layer2.out_dim))
                _, cache = e2e_forward(
                    layers, kind, h, edge_init, node_x, targets, bilinear=bilinear
                )
                analytic = e2e_backward(cache, probe)

                def loss():
                    out, _ = e2e_forward(
                        layers, kind, h, edge_init, node_x, targets, bilinear=bilinear
                    )
                    return float((out * probe).sum())

                for name, w in (("W1", layer1.weight), ("W2", layer2.weight)):
                    numeric = numeric_grad(loss, w, step)
                    scale = np.maximum(
                        1.0, np.maximum(np.abs(analytic[name]), np.abs(numeric))
                    )
                    worst = max(worst, float((np.abs(analytic[name] - numeric) / scale).max()))
    return worst


def planted_communities(
    rng: np.random.Generator,
    num_communities: int,
    nodes_per: int,
    num_edges: int,
    size_lo: int,
    size_hi: int,
) -> tuple[list[tuple[int, ...]], list[int]]:
    """Hyperedges drawn entirely within one community each.

    Returns the member lists plus the community id of each edge.
    """
    edges = []
    homes = []
    for _ in range(num_edges):
        c = int(rng.integers(num_communities))
        pool = np.arange(c * nodes_per, (c + 1) * nodes_per)
        size = int(rng.integers(size_lo, size_hi + 1))
        edges.append(tuple(sorted(rng.choice(pool, size=size, replace=False).tolist())))
        homes.append(c)
    return edges, homes


def planted_knowledge(
    rng: np.random.Generator,
    num_communities: int = 4,
    nodes_per: int = 15,
    num_edges: int = 200,
    size: int = 3,
):
    """Knowledge hypergraph whose relation is its edge's home community.

    The mapping relation = community is realizable from cluster-derived
    features alone, so a working pipeline should recover it almost
    perfectly.
    """
    from hyperconv.hypergraph import KnowledgeHypergraph, build_hypergraph

    edges, homes = planted_communities(
        rng, num_communities, nodes_per, num_edges, size, size
    )
    n = num_communities * nodes_per
    base = build_hypergraph(edges, num_nodes=n)
    return KnowledgeHypergraph(
        base,
        homes,
        tuple(f"r{c}" for c in range(num_communities)),
        tuple(f"e{v}" for v in range(n)),
    )
