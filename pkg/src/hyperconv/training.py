"""Training pipelines for the three downstream tasks.

Knowledge completion and hyperedge classification share one loop: batches
of target edges are scored against their relation (or class) label with
cross entropy, with the target's own type slot masked out of the initial
features for the duration of the batch. Hyperedge prediction trains in two
stages, a cluster-id pretext task followed by a frozen-representation
binary head.

Message-passing structure, and the partition that seeds the features,
come from training edges only. Validation and test edges enter solely as
query sets.
"""

from __future__ import annotations

import logging
import math
import time
import weakref
from dataclasses import dataclass, field

import numpy as np

from .convolution import (
    AGG_KINDS,
    OMEGA_KINDS,
    LayerParams,
    e2e_backward,
    e2e_forward,
    init_layer,
)
from .data import Splits
from .features import edge_cluster_onehot, knowledge_edge_init, node_onehot
from .hypergraph import Hypergraph, KnowledgeHypergraph, build_hypergraph
from .metrics import accuracy, auc, hit_at, mrr, rank_of_true
from .partition import ClusterAssignment, cut, partition

logger = logging.getLogger(__name__)

TASKS = ("completion", "prediction", "classification")

_OMEGA_DEFAULT = {"completion": "mean", "prediction": "minmax", "classification": "mean"}


@dataclass(frozen=True)
class TrainConfig:
    """Everything a training run needs besides the data itself.

    ``omega=None`` picks the per-task default: mean for completion and
    classification, minmax for prediction.
    """

    task: str
    clusters: int = 16
    omega: str | None = None
    bilinear: bool = True
    hidden_dim: int = 64
    epochs: int = 300
    patience: int = 20
    learning_rate: float = 1e-3
    batch_size: int = 128
    seed: int = 0
    split_ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)
    agg: str = "mean"
    balance_epsilon: float = 0.05

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if self.clusters < 1:
            raise ValueError("clusters must be >= 1")
        if self.omega is not None and self.omega not in OMEGA_KINDS:
            raise ValueError(f"unknown omega kind {self.omega!r}")
        if self.agg not in AGG_KINDS:
            raise ValueError(f"unknown aggregation {self.agg!r}")
        if len(self.split_ratios) != 3 or any(r < 0 for r in self.split_ratios):
            raise ValueError("split_ratios must be three nonnegative fractions")
        if abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ValueError("split_ratios must sum to 1")
        if self.epochs < 1 or self.patience < 1 or self.batch_size < 1:
            raise ValueError("epochs, patience and batch_size start at 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be >= 1")

    @property
    def omega_kind(self) -> str:
        return self.omega if self.omega is not None else _OMEGA_DEFAULT[self.task]

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "clusters": self.clusters,
            "omega": self.omega_kind,
            "bilinear": self.bilinear,
            "hidden_dim": self.hidden_dim,
            "epochs": self.epochs,
            "patience": self.patience,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "seed": self.seed,
            "split_ratios": list(self.split_ratios),
            "agg": self.agg,
            "balance_epsilon": self.balance_epsilon,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["split_ratios"] = tuple(d["split_ratios"])
        return cls(**d)


@dataclass
class ModelParams:
    """Trainable weights: the two layers plus an optional linear head."""

    layer1: LayerParams
    layer2: LayerParams
    head_weight: np.ndarray | None = None
    head_bias: np.ndarray | None = None

    def trainable(self) -> dict[str, np.ndarray]:
        out = {"W1": self.layer1.weight, "W2": self.layer2.weight}
        if self.head_weight is not None:
            out["Wh"] = self.head_weight
            out["bh"] = self.head_bias
        return out

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.trainable().values())


@dataclass
class TrainedModel:
    """A trained run's full inference state, the unit the checkpoint stores.

    ``structure`` holds training edges only; query sets are scored against
    it without ever joining it.
    """

    task: str
    config: TrainConfig
    structure: Hypergraph
    clusters: ClusterAssignment
    params: ModelParams
    edge_init: np.ndarray
    node_x: np.ndarray
    relation_names: tuple[str, ...] | None = None
    entity_names: tuple[str, ...] | None = None

    @property
    def layers(self) -> tuple[LayerParams, LayerParams]:
        return (self.params.layer1, self.params.layer2)


@dataclass
class RunReport:
    """Machine-readable summary of one training run."""

    task: str
    seed: int
    config: dict
    partition: dict
    history: list[dict] = field(default_factory=list)
    test_metrics: dict[str, float] = field(default_factory=dict)
    best_epoch: int = 0
    epochs_run: int = 0
    wall_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "seed": self.seed,
            "config": self.config,
            "partition": self.partition,
            "history": self.history,
            "test_metrics": self.test_metrics,
            "best_epoch": self.best_epoch,
            "epochs_run": self.epochs_run,
            "wall_seconds": self.wall_seconds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(**d)


class Adam:
    """Adaptive-moment gradient descent over a named parameter dict.

    Arrays are updated in place so callers keep their references.
    """

    def __init__(
        self,
        params: dict[str, np.ndarray],
        lr: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for name, g in grads.items():
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * np.square(g)
            self.params[name] -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def cross_entropy(logits: np.ndarray, true_class: int) -> tuple[float, np.ndarray]:
    """Loss and gradient of -log softmax(logits)[true_class].

    Max subtraction keeps the exponentials in range.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1:
        raise ValueError("logits must be a vector; see _batch_cross_entropy")
    if not 0 <= true_class < len(logits):
        raise ValueError(f"true_class {true_class} out of range")
    z = logits - logits.max()
    lse = np.log(np.exp(z).sum())
    p = np.exp(z - lse)
    loss = float(lse - z[true_class])
    grad = p.copy()
    grad[true_class] -= 1.0
    return loss, grad


def _batch_cross_entropy(
    logits: np.ndarray, labels: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross entropy over rows; gradient already divided by the batch."""
    b = logits.shape[0]
    z = logits - logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    losses = lse - z[np.arange(b), labels]
    grad = np.exp(z - lse[:, None])
    grad[np.arange(b), labels] -= 1.0
    return float(losses.mean()), grad / b


# ---------------------------------------------------------------------------
# negative sampling


@dataclass(frozen=True)
class NegativeSample:
    """A corrupted copy of a real hyperedge, same arity, novel member set."""

    members: tuple[int, ...]
    source_edge: int


class SamplingError(RuntimeError):
    """No novel corruption found within the attempt budget."""


_member_set_cache: "weakref.WeakKeyDictionary[Hypergraph, frozenset]" = (
    weakref.WeakKeyDictionary()
)


def _member_sets(h: Hypergraph) -> frozenset:
    sets = _member_set_cache.get(h)
    if sets is None:
        sets = frozenset(frozenset(m) for m in h.edge_members)
        _member_set_cache[h] = sets
    return sets


def sample_negative(
    h: Hypergraph, edge: int, rng: np.random.Generator
) -> NegativeSample:
    """Corrupt one hyperedge: keep ceil(|e|/2) members, fill from outside.

    The kept members and the outside fills are both drawn uniformly
    without replacement. A candidate colliding with any real edge's
    member set is rejected, up to 100 attempts.

    Raises:
        ValueError: no nodes exist outside the edge.
        SamplingError: 100 attempts produced only collisions.
    """
    members = h.edge_members[edge]
    size = len(members)
    if h.num_nodes <= size:
        raise ValueError(f"edge {edge} spans every node; nothing to swap in")
    keep = math.ceil(size / 2)
    outside = np.setdiff1d(np.arange(h.num_nodes), members)
    if outside.size < size - keep:
        raise ValueError(
            f"edge {edge}: only {outside.size} nodes outside, need {size - keep}"
        )
    existing = _member_sets(h)
    members_arr = np.asarray(members)
    for _ in range(100):
        kept = rng.choice(members_arr, size=keep, replace=False)
        fill = rng.choice(outside, size=size - keep, replace=False)
        cand = tuple(sorted(int(v) for v in np.concatenate([kept, fill])))
        if frozenset(cand) not in existing:
            return NegativeSample(cand, edge)
    raise SamplingError(f"edge {edge}: no novel corruption in 100 attempts")


def _sample_negatives(
    h: Hypergraph, edges, rng: np.random.Generator
) -> list[NegativeSample]:
    """One negative per edge; edges that cannot be corrupted are skipped."""
    out = []
    for e in edges:
        try:
            out.append(sample_negative(h, int(e), rng))
        except SamplingError as exc:
            logger.warning("skipping negative: %s", exc)
    if not out:
        raise ValueError("no negatives could be sampled")
    return out


def _draw_run_negatives(
    h: Hypergraph, splits: Splits, rng: np.random.Generator
) -> dict[str, list[NegativeSample]]:
    """One negative per positive per split, in a fixed draw order.

    The order matters: evaluation replays this from the run seed to
    reproduce the same test negatives a training run scored.
    Collisions are checked against every known edge, not just training
    ones.
    """
    return {
        part: _sample_negatives(h, ids, rng)
        for part, ids in (
            ("train", splits.train),
            ("valid", splits.valid),
            ("test", splits.test),
        )
    }


# ---------------------------------------------------------------------------
# shared relational loop (completion and classification)


def _pooled_labels(member_sets, clusters: ClusterAssignment) -> np.ndarray:
    """Majority cluster per set, lowest id on ties."""
    labels = clusters.cluster_of
    out = np.empty(len(member_sets), dtype=np.int64)
    for i, s in enumerate(member_sets):
        out[i] = int(np.bincount(labels[list(s)], minlength=clusters.k).argmax())
    return out


def _partition_stats(h: Hypergraph, c: ClusterAssignment) -> dict:
    return {"k": c.k, "cut": cut(h, c), "balanced": c.is_balanced()}


def _score_sets(model: TrainedModel, member_sets) -> np.ndarray:
    out, _ = e2e_forward(
        model.layers,
        model.config.omega_kind,
        model.structure,
        model.edge_init,
        model.node_x,
        member_sets,
        bilinear=model.config.bilinear,
        agg=model.config.agg,
    )
    return out


def _relational_ranks(model: TrainedModel, member_sets, labels) -> list[int]:
    scores = _score_sets(model, member_sets)
    return [rank_of_true(scores[i], int(labels[i])) for i in range(len(labels))]


def _train_relational(
    kh: KnowledgeHypergraph, cfg: TrainConfig, splits: Splits | None, valid_metric: str
) -> tuple[TrainedModel, RunReport]:
    start = time.perf_counter()
    num_rel = kh.num_relations
    if num_rel < 2:
        raise ValueError("need at least 2 relation types")
    if splits is None:
        splits = Splits.from_ratios(kh.base.num_edges, cfg.split_ratios, cfg.seed)
    splits.check(kh.base.num_edges)

    rng = np.random.default_rng(cfg.seed)
    train_ids = splits.train
    structure = build_hypergraph(
        (kh.base.edge_members[int(e)] for e in train_ids),
        num_nodes=kh.base.num_nodes,
    )
    sub = KnowledgeHypergraph(
        structure,
        [kh.edge_type[int(e)] for e in train_ids],
        kh.relation_names,
        kh.entity_names,
    )
    clusters = partition(
        structure, cfg.clusters, seed=cfg.seed, balance_epsilon=cfg.balance_epsilon
    )
    node_x = node_onehot(clusters)
    edge_init = knowledge_edge_init(sub, clusters)
    kind = cfg.omega_kind

    layer1 = init_layer(
        cfg.hidden_dim, edge_init.shape[1] + cfg.clusters, rng, cfg.bilinear, "relu"
    )
    layer2 = init_layer(
        num_rel, cfg.hidden_dim + cfg.clusters, rng, cfg.bilinear, "identity"
    )
    params = ModelParams(layer1, layer2)
    model = TrainedModel(
        task=cfg.task,
        config=cfg,
        structure=structure,
        clusters=clusters,
        params=params,
        edge_init=edge_init,
        node_x=node_x,
        relation_names=kh.relation_names,
        entity_names=kh.entity_names,
    )
    adam = Adam(params.trainable(), lr=cfg.learning_rate)

    labels = np.asarray([kh.edge_type[int(e)] for e in train_ids], dtype=np.int64)
    valid_sets = [kh.base.edge_members[int(e)] for e in splits.valid]
    valid_labels = np.asarray(
        [kh.edge_type[int(e)] for e in splits.valid], dtype=np.int64
    )
    t = len(train_ids)

    best_value = -np.inf
    best_epoch = 0
    best_weights = None
    stale = 0
    history: list[dict] = []
    epochs_run = 0

    for epoch in range(1, cfg.epochs + 1):
        epochs_run = epoch
        order = rng.permutation(t)
        loss_sum = 0.0
        for lo in range(0, t, cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            masked = edge_init.copy()
            masked[batch, :num_rel] = 0.0
            targets = [structure.edge_members[int(b)] for b in batch]
            out, cache = e2e_forward(
                model.layers, kind, structure, masked, node_x,
                targets, bilinear=cfg.bilinear, agg=cfg.agg,
            )
            loss, dlogits = _batch_cross_entropy(out, labels[batch])
            adam.step(e2e_backward(cache, dlogits))
            loss_sum += loss * len(batch)
        if not params.all_finite():
            raise FloatingPointError(f"non-finite weights after epoch {epoch}")

        ranks = _relational_ranks(model, valid_sets, valid_labels)
        value = mrr(ranks) if valid_metric == "mrr" else hit_at(ranks, 1)
        history.append(
            {"epoch": epoch, "train_loss": loss_sum / t, "valid_metric": value}
        )
        if value > best_value:
            best_value = value
            best_epoch = epoch
            best_weights = (layer1.weight.copy(), layer2.weight.copy())
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    if best_weights is not None:
        layer1.weight[...] = best_weights[0]
        layer2.weight[...] = best_weights[1]

    test_sets = [kh.base.edge_members[int(e)] for e in splits.test]
    test_labels = np.asarray(
        [kh.edge_type[int(e)] for e in splits.test], dtype=np.int64
    )
    ranks = _relational_ranks(model, test_sets, test_labels)
    if cfg.task == "classification":
        scores = _score_sets(model, test_sets)
        test_metrics = {"accuracy": accuracy(scores.argmax(axis=1), test_labels)}
    else:
        test_metrics = {
            "mrr": mrr(ranks),
            "hit1": hit_at(ranks, 1),
            "hit3": hit_at(ranks, 3),
        }

    report = RunReport(
        task=cfg.task,
        seed=cfg.seed,
        config=cfg.to_dict(),
        partition=_partition_stats(structure, clusters),
        history=history,
        test_metrics=test_metrics,
        best_epoch=best_epoch,
        epochs_run=epochs_run,
        wall_seconds=time.perf_counter() - start,
    )
    return model, report


def train_completion(
    kh: KnowledgeHypergraph, cfg: TrainConfig, splits: Splits | None = None
) -> tuple[TrainedModel, RunReport]:
    """Learn to name the relation of an entity tuple; early-stops on
    validation MRR, reports test MRR and Hit@1/3."""
    if cfg.task != "completion":
        raise ValueError(f"config is for task {cfg.task!r}")
    return _train_relational(kh, cfg, splits, valid_metric="mrr")


def train_classification(
    kh: KnowledgeHypergraph, cfg: TrainConfig, splits: Splits | None = None
) -> tuple[TrainedModel, RunReport]:
    """Same machinery as completion with class labels; reports accuracy."""
    if cfg.task != "classification":
        raise ValueError(f"config is for task {cfg.task!r}")
    return _train_relational(kh, cfg, splits, valid_metric="hit1")


# ---------------------------------------------------------------------------
# hyperedge prediction (pretext + frozen binary head)


def _score_sets_pretext(model: TrainedModel, member_sets) -> np.ndarray:
    reps = _score_sets(model, member_sets)
    return reps @ model.params.head_weight.T + model.params.head_bias


def _pretext_eval(model, sets, labels):
    scores = _score_sets_pretext(model, sets)
    return accuracy(scores.argmax(axis=1), labels)


def _binary_scores(model: TrainedModel, reps: np.ndarray) -> np.ndarray:
    """Monotone edge-existence score: logit margin of the positive class."""
    z = reps @ model.params.head_weight.T + model.params.head_bias
    return z[:, 1] - z[:, 0]


def train_prediction(
    h: Hypergraph,
    cfg: TrainConfig,
    rng: np.random.Generator | None = None,
    splits: Splits | None = None,
) -> tuple[TrainedModel, RunReport]:
    """Two-stage hyperedge prediction.

    Stage 1 trains both layers on a pretext task: classify each candidate
    set into k+1 classes, the pooled cluster id for real edges and a
    dedicated fake class for corrupted ones. Stage 2 freezes the layers
    and fits a binary linear head on the 64-d set representations.
    Negatives are drawn once per run, one per positive, per split.
    """
    if cfg.task != "prediction":
        raise ValueError(f"config is for task {cfg.task!r}")
    start = time.perf_counter()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if splits is None:
        splits = Splits.from_ratios(h.num_edges, cfg.split_ratios, cfg.seed)
    splits.check(h.num_edges)
    k = cfg.clusters
    kind = cfg.omega_kind

    structure = build_hypergraph(
        (h.edge_members[int(e)] for e in splits.train), num_nodes=h.num_nodes
    )
    clusters = partition(
        structure, k, seed=cfg.seed, balance_epsilon=cfg.balance_epsilon
    )
    node_x = node_onehot(clusters)
    edge_init = edge_cluster_onehot(structure, clusters)

    neg = _draw_run_negatives(h, splits, rng)

    layer1 = init_layer(cfg.hidden_dim, edge_init.shape[1] + k, rng, cfg.bilinear, "relu")
    layer2 = init_layer(cfg.hidden_dim, cfg.hidden_dim + k, rng, cfg.bilinear, "relu")
    bound = np.sqrt(6.0 / (cfg.hidden_dim + k + 1))
    head_w = rng.uniform(-bound, bound, size=(k + 1, cfg.hidden_dim))
    head_b = np.zeros(k + 1)
    params = ModelParams(layer1, layer2, head_w, head_b)
    model = TrainedModel(
        task=cfg.task,
        config=cfg,
        structure=structure,
        clusters=clusters,
        params=params,
        edge_init=edge_init,
        node_x=node_x,
    )

    pos_sets = list(structure.edge_members)
    pos_labels = _pooled_labels(pos_sets, clusters)
    train_sets = pos_sets + [s.members for s in neg["train"]]
    train_labels = np.concatenate(
        [pos_labels, np.full(len(neg["train"]), k, dtype=np.int64)]
    )
    valid_pos = [h.edge_members[int(e)] for e in splits.valid]
    valid_sets = valid_pos + [s.members for s in neg["valid"]]
    valid_labels = np.concatenate(
        [_pooled_labels(valid_pos, clusters), np.full(len(neg["valid"]), k, dtype=np.int64)]
    )

    adam = Adam(params.trainable(), lr=cfg.learning_rate)
    t = len(train_sets)
    best_value = -np.inf
    best_epoch = 0
    best_weights = None
    stale = 0
    history: list[dict] = []
    stage1_epochs = 0

    for epoch in range(1, cfg.epochs + 1):
        stage1_epochs = epoch
        order = rng.permutation(t)
        loss_sum = 0.0
        for lo in range(0, t, cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            targets = [train_sets[int(b)] for b in batch]
            reps, cache = e2e_forward(
                model.layers, kind, structure, edge_init, node_x,
                targets, bilinear=cfg.bilinear, agg=cfg.agg,
            )
            logits = reps @ head_w.T + head_b
            loss, dlogits = _batch_cross_entropy(logits, train_labels[batch])
            grads = e2e_backward(cache, dlogits @ head_w)
            grads["Wh"] = dlogits.T @ reps
            grads["bh"] = dlogits.sum(axis=0)
            adam.step(grads)
            loss_sum += loss * len(batch)
        if not params.all_finite():
            raise FloatingPointError(f"non-finite weights after epoch {epoch}")

        value = _pretext_eval(model, valid_sets, valid_labels)
        history.append(
            {"epoch": epoch, "train_loss": loss_sum / t, "valid_metric": value}
        )
        if value > best_value:
            best_value = value
            best_epoch = epoch
            best_weights = tuple(
                w.copy() for w in (layer1.weight, layer2.weight, head_w, head_b)
            )
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    if best_weights is not None:
        layer1.weight[...] = best_weights[0]
        layer2.weight[...] = best_weights[1]
        head_w[...] = best_weights[2]
        head_b[...] = best_weights[3]

    # stage 2: frozen representations, fresh binary head
    frozen1 = layer1.weight.copy()
    frozen2 = layer2.weight.copy()

    def reps_of(sets):
        return _score_sets(model, sets)

    train_reps = reps_of(train_sets)
    bin_labels = (train_labels != k).astype(np.int64)
    valid_reps = reps_of(valid_sets)
    valid_bin = (valid_labels != k).astype(np.int64)

    bound = np.sqrt(6.0 / (cfg.hidden_dim + 2))
    head_w2 = rng.uniform(-bound, bound, size=(2, cfg.hidden_dim))
    head_b2 = np.zeros(2)
    params.head_weight = head_w2
    params.head_bias = head_b2
    adam2 = Adam({"Wh": head_w2, "bh": head_b2}, lr=cfg.learning_rate)

    best_auc = -np.inf
    best_head = None
    best_epoch2 = 0
    stale = 0
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(len(train_reps))
        loss_sum = 0.0
        for lo in range(0, len(train_reps), cfg.batch_size):
            batch = order[lo : lo + cfg.batch_size]
            logits = train_reps[batch] @ head_w2.T + head_b2
            loss, dlogits = _batch_cross_entropy(logits, bin_labels[batch])
            adam2.step({"Wh": dlogits.T @ train_reps[batch], "bh": dlogits.sum(axis=0)})
            loss_sum += loss * len(batch)
        scores = _binary_scores(model, valid_reps)
        value = auc(scores[valid_bin == 1], scores[valid_bin == 0])
        history.append(
            {
                "epoch": stage1_epochs + epoch,
                "train_loss": loss_sum / len(train_reps),
                "valid_metric": value,
            }
        )
        if value > best_auc:
            best_auc = value
            best_epoch2 = epoch
            best_head = (head_w2.copy(), head_b2.copy())
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    if best_head is not None:
        head_w2[...] = best_head[0]
        head_b2[...] = best_head[1]
    if not (np.array_equal(frozen1, layer1.weight) and np.array_equal(frozen2, layer2.weight)):
        raise AssertionError("stage 2 must not touch the convolution weights")

    test_pos = [h.edge_members[int(e)] for e in splits.test]
    test_sets = test_pos + [s.members for s in neg["test"]]
    test_reps = reps_of(test_sets)
    scores = _binary_scores(model, test_reps)
    npos = len(test_pos)
    test_metrics = {"auc": auc(scores[:npos], scores[npos:])}

    report = RunReport(
        task=cfg.task,
        seed=cfg.seed,
        config=cfg.to_dict(),
        partition=_partition_stats(structure, clusters),
        history=history,
        test_metrics=test_metrics,
        best_epoch=best_epoch,
        epochs_run=stage1_epochs + best_epoch2,
        wall_seconds=time.perf_counter() - start,
    )
    return model, report


# ---------------------------------------------------------------------------
# inference and re-evaluation


def evaluate(model: TrainedModel, data, splits: Splits) -> dict[str, float]:
    """Recompute a trained model's test metrics against a dataset.

    For prediction models the test negatives are regenerated from the
    run seed with the training draw order, so the result matches the
    original report exactly.
    """
    if model.task in ("completion", "classification"):
        kh: KnowledgeHypergraph = data
        if kh.base.num_nodes != model.structure.num_nodes:
            raise ValueError(
                f"dataset has {kh.base.num_nodes} entities, model expects "
                f"{model.structure.num_nodes}"
            )
        if model.relation_names and kh.num_relations != len(model.relation_names):
            raise ValueError(
                f"dataset has {kh.num_relations} relations, model expects "
                f"{len(model.relation_names)}"
            )
        test_sets = [kh.base.edge_members[int(e)] for e in splits.test]
        test_labels = np.asarray(
            [kh.edge_type[int(e)] for e in splits.test], dtype=np.int64
        )
        if model.task == "classification":
            scores = _score_sets(model, test_sets)
            return {"accuracy": accuracy(scores.argmax(axis=1), test_labels)}
        ranks = _relational_ranks(model, test_sets, test_labels)
        return {
            "mrr": mrr(ranks),
            "hit1": hit_at(ranks, 1),
            "hit3": hit_at(ranks, 3),
        }

    h: Hypergraph = data
    if h.num_nodes != model.structure.num_nodes:
        raise ValueError(
            f"dataset has {h.num_nodes} nodes, model expects "
            f"{model.structure.num_nodes}"
        )
    rng = np.random.default_rng(model.config.seed)
    neg = _draw_run_negatives(h, splits, rng)
    test_pos = [h.edge_members[int(e)] for e in splits.test]
    test_sets = test_pos + [s.members for s in neg["test"]]
    scores = _binary_scores(model, _score_sets(model, test_sets))
    npos = len(test_pos)
    return {"auc": auc(scores[:npos], scores[npos:])}


def _check_candidate(model: TrainedModel, candidate) -> tuple[int, ...]:
    cand = tuple(int(v) for v in candidate)
    if not cand:
        raise ValueError("empty candidate")
    n = model.structure.num_nodes
    for v in cand:
        if not 0 <= v < n:
            raise ValueError(f"node id {v} out of range [0, {n})")
    return cand


def predict_relation(
    model: TrainedModel, candidate
) -> list[tuple[int, float]]:
    """Score every relation for a candidate entity set.

    Returns (relation id, logit) pairs sorted by descending score, ties
    by ascending id. The candidate is treated as an untyped query; it
    never joins the message-passing structure.
    """
    if model.task not in ("completion", "classification"):
        raise ValueError(f"model was trained for {model.task}")
    cand = _check_candidate(model, candidate)
    scores = _score_sets(model, [cand])[0]
    order = np.lexsort((np.arange(len(scores)), -scores))
    return [(int(r), float(scores[r])) for r in order]


def predict_edge(model: TrainedModel, candidate) -> float:
    """Probability that a node set forms a hyperedge, from the binary head."""
    if model.task != "prediction":
        raise ValueError(f"model was trained for {model.task}")
    cand = _check_candidate(model, candidate)
    reps = _score_sets(model, [cand])
    margin = _binary_scores(model, reps)[0]
    return float(1.0 / (1.0 + np.exp(-margin)))
