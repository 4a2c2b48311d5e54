"""Versioned checkpoint container for trained models.

JSON with float64 arrays packed as base64 little-endian bytes, so a
reloaded model reproduces every prediction bit-exactly. The structure,
cluster assignment, initial features, weights, vocabularies, and config
echo are all stored; optimizer state is not.
"""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from .convolution import LayerParams
from .hypergraph import Hypergraph
from .partition import ClusterAssignment
from .training import ModelParams, TrainConfig, TrainedModel

FORMAT_NAME = "hyperconv-checkpoint"
FORMAT_VERSION = 1


def _pack(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.astype("<f8").tobytes()).decode("ascii"),
    }


def _unpack(obj: dict) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    arr = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return arr.reshape(obj["shape"])


def save_checkpoint(model: TrainedModel, path) -> None:
    arrays = {
        "edge_init": _pack(model.edge_init),
        "node_x": _pack(model.node_x),
        "W1": _pack(model.params.layer1.weight),
        "W2": _pack(model.params.layer2.weight),
    }
    if model.params.head_weight is not None:
        arrays["Wh"] = _pack(model.params.head_weight)
        arrays["bh"] = _pack(model.params.head_bias)
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "task": model.task,
        "config": model.config.to_dict(),
        "activations": [model.params.layer1.activation, model.params.layer2.activation],
        "structure": {
            "num_nodes": model.structure.num_nodes,
            "edges": [list(m) for m in model.structure.edge_members],
        },
        "clusters": {
            "k": model.clusters.k,
            "balance_epsilon": model.clusters.balance_epsilon,
            "cluster_of": [int(c) for c in model.clusters.cluster_of],
        },
        "arrays": arrays,
        "relation_names": list(model.relation_names) if model.relation_names else None,
        "entity_names": list(model.entity_names) if model.entity_names else None,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)


def load_checkpoint(path) -> TrainedModel:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"{path}: not a model checkpoint")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(
            f"{path}: checkpoint version {doc.get('version')} unsupported "
            f"(expected {FORMAT_VERSION})"
        )
    structure = Hypergraph(
        [tuple(m) for m in doc["structure"]["edges"]],
        doc["structure"]["num_nodes"],
    )
    clusters = ClusterAssignment(
        cluster_of=np.asarray(doc["clusters"]["cluster_of"], dtype=np.int64),
        k=doc["clusters"]["k"],
        balance_epsilon=doc["clusters"]["balance_epsilon"],
    )
    arrays = doc["arrays"]
    act1, act2 = doc["activations"]
    params = ModelParams(
        layer1=LayerParams(_unpack(arrays["W1"]), act1),
        layer2=LayerParams(_unpack(arrays["W2"]), act2),
        head_weight=_unpack(arrays["Wh"]) if "Wh" in arrays else None,
        head_bias=_unpack(arrays["bh"]) if "bh" in arrays else None,
    )
    return TrainedModel(
        task=doc["task"],
        config=TrainConfig.from_dict(doc["config"]),
        structure=structure,
        clusters=clusters,
        params=params,
        edge_init=_unpack(arrays["edge_init"]),
        node_x=_unpack(arrays["node_x"]),
        relation_names=tuple(doc["relation_names"]) if doc["relation_names"] else None,
        entity_names=tuple(doc["entity_names"]) if doc["entity_names"] else None,
    )
