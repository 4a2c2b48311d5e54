"""Dataset loaders and train/valid/test split bookkeeping.

Knowledge datasets arrive as three tab-separated files (one fact per
line, relation first); plain hypergraphs as one whitespace-separated
member list per line, split by seeded shuffle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .hypergraph import Hypergraph, KnowledgeHypergraph, build_hypergraph

logger = logging.getLogger(__name__)

KNOWLEDGE_FILES = ("train.txt", "valid.txt", "test.txt")


@dataclass(frozen=True)
class Splits:
    """Disjoint edge-id sets for training, validation, and testing."""

    train: np.ndarray
    valid: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("train", "valid", "test"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            object.__setattr__(self, name, arr)
            if arr.ndim != 1 or len(arr) == 0:
                raise ValueError(f"empty {name} split")

    def check(self, num_edges: int) -> None:
        """Verify ids are in range and the three parts never overlap."""
        parts = [self.train, self.valid, self.test]
        combined = np.concatenate(parts)
        if combined.min() < 0 or combined.max() >= num_edges:
            raise ValueError("split contains an edge id out of range")
        if len(np.unique(combined)) != len(combined):
            raise ValueError("splits overlap")

    @classmethod
    def from_ratios(
        cls, num_edges: int, ratios, seed: int | np.random.Generator
    ) -> "Splits":
        """Seeded uniform shuffle, then contiguous slices.

        Train and valid sizes round down; the remainder goes to test.
        """
        rng = (
            seed
            if isinstance(seed, np.random.Generator)
            else np.random.default_rng(seed)
        )
        perm = rng.permutation(num_edges)
        n_train = math.floor(ratios[0] * num_edges)
        n_valid = math.floor(ratios[1] * num_edges)
        return cls(
            train=np.sort(perm[:n_train]),
            valid=np.sort(perm[n_train : n_train + n_valid]),
            test=np.sort(perm[n_train + n_valid :]),
        )


def load_knowledge(directory) -> tuple[KnowledgeHypergraph, Splits]:
    """Read train.txt / valid.txt / test.txt of tab-separated facts.

    Each line is `relation<TAB>entity<TAB>entity...`. Vocabularies cover
    the union of all three files in line order (transductive: entities
    seen only at test time still get incidence slots). Edge ids follow
    file order, train block first.
    """
    directory = Path(directory)
    paths = [directory / name for name in KNOWLEDGE_FILES]
    for p in paths:
        if not p.is_file():
            raise FileNotFoundError(f"missing split file {p}")

    relation_ids: dict[str, int] = {}
    entity_ids: dict[str, int] = {}
    edges: list[tuple[int, ...]] = []
    types: list[int] = []
    boundaries = []
    for p in paths:
        with open(p, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                fields = line.split("\t")
                if len(fields) < 2:
                    raise ValueError(
                        f"{p.name}:{lineno}: expected `relation<TAB>entity...`,"
                        f" got {line!r}"
                    )
                rel = fields[0]
                if not rel:
                    raise ValueError(f"{p.name}:{lineno}: empty relation token")
                if rel not in relation_ids:
                    relation_ids[rel] = len(relation_ids)
                members = []
                for tok in fields[1:]:
                    if tok not in entity_ids:
                        entity_ids[tok] = len(entity_ids)
                    members.append(entity_ids[tok])
                edges.append(tuple(members))
                types.append(relation_ids[rel])
        boundaries.append(len(edges))

    base = build_hypergraph(edges, num_nodes=len(entity_ids))
    kh = KnowledgeHypergraph(
        base, types, tuple(relation_ids), tuple(entity_ids)
    )
    splits = Splits(
        train=np.arange(0, boundaries[0]),
        valid=np.arange(boundaries[0], boundaries[1]),
        test=np.arange(boundaries[1], boundaries[2]),
    )
    logger.info(
        "loaded %d entities, %d relations, %d/%d/%d facts",
        base.num_nodes, kh.num_relations,
        len(splits.train), len(splits.valid), len(splits.test),
    )
    return kh, splits


def load_simple(path, split_ratios=(0.7, 0.1, 0.2), seed: int = 0):
    """Read one hyperedge per line and split by seeded shuffle.

    Node tokens map to ids in first-seen order. Blank lines are skipped
    with a warning. Returns the hypergraph, the splits, and the node
    vocabulary in id order.
    """
    path = Path(path)
    vocab: dict[str, int] = {}
    edges: list[tuple[int, ...]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                logger.warning("%s:%d: blank line skipped", path.name, lineno)
                continue
            members = []
            for tok in tokens:
                if tok not in vocab:
                    vocab[tok] = len(vocab)
                members.append(vocab[tok])
            edges.append(tuple(members))
    if not edges:
        raise ValueError(f"{path}: no hyperedges found")
    h = build_hypergraph(edges, num_nodes=len(vocab))
    splits = Splits.from_ratios(h.num_edges, split_ratios, seed)
    return h, splits, tuple(vocab)
