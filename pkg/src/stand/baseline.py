"""Single greedy decision tree sharing the option tree's split machinery.

At each impure node the candidate set is the alpha=1.0 best-splits list
and one candidate is drawn uniformly with a seeded generator, so every
tree this produces corresponds to one tie-break assignment of the shared
greedy process and embeds in the full option structure by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .data import Dataset, DatasetError, Example, Literal, POSITIVE, satisfies
from .tree import NodeKey, _key_str, _majority_label, best_splits

import numpy as np


@dataclass(frozen=True)
class TreeNode:
    samples: NodeKey
    literal: Optional[Literal] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    label: Optional[int] = None

    @property
    def is_leaf(self) -> bool:
        return self.label is not None


@dataclass(frozen=True)
class DecisionTree:
    """One randomized greedy tree plus the seed that broke its ties."""

    data: Dataset
    root: TreeNode
    seed: int


def fit_tree(data: Dataset, seed: int) -> DecisionTree:
    """Greedy gini tree choosing uniformly among tied best splits."""
    if len(data) == 0:
        raise DatasetError("cannot fit an empty dataset")
    if not data.fully_labeled:
        raise DatasetError("cannot fit: dataset has unlabeled examples")
    rng = random.Random(seed)
    _, y = data.as_arrays()

    def build(samples: NodeKey) -> TreeNode:
        ys = y[np.asarray(samples, dtype=np.int64)]
        if (ys == ys[0]).all():
            return TreeNode(samples, label=int(ys[0]))
        candidates = best_splits(samples, data, alpha=1.0)
        if not candidates:
            return TreeNode(samples, label=_majority_label(ys))
        pick = candidates[rng.randrange(len(candidates))]
        return TreeNode(
            samples,
            literal=pick.literal,
            left=build(pick.left),
            right=build(pick.right),
        )

    return DecisionTree(data, build(tuple(range(len(data)))), seed)


def tree_predict(t: DecisionTree, x: Example) -> int:
    node = t.root
    while not node.is_leaf:
        node = node.left if satisfies(x, node.literal) else node.right
    return node.label


def derived_dnf(t: DecisionTree, label: int = POSITIVE) -> list[frozenset[Literal]]:
    """Root-to-leaf conjunctions of the leaves carrying ``label``."""
    out: list[frozenset[Literal]] = []

    def walk(node: TreeNode, path: list[Literal]):
        if node.is_leaf:
            if node.label == label:
                out.append(frozenset(path))
            return
        path.append(node.literal)
        walk(node.left, path)
        path.pop()
        path.append(node.literal.negate())
        walk(node.right, path)
        path.pop()

    walk(t.root, [])
    return out


def tree_to_json_obj(t: DecisionTree) -> dict:
    """Same export shape as the option tree, with single-option nodes."""
    nodes: dict[str, dict] = {}

    def walk(node: TreeNode):
        key = _key_str(node.samples)
        if node.is_leaf:
            nodes[key] = {"splits": [], "edges": [], "leaf": node.label}
            return
        nodes[key] = {
            "splits": [{"literal": node.literal.to_json_obj(), "gain": None}],
            "edges": [
                {"literal": node.literal.to_json_obj(), "child": _key_str(node.left.samples)},
                {
                    "literal": node.literal.negate().to_json_obj(),
                    "child": _key_str(node.right.samples),
                },
            ],
            "leaf": None,
        }
        walk(node.left)
        walk(node.right)

    walk(t.root)
    return {
        "format": "greedy-tree",
        "seed": t.seed,
        "root": _key_str(t.root.samples),
        "nodes": nodes,
    }
