"""Compressed option-tree DAG over cached sample subsets.

At every impure node all splits whose gini gain is within a factor
``alpha`` of the best gain are expanded, and child nodes are cached by the
canonical sorted tuple of training-sample indices they select, so edges
that select the same subset share one node.  The result is a DAG holding
every decision tree a randomized greedy learner could have produced.

Trees are immutable once built; ``fit`` and ``incremental_update`` return
new values and are pure functions of (data, alpha).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .data import (
    Dataset,
    DatasetError,
    Example,
    FeatureSchema,
    Literal,
    NEGATIVE,
    POSITIVE,
    SchemaError,
    satisfies,
)

NodeKey = tuple[int, ...]

# Gains are rational arithmetic on small counts; exact ties are the common
# case, so near-best acceptance uses a relative tolerance.
GAIN_REL_TOL = 1e-9


def impurity(labels: Sequence[int]) -> float:
    """Gini impurity 2p(1-p) of a nonempty multiset of binary labels."""
    n = len(labels)
    if n == 0:
        raise DatasetError("impurity of an empty label multiset is undefined")
    pos = sum(1 for v in labels if v == POSITIVE)
    p = pos / n
    return 2.0 * p * (1.0 - p)


def _gini(pos: np.ndarray, tot: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(tot > 0, pos / np.maximum(tot, 1), 0.0)
    return 2.0 * p * (1.0 - p)


@dataclass(frozen=True)
class SplitCandidate:
    """An accepted one-vs-rest split: literal -> left child, negation -> right."""

    literal: Literal
    gain: float
    left: NodeKey
    right: NodeKey


class _SplitTable:
    """Per-dataset candidate-split layout shared by every node expansion.

    One candidate per (feature, value), except binary domains which get a
    single candidate on value index 1 (both values induce the same
    bipartition, and this keeps the literal polarity of two-valued
    features conventional: ``X=1`` vs ``X!=1``).
    """

    def __init__(self, schema: FeatureSchema):
        sizes = [len(domain) for _, domain in schema.features]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.n_slots = int(self.offsets[-1])
        feats, vals = [], []
        for f, k in enumerate(sizes):
            candidate_values = [1] if k == 2 else list(range(k))
            for v in candidate_values:
                feats.append(f)
                vals.append(v)
        self.cand_feature = np.asarray(feats, dtype=np.int64)
        self.cand_value = np.asarray(vals, dtype=np.int64)
        self.cand_slot = self.offsets[self.cand_feature] + self.cand_value


def best_splits(
    node_samples: Sequence[int],
    data: Dataset,
    alpha: float,
    _table: Optional[_SplitTable] = None,
) -> list[SplitCandidate]:
    """All splits with gain >= alpha * best gain at this node.

    Gains are parent impurity minus the size-weighted mean child impurity.
    Splits with an empty child are excluded; if the best achievable gain is
    zero the list is empty and the caller decides leaf-ification.  Order is
    deterministic: gain descending, then feature index, then value index.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    table = _table or _SplitTable(data.schema)
    X, y = data.as_arrays()
    idx = np.asarray(sorted(node_samples), dtype=np.int64)
    Xs = X[idx].astype(np.int64)

    # Gains weight distinct (values, label) evidence units, not raw rows,
    # so duplicated examples never shift which splits tie as best.
    unit_first = np.unique(data.evidence_units()[idx], return_index=True)[1]
    Xu = Xs[unit_first]
    yu = y[idx][unit_first]
    n = len(unit_first)
    n_pos = int((yu == POSITIVE).sum())
    parent = 2.0 * (n_pos / n) * (1.0 - n_pos / n)

    flat = (Xu + table.offsets[:-1][None, :]).ravel()
    tot = np.bincount(flat, minlength=table.n_slots).astype(np.float64)
    flat_pos = (Xu[yu == POSITIVE] + table.offsets[:-1][None, :]).ravel()
    pos = np.bincount(flat_pos, minlength=table.n_slots).astype(np.float64)

    n_l = tot[table.cand_slot]
    pos_l = pos[table.cand_slot]
    n_r = n - n_l
    pos_r = n_pos - pos_l
    weighted = (n_l * _gini(pos_l, n_l) + n_r * _gini(pos_r, n_r)) / n
    gains = np.maximum(parent - weighted, 0.0)
    gains[(n_l == 0) | (n_r == 0)] = -1.0

    best = float(gains.max(initial=-1.0))
    if best <= 0.0:
        return []
    keep = np.flatnonzero(gains >= best * alpha - GAIN_REL_TOL * best)
    order = np.lexsort(
        (table.cand_value[keep], table.cand_feature[keep], -gains[keep])
    )
    out: list[SplitCandidate] = []
    for i in keep[order]:
        f = int(table.cand_feature[i])
        v = int(table.cand_value[i])
        mask = Xs[:, f] == v
        out.append(
            SplitCandidate(
                literal=Literal(f, v, False),
                gain=float(gains[i]),
                left=tuple(int(s) for s in idx[mask]),
                right=tuple(int(s) for s in idx[~mask]),
            )
        )
    return out


@dataclass(frozen=True)
class StandNode:
    """A cached node: its sample subset, expanded splits, edges and parents.

    ``edges`` holds two entries per expanded split (literal -> left child
    key, negated literal -> right child key).  ``parents`` lists every
    (parent key, edge literal) leading here; nodes can have several.
    """

    key: NodeKey
    splits: tuple[SplitCandidate, ...]
    edges: tuple[tuple[Literal, NodeKey], ...]
    leaf_label: Optional[int]
    parents: tuple[tuple[NodeKey, Literal], ...] = ()

    @property
    def is_leaf(self) -> bool:
        return self.leaf_label is not None


def _majority_label(ys: np.ndarray) -> int:
    pos = int((ys == POSITIVE).sum())
    neg = len(ys) - pos
    # ties default negative: prefer errors of omission over silent commission
    return POSITIVE if pos > neg else NEGATIVE


def _expand(
    key: NodeKey,
    data: Dataset,
    alpha: float,
    table: _SplitTable,
) -> StandNode:
    _, y = data.as_arrays()
    idx = np.asarray(key, dtype=np.int64)
    ys = y[idx]
    if (ys == ys[0]).all():
        return StandNode(key, (), (), int(ys[0]))
    splits = best_splits(key, data, alpha, _table=table)
    if not splits:
        # unsplittable impure node: majority over evidence units
        unit_first = np.unique(data.evidence_units()[idx], return_index=True)[1]
        return StandNode(key, (), (), _majority_label(ys[unit_first]))
    edges = []
    for cand in splits:
        edges.append((cand.literal, cand.left))
        edges.append((cand.literal.negate(), cand.right))
    return StandNode(key, tuple(splits), tuple(edges), None)


class StandTree:
    """The fitted DAG: root key, node map, alpha and the data fit so far."""

    def __init__(
        self,
        data: Dataset,
        alpha: float,
        root: NodeKey,
        nodes: Mapping[NodeKey, StandNode],
    ):
        self.data = data
        self.schema = data.schema
        self.alpha = alpha
        self.root = root
        self.nodes = dict(nodes)
        self._caches: dict = {}

    def node(self, key: NodeKey) -> StandNode:
        return self.nodes[key]

    def leaves(self) -> list[StandNode]:
        return [n for n in self.nodes.values() if n.is_leaf]

    def route(self, x: Example) -> frozenset[NodeKey]:
        """Keys of every leaf reachable by a fully satisfied root path."""
        if len(x.values) != self.schema.arity:
            raise SchemaError("example does not conform to the tree's schema")
        reached: set[NodeKey] = set()
        stack = [self.root]
        seen = {self.root}
        while stack:
            key = stack.pop()
            node = self.nodes[key]
            if node.is_leaf:
                reached.add(key)
                continue
            for lit, child in node.edges:
                if child not in seen and satisfies(x, lit):
                    seen.add(child)
                    stack.append(child)
        return frozenset(reached)

    def predict(self, x: Example) -> int:
        from .vspace import predict_label

        return predict_label(self, x)

    def signature(self, max_index: Optional[int] = None) -> tuple:
        """Canonical structural fingerprint for node-for-node comparison.

        With ``max_index`` set, sample indices >= max_index are stripped
        from every key first, so a tree refit after appending examples can
        be compared against its predecessor.
        """

        def strip(key: NodeKey) -> NodeKey:
            if max_index is None:
                return key
            return tuple(i for i in key if i < max_index)

        rows = []
        for key, node in self.nodes.items():
            rows.append(
                (
                    strip(key),
                    tuple(c.literal for c in node.splits),
                    tuple((lit, strip(child)) for lit, child in node.edges),
                    node.leaf_label,
                )
            )
        rows.sort()
        return (strip(self.root), tuple(rows))

    def to_json_obj(self) -> dict:
        nodes_obj = {}
        for key, node in self.nodes.items():
            nodes_obj[_key_str(key)] = {
                "splits": [
                    {"literal": c.literal.to_json_obj(), "gain": c.gain}
                    for c in node.splits
                ],
                "edges": [
                    {"literal": lit.to_json_obj(), "child": _key_str(child)}
                    for lit, child in node.edges
                ],
                "leaf": node.leaf_label,
            }
        return {
            "format": "stand-tree",
            "alpha": self.alpha,
            "root": _key_str(self.root),
            "nodes": nodes_obj,
            "training_data": self.data.to_json_obj(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json_obj(cls, obj: dict) -> "StandTree":
        if obj.get("format") != "stand-tree":
            raise DatasetError("not a stand-tree export")
        data = Dataset.from_json_obj(obj["training_data"])
        nodes: dict[NodeKey, StandNode] = {}
        for key_str, node_obj in obj["nodes"].items():
            key = _parse_key(key_str)
            edges = tuple(
                (Literal.from_json_obj(e["literal"]), _parse_key(e["child"]))
                for e in node_obj["edges"]
            )
            by_literal = {lit: child for lit, child in edges}
            splits = tuple(
                SplitCandidate(
                    literal=Literal.from_json_obj(s["literal"]),
                    gain=float(s["gain"]),
                    left=by_literal[Literal.from_json_obj(s["literal"])],
                    right=by_literal[Literal.from_json_obj(s["literal"]).negate()],
                )
                for s in node_obj["splits"]
            )
            nodes[key] = StandNode(key, splits, edges, node_obj["leaf"])
        tree = cls(data, float(obj["alpha"]), _parse_key(obj["root"]), nodes)
        tree.nodes = _with_parents(tree.nodes)
        return tree

    @classmethod
    def from_json(cls, text: str) -> "StandTree":
        return cls.from_json_obj(json.loads(text))


def _key_str(key: NodeKey) -> str:
    return ",".join(str(i) for i in key)


def _parse_key(text: str) -> NodeKey:
    return tuple(int(p) for p in text.split(",")) if text else ()


def _with_parents(nodes: dict[NodeKey, StandNode]) -> dict[NodeKey, StandNode]:
    parents: dict[NodeKey, list] = {key: [] for key in nodes}
    for key, node in nodes.items():
        for lit, child in node.edges:
            parents[child].append((key, lit))
    return {
        key: StandNode(
            node.key, node.splits, node.edges, node.leaf_label, tuple(parents[key])
        )
        for key, node in nodes.items()
    }


def fit(
    data: Dataset,
    alpha: float = 1.0,
    _expansion_cache: Optional[Mapping[NodeKey, StandNode]] = None,
) -> StandTree:
    """Worklist expansion from the root subset, sharing nodes by subset key.

    Deterministic for fixed (data, alpha).  ``_expansion_cache`` may hold
    nodes from a previous fit of a prefix of ``data``; their expansions are
    reused verbatim since they depend only on the rows the key selects.
    """
    if len(data) == 0:
        raise DatasetError("cannot fit an empty dataset")
    if not data.fully_labeled:
        raise DatasetError("cannot fit: dataset has unlabeled examples")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")

    table = _SplitTable(data.schema)
    root: NodeKey = tuple(range(len(data)))
    nodes: dict[NodeKey, StandNode] = {}
    queue: list[NodeKey] = [root]
    head = 0
    while head < len(queue):
        key = queue[head]
        head += 1
        if key in nodes:
            continue
        cached = _expansion_cache.get(key) if _expansion_cache else None
        node = (
            StandNode(key, cached.splits, cached.edges, cached.leaf_label)
            if cached is not None
            else _expand(key, data, alpha, table)
        )
        nodes[key] = node
        for _, child in node.edges:
            if child not in nodes:
                queue.append(child)
    return StandTree(data, alpha, root, _with_parents(nodes))


def incremental_update(tree: StandTree, new_examples: Sequence[Example]) -> StandTree:
    """Refit with rows appended, reusing every node whose subset is untouched.

    Node expansions are pure functions of the rows a key selects, and
    appended rows get fresh indices, so any key from the previous tree that
    reappears expands identically; the previous node map seeds the refit.
    The result is node-for-node equal to ``fit`` on the combined data.
    """
    for i, x in enumerate(new_examples):
        if x.label is None:
            raise DatasetError(f"new example {i} is unlabeled")
    combined = tree.data.extended(new_examples)
    return fit(combined, tree.alpha, _expansion_cache=tree.nodes)


def unchanged_modulo_new(old: StandTree, new: StandTree) -> bool:
    """True iff ``new`` is node-for-node identical to ``old`` once the
    indices of rows appended after ``old`` are stripped from its keys."""
    return old.signature() == new.signature(max_index=len(old.data))


def time_fit_predict(
    data: Dataset, reps: int, alpha: float = 1.0
) -> tuple[float, float]:
    """Mean wall-clock (fit, per-example predict) durations in milliseconds."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    fit_ms = []
    predict_ms = []
    for _ in range(reps):
        t0 = time.perf_counter()
        tree = fit(data, alpha)
        t1 = time.perf_counter()
        for x in data.examples:
            tree.predict(x)
        t2 = time.perf_counter()
        fit_ms.append((t1 - t0) * 1000.0)
        predict_ms.append((t2 - t1) * 1000.0 / len(data))
    return sum(fit_ms) / reps, sum(predict_ms) / reps
