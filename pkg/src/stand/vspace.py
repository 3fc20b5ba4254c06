"""Per-leaf mini version spaces, ambiguity heuristics and instance certainty.

Every leaf of a fitted tree is bounded above by its option structure (the
alternative edge literals along every root path into it) and below by its
specific extension (literals shared by all of its samples on features the
options leave open).  Ambiguity sums the literal counts of those bounds;
instance certainty measures, per example, what fraction of the bounds of
each accepting leaf the example satisfies, signed by the winning class.

All functions here are pure over immutable trees and cache their per-leaf
census on the tree object.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .data import Example, FeatureSchema, Literal, NEGATIVE, POSITIVE, satisfies
from .tree import NodeKey, StandTree, _key_str

SIZE_SATURATION = 2**63 - 1

_MAX_PATHS = 20_000
_MAX_COVER_LEAVES = 20


@dataclass(frozen=True)
class LeafGeneralization:
    """The mini version space of one leaf.

    ``paths`` lists every root-to-leaf node sequence as a list of
    option-sets, one per traversed edge step, each option-set holding the
    alternative parallel edge literals.  ``union_options`` dedups the
    (ancestor key, literal) choices across paths; ``specific_extension``
    is the lower bound: equality literals on features the options never
    mention whose value is shared by every sample in the leaf.
    """

    leaf: NodeKey
    paths: tuple[tuple[tuple[Literal, ...], ...], ...]
    union_options: tuple[tuple[NodeKey, Literal], ...]
    specific_extension: tuple[Literal, ...]

    @property
    def ambiguity(self) -> int:
        return len(self.union_options) + len(self.specific_extension)

    def expansions(self) -> list[frozenset[Literal]]:
        """All conjunctions reachable by picking one literal per option-set
        of one path, deduplicated across paths."""
        seen: list[frozenset[Literal]] = []
        have: set[frozenset[Literal]] = set()
        for path in self.paths:
            for choice in itertools.product(*path):
                conj = frozenset(choice)
                if conj not in have:
                    have.add(conj)
                    seen.append(conj)
        return seen


class _LeafBounds:
    """Flat census of one leaf's bounds, cached for certainty scoring."""

    __slots__ = ("leaf", "label", "options", "specific", "ambiguity")

    def __init__(self, leaf, label, options, specific):
        self.leaf = leaf
        self.label = label
        self.options = options
        self.specific = specific
        self.ambiguity = len(options) + len(specific)


def _reverse_reachable(tree: StandTree, leaf: NodeKey) -> set[NodeKey]:
    seen = {leaf}
    stack = [leaf]
    while stack:
        key = stack.pop()
        for parent, _ in tree.nodes[key].parents:
            if parent not in seen:
                seen.add(parent)
                stack.append(parent)
    return seen


def _specific_extension(
    tree: StandTree, leaf: NodeKey, used_features: set[int]
) -> tuple[Literal, ...]:
    specific: list[Literal] = []
    rows = [tree.data.examples[i].values for i in leaf]
    for f in range(tree.schema.arity):
        if f in used_features:
            continue
        values = {row[f] for row in rows}
        if len(values) == 1:
            specific.append(Literal(f, values.pop(), False))
    return tuple(specific)


def _all_bounds(tree: StandTree) -> dict[NodeKey, _LeafBounds]:
    """Census of every leaf's bounds in one pass over the DAG.

    An edge (u, lit, v) is an option of leaf i iff i is reachable from v
    (the complete path through the edge then exists, since every node is
    reachable from the root); reachable-leaf sets are folded bottom-up as
    bitmasks and each edge is distributed to the leaves in its child's
    mask.
    """
    cache = tree._caches.get("bounds")
    if cache is not None:
        return cache
    leaves = [node.key for node in tree.leaves()]
    leaf_pos = {key: i for i, key in enumerate(leaves)}
    masks: dict[NodeKey, int] = {}
    for key in reversed(_topological_order(tree)):
        node = tree.nodes[key]
        m = 1 << leaf_pos[key] if node.is_leaf else 0
        for _, child in node.edges:
            m |= masks[child]
        masks[key] = m
    options: dict[NodeKey, list[tuple[NodeKey, Literal]]] = {k: [] for k in leaves}
    for key in tree.nodes:
        for lit, child in tree.nodes[key].edges:
            m = masks[child]
            while m:
                low = m & -m
                options[leaves[low.bit_length() - 1]].append((key, lit))
                m ^= low
    cache = {}
    for key in leaves:
        opts = tuple(options[key])
        specific = _specific_extension(tree, key, {lit.feature for _, lit in opts})
        cache[key] = _LeafBounds(key, tree.nodes[key].leaf_label, opts, specific)
    tree._caches["bounds"] = cache
    return cache


def leaf_generalization(tree: StandTree, leaf: NodeKey) -> LeafGeneralization:
    """Full path/option structure of one leaf (diagnostic; small trees)."""
    node = tree.nodes.get(leaf)
    if node is None or not node.is_leaf:
        raise ValueError(f"{leaf} is not a leaf of this tree")
    region = _reverse_reachable(tree, leaf)
    # parallel edges between a node pair form one option-set
    step_options: dict[tuple[NodeKey, NodeKey], list[Literal]] = {}
    children: dict[NodeKey, list[NodeKey]] = {}
    for key in tree.nodes:
        if key not in region:
            continue
        for lit, child in tree.nodes[key].edges:
            if child in region:
                step = (key, child)
                if step not in step_options:
                    step_options[step] = []
                    children.setdefault(key, []).append(child)
                step_options[step].append(lit)

    paths: list[tuple[tuple[Literal, ...], ...]] = []
    node_paths: list[tuple[NodeKey, ...]] = []

    def walk(key: NodeKey, steps: list[tuple[NodeKey, NodeKey]]):
        if key == leaf:
            if len(paths) >= _MAX_PATHS:
                raise ValueError(f"leaf {leaf} has more than {_MAX_PATHS} paths")
            paths.append(tuple(tuple(step_options[s]) for s in steps))
            node_paths.append(tuple(s[1] for s in steps))
            return
        for child in children.get(key, ()):
            steps.append((key, child))
            walk(child, steps)
            steps.pop()

    walk(tree.root, [])
    order = sorted(range(len(paths)), key=lambda i: node_paths[i])
    bounds = _all_bounds(tree)[leaf]
    return LeafGeneralization(
        leaf=leaf,
        paths=tuple(paths[i] for i in order),
        union_options=bounds.options,
        specific_extension=bounds.specific,
    )


def mini_space_size(g: LeafGeneralization) -> tuple[int, bool]:
    """Order-of-magnitude mini-space size of a leaf (diagnostic only).

    Product of the option-set sizes along the lexicographically first path
    times (1 + |specific|)!, saturating at 2**63 - 1 with an overflow flag.
    """
    size = 1
    if g.paths:
        for option_set in g.paths[0]:
            size *= len(option_set)
    size *= math.factorial(1 + len(g.specific_extension))
    if size > SIZE_SATURATION:
        return SIZE_SATURATION, True
    return size, False


@dataclass(frozen=True)
class AmbiguityReport:
    """Heuristic version-space size: per-leaf literal counts and their sum."""

    per_leaf: dict[NodeKey, int]
    total: int

    def to_json_obj(self) -> dict:
        return {
            "total": self.total,
            "per_leaf": {_key_str(k): v for k, v in self.per_leaf.items()},
        }


def ambiguity(tree: StandTree) -> AmbiguityReport:
    bounds = _all_bounds(tree)
    per_leaf = {key: b.ambiguity for key, b in bounds.items()}
    return AmbiguityReport(per_leaf=per_leaf, total=sum(per_leaf.values()))


@dataclass(frozen=True)
class CertaintyReport:
    """Signed instance certainty with the per-leaf bound census behind it.

    ``signed_ic`` lies in [-1, 1]: +ic_plus when the positive side wins
    (ties included), else -ic_minus.  A side with no accepted leaves is
    absent (None) and counts as zero in the comparison.
    """

    ic_plus: Optional[float]
    ic_minus: Optional[float]
    signed_ic: float
    per_leaf: dict[NodeKey, tuple[int, int]]
    accepted_plus: tuple[NodeKey, ...]
    accepted_minus: tuple[NodeKey, ...]

    @property
    def prediction(self) -> int:
        if not self.accepted_plus and not self.accepted_minus:
            return NEGATIVE
        plus = self.ic_plus if self.ic_plus is not None else 0.0
        minus = self.ic_minus if self.ic_minus is not None else 0.0
        return POSITIVE if plus >= minus else NEGATIVE

    def to_json_obj(self) -> dict:
        return {
            "ic_plus": self.ic_plus,
            "ic_minus": self.ic_minus,
            "signed_ic": self.signed_ic,
            "prediction": self.prediction,
            "per_leaf": {
                _key_str(k): {"A": a, "A_prime": ap}
                for k, (a, ap) in self.per_leaf.items()
            },
            "accepted_plus": [_key_str(k) for k in self.accepted_plus],
            "accepted_minus": [_key_str(k) for k in self.accepted_minus],
        }


def _satisfied_count(bounds: _LeafBounds, x: Example) -> int:
    hits = 0
    for _, lit in bounds.options:
        if satisfies(x, lit):
            hits += 1
    for lit in bounds.specific:
        if satisfies(x, lit):
            hits += 1
    return hits


def instance_certainty(tree: StandTree, x: Example) -> CertaintyReport:
    """Signed agreement of the version space about x, from Eq.-style ratios.

    For each accepting leaf the ratio of bound literals x satisfies is
    averaged per class; exact rational arithmetic, rounded once at the end.
    """
    accepted = tree.route(x)
    bounds = _all_bounds(tree)
    per_leaf: dict[NodeKey, tuple[int, int]] = {}
    sides: dict[int, list[Fraction]] = {POSITIVE: [], NEGATIVE: []}
    plus_keys, minus_keys = [], []
    for key in tree.nodes:
        if key not in accepted:
            continue
        b = bounds[key]
        a_prime = _satisfied_count(b, x)
        per_leaf[key] = (b.ambiguity, a_prime)
        ratio = Fraction(a_prime, b.ambiguity) if b.ambiguity else Fraction(1)
        sides[b.label].append(ratio)
        (plus_keys if b.label == POSITIVE else minus_keys).append(key)

    ic_plus = (
        sum(sides[POSITIVE], Fraction(0)) / len(sides[POSITIVE])
        if sides[POSITIVE]
        else None
    )
    ic_minus = (
        sum(sides[NEGATIVE], Fraction(0)) / len(sides[NEGATIVE])
        if sides[NEGATIVE]
        else None
    )
    plus = ic_plus if ic_plus is not None else Fraction(0)
    minus = ic_minus if ic_minus is not None else Fraction(0)
    signed = plus if plus >= minus else -minus
    return CertaintyReport(
        ic_plus=None if ic_plus is None else float(ic_plus),
        ic_minus=None if ic_minus is None else float(ic_minus),
        signed_ic=float(signed),
        per_leaf=per_leaf,
        accepted_plus=tuple(plus_keys),
        accepted_minus=tuple(minus_keys),
    )


def predict_label(tree: StandTree, x: Example) -> int:
    return instance_certainty(tree, x).prediction


def _topological_order(tree: StandTree) -> list[NodeKey]:
    order: list[NodeKey] = []
    state: dict[NodeKey, int] = {}

    def visit(key: NodeKey):
        stack = [(key, iter([c for _, c in tree.nodes[key].edges]))]
        state[key] = 1
        while stack:
            node, it = stack[-1]
            advanced = False
            for child in it:
                if state.get(child, 0) == 0:
                    state[child] = 1
                    stack.append((child, iter([c for _, c in tree.nodes[child].edges])))
                    advanced = True
                    break
            if not advanced:
                order.append(node)
                stack.pop()

    visit(tree.root)
    order.reverse()
    return order


def certainty_batch(tree: StandTree, examples: Sequence[Example]) -> dict:
    """Vectorized signed certainty and predictions for many examples.

    Float arithmetic with the same per-leaf ratios as instance_certainty;
    used by the evaluation harness where exact fractions are not needed.
    """
    n = len(examples)
    X = np.asarray([x.values for x in examples], dtype=np.int64)
    bounds = _all_bounds(tree)

    lit_cache: dict[Literal, np.ndarray] = {}

    def sat(lit: Literal) -> np.ndarray:
        vec = lit_cache.get(lit)
        if vec is None:
            vec = (X[:, lit.feature] == lit.value) != lit.negated
            lit_cache[lit] = vec
        return vec

    reach: dict[NodeKey, np.ndarray] = {tree.root: np.ones(n, dtype=bool)}
    for key in _topological_order(tree):
        r = reach.get(key)
        if r is None:
            continue
        node = tree.nodes[key]
        for lit, child in node.edges:
            flow = r & sat(lit)
            if child in reach:
                reach[child] |= flow
            else:
                reach[child] = flow

    sum_ratio = {POSITIVE: np.zeros(n), NEGATIVE: np.zeros(n)}
    count = {POSITIVE: np.zeros(n, dtype=np.int64), NEGATIVE: np.zeros(n, dtype=np.int64)}
    for key, b in bounds.items():
        accepted = reach.get(key)
        if accepted is None or not accepted.any():
            continue
        hits = np.zeros(n, dtype=np.int64)
        for _, lit in b.options:
            hits += sat(lit)
        for lit in b.specific:
            hits += sat(lit)
        ratio = hits / b.ambiguity if b.ambiguity else np.ones(n)
        sum_ratio[b.label] += np.where(accepted, ratio, 0.0)
        count[b.label] += accepted

    with np.errstate(invalid="ignore"):
        ic_plus = np.where(count[POSITIVE] > 0, sum_ratio[POSITIVE] / np.maximum(count[POSITIVE], 1), 0.0)
        ic_minus = np.where(count[NEGATIVE] > 0, sum_ratio[NEGATIVE] / np.maximum(count[NEGATIVE], 1), 0.0)
    plus_wins = ic_plus >= ic_minus
    signed = np.where(plus_wins, ic_plus, -ic_minus)
    any_leaf = (count[POSITIVE] + count[NEGATIVE]) > 0
    predictions = np.where(any_leaf & plus_wins, POSITIVE, NEGATIVE)
    return {
        "signed_ic": signed,
        "ic_plus": ic_plus,
        "ic_minus": ic_minus,
        "prediction": predictions,
        "any_leaf": any_leaf,
    }


def _covers(candidate: tuple[int, ...], leaf_sets: list[frozenset[int]], positives: frozenset[int]) -> bool:
    covered: set[int] = set()
    for i in candidate:
        covered |= leaf_sets[i]
    return positives <= covered


def minimal_positive_covers(tree: StandTree) -> list[tuple[NodeKey, ...]]:
    """All minimal subsets of positive leaves covering the positive samples."""
    pos_leaves = [n.key for n in tree.leaves() if n.leaf_label == POSITIVE]
    if len(pos_leaves) > _MAX_COVER_LEAVES:
        raise ValueError(
            f"cover search over {len(pos_leaves)} positive leaves is not tractable"
        )
    _, y = tree.data.as_arrays()
    positives = frozenset(int(i) for i in np.flatnonzero(y == POSITIVE))
    if not positives:
        # the empty disjunction (accept nothing) is the unique minimal cover
        return [()]
    leaf_sets = [frozenset(key) for key in pos_leaves]
    covers: list[tuple[int, ...]] = []
    for size in range(1, len(pos_leaves) + 1):
        for combo in itertools.combinations(range(len(pos_leaves)), size):
            if any(set(prior) <= set(combo) for prior in covers):
                continue
            if _covers(combo, leaf_sets, positives):
                covers.append(combo)
    return [tuple(pos_leaves[i] for i in combo) for combo in covers]


def enumerate_G(tree: StandTree, limit: int) -> tuple[list[tuple[frozenset[Literal], ...]], bool]:
    """Bounded enumeration of the most-general DNF statements.

    Walks every minimal positive-leaf cover, disjoins every combination of
    per-leaf alternative conjunctions, and truncates the union at ``limit``
    (second return value flags truncation).  Small trees only.
    """
    out: list[tuple[frozenset[Literal], ...]] = []
    seen: set[frozenset[frozenset[Literal]]] = set()
    truncated = False
    for cover in minimal_positive_covers(tree):
        expansions = [leaf_generalization(tree, leaf).expansions() for leaf in cover]
        for combo in itertools.product(*expansions):
            canon = frozenset(combo)
            if canon in seen:
                continue
            if len(out) >= limit:
                truncated = True
                return out, truncated
            seen.add(canon)
            out.append(tuple(combo))
    return out, truncated


def render_literal(lit: Literal, schema: FeatureSchema) -> str:
    """Human form; binary negations normalize to the opposite equality."""
    domain = schema.domain(lit.feature)
    if lit.negated and len(domain) == 2:
        return f"{schema.name(lit.feature)}={domain[1 - lit.value]}"
    return lit.render(schema)


def render_conjunction(conj: frozenset[Literal], schema: FeatureSchema) -> str:
    parts = sorted(conj, key=lambda l: (l.feature, l.value, l.negated))
    return "AND(" + ",".join(render_literal(l, schema) for l in parts) + ")"


def render_dnf(dnf: Sequence[frozenset[Literal]], schema: FeatureSchema) -> str:
    rendered = sorted(render_conjunction(c, schema) for c in dnf)
    return "OR(" + ",".join(rendered) + ")"
