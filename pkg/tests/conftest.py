"""Shared fixtures and independent oracles for the test suite.

The oracles here deliberately avoid the package's own split machinery:
plain-Python gini, brute-force gain enumeration and a recursive
all-tie-breaks greedy tree enumerator, so structural claims are checked
against an implementation that shares no code with the one under test.
"""

from __future__ import annotations

import itertools
import random

import pytest

from stand import Dataset, FeatureSchema
from stand.data import Example


# ---------------------------------------------------------------------------
# fixture datasets


@pytest.fixture
def schema2() -> FeatureSchema:
    return FeatureSchema.binary(2)


@pytest.fixture
def d_and(schema2) -> Dataset:
    """The two-feature AND concept: (1,1)+ and the three other rows -."""
    rows = [("1", "1", 1), ("1", "0", 0), ("0", "1", 0), ("0", "0", 0)]
    return Dataset(schema2, tuple(schema2.example([a, b], lab) for a, b, lab in rows))


# Option-structure fixture: column 6 duplicates column 4, columns 2 and 5
# purely split the column-4 node, columns 1 and 7 are weak fillers keeping
# all seven rows pairwise distinct (identical rows would merge into one
# evidence unit and change every gain).
FIG1_COLUMNS = {
    1: (1, 0, 1, 0, 0, 0, 0),
    2: (0, 0, 0, 0, 1, 0, 0),
    3: (1, 0, 0, 1, 1, 0, 0),
    4: (1, 0, 1, 0, 1, 1, 1),
    5: (1, 1, 1, 1, 0, 1, 1),
    6: (1, 0, 1, 0, 1, 1, 1),
    7: (0, 0, 0, 0, 0, 1, 0),
}
FIG1_LABELS = (0, 1, 0, 1, 1, 0, 0)


def _seven_feature_dataset(columns: dict[int, tuple[int, ...]]) -> Dataset:
    schema = FeatureSchema.binary(7)
    examples = tuple(
        schema.example([str(columns[f][i]) for f in range(1, 8)], FIG1_LABELS[i])
        for i in range(7)
    )
    return Dataset(schema, examples)


@pytest.fixture
def d7_option(d7_option_module) -> Dataset:
    return d7_option_module


@pytest.fixture(scope="session")
def d7_option_module() -> Dataset:
    """Seven samples, seven binary features; the duplicated column 6=4 and
    the pure node split by columns 2/5 reproduce the shared-node option
    structure (one leaf bounded by exactly (X4|X6)(X2|!X5))."""
    return _seven_feature_dataset(FIG1_COLUMNS)


@pytest.fixture(scope="session")
def d7_rootset() -> Dataset:
    """Variant whose root near-best split set at alpha=0.3 is exactly
    columns {4, 3, 6} with the four shared child subsets."""
    columns = dict(FIG1_COLUMNS)
    columns[1] = (1, 0, 0, 0, 0, 0, 0)
    columns[2] = (1, 0, 0, 0, 1, 0, 0)
    columns[5] = (1, 0, 1, 0, 1, 0, 0)
    return _seven_feature_dataset(columns)


# ---------------------------------------------------------------------------
# random dataset generation


def random_dataset(
    rng: random.Random,
    n_features: int,
    n_rows: int,
    n_values: int = 2,
    label_noise: float = 0.0,
    allow_duplicates: bool = False,
) -> Dataset:
    """Random rows labeled by a random small DNF, optional label noise."""
    schema = FeatureSchema(
        tuple((f"F{i + 1}", tuple(str(v) for v in range(n_values))) for i in range(n_features))
    )
    space = n_values**n_features
    n_rows = min(n_rows, space if not allow_duplicates else n_rows)
    rows: list[tuple[int, ...]] = []
    seen = set()
    while len(rows) < n_rows:
        row = tuple(rng.randrange(n_values) for _ in range(n_features))
        if allow_duplicates or row not in seen:
            seen.add(row)
            rows.append(row)
    n_disjuncts = rng.randint(1, 2)
    target = []
    for _ in range(n_disjuncts):
        feats = rng.sample(range(n_features), min(rng.randint(1, 2), n_features))
        target.append([(f, rng.randrange(n_values)) for f in feats])

    def truth(row) -> int:
        return int(any(all(row[f] == v for f, v in conj) for conj in target))

    examples = []
    for row in rows:
        label = truth(row)
        if label_noise > 0.0 and rng.random() < label_noise:
            label = 1 - label
        examples.append(Example(row, label))
    return Dataset(schema, tuple(examples))


# ---------------------------------------------------------------------------
# independent oracles (no shared code with the package internals)


def oracle_gini(labels) -> float:
    pos = sum(labels)
    n = len(labels)
    return 2.0 * (pos / n) * (1.0 - pos / n)


def oracle_units(data: Dataset, samples) -> list[tuple[tuple[int, ...], int]]:
    units = {(data.examples[i].values, data.examples[i].label) for i in samples}
    return sorted(units)


def oracle_gains(data: Dataset, samples) -> dict[tuple[int, int], float]:
    """Gain per (feature, value) candidate over distinct evidence units."""
    units = oracle_units(data, samples)
    labels = [lab for _, lab in units]
    parent = oracle_gini(labels)
    gains = {}
    for f in range(data.schema.arity):
        k = len(data.schema.domain(f))
        values = [1] if k == 2 else list(range(k))
        for v in values:
            left = [lab for row, lab in units if row[f] == v]
            right = [lab for row, lab in units if row[f] != v]
            if not left or not right:
                continue
            w = (len(left) * oracle_gini(left) + len(right) * oracle_gini(right)) / len(units)
            gains[(f, v)] = parent - w
    return gains


def oracle_greedy_steps(data: Dataset, alpha: float = 1.0, tol: float = 1e-12):
    """Exhaustively enumerate every (subset, accepted split) pair reachable
    by a greedy learner taking any tie-break choice at any node.

    Returns {subset: {(feature, value): (left subset, right subset)}} for
    impure splittable subsets; purely recursive, no caching semantics.
    """
    out: dict[tuple, dict] = {}

    def recurse(samples: tuple):
        if samples in out:
            return
        labels = [data.examples[i].label for i in samples]
        if len(set(labels)) == 1:
            return
        gains = oracle_gains(data, samples)
        if not gains:
            return
        best = max(gains.values())
        if best <= 0.0:
            return
        accepted = {
            (f, v): g for (f, v), g in gains.items() if g >= best * alpha - tol
        }
        out[samples] = {}
        for f, v in accepted:
            left = tuple(i for i in samples if data.examples[i].values[f] == v)
            right = tuple(i for i in samples if data.examples[i].values[f] != v)
            out[samples][(f, v)] = (left, right)
            recurse(left)
            recurse(right)

    recurse(tuple(range(len(data))))
    return out


def exhaustive_examples(schema: FeatureSchema):
    domains = [range(len(dom)) for _, dom in schema.features]
    for combo in itertools.product(*domains):
        yield Example(tuple(combo))
