"""Scikit-learn style estimator facades over the core structures.

The estimators accept plain 2-D arrays of categorical values (ints or
strings), build a feature schema from the data or from the ``domains``
parameter, and expose fit / partial_fit / predict plus the signed
certainty scores, so they compose with pipelines and model selection
utilities from the wider ecosystem.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted, check_random_state

from . import baseline, tree as tree_mod, vspace
from .data import Dataset, Example, FeatureSchema


def _check_matrix(X) -> np.ndarray:
    arr = np.asarray(X)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("X must be a non-empty 2-D array of categorical values")
    return arr


def _as_str(v: object) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        if not float(v).is_integer():
            raise ValueError(f"continuous value {v!r}: features must be categorical")
        return str(int(v))
    return str(v)


def _build_schema(
    X: np.ndarray,
    feature_names: Optional[Sequence[str]],
    domains: Optional[Sequence[Sequence[object]]],
) -> FeatureSchema:
    n = X.shape[1]
    names = list(feature_names) if feature_names else [f"X{i + 1}" for i in range(n)]
    if len(names) != n:
        raise ValueError(f"{len(names)} feature names for {n} columns")
    feats = []
    for j in range(n):
        if domains is not None:
            domain = tuple(_as_str(v) for v in domains[j])
        else:
            observed = {_as_str(v) for v in X[:, j]}
            if observed <= {"0", "1"}:
                domain = ("0", "1")
            else:
                domain = tuple(sorted(observed))
        feats.append((names[j], domain))
    return FeatureSchema(tuple(feats))


class _CategoricalClassifier(BaseEstimator, ClassifierMixin):
    """Shared input handling: class mapping and row encoding."""

    def _encode_labels(self, y) -> np.ndarray:
        y = np.asarray(y).ravel()
        classes = np.unique(y)
        if len(classes) > 2:
            raise ValueError("binary correctness labels only")
        self.classes_ = classes
        positive = classes[-1]
        return (y == positive).astype(int) if len(classes) == 2 else np.ones(len(y), int)

    def _rows(self, X: np.ndarray, labels: Optional[np.ndarray] = None) -> list[Example]:
        out = []
        for i, row in enumerate(X):
            label = None if labels is None else int(labels[i])
            out.append(self.schema_.example([_as_str(v) for v in row], label))
        return out

    def _decode(self, binary: np.ndarray) -> np.ndarray:
        if len(self.classes_) == 1:
            return np.full(len(binary), self.classes_[0])
        return self.classes_[binary.astype(int)]


class StandClassifier(_CategoricalClassifier):
    """Classifier over the full stand of greedy trees, with signed certainty.

    Parameters
    ----------
    alpha : float, default=1.0
        Near-best split acceptance factor in (0, 1]; 1.0 expands exact
        ties only.
    feature_names, domains : optional schema overrides; by default names
        are X1..Xn and domains are the observed values per column (with
        {0, 1} assumed binary).  Provide ``domains`` when streaming via
        ``partial_fit`` so later batches cannot fall outside the schema.
    """

    def __init__(self, alpha: float = 1.0, feature_names=None, domains=None):
        self.alpha = alpha
        self.feature_names = feature_names
        self.domains = domains

    def fit(self, X, y):
        X = _check_matrix(X)
        labels = self._encode_labels(y)
        self.schema_ = _build_schema(X, self.feature_names, self.domains)
        self.n_features_in_ = X.shape[1]
        data = Dataset(self.schema_, tuple(self._rows(X, labels)))
        self.tree_ = tree_mod.fit(data, alpha=self.alpha)
        return self

    def partial_fit(self, X, y, classes=None):
        if not hasattr(self, "tree_"):
            if classes is not None:
                self.classes_ = np.asarray(classes)
            return self.fit(X, y)
        X = _check_matrix(X)
        y = np.asarray(y).ravel()
        positive = self.classes_[-1]
        labels = (y == positive).astype(int)
        self.tree_ = tree_mod.incremental_update(self.tree_, self._rows(X, labels))
        return self

    def predict(self, X):
        check_is_fitted(self, "tree_")
        X = _check_matrix(X)
        scores = vspace.certainty_batch(self.tree_, self._rows(X))
        return self._decode(scores["prediction"])

    def predict_certainty(self, X) -> np.ndarray:
        """Signed instance certainty in [-1, 1] per row."""
        check_is_fitted(self, "tree_")
        X = _check_matrix(X)
        return vspace.certainty_batch(self.tree_, self._rows(X))["signed_ic"]

    @property
    def ambiguity_(self) -> int:
        check_is_fitted(self, "tree_")
        return vspace.ambiguity(self.tree_).total


class GreedyTreeClassifier(_CategoricalClassifier):
    """Baseline: one greedy gini tree, random tie-breaks from random_state."""

    def __init__(self, random_state: int = 0, feature_names=None, domains=None):
        self.random_state = random_state
        self.feature_names = feature_names
        self.domains = domains

    def fit(self, X, y):
        X = _check_matrix(X)
        labels = self._encode_labels(y)
        self.schema_ = _build_schema(X, self.feature_names, self.domains)
        self.n_features_in_ = X.shape[1]
        data = Dataset(self.schema_, tuple(self._rows(X, labels)))
        seed = check_random_state(self.random_state).randint(2**31 - 1)
        self.decision_tree_ = baseline.fit_tree(data, seed=seed)
        return self

    def predict(self, X):
        check_is_fitted(self, "decision_tree_")
        X = _check_matrix(X)
        preds = np.asarray(
            [baseline.tree_predict(self.decision_tree_, x) for x in self._rows(X)]
        )
        return self._decode(preds)
