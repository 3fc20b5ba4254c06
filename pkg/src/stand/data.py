"""Feature schemas, literals, examples and labeled datasets.

Everything downstream (tree building, version-space bounds, the teaching
harness) works over these types.  Features are finite categorical; values
are stored internally as indices into each feature's declared domain, so
example rows pack into small integer arrays.  Schemas, examples and
datasets are immutable once constructed and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np

POSITIVE = 1
NEGATIVE = 0

# Columns with no declared domain are inferred from data; more distinct
# values than this is treated as a continuous column and rejected.
MAX_INFERRED_DOMAIN = 16


class SchemaError(ValueError):
    """A value, feature reference or declaration violates the schema."""


class DatasetError(ValueError):
    """A dataset-level precondition does not hold (empty, unlabeled, ...)."""


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature declarations: (name, domain of categorical values).

    Feature order is fixed for the lifetime of the schema; feature indices
    are the stable identifiers used everywhere else.
    """

    features: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self) -> None:
        if not self.features:
            raise SchemaError("schema must declare at least one feature")
        names = [name for name, _ in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("feature names must be unique")
        for name, domain in self.features:
            if len(domain) < 2:
                raise SchemaError(f"feature {name!r} needs a domain of >= 2 values")
            if len(set(domain)) != len(domain):
                raise SchemaError(f"feature {name!r} has duplicate domain values")

    @property
    def arity(self) -> int:
        return len(self.features)

    def name(self, feature: int) -> str:
        return self.features[feature][0]

    def domain(self, feature: int) -> tuple[str, ...]:
        return self.features[feature][1]

    def value_index(self, feature: int, value: object) -> int:
        domain = self.domain(feature)
        value = str(value)
        try:
            return domain.index(value)
        except ValueError:
            raise SchemaError(
                f"value {value!r} not in domain of feature {self.name(feature)!r}"
            ) from None

    def example(self, values: Sequence[object], label: Optional[int] = None) -> "Example":
        """Build an Example from raw domain values (not indices)."""
        if len(values) != self.arity:
            raise SchemaError(
                f"expected {self.arity} values, got {len(values)}"
            )
        encoded = tuple(self.value_index(f, v) for f, v in enumerate(values))
        return Example(values=encoded, label=label)

    def decode(self, x: "Example") -> tuple[str, ...]:
        return tuple(self.domain(f)[v] for f, v in enumerate(x.values))

    def to_json_obj(self) -> dict:
        return {
            "features": [
                {"name": name, "domain": list(domain)} for name, domain in self.features
            ]
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FeatureSchema":
        try:
            features = tuple(
                (str(f["name"]), tuple(str(v) for v in f["domain"]))
                for f in obj["features"]
            )
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema block: {exc}") from exc
        return cls(features)

    @classmethod
    def binary(cls, n_features: int, prefix: str = "X") -> "FeatureSchema":
        """Convenience: n binary features named X1..Xn with domain ('0', '1')."""
        return cls(tuple((f"{prefix}{i + 1}", ("0", "1")) for i in range(n_features)))


@dataclass(frozen=True, order=True)
class Literal:
    """A single feature test: feature == value or feature != value.

    ``value`` is an index into the feature's domain.  A literal and its
    negation are distinct literals satisfied by complementary examples.
    """

    feature: int
    value: int
    negated: bool = False

    def negate(self) -> "Literal":
        return Literal(self.feature, self.value, not self.negated)

    def render(self, schema: FeatureSchema) -> str:
        op = "!=" if self.negated else "="
        return f"{schema.name(self.feature)}{op}{schema.domain(self.feature)[self.value]}"

    def to_json_obj(self) -> dict:
        return {"feature": self.feature, "value": self.value, "negated": self.negated}

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Literal":
        return cls(int(obj["feature"]), int(obj["value"]), bool(obj["negated"]))


@dataclass(frozen=True)
class Example:
    """One row: a value index per schema feature plus an optional binary label.

    Label semantics: 1 marks a correct ("positive") action, 0 an incorrect
    one, None an unlabeled pool row.
    """

    values: tuple[int, ...]
    label: Optional[int] = None

    def with_label(self, label: Optional[int]) -> "Example":
        return Example(self.values, label)


def satisfies(x: Example, lit: Literal) -> bool:
    """True iff the literal's equality/inequality test holds on x."""
    if lit.feature < 0 or lit.feature >= len(x.values):
        raise SchemaError(f"literal feature index {lit.feature} out of range")
    hit = x.values[lit.feature] == lit.value
    return hit != lit.negated


def satisfies_all(x: Example, literals: Iterable[Literal]) -> bool:
    return all(satisfies(x, lit) for lit in literals)


@dataclass(frozen=True)
class Dataset:
    """A schema plus an ordered list of examples.

    Positions in ``examples`` are the universal sample indices used by node
    caching; appending examples never changes existing indices.
    """

    schema: FeatureSchema
    examples: tuple[Example, ...]
    _arrays: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self) -> None:
        arity = self.schema.arity
        for i, x in enumerate(self.examples):
            if len(x.values) != arity:
                raise SchemaError(f"example {i} has {len(x.values)} values, expected {arity}")
            for f, v in enumerate(x.values):
                if not 0 <= v < len(self.schema.domain(f)):
                    raise SchemaError(
                        f"example {i} value index {v} outside domain of "
                        f"feature {self.schema.name(f)!r}"
                    )
            if x.label not in (None, 0, 1):
                raise SchemaError(f"example {i} label must be 0, 1 or None")

    def __len__(self) -> int:
        return len(self.examples)

    @property
    def fully_labeled(self) -> bool:
        return all(x.label is not None for x in self.examples)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, y) as int16 arrays; unlabeled rows get label -1."""
        if "X" not in self._arrays:
            m, n = len(self.examples), self.schema.arity
            X = np.empty((m, n), dtype=np.int16)
            y = np.empty(m, dtype=np.int16)
            for i, ex in enumerate(self.examples):
                X[i] = ex.values
                y[i] = -1 if ex.label is None else ex.label
            self._arrays["X"] = X
            self._arrays["y"] = y
        return self._arrays["X"], self._arrays["y"]

    def evidence_units(self) -> np.ndarray:
        """Group id per row, one id per distinct (values, label) pair.

        Repeating an identical labeled example adds no evidence about the
        target concept, so split utilities weight distinct units rather
        than raw rows; this keeps confirmations of already-seen examples
        from reshuffling tie-breaks.
        """
        if "unit" not in self._arrays:
            X, y = self.as_arrays()
            _, inverse = np.unique(
                np.column_stack([X, y]), axis=0, return_inverse=True
            )
            self._arrays["unit"] = inverse.astype(np.int64)
        return self._arrays["unit"]

    def extended(self, new_examples: Sequence[Example]) -> "Dataset":
        """New dataset with rows appended; existing indices are unchanged."""
        return Dataset(self.schema, self.examples + tuple(new_examples))

    def to_json_obj(self) -> dict:
        return {
            "schema": self.schema.to_json_obj(),
            "examples": [
                {
                    "values": list(self.schema.decode(x)),
                    "label": x.label,
                }
                for x in self.examples
            ],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "Dataset":
        schema = FeatureSchema.from_json_obj(obj["schema"])
        examples = []
        for i, row in enumerate(obj.get("examples", [])):
            label = row.get("label")
            if label is not None:
                label = _parse_label(label, where=f"example {i}")
            try:
                examples.append(schema.example(row["values"], label))
            except SchemaError as exc:
                raise SchemaError(f"example {i}: {exc}") from exc
        return cls(schema, tuple(examples))


def _parse_label(raw: object, where: str) -> Optional[int]:
    text = str(raw).strip()
    if text in ("1", "+", "true", "True"):
        return POSITIVE
    if text in ("0", "-", "false", "False"):
        return NEGATIVE
    if text == "":
        return None
    raise DatasetError(f"{where}: label {raw!r} not one of +,-,1,0")


def _read_text(source: Union[bytes, str, io.IOBase]) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def _looks_continuous(values: list[str]) -> bool:
    distinct = set(values)
    if len(distinct) > MAX_INFERRED_DOMAIN:
        return True
    for v in distinct:
        try:
            f = float(v)
        except ValueError:
            return False
        if not f.is_integer():
            return True
    return False


def load_dataset(source: Union[bytes, str, io.IOBase], format: str = "csv") -> Dataset:
    """Parse a CSV or JSON byte stream into a Dataset.

    CSV layout: first line feature names (label column named ``label``),
    optional second line of domain declarations ``name:v1|v2|...``, then
    rows.  Missing labels are permitted (unlabeled pools); fitting such a
    dataset errors downstream.  Continuous-looking columns are rejected.
    """
    text = _read_text(source)
    if format == "json":
        return Dataset.from_json_obj(json.loads(text))
    if format != "csv":
        raise DatasetError(f"unknown dataset format {format!r}")

    rows = [row for row in csv.reader(io.StringIO(text))]
    if not rows:
        raise DatasetError("empty CSV: no header row")
    header = [h.strip() for h in rows[0]]
    try:
        label_col: Optional[int] = header.index("label")
    except ValueError:
        label_col = None
    feature_cols = [i for i in range(len(header)) if i != label_col]
    if not feature_cols:
        raise DatasetError("CSV declares no feature columns")

    body_start = 1
    declared: dict[str, tuple[str, ...]] = {}
    if len(rows) > 1 and all(":" in rows[1][i] for i in feature_cols if i < len(rows[1])):
        for i in feature_cols:
            name, _, domain = rows[1][i].partition(":")
            if name.strip() != header[i]:
                raise SchemaError(
                    f"domain declaration {rows[1][i]!r} does not match column {header[i]!r}"
                )
            declared[header[i]] = tuple(v.strip() for v in domain.split("|"))
        body_start = 2

    body = [row for row in rows[body_start:] if row and any(cell.strip() for cell in row)]
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise DatasetError(f"row {r}: expected {len(header)} cells, got {len(row)}")

    features = []
    for i in feature_cols:
        name = header[i]
        if name in declared:
            domain = declared[name]
        else:
            column = [row[i].strip() for row in body]
            if _looks_continuous(column):
                raise SchemaError(
                    f"column {name!r} looks continuous; declare a finite domain"
                )
            uniques = sorted(set(column))
            if set(uniques) <= {"0", "1"}:
                domain = ("0", "1")
            elif len(uniques) >= 2:
                domain = tuple(uniques)
            else:
                raise SchemaError(
                    f"column {name!r} has a single observed value; declare its domain"
                )
        features.append((name, domain))
    schema = FeatureSchema(tuple(features))

    examples = []
    for r, row in enumerate(body):
        label = None
        if label_col is not None:
            label = _parse_label(row[label_col], where=f"row {r}")
        values = []
        for f, i in enumerate(feature_cols):
            cell = row[i].strip()
            if cell == "":
                raise DatasetError(f"row {r}: missing value in column {header[i]!r}")
            try:
                values.append(schema.value_index(f, cell))
            except SchemaError:
                raise SchemaError(
                    f"row {r}, column {header[i]!r}: value {cell!r} outside domain"
                ) from None
        examples.append(Example(tuple(values), label))
    return Dataset(schema, tuple(examples))


def dump_dataset(data: Dataset, format: str = "csv") -> str:
    """Serialize a Dataset; load_dataset(dump_dataset(d)) == d."""
    if format == "json":
        return json.dumps(data.to_json_obj(), sort_keys=True, separators=(",", ":")) + "\n"
    if format != "csv":
        raise DatasetError(f"unknown dataset format {format!r}")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    names = [name for name, _ in data.schema.features]
    writer.writerow(names + ["label"])
    writer.writerow(
        [f"{name}:{'|'.join(domain)}" for name, domain in data.schema.features] + ["label"]
    )
    for x in data.examples:
        label = "" if x.label is None else str(x.label)
        writer.writerow(list(data.schema.decode(x)) + [label])
    return out.getvalue()
