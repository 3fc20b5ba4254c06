"""Simulated ideal-teacher loop, synthetic concepts, pools and metrics.

A hidden DNF target over a finite schema stands in for the ground-truth
preconditions of an interactive task: problems are states of candidate
actions labeled by the target, the teacher grades every action a learner
proposes and demonstrates a correct one when the learner proposes none,
and after each problem the learner is scored on a fixed holdout.

Everything is deterministic given the experiment seed so paired runs of
different learners see identical concepts, problems and holdouts.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Protocol, Sequence

import numpy as np

from . import baseline, tree as tree_mod, vspace
from .data import Dataset, Example, FeatureSchema, Literal, NEGATIVE, POSITIVE, satisfies_all

_CONCEPT_ATTEMPTS = 500
_STATE_ATTEMPTS = 500
_TRIVIALITY_PROBES = 512


@dataclass(frozen=True)
class ConceptSpec:
    """A satisfiable, falsifiable DNF target: ground truth for a session."""

    schema: FeatureSchema
    disjuncts: tuple[frozenset[Literal], ...]
    seed: int

    def label(self, x: Example) -> int:
        for conj in self.disjuncts:
            if satisfies_all(x, conj):
                return POSITIVE
        return NEGATIVE

    def render(self) -> str:
        return vspace.render_dnf(self.disjuncts, self.schema)


@dataclass(frozen=True)
class Problem:
    """Ordered states, each a tuple of candidate actions.

    In simulation the candidates carry their ground-truth label; service
    pools use label-free candidates since truth comes from the human.
    """

    states: tuple[tuple[Example, ...], ...]

    def candidates(self) -> list[Example]:
        return [x for state in self.states for x in state]


def _random_example(schema: FeatureSchema, rng: random.Random) -> Example:
    values = tuple(rng.randrange(len(dom)) for _, dom in schema.features)
    return Example(values)


def gen_concept(
    schema: FeatureSchema, n_disjuncts: int, literals_per: int, seed: int
) -> ConceptSpec:
    """Random DNF target, rejection-sampled until neither trivially true
    nor trivially false on a probe sample of the example space."""
    if n_disjuncts < 1 or literals_per < 1:
        raise ValueError("n_disjuncts and literals_per must be >= 1")
    if literals_per > schema.arity:
        raise ValueError(
            f"literals_per={literals_per} exceeds {schema.arity} features"
        )
    rng = random.Random(seed)
    for _ in range(_CONCEPT_ATTEMPTS):
        disjuncts = []
        for _ in range(n_disjuncts):
            feats = rng.sample(range(schema.arity), literals_per)
            conj = frozenset(
                Literal(f, rng.randrange(len(schema.domain(f))), False) for f in feats
            )
            disjuncts.append(conj)
        concept = ConceptSpec(schema, tuple(disjuncts), seed)
        probes = [_random_example(schema, rng) for _ in range(_TRIVIALITY_PROBES)]
        labels = {concept.label(p) for p in probes}
        if labels == {POSITIVE, NEGATIVE}:
            return concept
    raise ValueError("could not generate a non-trivial concept for this schema")


def gen_problem(
    concept: ConceptSpec, n_states: int, candidates_per_state: int, seed: int
) -> Problem:
    """States of uniformly sampled labeled candidates, each state guaranteed
    at least one ground-truth-positive candidate so a demo always exists."""
    if n_states < 1 or candidates_per_state < 1:
        raise ValueError("n_states and candidates_per_state must be >= 1")
    rng = random.Random(seed)
    states = []
    for _ in range(n_states):
        for _ in range(_STATE_ATTEMPTS):
            cands = tuple(
                (lambda x: x.with_label(concept.label(x)))(_random_example(concept.schema, rng))
                for _ in range(candidates_per_state)
            )
            if any(c.label == POSITIVE for c in cands):
                states.append(cands)
                break
        else:
            raise ValueError(
                "sampling budget exhausted: concept admits no reachable positives"
            )
    return Problem(tuple(states))


class Learner(Protocol):
    """What the teaching loop needs from a model; new comparison models
    (ensembles etc.) plug in by implementing this."""

    def predict(self, x: Example) -> int: ...

    def certainty(self, x: Example) -> float: ...

    def update(self, examples: Sequence[Example]) -> None: ...

    def batch_scores(self, examples: Sequence[Example]) -> tuple[np.ndarray, np.ndarray]:
        """(predictions, signed certainties) for many examples."""
        ...

    def ambiguity_total(self) -> int: ...


class StandLearner:
    """Option-tree learner with incremental refits and exact duplicates
    dropped before they reach the tree."""

    def __init__(self, schema: FeatureSchema, alpha: float = 1.0):
        self.schema = schema
        self.alpha = alpha
        self.tree: Optional[tree_mod.StandTree] = None
        self._seen: set[tuple[tuple[int, ...], int]] = set()

    def _fresh(self, examples: Sequence[Example]) -> list[Example]:
        out = []
        for x in examples:
            sig = (x.values, x.label)
            if sig not in self._seen:
                self._seen.add(sig)
                out.append(x)
        return out

    def update(self, examples: Sequence[Example]) -> None:
        fresh = self._fresh(examples)
        if not fresh:
            return
        if self.tree is None:
            self.tree = tree_mod.fit(Dataset(self.schema, tuple(fresh)), self.alpha)
        else:
            self.tree = tree_mod.incremental_update(self.tree, fresh)

    def predict(self, x: Example) -> int:
        if self.tree is None:
            return NEGATIVE
        return self.tree.predict(x)

    def certainty(self, x: Example) -> float:
        if self.tree is None:
            return 0.0
        return vspace.instance_certainty(self.tree, x).signed_ic

    def batch_scores(self, examples: Sequence[Example]) -> tuple[np.ndarray, np.ndarray]:
        if self.tree is None:
            n = len(examples)
            return np.full(n, NEGATIVE), np.zeros(n)
        scores = vspace.certainty_batch(self.tree, examples)
        return scores["prediction"], scores["signed_ic"]

    def ambiguity_total(self) -> int:
        return 0 if self.tree is None else vspace.ambiguity(self.tree).total


class GreedyTreeLearner:
    """Baseline: refits one random-tie-break greedy tree per training event;
    its certainty is the hard prediction mapped to +/-1."""

    def __init__(self, schema: FeatureSchema, seed: int = 0):
        self.schema = schema
        self.seed = seed
        self._updates = 0
        self._examples: list[Example] = []
        self._seen: set[tuple[tuple[int, ...], int]] = set()
        self.decision_tree: Optional[baseline.DecisionTree] = None

    def update(self, examples: Sequence[Example]) -> None:
        fresh = [
            x
            for x in examples
            if (x.values, x.label) not in self._seen and not self._seen.add((x.values, x.label))
        ]
        if not fresh:
            return
        self._examples.extend(fresh)
        self._updates += 1
        self.decision_tree = baseline.fit_tree(
            Dataset(self.schema, tuple(self._examples)), seed=self.seed + self._updates
        )

    def predict(self, x: Example) -> int:
        if self.decision_tree is None:
            return NEGATIVE
        return baseline.tree_predict(self.decision_tree, x)

    def certainty(self, x: Example) -> float:
        if self.decision_tree is None:
            return 0.0
        return 1.0 if self.predict(x) == POSITIVE else -1.0

    def batch_scores(self, examples: Sequence[Example]) -> tuple[np.ndarray, np.ndarray]:
        preds = np.asarray([self.predict(x) for x in examples])
        certs = np.where(preds == POSITIVE, 1.0, -1.0)
        if self.decision_tree is None:
            certs = np.zeros(len(examples))
        return preds, certs

    def ambiguity_total(self) -> int:
        return 0


def teach_problem(
    model: Learner,
    problem: Problem,
    noise_rate: float = 0.0,
    rng: Optional[random.Random] = None,
) -> list[dict]:
    """One graded problem: every proposed action gets its true label, a
    demonstration is added when no true-positive action was proposed, and
    the model refits after each state.  Returns a per-state log."""
    log = []
    for state in problem.states:
        feedback: list[Example] = []
        proposed_true_positive = False
        for cand in state:
            if model.predict(cand) == POSITIVE:
                label = cand.label
                if noise_rate > 0.0 and rng is not None and rng.random() < noise_rate:
                    label = POSITIVE if label == NEGATIVE else NEGATIVE
                feedback.append(cand.with_label(label))
                if cand.label == POSITIVE:
                    proposed_true_positive = True
        demo = None
        if not proposed_true_positive:
            demo = next(c for c in state if c.label == POSITIVE)
            feedback.append(demo.with_label(POSITIVE))
        model.update(feedback)
        log.append(
            {
                "n_feedback": len(feedback),
                "demonstrated": demo is not None,
                "corrections": sum(1 for f in feedback if f.label == NEGATIVE),
            }
        )
    return log


@dataclass
class HoldoutView:
    """Flattened holdout with state segmentation for fast metric passes."""

    problems: tuple[Problem, ...]
    examples: list[Example] = field(init=False)
    truths: np.ndarray = field(init=False)
    state_slices: list[tuple[int, int]] = field(init=False)

    def __post_init__(self):
        self.examples = []
        self.state_slices = []
        for problem in self.problems:
            for state in problem.states:
                start = len(self.examples)
                self.examples.extend(state)
                self.state_slices.append((start, len(self.examples)))
        self.truths = np.asarray([x.label for x in self.examples])


def completeness(model: Learner, holdout: Sequence[Problem]) -> float:
    """Fraction of holdout states where every candidate is classified
    correctly (every correct action proposed, no incorrect ones)."""
    if not holdout:
        raise ValueError("holdout must be nonempty")
    view = holdout if isinstance(holdout, HoldoutView) else HoldoutView(tuple(holdout))
    preds, _ = model.batch_scores(view.examples)
    return _completeness_from(preds, view)


def _completeness_from(preds: np.ndarray, view: HoldoutView) -> float:
    ok = preds == view.truths
    good = sum(1 for lo, hi in view.state_slices if ok[lo:hi].all())
    return good / len(view.state_slices)


def error_counts(model: Learner, holdout: Sequence[Problem]) -> tuple[int, int]:
    """(omissions, commissions): false negatives and false positives per
    candidate across the holdout."""
    if not holdout:
        raise ValueError("holdout must be nonempty")
    view = holdout if isinstance(holdout, HoldoutView) else HoldoutView(tuple(holdout))
    preds, _ = model.batch_scores(view.examples)
    omissions = int(((preds == NEGATIVE) & (view.truths == POSITIVE)).sum())
    commissions = int(((preds == POSITIVE) & (view.truths == NEGATIVE)).sum())
    return omissions, commissions


@dataclass
class TraceRecord:
    problem_index: int
    completeness: float
    omissions: int
    commissions: int
    ambiguity: int
    predictions: np.ndarray
    certainties: np.ndarray
    pool_min_score: Optional[float] = None

    def summary(self) -> dict:
        return {
            "problem": self.problem_index,
            "completeness": self.completeness,
            "omissions": self.omissions,
            "commissions": self.commissions,
            "ambiguity": self.ambiguity,
            "mean_abs_certainty": float(np.mean(np.abs(self.certainties))),
            "pool_min_score": self.pool_min_score,
        }


@dataclass
class TeachingTrace:
    """Per-problem metric records for one repetition of one learner."""

    learner: str
    mode: str
    rep: int
    seed: int
    truths: np.ndarray
    records: list[TraceRecord] = field(default_factory=list)


def reoccurrence_rates(trace: TeachingTrace) -> tuple[float, float, float]:
    """(total, omission, commission) rates of correct predictions that turn
    incorrect across consecutive training events, pooled over the trace."""
    if len(trace.records) < 2:
        raise ValueError("need at least 2 records with prediction snapshots")
    tp_before = fn_after = tn_before = fp_after = 0
    truths = trace.truths
    for before, after in zip(trace.records, trace.records[1:]):
        was_tp = (before.predictions == POSITIVE) & (truths == POSITIVE)
        was_tn = (before.predictions == NEGATIVE) & (truths == NEGATIVE)
        tp_before += int(was_tp.sum())
        tn_before += int(was_tn.sum())
        fn_after += int((was_tp & (after.predictions == NEGATIVE)).sum())
        fp_after += int((was_tn & (after.predictions == POSITIVE)).sum())
    omission = fn_after / tp_before if tp_before else 0.0
    commission = fp_after / tn_before if tn_before else 0.0
    total_before = tp_before + tn_before
    total = (fn_after + fp_after) / total_before if total_before else 0.0
    return total, omission, commission


def productive_monotonicity(trace: TeachingTrace, start: int = 0) -> Optional[float]:
    """Fraction of certainty changes moving toward the ground-truth pole,
    over consecutive snapshots from record ``start`` on; None if nothing
    changed."""
    records = trace.records[start:]
    if len(records) < 2:
        raise ValueError("need at least 2 certainty snapshots")
    truths = trace.truths
    changed = productive = 0
    for before, after in zip(records, records[1:]):
        delta = after.certainties - before.certainties
        moved = delta != 0.0
        toward = np.where(truths == POSITIVE, delta > 0.0, delta < 0.0)
        changed += int(moved.sum())
        productive += int((moved & toward).sum())
    if changed == 0:
        return None
    return productive / changed


def precision_at_certainty(
    model: Learner, holdout: Sequence[Problem], threshold: float
) -> Optional[float]:
    """Precision of positive predictions at certainty >= threshold; None
    when no prediction clears the threshold."""
    if not -1.0 <= threshold <= 1.0:
        raise ValueError("threshold must be in [-1, 1]")
    view = holdout if isinstance(holdout, HoldoutView) else HoldoutView(tuple(holdout))
    preds, certs = model.batch_scores(view.examples)
    mask = (preds == POSITIVE) & (certs >= threshold)
    if not mask.any():
        return None
    return float((view.truths[mask] == POSITIVE).mean())


def problem_score(model: Learner, problem: Problem) -> float:
    """Minimum signed certainty among candidates the model predicts
    positive across a full rollout of the problem's states; 0.0 when the
    model proposes nothing."""
    cands = problem.candidates()
    preds, certs = model.batch_scores(cands)
    proposed = preds == POSITIVE
    if not proposed.any():
        return 0.0
    return float(certs[proposed].min())


def active_select(
    model: Learner,
    pool: Sequence[Problem],
    regenerate: Callable[[], Problem],
) -> tuple[Problem, list[Problem], float]:
    """Pick the minimum-score problem, then replace it and the highest
    scoring half of the pool with regenerated problems.

    Returns (chosen problem, refreshed pool, chosen score).  Ties go to
    the earliest pool slot; survivors keep their slots.
    """
    if not pool:
        raise ValueError("pool must be nonempty")
    scores = [problem_score(model, p) for p in pool]
    chosen_idx = min(range(len(pool)), key=lambda i: (scores[i], i))
    chosen = pool[chosen_idx]
    half = len(pool) // 2
    by_score_desc = sorted(range(len(pool)), key=lambda i: (-scores[i], i))
    replace = set(by_score_desc[:half]) | {chosen_idx}
    refreshed = [
        regenerate() if i in replace else pool[i] for i in range(len(pool))
    ]
    return chosen, refreshed, scores[chosen_idx]


def active_utility(c_active: float, c_normal: float) -> Optional[float]:
    """Fraction of the remaining completeness deficit recovered by
    self-selection: (c_active - c_normal) / (1 - c_normal); None when the
    baseline already has no deficit."""
    if c_normal > 1.0:
        raise ValueError("completeness cannot exceed 1.0")
    if c_normal == 1.0:
        return None
    # floats are read as their decimal literals so 0.7 means 7/10 exactly
    active = Fraction(str(c_active)) if isinstance(c_active, float) else Fraction(c_active)
    normal = Fraction(str(c_normal)) if isinstance(c_normal, float) else Fraction(c_normal)
    return float((active - normal) / (1 - normal))


@dataclass(frozen=True)
class ExperimentConfig:
    learner: str = "stand"
    mode: str = "normal"
    n_features: int = 20
    n_disjuncts: int = 3
    literals_per: int = 3
    n_problems: int = 100
    n_reps: int = 20
    n_states: int = 1
    candidates_per_state: int = 5
    holdout_problems: int = 25
    pool_size: int = 10
    alpha: float = 1.0
    seed: int = 0
    noise_rate: float = 0.0

    def validate(self) -> None:
        if self.learner not in ("stand", "tree"):
            raise ValueError(f"unknown learner {self.learner!r}")
        if self.mode not in ("normal", "active"):
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ExperimentConfig":
        cfg = cls(**obj)
        cfg.validate()
        return cfg


def _make_learner(config: ExperimentConfig, schema: FeatureSchema) -> Learner:
    if config.learner == "stand":
        return StandLearner(schema, alpha=config.alpha)
    return GreedyTreeLearner(schema, seed=config.seed)


def _derive_seed(base: int, rep: int, stream: int, index: int = 0) -> int:
    return ((base * 1_000_003 + rep) * 11 + stream) * 1_000_003 + index


def run_experiment(config: ExperimentConfig) -> list[TeachingTrace]:
    """Full teaching traces, one per repetition, deterministic given seeds.

    Concepts, holdouts and (in normal mode) the training problem stream
    depend only on (seed, rep), so runs that differ solely in learner are
    paired sample-for-sample.
    """
    config.validate()
    schema = FeatureSchema.binary(config.n_features)
    traces: list[TeachingTrace] = []
    for rep in range(config.n_reps):
        concept = gen_concept(
            schema,
            config.n_disjuncts,
            config.literals_per,
            seed=_derive_seed(config.seed, rep, 1),
        )
        holdout = HoldoutView(
            tuple(
                gen_problem(
                    concept,
                    config.n_states,
                    config.candidates_per_state,
                    seed=_derive_seed(config.seed, rep, 2, i),
                )
                for i in range(config.holdout_problems)
            )
        )
        model = _make_learner(config, schema)
        noise_rng = random.Random(_derive_seed(config.seed, rep, 5))
        trace = TeachingTrace(
            learner=config.learner,
            mode=config.mode,
            rep=rep,
            seed=config.seed,
            truths=holdout.truths,
        )

        fresh_counter = [0]

        def next_problem_seed(stream: int) -> int:
            fresh_counter[0] += 1
            return _derive_seed(config.seed, rep, stream, fresh_counter[0])

        pool: list[Problem] = []
        if config.mode == "active":
            pool = [
                gen_problem(
                    concept,
                    config.n_states,
                    config.candidates_per_state,
                    seed=next_problem_seed(3),
                )
                for _ in range(config.pool_size)
            ]

        for t in range(config.n_problems):
            pool_min = None
            if config.mode == "active":
                problem, pool, pool_min = active_select(
                    model,
                    pool,
                    regenerate=lambda: gen_problem(
                        concept,
                        config.n_states,
                        config.candidates_per_state,
                        seed=next_problem_seed(3),
                    ),
                )
            else:
                problem = gen_problem(
                    concept,
                    config.n_states,
                    config.candidates_per_state,
                    seed=_derive_seed(config.seed, rep, 4, t),
                )
            teach_problem(model, problem, noise_rate=config.noise_rate, rng=noise_rng)

            preds, certs = model.batch_scores(holdout.examples)
            omissions = int(((preds == NEGATIVE) & (holdout.truths == POSITIVE)).sum())
            commissions = int(((preds == POSITIVE) & (holdout.truths == NEGATIVE)).sum())
            trace.records.append(
                TraceRecord(
                    problem_index=t,
                    completeness=_completeness_from(preds, holdout),
                    omissions=omissions,
                    commissions=commissions,
                    ambiguity=model.ambiguity_total(),
                    predictions=preds,
                    certainties=certs,
                    pool_min_score=pool_min,
                )
            )
        traces.append(trace)
    return traces


TRACE_COLUMNS = [
    "learner",
    "mode",
    "rep",
    "seed",
    "problem",
    "completeness",
    "omissions",
    "commissions",
    "ambiguity",
    "mean_abs_certainty",
    "pool_min_score",
]


def traces_to_csv(traces: Sequence[TeachingTrace]) -> str:
    """One row per problem per repetition; header carries the seed."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for trace in traces:
        for record in trace.records:
            s = record.summary()
            writer.writerow(
                [
                    trace.learner,
                    trace.mode,
                    trace.rep,
                    trace.seed,
                    s["problem"],
                    f"{s['completeness']:.6f}",
                    s["omissions"],
                    s["commissions"],
                    s["ambiguity"],
                    f"{s['mean_abs_certainty']:.6f}",
                    "" if s["pool_min_score"] is None else f"{s['pool_min_score']:.6f}",
                ]
            )
    return out.getvalue()


def traces_to_json_obj(traces: Sequence[TeachingTrace]) -> dict:
    return {
        "traces": [
            {
                "learner": t.learner,
                "mode": t.mode,
                "rep": t.rep,
                "seed": t.seed,
                "records": [r.summary() for r in t.records],
            }
            for t in traces
        ]
    }


def mean_completeness_at(traces: Sequence[TeachingTrace], problem_number: int) -> float:
    """Mean completeness across reps after the Nth problem (1-based)."""
    return float(
        np.mean([t.records[problem_number - 1].completeness for t in traces])
    )
