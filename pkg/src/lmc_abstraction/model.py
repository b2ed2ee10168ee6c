"""Labelled discrete-time Markov chains and the quantities read off them.

States carry sets of atomic propositions.  A chain is built once and never
mutated; every query below is a pure function of the chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BlockOutOfRange,
    InvalidPath,
    LengthMismatch,
    MalformedModel,
    MissingLabel,
    NegativeEntry,
    NonStochasticRow,
    UnknownState,
)

STOCHASTIC_TOL = 1e-9
EQ_TOL = 1e-12

Label = frozenset


def as_label(value) -> frozenset:
    """Normalise a label given as a string (one proposition) or an iterable of them."""
    if isinstance(value, str):
        return frozenset((value,))
    return frozenset(value)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class LabeledMarkovChain:
    """A finite labelled Markov chain ``(S, P, L)`` with an initial state.

    ``labels[i]`` is the proposition set of ``states[i]`` and row ``i`` of
    ``matrix`` its successor distribution.  Construction validates every
    invariant and raises a :class:`~lmc_abstraction.errors.ModelError`
    subclass on the first violation.
    """

    states: tuple
    labels: tuple
    matrix: np.ndarray
    initial_state: str
    initial_distribution: np.ndarray | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise MalformedModel("a chain needs at least one state")
        if len(set(states)) != len(states):
            raise MalformedModel("duplicate state identifiers")
        if len(self.labels) != len(states):
            raise MalformedModel(
                f"{len(self.labels)} label sets for {len(states)} states"
            )
        labels = tuple(as_label(lab) for lab in self.labels)
        matrix = np.array(self.matrix, dtype=float)
        n = len(states)
        if matrix.shape != (n, n):
            raise MalformedModel(f"matrix has shape {matrix.shape}, expected {(n, n)}")
        if not np.all(np.isfinite(matrix)):
            raise MalformedModel("matrix contains non-finite entries")
        neg = np.argwhere(matrix < 0)
        if len(neg):
            i, j = neg[0]
            raise NegativeEntry(int(i), int(j), float(matrix[i, j]))
        for i, row in enumerate(matrix):
            total = math.fsum(row)
            if abs(total - 1.0) > STOCHASTIC_TOL:
                raise NonStochasticRow(i, total)
        index = {s: i for i, s in enumerate(states)}
        if self.initial_state not in index:
            raise UnknownState(self.initial_state)
        dist = self.initial_distribution
        if dist is not None:
            dist = np.array(dist, dtype=float)
            if dist.shape != (n,):
                raise MalformedModel("initial distribution has the wrong length")
            if np.any(dist < 0) or abs(math.fsum(dist) - 1.0) > STOCHASTIC_TOL:
                raise MalformedModel("initial distribution is not stochastic")
            dist = _readonly(dist)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "matrix", _readonly(matrix))
        object.__setattr__(self, "initial_distribution", dist)
        object.__setattr__(self, "_index", index)

    @property
    def n(self) -> int:
        return len(self.states)

    def index(self, state) -> int:
        try:
            return self._index[state]
        except (KeyError, TypeError):
            raise UnknownState(state) from None

    def label(self, state) -> frozenset:
        return self.labels[self.index(state)]

    def p0(self, state) -> float:
        """Initial probability of ``state`` (point mass unless a distribution was given)."""
        i = self.index(state)
        if self.initial_distribution is None:
            return 1.0 if state == self.initial_state else 0.0
        return float(self.initial_distribution[i])

    @property
    def propositions(self) -> frozenset:
        return frozenset().union(*self.labels)

    def __eq__(self, other):
        if not isinstance(other, LabeledMarkovChain):
            return NotImplemented
        same_dist = (
            self.initial_distribution is None and other.initial_distribution is None
        ) or (
            self.initial_distribution is not None
            and other.initial_distribution is not None
            and np.array_equal(self.initial_distribution, other.initial_distribution)
        )
        return (
            self.states == other.states
            and self.labels == other.labels
            and self.initial_state == other.initial_state
            and np.array_equal(self.matrix, other.matrix)
            and same_dist
        )

    __hash__ = None


def validate_model(raw: Mapping) -> LabeledMarkovChain:
    """Build a chain from the JSON model description.

    ``raw`` has ``states`` (list of ``{"id", "label"}``), ``initial``,
    ``matrix`` and optionally ``initial_distribution``.
    """
    for key in ("states", "initial", "matrix"):
        if key not in raw:
            raise MalformedModel(f"model description lacks {key!r}")
    ids, labels = [], []
    for entry in raw["states"]:
        if not isinstance(entry, Mapping) or "id" not in entry:
            raise MalformedModel(f"state entry without id: {entry!r}")
        if "label" not in entry or entry["label"] is None:
            raise MissingLabel(entry["id"])
        ids.append(entry["id"])
        labels.append(as_label(entry["label"]))
    return LabeledMarkovChain(
        states=tuple(ids),
        labels=tuple(labels),
        matrix=raw["matrix"],
        initial_state=raw["initial"],
        initial_distribution=raw.get("initial_distribution"),
    )


def chain_to_dict(chain: LabeledMarkovChain) -> dict:
    out = {
        "states": [
            {"id": s, "label": sorted(lab)} for s, lab in zip(chain.states, chain.labels)
        ],
        "initial": chain.initial_state,
        "matrix": chain.matrix.tolist(),
    }
    if chain.initial_distribution is not None:
        out["initial_distribution"] = chain.initial_distribution.tolist()
    return out


@dataclass(frozen=True)
class LabelPartition:
    """Ordered label-consistent blocks ``S_1..S_m`` of a chain's state space."""

    blocks: tuple
    block_label: tuple
    block_of: Mapping

    @classmethod
    def from_blocks(cls, chain: LabeledMarkovChain, blocks: Iterable[Iterable]):
        """Validate an explicit partition; blocks keep the given order, states keep chain order."""
        blocks = [list(b) for b in blocks]
        block_of = {}
        for i, block in enumerate(blocks):
            if not block:
                raise MalformedModel(f"block {i} is empty")
            for s in block:
                chain.index(s)
                if s in block_of:
                    raise MalformedModel(f"state {s!r} appears in two blocks")
                block_of[s] = i
        missing = [s for s in chain.states if s not in block_of]
        if missing:
            raise MalformedModel(f"states not covered by the partition: {missing}")
        ordered = []
        labels = []
        for block in blocks:
            block = sorted(block, key=chain.index)
            labs = {chain.label(s) for s in block}
            if len(labs) != 1:
                raise MalformedModel(f"block {block} mixes labels")
            ordered.append(tuple(block))
            labels.append(labs.pop())
        return cls(tuple(ordered), tuple(labels), dict(block_of))

    @property
    def m(self) -> int:
        return len(self.blocks)

    def membership(self, chain: LabeledMarkovChain) -> np.ndarray:
        """n x m 0/1 matrix, entry (s, i) set when s lies in block i."""
        out = np.zeros((chain.n, self.m))
        for s, i in self.block_of.items():
            out[chain.index(s), i] = 1.0
        return out


def partition_by_labels(chain: LabeledMarkovChain) -> LabelPartition:
    order: dict = {}
    for s, lab in zip(chain.states, chain.labels):
        order.setdefault(lab, []).append(s)
    return LabelPartition.from_blocks(chain, order.values())


def block_probability(chain: LabeledMarkovChain, s, block: Iterable) -> float:
    """Mass ``P(s, Q)`` that ``s`` sends into the state set ``Q``."""
    row = chain.matrix[chain.index(s)]
    return math.fsum(row[chain.index(q)] for q in set(block))


@dataclass(frozen=True)
class Path:
    """A finite path whose every step has positive probability in ``chain``."""

    states: tuple

    @classmethod
    def of(cls, chain: LabeledMarkovChain, states: Sequence) -> "Path":
        states = tuple(states)
        if not states:
            raise InvalidPath("a path has at least one state")
        idx = [chain.index(s) for s in states]
        for a, b in zip(idx, idx[1:]):
            if chain.matrix[a, b] <= 0:
                raise InvalidPath(
                    f"no transition {chain.states[a]!r} -> {chain.states[b]!r}"
                )
        return cls(states)

    def __len__(self):
        return len(self.states)


def path_probability(chain: LabeledMarkovChain, path) -> float:
    """Product of the transition probabilities along ``path`` (1 for a single state)."""
    states = path.states if isinstance(path, Path) else tuple(path)
    if not states:
        raise InvalidPath("a path has at least one state")
    idx = [chain.index(s) for s in states]
    prob = 1.0
    for a, b in zip(idx, idx[1:]):
        prob *= float(chain.matrix[a, b])
    return prob


@dataclass(frozen=True)
class TraceSet:
    """Label sequences of one common length ``k + 1``.

    Each trace element may be a proposition set or a bare string, which
    stands for a singleton label; so ``TraceSet.of(["aab", "abb"])`` holds
    two traces over singleton labels.
    """

    traces: frozenset

    @classmethod
    def of(cls, traces: Iterable[Iterable]) -> "TraceSet":
        normalised = frozenset(tuple(as_label(x) for x in t) for t in traces)
        lengths = {len(t) for t in normalised}
        if len(lengths) > 1:
            raise LengthMismatch(f"traces of different lengths {sorted(lengths)}")
        if 0 in lengths:
            raise LengthMismatch("empty trace")
        return cls(normalised)

    @property
    def length(self) -> int:
        return len(next(iter(self.traces))) if self.traces else 0


def trace_set_probability(chain: LabeledMarkovChain, traces, start=None) -> float:
    """Probability that the chain, started in ``start``, emits a trace in ``traces``.

    Includes the factor ``p0(start)``; ``start`` defaults to the initial
    state.  Evaluated layer by layer: the state vector is pushed one step and
    masked to the states carrying the next label of the trace.
    """
    if not isinstance(traces, TraceSet):
        traces = TraceSet.of(traces)
    start = chain.initial_state if start is None else start
    s0 = chain.index(start)
    weight = chain.p0(start)
    masks: dict = {}

    def mask(lab):
        if lab not in masks:
            masks[lab] = np.array([l == lab for l in chain.labels], dtype=float)
        return masks[lab]

    total = 0.0
    for trace in traces.traces:
        if chain.labels[s0] != trace[0]:
            continue
        vec = np.zeros(chain.n)
        vec[s0] = 1.0
        for lab in trace[1:]:
            vec = (vec @ chain.matrix) * mask(lab)
        total += vec.sum()
    return weight * total


def abstraction_rows(
    chain: LabeledMarkovChain, partition: LabelPartition, i: int
) -> list[np.ndarray]:
    """Block-mass vectors ``(P(s, S_1), ..., P(s, S_m))`` for every ``s`` in block ``i``."""
    if not 0 <= i < partition.m:
        raise BlockOutOfRange(f"block {i} outside 0..{partition.m - 1}")
    cols = [[chain.index(q) for q in block] for block in partition.blocks]
    rows = []
    for s in partition.blocks[i]:
        p = chain.matrix[chain.index(s)]
        rows.append(np.array([math.fsum(p[c]) for c in cols]))
    return rows
