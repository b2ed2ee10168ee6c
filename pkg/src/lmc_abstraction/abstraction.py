"""Standard lumped-chain abstractions and optimal-error interval abstractions.

Both start from the block-mass rows of a label partition.  The standard
abstraction picks one concrete state per block; the interval abstraction
keeps every stochastic vector whose worst-case sup-norm distance to the
block's rows is minimal, and falls back to a relaxed error when that set
is empty.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    EmptyInterval,
    IndexOutOfRange,
    InvalidRepresentative,
    MalformedModel,
    NotApplicable,
)
from .intervals import (
    SUM_TOL,
    TOL,
    Empty,
    IntervalMatrix,
    IntervalRow,
    classify,
    tighten,
    vertices,
)
from .model import (
    LabeledMarkovChain,
    LabelPartition,
    abstraction_rows,
    partition_by_labels,
)


def _stack(rows) -> np.ndarray:
    a = np.atleast_2d(np.asarray(rows, dtype=float))
    if a.size == 0:
        raise ValueError("at least one row is required")
    return a


def representative_error(rows, j: int) -> float:
    """Largest sup-norm distance from row ``j`` to any other row."""
    a = _stack(rows)
    if not 0 <= j < len(a):
        raise IndexOutOfRange(f"row {j} outside 0..{len(a) - 1}")
    if len(a) == 1:
        return 0.0
    return float(np.max(np.abs(a - a[j])))


def optimal_error(rows) -> float:
    """Half the sup-norm diameter of the row set."""
    a = _stack(rows)
    diam = np.max(np.abs(a[:, None, :] - a[None, :, :]))
    return float(diam) / 2


def envelope(rows) -> IntervalRow:
    a = _stack(rows)
    return IntervalRow(a.min(axis=0), a.max(axis=0))


def _opt_bounds(env: IntervalRow, radius: float) -> IntervalRow:
    # clipping to [0, 1] keeps exactly the same stochastic members
    lo = np.clip(env.upper - radius, 0.0, 1.0)
    hi = np.clip(env.lower + radius, 0.0, 1.0)
    return IntervalRow(lo, hi)


def optimal_set(rows) -> IntervalRow:
    """Box ``[v - beta, u + beta]`` whose stochastic members achieve error beta.

    May be empty; test with :func:`~lmc_abstraction.intervals.classify`.
    """
    return _opt_bounds(envelope(rows), optimal_error(rows))


@dataclass(frozen=True, eq=False)
class GammaRelaxation:
    gamma: float
    gamma_prime: float
    relaxed_row: IntervalRow
    r_star: np.ndarray
    eps_star: float


def _shrink_radius(values: np.ndarray, budget: float) -> float:
    """Smallest r >= 0 with sum(max(values - r, 0)) <= budget."""
    if math.fsum(np.maximum(values, 0.0)) <= budget:
        return 0.0
    desc = np.sort(values)[::-1]
    for c in range(1, len(desc) + 1):
        r = (math.fsum(desc[:c]) - budget) / c
        below = desc[c] if c < len(desc) else -np.inf
        if below <= r <= desc[c - 1]:
            return max(r, 0.0)
    return max((math.fsum(desc) - budget) / len(desc), 0.0)


def minimal_radius(env: IntervalRow, beta: float = 0.0) -> float:
    """Smallest r >= beta whose clipped box ``[v - r, u + r]`` contains a stochastic vector."""
    u, v = env.lower, env.upper
    r_low = _shrink_radius(v, 1.0)
    r_high = _shrink_radius(1.0 - u, env.m - 1.0)
    return max(beta, r_low, r_high)


def gamma_relaxation(rows, beta: float | None = None, env: IntervalRow | None = None):
    """Relaxed error and witness vector for a block whose optimal set is empty.

    When ``v - beta`` sums above 1 the witness shifts it down uniformly (and
    symmetrically for ``u + beta`` below 1), giving
    ``gamma = max((1 - sum u)/m, (sum v - 1)/m)``.  If that shift would leave
    the unit interval, or the set is empty only because of the clip at 0,
    ``gamma`` is instead the smallest radius whose clipped box meets the
    simplex and the witness is a member of that box.
    """
    a = _stack(rows)
    beta = optimal_error(a) if beta is None else beta
    env = envelope(a) if env is None else env
    if not _opt_bounds(env, beta).is_empty:
        raise NotApplicable("the optimal set is non-empty; no relaxation needed")
    u, v = env.lower, env.upper
    m = env.m
    gamma = max((1 - math.fsum(u)) / m, (math.fsum(v) - 1) / m)
    high = math.fsum(v - beta)
    low = math.fsum(u + beta)
    r_star = None
    if high > 1:
        gamma_prime = (high - 1) / m
        r_star = v - beta - gamma_prime
    elif low < 1:
        gamma_prime = (1 - low) / m
        r_star = u + beta + gamma_prime
    relaxed = _opt_bounds(env, gamma)
    if r_star is None or np.any(r_star < -TOL) or np.any(r_star > 1 + TOL) or relaxed.is_empty:
        gamma = minimal_radius(env, beta)
        gamma_prime = gamma - beta
        relaxed = _opt_bounds(env, gamma)
        r_star = _any_member(tighten(relaxed))
    relaxed = tighten(relaxed)
    r_star = np.clip(r_star, 0.0, 1.0)
    r_star.flags.writeable = False
    eps_star = float(np.max(np.abs(a - r_star)))
    return GammaRelaxation(gamma, gamma_prime, relaxed, r_star, eps_star)


def _any_member(row: IntervalRow) -> np.ndarray:
    x = row.lower.copy()
    slack = 1 - math.fsum(x)
    for i in range(row.m):
        step = min(slack, row.upper[i] - row.lower[i])
        x[i] += step
        slack -= step
    return x


@dataclass(frozen=True, eq=False)
class BlockAbstraction:
    rows: tuple
    beta: float
    envelope: IntervalRow
    optimal_set: IntervalRow
    gamma: GammaRelaxation | None
    chosen_row: IntervalRow
    xi: float

    @property
    def r_star(self):
        return None if self.gamma is None else self.gamma.r_star

    @property
    def used_relaxation(self) -> bool:
        return self.gamma is not None


def abstract_block(rows) -> BlockAbstraction:
    """Build one interval row: optimal set if non-empty, else the gamma-relaxed row."""
    a = _stack(rows)
    beta = optimal_error(a)
    env = envelope(a)
    opt = _opt_bounds(env, beta)
    if isinstance(classify(opt), Empty):
        relax = gamma_relaxation(a, beta, env)
        return BlockAbstraction(
            tuple(a), beta, env, opt, relax, relax.relaxed_row, relax.gamma
        )
    return BlockAbstraction(tuple(a), beta, env, opt, None, opt, beta)


@dataclass(frozen=True, eq=False)
class LumpedChain:
    chain: LabeledMarkovChain
    representatives: tuple
    epsilon: float
    partition: LabelPartition


def block_names(partition: LabelPartition) -> tuple:
    """Readable block identifiers, ``S_a`` style when labels are unique."""
    names = []
    for i, lab in enumerate(partition.block_label):
        names.append("S_" + "_".join(sorted(lab)) if lab else f"S{i}")
    if len(set(names)) != len(names):
        names = [f"S{i}" for i in range(partition.m)]
    return tuple(names)


def build_standard_abstraction(
    chain: LabeledMarkovChain,
    partition: LabelPartition | None = None,
    representatives: Sequence | None = None,
) -> LumpedChain:
    """Lump each block onto one representative state.

    Without explicit ``representatives`` each block uses the state with the
    smallest representative error (lowest state index on ties).  ``epsilon``
    is the largest such error over the blocks.
    """
    partition = partition_by_labels(chain) if partition is None else partition
    all_rows = [abstraction_rows(chain, partition, i) for i in range(partition.m)]
    if representatives is None:
        reps = []
        for block, rows in zip(partition.blocks, all_rows):
            errs = [representative_error(rows, j) for j in range(len(rows))]
            best = min(errs)
            j = next(j for j, e in enumerate(errs) if e <= best + TOL)
            reps.append(block[j])
    else:
        reps = list(representatives)
        if len(reps) != partition.m:
            raise InvalidRepresentative(
                f"{len(reps)} representatives for {partition.m} blocks"
            )
        for i, s in enumerate(reps):
            if s not in partition.blocks[i]:
                raise InvalidRepresentative(f"{s!r} is not in block {i}")
    matrix = []
    eps = 0.0
    for block, rows, s in zip(partition.blocks, all_rows, reps):
        j = block.index(s)
        matrix.append(rows[j])
        eps = max(eps, representative_error(rows, j))
    names = block_names(partition)
    init = partition.block_of[chain.initial_state]
    lumped = LabeledMarkovChain(
        states=names,
        labels=partition.block_label,
        matrix=np.array(matrix),
        initial_state=names[init],
    )
    return LumpedChain(lumped, tuple(reps), eps, partition)


@dataclass(frozen=True, eq=False)
class Imdpa:
    """Interval abstraction: one interval row and one error per block."""

    blocks: tuple
    labels: tuple
    interval_matrix: IntervalMatrix
    xi: tuple
    initial: int
    names: tuple
    details: tuple = ()

    @property
    def m(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True, eq=False)
class Mdpa:
    """Finite-action abstraction; ``actions[i]`` lists distributions over blocks."""

    blocks: tuple
    labels: tuple
    actions: tuple
    xi: tuple
    initial: int
    names: tuple

    def __post_init__(self):
        m = len(self.blocks)
        acts = []
        for i, lst in enumerate(self.actions):
            arr = np.array(lst, dtype=float).reshape(-1, m)
            if len(arr) == 0:
                raise MalformedModel(f"block {i} has no actions")
            if np.any(np.abs(arr.sum(axis=1) - 1) > SUM_TOL) or np.any(arr < -TOL):
                raise MalformedModel(f"block {i} has a non-stochastic action")
            arr.flags.writeable = False
            acts.append(arr)
        if len(acts) != m or len(self.labels) != m or len(self.xi) != m:
            raise MalformedModel("blocks, labels, actions and xi must align")
        object.__setattr__(self, "actions", tuple(acts))
        object.__setattr__(self, "xi", tuple(float(x) for x in self.xi))
        object.__setattr__(self, "labels", tuple(frozenset(l) for l in self.labels))

    @property
    def m(self) -> int:
        return len(self.blocks)


def build_imdpa(
    chain: LabeledMarkovChain, partition: LabelPartition | None = None, workers: int = 1
) -> Imdpa:
    partition = partition_by_labels(chain) if partition is None else partition
    rows = [abstraction_rows(chain, partition, i) for i in range(partition.m)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            details = tuple(pool.map(abstract_block, rows))
    else:
        details = tuple(abstract_block(r) for r in rows)
    return Imdpa(
        blocks=partition.blocks,
        labels=partition.block_label,
        interval_matrix=IntervalMatrix(tuple(d.chosen_row for d in details)),
        xi=tuple(d.xi for d in details),
        initial=partition.block_of[chain.initial_state],
        names=block_names(partition),
        details=details,
    )


def imdpa_to_mdpa(imdpa: Imdpa) -> Mdpa:
    """Replace every interval row by the vertex list of its polytope."""
    return Mdpa(
        blocks=imdpa.blocks,
        labels=imdpa.labels,
        actions=tuple(vertices(r) for r in imdpa.interval_matrix.rows),
        xi=imdpa.xi,
        initial=imdpa.initial,
        names=imdpa.names,
    )


# --- JSON forms -------------------------------------------------------------


def imdpa_to_dict(imdpa: Imdpa) -> dict:
    return {
        "blocks": [list(b) for b in imdpa.blocks],
        "labels": [sorted(l) for l in imdpa.labels],
        "names": list(imdpa.names),
        "initial": imdpa.initial,
        "interval_rows": [r.pairs() for r in imdpa.interval_matrix.rows],
        "xi": list(imdpa.xi),
    }


def imdpa_from_dict(raw: Mapping) -> Imdpa:
    try:
        rows = tuple(IntervalRow.from_pairs(r) for r in raw["interval_rows"])
        blocks = tuple(tuple(b) for b in raw["blocks"])
        m = len(blocks)
        return Imdpa(
            blocks=blocks,
            labels=tuple(frozenset(l) for l in raw["labels"]),
            interval_matrix=IntervalMatrix(rows),
            xi=tuple(float(x) for x in raw["xi"]),
            initial=int(raw.get("initial", 0)),
            names=tuple(raw.get("names", [f"S{i}" for i in range(m)])),
        )
    except (KeyError, TypeError, EmptyInterval) as exc:
        raise MalformedModel(f"bad IMDP abstraction: {exc}") from exc


def mdpa_to_dict(mdpa: Mdpa) -> dict:
    return {
        "blocks": [list(b) for b in mdpa.blocks],
        "labels": [sorted(l) for l in mdpa.labels],
        "names": list(mdpa.names),
        "initial": mdpa.initial,
        "actions": [a.tolist() for a in mdpa.actions],
        "xi": list(mdpa.xi),
    }


def mdpa_from_dict(raw: Mapping) -> Mdpa:
    try:
        blocks = tuple(tuple(b) for b in raw["blocks"])
        m = len(blocks)
        return Mdpa(
            blocks=blocks,
            labels=tuple(frozenset(l) for l in raw["labels"]),
            actions=tuple(raw["actions"]),
            xi=tuple(raw["xi"]),
            initial=int(raw.get("initial", 0)),
            names=tuple(raw.get("names", [f"S{i}" for i in range(m)])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedModel):
            raise
        raise MalformedModel(f"bad MDP abstraction: {exc}") from exc


def check_mdpa_within(mdpa: Mdpa, imdpa: Imdpa, tol: float = 1e-9) -> bool:
    """True when every action lies in the matching interval row (within ``tol``)."""
    for acts, row in zip(mdpa.actions, imdpa.interval_matrix.rows):
        for a in acts:
            if abs(a.sum() - 1) > tol:
                return False
            if np.any(a < row.lower - tol) or np.any(a > row.upper + tol):
                return False
    return True


__all__ = [
    "BlockAbstraction",
    "GammaRelaxation",
    "Imdpa",
    "LumpedChain",
    "Mdpa",
    "abstract_block",
    "build_imdpa",
    "build_standard_abstraction",
    "envelope",
    "gamma_relaxation",
    "imdpa_to_mdpa",
    "optimal_error",
    "optimal_set",
    "representative_error",
]
