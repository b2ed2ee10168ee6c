"""Model checking on concrete chains and on their finite-action abstractions.

Concrete chains get exact bounded-until probabilities by backward
iteration.  Abstractions get extremal probabilities over memoryless
policies; the IMDPA semantics then shift those extremes by the propagated
one-step error before comparing against a threshold.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import pctl
from .abstraction import Mdpa, build_imdpa, build_standard_abstraction, imdpa_to_mdpa
from .errors import NonConvergence, VacuousBoundWarning
from .model import LabeledMarkovChain, LabelPartition, partition_by_labels
from .pctl import INF, And, Atom, Next, Not, Prob, ProbQuery, TrueF, Until

log = logging.getLogger(__name__)

FIXPOINT_TOL = 1e-10
MAX_ITER = 10**6
MAX_POLICIES = 2_000_000
_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class ErrorBound:
    xi: tuple
    k: float
    per_block: np.ndarray
    eps: float

    @property
    def vacuous(self) -> bool:
        return self.eps >= 1.0


def propagate_error(xi, k) -> ErrorBound:
    """Bound ``1 - (1 - xi)^k`` on the trace distance after ``k`` steps.

    ``k`` may be ``math.inf``; any positive one-step error then yields the
    vacuous bound 1.
    """
    xi_arr = np.asarray(xi, dtype=float).reshape(-1)
    if np.any(xi_arr < 0) or np.any(xi_arr > 1):
        raise ValueError("one-step errors must lie in [0, 1]")
    if k < 0:
        raise ValueError("horizon must be non-negative")
    if k == INF:
        per = np.where(xi_arr > 0, 1.0, 0.0)
    else:
        per = 1.0 - (1.0 - xi_arr) ** k
    per = np.clip(per, 0.0, 1.0)
    per.flags.writeable = False
    worst = float(xi_arr.max()) if xi_arr.size else 0.0
    if k == INF:
        eps = 1.0 if worst > 0 else 0.0
    else:
        eps = float(min(max(1.0 - (1.0 - worst) ** k, 0.0), 1.0))
    return ErrorBound(tuple(float(x) for x in xi_arr), k, per, eps)


@dataclass(frozen=True, eq=False)
class CheckResult:
    """Outcome of checking a state formula.

    ``sat_set`` holds the satisfying state (or block) identifiers; it is
    ``None`` for probability queries, whose answer is ``values``.
    """

    sat_set: frozenset | None
    values: np.ndarray | None = None
    policy: tuple | None = None
    error_bound: ErrorBound | None = None
    states: tuple = ()

    def value(self, state) -> float:
        return float(self.values[self.states.index(state)])

    def holds(self, state) -> bool:
        return state in self.sat_set


def _compare(values: np.ndarray, cmp: str, p: float) -> np.ndarray:
    return {
        "<": values < p,
        "<=": values <= p,
        ">": values > p,
        ">=": values >= p,
    }[cmp]


def _atom_mask(labels: Sequence, name: str) -> np.ndarray:
    return np.array([name in lab for lab in labels], dtype=bool)


def _sat(labels, f, prob_mask: Callable) -> np.ndarray:
    """Boolean satisfaction vector; ``prob_mask`` evaluates ``Prob`` nodes."""
    if isinstance(f, TrueF):
        return np.ones(len(labels), dtype=bool)
    if isinstance(f, Atom):
        return _atom_mask(labels, f.name)
    if isinstance(f, Not):
        return ~_sat(labels, f.arg, prob_mask)
    if isinstance(f, And):
        return _sat(labels, f.left, prob_mask) & _sat(labels, f.right, prob_mask)
    if isinstance(f, Prob):
        return prob_mask(f)
    if isinstance(f, ProbQuery):
        raise ValueError("a probability query can only be the outermost operator")
    raise TypeError(f"not a state formula: {f!r}")


def _path_masks(labels, path, prob_mask):
    if isinstance(path, Next):
        return None, _sat(labels, path.arg, prob_mask)
    if isinstance(path, Until):
        return _sat(labels, path.left, prob_mask), _sat(labels, path.right, prob_mask)
    raise TypeError(f"path formula not desugared: {path!r}")


# --- concrete chains ----------------------------------------------------------


def _until_fixed(matrix: np.ndarray, sat1, sat2, k) -> np.ndarray:
    """Bounded (or unbounded) until probabilities under one stochastic matrix."""
    x = sat2.astype(float)
    maybe = sat1 & ~sat2
    if k == INF:
        for it in range(MAX_ITER):
            nxt = np.where(sat2, 1.0, np.where(maybe, matrix @ x, 0.0))
            residual = float(np.max(np.abs(nxt - x))) if len(x) else 0.0
            x = nxt
            if residual < FIXPOINT_TOL:
                return x
        raise NonConvergence(MAX_ITER, residual)
    for _ in range(int(k)):
        x = np.where(sat2, 1.0, np.where(maybe, matrix @ x, 0.0))
    return x


def lmc_path_probabilities(chain: LabeledMarkovChain, path, prob_mask=None) -> np.ndarray:
    """Per-state probability of a desugared path formula on a chain."""
    if prob_mask is None:
        prob_mask = _lmc_prob_mask(chain)
    sat1, sat2 = _path_masks(chain.labels, path, prob_mask)
    if isinstance(path, Next):
        return np.clip(chain.matrix @ sat2.astype(float), 0.0, 1.0)
    return np.clip(_until_fixed(chain.matrix, sat1, sat2, path.bound), 0.0, 1.0)


def _lmc_prob_mask(chain):
    def mask(node: Prob):
        vals = lmc_path_probabilities(chain, node.path, mask)
        return _compare(vals, node.cmp, node.threshold)

    return mask


def check_lmc(chain: LabeledMarkovChain, formula) -> CheckResult:
    """Satisfaction set (and values for queries) of ``formula`` on a concrete chain."""
    if isinstance(formula, str):
        formula = pctl.parse_formula(formula)
    f = pctl.desugar(formula)
    mask = _lmc_prob_mask(chain)
    if isinstance(f, ProbQuery):
        vals = lmc_path_probabilities(chain, f.path, mask)
        if f.complement:
            vals = 1.0 - vals
        return CheckResult(None, _ro(vals), states=chain.states)
    values = None
    if isinstance(f, Prob):
        values = lmc_path_probabilities(chain, f.path, mask)
        values = _ro(1.0 - values if _flipped(formula) else values)
    sat = _sat(chain.labels, f, mask)
    return CheckResult(
        frozenset(s for s, ok in zip(chain.states, sat) if ok), values, states=chain.states
    )


def _flipped(formula) -> bool:
    """True when desugaring complemented a top-level ``Prob`` node (a ``G`` path)."""
    return isinstance(formula, Prob) and isinstance(formula.path, pctl.Globally)


def _ro(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


# --- finite-action abstractions -------------------------------------------------


def policy_matrix(mdpa: Mdpa, policy: Sequence[int]) -> np.ndarray:
    """Stochastic matrix of the chain induced by a memoryless policy."""
    return np.vstack([mdpa.actions[i][a] for i, a in enumerate(policy)])


def step_optimal_values(mdpa: Mdpa, sat1, sat2, k, mode: str):
    """Bounded-until extremes over step-dependent policies by value iteration.

    Returns the values and, for every step (first decision first), the
    greedy action per block.
    """
    pick = np.argmax if mode == "max" else np.argmin
    x = sat2.astype(float)
    maybe = sat1 & ~sat2
    rules = []
    for _ in range(int(k)):
        nxt = x.copy()
        rule = []
        for i, acts in enumerate(mdpa.actions):
            q = acts @ x
            a = int(pick(q))
            rule.append(a)
            nxt[i] = 1.0 if sat2[i] else (q[a] if maybe[i] else 0.0)
        rules.append(tuple(rule))
        x = nxt
    rules.reverse()
    return x, rules


def _memoryless_search(mdpa: Mdpa, sat1, sat2, k, mode: str):
    """Exhaustive search over memoryless policies, vectorised in chunks.

    Returns per-block extremes (each block may use its own policy) and the
    policy that is best for the initial block.
    """
    m = mdpa.m
    sizes = [len(a) for a in mdpa.actions]
    total = math.prod(sizes)
    if total > MAX_POLICIES:
        raise ValueError(f"{total} memoryless policies exceed the search limit")
    better = np.greater if mode == "max" else np.less
    best = np.full(m, -np.inf if mode == "max" else np.inf)
    best_init = best[mdpa.initial]
    best_policy = None
    maybe = sat1 & ~sat2
    it = itertools.product(*(range(s) for s in sizes))
    while True:
        chunk = list(itertools.islice(it, _CHUNK))
        if not chunk:
            break
        pol = np.array(chunk)
        # mats[p, i, :] = action pol[p, i] of block i
        mats = np.stack([mdpa.actions[i][pol[:, i]] for i in range(m)], axis=1)
        x = np.broadcast_to(sat2.astype(float), (len(pol), m)).copy()
        for _ in range(int(k)):
            y = np.einsum("pij,pj->pi", mats, x)
            x = np.where(sat2, 1.0, np.where(maybe, y, 0.0))
        pick = np.max if mode == "max" else np.min
        best = np.where(better(pick(x, axis=0), best), pick(x, axis=0), best)
        j = int(np.argmax(x[:, mdpa.initial]) if mode == "max" else np.argmin(x[:, mdpa.initial]))
        if best_policy is None or better(x[j, mdpa.initial], best_init):
            best_init = x[j, mdpa.initial]
            best_policy = tuple(int(a) for a in pol[j])
    return best, best_policy


def _unbounded_extremes(mdpa: Mdpa, sat1, sat2, mode: str):
    maybe = sat1 & ~sat2
    x = sat2.astype(float)
    residual = 0.0
    for it in range(MAX_ITER):
        q = [acts @ x for acts in mdpa.actions]
        opt = np.array([(q_i.max() if mode == "max" else q_i.min()) for q_i in q])
        nxt = np.where(sat2, 1.0, np.where(maybe, opt, 0.0))
        residual = float(np.max(np.abs(nxt - x))) if len(x) else 0.0
        x = nxt
        if residual < FIXPOINT_TOL:
            break
    else:
        raise NonConvergence(MAX_ITER, residual)
    policy = _extract_unbounded_policy(mdpa, x, sat2, maybe, mode)
    return x, policy


def _extract_unbounded_policy(mdpa, x, sat2, maybe, mode):
    """Greedy policy on the fixpoint; for max, prefer actions that make progress to the target."""
    q = [acts @ x for acts in mdpa.actions]
    slack = 1e-8
    good = []
    for i, q_i in enumerate(q):
        target = q_i.max() if mode == "max" else q_i.min()
        good.append([a for a, val in enumerate(q_i) if abs(val - target) <= slack])
    policy = [g[0] for g in good]
    if mode == "max":
        reached = sat2.copy()
        changed = True
        while changed:
            changed = False
            for i in range(mdpa.m):
                if reached[i] or not maybe[i] or x[i] <= 0:
                    continue
                for a in good[i]:
                    if mdpa.actions[i][a][reached].sum() > 0:
                        policy[i] = a
                        reached[i] = True
                        changed = True
                        break
    return tuple(policy)


def _extremes(mdpa: Mdpa, path, mode: str, prob_mask):
    """Per-block extreme values of a desugared path formula and a memoryless witness.

    Bounded formulas first run value iteration; when one of its greedy
    decision rules, replayed as a memoryless policy, attains the iterated
    values everywhere, that rule is the answer.  Otherwise the memoryless
    optimum comes from exhaustive search.  Unbounded until iterates to a
    fixpoint, where memoryless policies are optimal anyway.
    """
    sat1, sat2 = _path_masks(mdpa.labels, path, prob_mask)
    if isinstance(path, Next):
        target = sat2.astype(float)
        policy = []
        vals = []
        for acts in mdpa.actions:
            q = acts @ target
            a = int(np.argmax(q) if mode == "max" else np.argmin(q))
            policy.append(a)
            vals.append(q[a])
        return np.array(vals), tuple(policy)
    k = path.bound
    if k == INF:
        return _unbounded_extremes(mdpa, sat1, sat2, mode)
    vi_vals, rules = step_optimal_values(mdpa, sat1, sat2, k, mode)
    for rule in rules or [(0,) * mdpa.m]:
        replay = _until_fixed(policy_matrix(mdpa, rule), sat1, sat2, k)
        if np.max(np.abs(replay - vi_vals)) <= 1e-12:
            return vi_vals, rule
    log.debug("step-dependent optimum is not memoryless; searching policies")
    return _memoryless_search(mdpa, sat1, sat2, k, mode)


def extremal_probability(mdpa: Mdpa, path, mode: str) -> CheckResult:
    """Minimum or maximum probability of ``path`` over memoryless policies.

    ``values`` is per block (each block may need its own policy); ``policy``
    attains the value at the initial block.
    """
    if mode not in ("min", "max"):
        raise ValueError("mode must be 'min' or 'max'")
    negate = False
    if isinstance(path, pctl.Globally):
        path, negate = pctl.desugar_path(path)
        mode = pctl.SWAP_MODE[mode]
    vals, policy = _extremes(mdpa, path, mode, _mdpa_extremal_mask(mdpa))
    vals = np.clip(vals, 0.0, 1.0)
    if negate:
        vals = 1.0 - vals
    return CheckResult(None, _ro(vals), policy, states=mdpa.names)


def mdp_path_values(mdpa: Mdpa, path, mode: str, prob_mask=None) -> np.ndarray:
    if prob_mask is None:
        prob_mask = _mdpa_extremal_mask(mdpa)
    return np.clip(_extremes(mdpa, path, mode, prob_mask)[0], 0.0, 1.0)


def _mdpa_extremal_mask(mdpa):
    """Nested ``Prob`` nodes under plain MDP semantics (min for >=, max for <=)."""

    def mask(node: Prob):
        mode = "min" if node.cmp in (">", ">=") else "max"
        return _compare(mdp_path_values(mdpa, node.path, mode, mask), node.cmp, node.threshold)

    return mask


def check_mdp(mdpa: Mdpa, formula) -> CheckResult:
    """Plain MDP semantics: ``>=``/``>`` use the minimum, ``<=``/``<`` the maximum."""
    if isinstance(formula, str):
        formula = pctl.parse_formula(formula)
    f = pctl.desugar(formula)
    mask = _mdpa_extremal_mask(mdpa)
    if isinstance(f, ProbQuery):
        return _query(mdpa, f, mask)
    sat = _sat(mdpa.labels, f, mask)
    return CheckResult(frozenset(n for n, ok in zip(mdpa.names, sat) if ok), states=mdpa.names)


def _query(mdpa, f: ProbQuery, mask) -> CheckResult:
    if f.mode == "plain":
        raise ValueError("use Pmin=? or Pmax=? on an abstraction")
    vals, policy = _extremes(mdpa, f.path, f.mode, mask)
    vals = np.clip(vals, 0.0, 1.0)
    if f.complement:
        vals = 1.0 - vals
    return CheckResult(None, _ro(vals), policy, states=mdpa.names)


def corrected_values(mdpa: Mdpa, node: Prob, prob_mask=None):
    """``p_max - eps_k`` for lower-bound thresholds, ``p_min + eps_k`` for upper ones, clamped."""
    if prob_mask is None:
        prob_mask = _imdpa_mask(mdpa)
    bound = propagate_error(mdpa.xi, pctl.path_bound(node.path))
    if node.cmp in (">", ">="):
        vals = mdp_path_values(mdpa, node.path, "max", prob_mask) - bound.eps
    else:
        vals = mdp_path_values(mdpa, node.path, "min", prob_mask) + bound.eps
    if bound.vacuous:
        warnings.warn(
            f"propagated error is 1 for horizon {bound.k}; verdict is uninformative",
            VacuousBoundWarning,
            stacklevel=3,
        )
    return np.clip(vals, 0.0, 1.0), bound


def _imdpa_mask(mdpa):
    def mask(node: Prob):
        vals, _ = corrected_values(mdpa, node, mask)
        return _compare(vals, node.cmp, node.threshold)

    return mask


def check_imdpa(mdpa: Mdpa, formula) -> CheckResult:
    """Check under the error-corrected abstraction semantics.

    A threshold ``>= p`` holds at a block when ``p_max - eps_k >= p``; a
    threshold ``<= p`` when ``p_min + eps_k <= p``.  ``eps_k`` comes from
    the block errors and the path formula's own step bound.  For a
    top-level ``Prob`` node ``values`` holds the corrected probabilities of
    the path formula as written (for ``G`` that is ``1 -`` the corrected
    value of the desugared until).
    """
    if isinstance(formula, str):
        formula = pctl.parse_formula(formula)
    f = pctl.desugar(formula)
    mask = _imdpa_mask(mdpa)
    if isinstance(f, ProbQuery):
        res = _query(mdpa, f, mask)
        bound = propagate_error(mdpa.xi, pctl.path_bound(f.path))
        return CheckResult(None, res.values, res.policy, bound, mdpa.names)
    values = bound = None
    if isinstance(f, Prob):
        values, bound = corrected_values(mdpa, f, mask)
        sat = _compare(values, f.cmp, f.threshold)
        values = _ro(1.0 - values if _flipped(formula) else values)
    else:
        sat = _sat(mdpa.labels, f, mask)
    return CheckResult(
        frozenset(n for n, ok in zip(mdpa.names, sat) if ok), values, None, bound, mdpa.names
    )


# --- comparison table ----------------------------------------------------------

CSV_HEADER = (
    "k",
    "p_concrete",
    "std_p",
    "std_lo",
    "std_hi",
    "mdpa_pmin",
    "mdpa_pmax",
    "mdpa_lo",
    "mdpa_hi",
    "eps_k",
)


@dataclass(frozen=True)
class ComparisonRow:
    k: int
    p_concrete: float
    std_p: float
    std_lo: float
    std_hi: float
    mdpa_pmin: float
    mdpa_pmax: float
    mdpa_lo: float
    mdpa_hi: float
    eps_k: float

    def as_tuple(self):
        return tuple(getattr(self, name) for name in CSV_HEADER)


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple
    std_epsilon: float
    xi: tuple = field(default=())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in self.rows:
            w.writerow([row.k] + [f"{v:.12g}" for v in row.as_tuple()[1:]])
        return buf.getvalue()


def _template(path_template) -> Callable[[int], object]:
    if callable(path_template):
        return path_template
    text = str(path_template)
    if "K" not in text:
        raise ValueError("template needs a literal K placeholder for the step bound")
    return lambda k: pctl.parse_path(text.replace("K", str(k)))


def compare_abstractions(
    chain: LabeledMarkovChain,
    path_template,
    k_range: Iterable[int],
    partition: LabelPartition | None = None,
) -> ComparisonTable:
    """Probability of a bounded path formula on the chain and both abstractions, per ``k``.

    ``path_template`` is a callable ``k -> path formula`` or a string with a
    literal ``K`` for the bound, e.g. ``'G<=K !"c"'``.  Values are read at
    the initial state / initial block.
    """
    partition = partition_by_labels(chain) if partition is None else partition
    make = _template(path_template)
    std = build_standard_abstraction(chain, partition)
    mdpa = imdpa_to_mdpa(build_imdpa(chain, partition))
    s0 = chain.index(chain.initial_state)
    b0 = mdpa.initial
    rows = []
    for k in k_range:
        path = make(k)
        p_conc = _path_value_lmc(chain, path)[s0]
        p_std = _path_value_lmc(std.chain, path)[b0]
        half = propagate_error([std.epsilon], k).eps
        lo = extremal_probability(mdpa, path, "min").values[b0]
        hi = extremal_probability(mdpa, path, "max").values[b0]
        eps_k = propagate_error(mdpa.xi, k).eps
        rows.append(
            ComparisonRow(
                k=int(k),
                p_concrete=float(p_conc),
                std_p=float(p_std),
                std_lo=max(0.0, p_std - half),
                std_hi=min(1.0, p_std + half),
                mdpa_pmin=float(lo),
                mdpa_pmax=float(hi),
                mdpa_lo=max(0.0, lo - eps_k),
                mdpa_hi=min(1.0, hi + eps_k),
                eps_k=eps_k,
            )
        )
    return ComparisonTable(tuple(rows), std.epsilon, mdpa.xi)


def _path_value_lmc(chain, path) -> np.ndarray:
    return check_lmc(chain, ProbQuery("plain", path)).values
