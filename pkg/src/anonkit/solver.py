"""Constraint-aware k-anonymization by cell suppression.

The search space is the set of partitions of the rows into groups of
size >= k. A partition induces a canonical suppression pattern: within a
group, a quasi-identifier attribute is kept when all members agree on
one value and fully starred otherwise. That makes k-anonymity structural
(group members become identical on the quasi-identifiers) and reduces
the problem to finding the partition of minimum star count whose output
satisfies every constraint.

Three solvers share this space: an exhaustive oracle for tiny inputs, a
branch-and-bound search that is exact at any size it finishes, and a
greedy two-phase heuristic (agglomerate to size >= k, then repair
constraint violations by local moves).
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .checking import SatReport, check_all, referenced_star_attributes
from .constraints import Constraint, Literal
from .errors import ContractError, OracleCapError, SchemaError
from .relation import (
    STAR,
    Relation,
    TargetValue,
    count_target,
    info_loss,
    is_k_anonymous,
)

ORACLE_CAP = 10


@dataclass(frozen=True)
class Clustering:
    """A partition of row indices in canonical form.

    Groups are sorted tuples, ordered by their smallest member. Whether
    the partition covers a particular relation is checked where it is
    used, not here.
    """

    groups: tuple[tuple[int, ...], ...]

    def __init__(self, groups: Iterable[Iterable[int]]):
        canon = sorted(tuple(sorted(g)) for g in groups)
        seen: set[int] = set()
        for g in canon:
            if not g:
                raise ContractError("empty group in clustering")
            for idx in g:
                if not isinstance(idx, int) or idx < 0:
                    raise ContractError(f"bad row index: {idx!r}")
                if idx in seen:
                    raise ContractError(f"row {idx} appears in two groups")
                seen.add(idx)
        object.__setattr__(self, "groups", tuple(canon))

    def __len__(self) -> int:
        return len(self.groups)


@dataclass(frozen=True)
class Limits:
    """Search budget. None means unbounded; the seed drives every RNG."""

    max_nodes: Optional[int] = None
    time_budget: Optional[float] = None
    seed: int = 0


@dataclass(frozen=True)
class Problem:
    """One anonymization task: relation, k, quasi-identifiers, constraints."""

    relation: Relation
    k: int
    qi: tuple[str, ...]
    sigma: tuple[Constraint, ...]
    limits: Limits

    def __init__(
        self,
        relation: Relation,
        k: int,
        qi: Sequence[str],
        sigma: Sequence[Constraint] = (),
        limits: Limits = Limits(),
    ):
        if k < 1:
            raise ContractError(f"k must be >= 1, got {k}")
        if not qi:
            raise ContractError("quasi-identifier set must be non-empty")
        for a in qi:
            relation.column_index(a)  # raises SchemaError when unknown
        if any(cell is STAR for row in relation.rows for cell in row):
            raise ContractError("input relation already contains suppressed cells")
        known = set(relation.schema)
        for c in sigma:
            unknown = sorted(
                (c.target.attributes | referenced_star_attributes(c)) - known
            )
            if unknown:
                raise SchemaError(
                    f"constraint on ({c.target}) references unknown "
                    f"attribute(s): {', '.join(unknown)}"
                )
            # A constant positive lower bound below k is never reachable:
            # revealed counts are sums of group sizes, each >= k.
            if isinstance(c.lower, Literal):
                lo = max(0, math.ceil(c.lower.value))
                if 0 < lo < k:
                    raise ContractError(
                        f"constraint on ({c.target}): lower bound {lo} is "
                        f"positive but below k={k}"
                    )
        object.__setattr__(self, "relation", relation)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "qi", tuple(qi))
        object.__setattr__(self, "sigma", tuple(sigma))
        object.__setattr__(self, "limits", limits)


@dataclass
class SolverStats:
    nodes_expanded: int = 0
    prunes: dict[str, int] = field(default_factory=dict)
    wall_time: float = 0.0


@dataclass(frozen=True)
class Solution:
    anonymized: Relation
    clustering: Clustering
    loss: int
    constraint_reports: tuple[SatReport, ...]
    optimal: bool
    stats: SolverStats


@dataclass(frozen=True)
class Infeasible:
    reason: str
    stats: SolverStats


@dataclass(frozen=True)
class Aborted:
    """Budget ran out. Carries the best feasible solution found, if any."""

    best_so_far: Optional[Solution]
    stats: SolverStats


@dataclass(frozen=True)
class Unknown:
    """The heuristic gave up; says nothing about feasibility."""

    reason: str
    stats: SolverStats


SolveResult = Union[Solution, Infeasible, Aborted]


def build_anonymized(
    relation: Relation, clustering: Clustering, qi: Sequence[str]
) -> Relation:
    """Apply the canonical suppression pattern of a clustering.

    Per group and QI attribute: keep the value when all members agree,
    star the whole column slice otherwise. Non-QI cells pass through.
    """
    n = relation.n_rows
    covered = {idx for g in clustering.groups for idx in g}
    if covered != set(range(n)):
        raise ContractError("clustering does not cover the relation's row indices")
    qi_idx = [relation.column_index(a) for a in qi]
    new_rows = [list(row) for row in relation.rows]
    for group in clustering.groups:
        for col in qi_idx:
            values = {relation.rows[i][col] for i in group}
            if len(values) > 1:
                for i in group:
                    new_rows[i][col] = STAR
    return Relation(relation.schema, new_rows)


def _evaluate(problem: Problem, clustering: Clustering) -> tuple[Relation, list[SatReport]]:
    rp = build_anonymized(problem.relation, clustering, problem.qi)
    reports = check_all(problem.relation, rp, problem.sigma, problem.k)
    return rp, reports


def _make_solution(
    problem: Problem,
    clustering: Clustering,
    rp: Relation,
    reports: Sequence[SatReport],
    optimal: bool,
    stats: SolverStats,
) -> Solution:
    return Solution(
        anonymized=rp,
        clustering=clustering,
        loss=info_loss(rp),
        constraint_reports=tuple(reports),
        optimal=optimal,
        stats=stats,
    )


def _partitions(n: int, min_size: int):
    """Yield all partitions of range(n) whose blocks have >= min_size members.

    Blocks are grown by appending elements in index order, so every
    yielded partition is already canonical.
    """
    blocks: list[list[int]] = []

    def extend(i: int):
        if i == n:
            if all(len(b) >= min_size for b in blocks):
                yield [tuple(b) for b in blocks]
            return
        for b in blocks:
            b.append(i)
            yield from extend(i + 1)
            b.pop()
        # Opening a new block is pointless when the remaining elements
        # cannot fill every open block to min_size.
        deficit = sum(max(0, min_size - len(b)) for b in blocks)
        if deficit + min_size <= n - i:
            blocks.append([i])
            yield from extend(i + 1)
            blocks.pop()

    yield from extend(0)


def oracle_min_loss(problem: Problem, cap: int = ORACLE_CAP) -> SolveResult:
    """Exhaustive reference solver for tiny relations.

    Tries every partition into groups of size >= k, keeps the cheapest
    feasible one; ties go to the lexicographically smallest canonical
    clustering. Refuses relations larger than the cap.
    """
    n = problem.relation.n_rows
    if n > cap:
        raise OracleCapError(f"oracle handles at most {cap} rows, got {n}")
    stats = SolverStats()
    start = time.monotonic()
    if n < problem.k:
        stats.wall_time = time.monotonic() - start
        return Infeasible(f"{n} rows cannot form a group of size {problem.k}", stats)

    best: Optional[tuple[int, tuple, Clustering, Relation, list[SatReport]]] = None
    for groups in _partitions(n, problem.k):
        stats.nodes_expanded += 1
        clustering = Clustering(groups)
        rp, reports = _evaluate(problem, clustering)
        if not all(r.satisfied for r in reports):
            continue
        if not is_k_anonymous(rp, problem.qi, problem.k):
            continue  # unreachable for cluster-built outputs; checked anyway
        key = (info_loss(rp), clustering.groups)
        if best is None or key < (best[0], best[1]):
            best = (key[0], key[1], clustering, rp, reports)
    stats.wall_time = time.monotonic() - start
    if best is None:
        return Infeasible("no clustering satisfies every constraint", stats)
    _, _, clustering, rp, reports = best
    return _make_solution(problem, clustering, rp, reports, True, stats)


def decide(problem: Problem, cap: int = ORACLE_CAP) -> bool:
    """Does any valid anonymization exist? Oracle-backed, so cap applies."""
    return not isinstance(oracle_min_loss(problem, cap), Infeasible)


# --- branch and bound ---------------------------------------------------


class _BudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class _StaticBound:
    """A constant count bound, split into QI and pass-through target parts.

    The split matters to the prunes: only the QI part is subject to
    group uniformity, the rest is fixed per row.
    """

    target: TargetValue
    lo: Optional[int]
    hi: Optional[int]
    qi_part: tuple[tuple[int, str], ...]
    other_part: tuple[tuple[int, str], ...]


def _static_bounds(problem: Problem) -> list[_StaticBound]:
    out = []
    qi_set = set(problem.qi)
    for c in problem.sigma:
        lo = max(0, math.ceil(c.lower.value)) if isinstance(c.lower, Literal) else None
        hi = max(0, math.floor(c.upper.value)) if isinstance(c.upper, Literal) else None
        if lo is None and hi is None:
            continue
        qi_part = []
        other_part = []
        for a, v in c.target.sorted_entries():
            col = problem.relation.column_index(a)
            (qi_part if a in qi_set else other_part).append((col, v))
        out.append(_StaticBound(c.target, lo, hi, tuple(qi_part), tuple(other_part)))
    return out


def _row_matches(row: Sequence, part: Sequence[tuple[int, str]]) -> bool:
    return all(row[col] == v for col, v in part)


def solve_exact(problem: Problem) -> SolveResult:
    """Branch and bound over partitions; optimal when it completes.

    Rows are assigned in index order to an existing group or a new one.
    A branch dies when (a) cells already starred reach the incumbent
    loss, (b) the unassigned rows cannot fill every undersized group,
    or (c)/(d) a constant count bound is provably violated in every
    completion of the branch.
    """
    stats = SolverStats(
        prunes={"loss_bound": 0, "underfill": 0, "upper_bound": 0, "lower_bound": 0}
    )
    start = time.monotonic()
    relation = problem.relation
    n = relation.n_rows
    k = problem.k
    limits = problem.limits

    if n < k:
        stats.wall_time = time.monotonic() - start
        return Infeasible(f"{n} rows cannot form a group of size {k}", stats)

    statics = _static_bounds(problem)
    # Suppression never creates values: a constant lower bound above the
    # input count can never be met.
    for sb in statics:
        if sb.lo is not None and sb.lo > count_target(relation, sb.target):
            stats.wall_time = time.monotonic() - start
            return Infeasible(
                f"({sb.target}) occurs {count_target(relation, sb.target)} "
                f"time(s) in the input, below the lower bound {sb.lo}",
                stats,
            )

    rows = relation.rows
    qi_cols = [relation.column_index(a) for a in problem.qi]

    # Per static bound: which rows match the target's QI part / all of it.
    qi_match = [
        [_row_matches(r, sb.qi_part) for r in rows] for sb in statics
    ]
    full_match = [
        [qi_match[s][i] and _row_matches(rows[i], statics[s].other_part) for i in range(n)]
        for s in range(len(statics))
    ]
    # Suffix counts over rows i..n-1.
    suffix_non_qi_match = [
        [sum(1 for j in range(i, n) if not qi_match[s][j]) for i in range(n + 1)]
        for s in range(len(statics))
    ]
    suffix_full_match = [
        [sum(1 for j in range(i, n) if full_match[s][j]) for i in range(n + 1)]
        for s in range(len(statics))
    ]

    groups: list[list[int]] = []
    best: Optional[tuple[int, Clustering, Relation, list[SatReport]]] = None

    def partial_loss() -> int:
        loss = 0
        for g in groups:
            for col in qi_cols:
                if len({rows[i][col] for i in g}) > 1:
                    loss += len(g)
        return loss

    def count_prunes_fail(next_row: int) -> Optional[str]:
        """Can some completion still respect every constant bound?"""
        for s, sb in enumerate(statics):
            matching: list[int] = []  # contribution of each QI-matching group
            total = 0
            for g in groups:
                if all(qi_match[s][i] for i in g):
                    contrib = sum(1 for i in g if full_match[s][i])
                    matching.append(contrib)
                    total += contrib
            if sb.hi is not None:
                # Each remaining QI-mismatching row can neutralize at most
                # one matching group; the rest keep at least their current
                # contribution, and the adversary spares the smallest.
                spare = len(matching) - suffix_non_qi_match[s][next_row]
                if spare > 0 and sum(sorted(matching)[:spare]) > sb.hi:
                    return "upper_bound"
            if sb.lo is not None:
                # The count can only grow by remaining fully-matching rows.
                if total + suffix_full_match[s][next_row] < sb.lo:
                    return "lower_bound"
        return None

    def assign(i: int) -> None:
        nonlocal best
        stats.nodes_expanded += 1
        if limits.max_nodes is not None and stats.nodes_expanded > limits.max_nodes:
            raise _BudgetExceeded
        if (
            limits.time_budget is not None
            and time.monotonic() - start > limits.time_budget
        ):
            raise _BudgetExceeded
        if i == n:
            if any(len(g) < k for g in groups):
                return
            clustering = Clustering([tuple(g) for g in groups])
            rp, reports = _evaluate(problem, clustering)
            if not all(r.satisfied for r in reports):
                return
            loss = info_loss(rp)
            if best is None or loss < best[0]:
                best = (loss, clustering, rp, reports)
            return
        placements = list(range(len(groups))) + [len(groups)]
        for slot in placements:
            if slot == len(groups):
                groups.append([i])
            else:
                groups[slot].append(i)
            try:
                deficit = sum(max(0, k - len(g)) for g in groups)
                if deficit > n - (i + 1):
                    stats.prunes["underfill"] += 1
                    continue
                if best is not None and partial_loss() >= best[0]:
                    stats.prunes["loss_bound"] += 1
                    continue
                reason = count_prunes_fail(i + 1)
                if reason is not None:
                    stats.prunes[reason] += 1
                    continue
                assign(i + 1)
            finally:
                if slot == len(groups) - 1 and len(groups[slot]) == 1:
                    groups.pop()
                else:
                    groups[slot].pop()

    aborted = False
    try:
        assign(0)
    except _BudgetExceeded:
        aborted = True
    stats.wall_time = time.monotonic() - start

    if aborted:
        incumbent = None
        if best is not None:
            loss, clustering, rp, reports = best
            incumbent = _make_solution(problem, clustering, rp, reports, False, stats)
        return Aborted(incumbent, stats)
    if best is None:
        return Infeasible("no clustering satisfies every constraint", stats)
    loss, clustering, rp, reports = best
    return _make_solution(problem, clustering, rp, reports, True, stats)


# --- greedy heuristic ---------------------------------------------------


def _group_stars(rows: Sequence[Sequence], group: Sequence[int], qi_cols: Sequence[int]) -> int:
    stars = 0
    for col in qi_cols:
        if len({rows[i][col] for i in group}) > 1:
            stars += len(group)
    return stars


def solve_greedy(problem: Problem) -> Union[Solution, Unknown]:
    """Two-phase heuristic: agglomerate to size >= k, then repair.

    Phase 1 seeds one group per distinct QI projection and merges the
    cheapest pair (fewest new stars) until no group is undersized.
    Phase 2 walks toward constraint satisfaction: among row swaps, group
    merges and group splits it applies whichever removes the most
    violations (stars saved as tie-break), drawing lots with the seeded
    RNG among equals, until all constraints hold or no move helps.
    Unknown means the walk stalled, not that no solution exists.
    """
    stats = SolverStats()
    start = time.monotonic()
    relation = problem.relation
    n = relation.n_rows
    k = problem.k
    rows = relation.rows
    qi_cols = [relation.column_index(a) for a in problem.qi]
    rng = random.Random(problem.limits.seed)

    if n < k:
        stats.wall_time = time.monotonic() - start
        return Unknown(f"{n} rows cannot form a group of size {k}", stats)

    # Phase 1: groups of identical QI projection, in first-appearance order.
    by_proj: dict[tuple, list[int]] = {}
    for i, row in enumerate(rows):
        by_proj.setdefault(tuple(row[c] for c in qi_cols), []).append(i)
    groups: list[list[int]] = list(by_proj.values())

    def merge_cost(a: list[int], b: list[int]) -> int:
        return (
            _group_stars(rows, a + b, qi_cols)
            - _group_stars(rows, a, qi_cols)
            - _group_stars(rows, b, qi_cols)
        )

    while any(len(g) < k for g in groups):
        candidates = []
        for x in range(len(groups)):
            for y in range(x + 1, len(groups)):
                if len(groups[x]) < k or len(groups[y]) < k:
                    candidates.append((merge_cost(groups[x], groups[y]), x, y))
        cost, x, y = min(candidates)
        groups[x] = groups[x] + groups[y]
        del groups[y]

    def snapshot() -> tuple[Clustering, Relation, list[SatReport], int, int]:
        clustering = Clustering([tuple(g) for g in groups])
        rp, reports = _evaluate(problem, clustering)
        violations = sum(1 for r in reports if not r.satisfied)
        return clustering, rp, reports, violations, info_loss(rp)

    def candidate_moves() -> list[tuple[str, tuple]]:
        moves: list[tuple[str, tuple]] = []
        for x in range(len(groups)):
            for y in range(x + 1, len(groups)):
                moves.append(("merge", (x, y)))
                for a in range(len(groups[x])):
                    for b in range(len(groups[y])):
                        moves.append(("swap", (x, a, y, b)))
        for x, g in enumerate(groups):
            if len(g) >= 2 * k:
                ordered = sorted(g, key=lambda i: (tuple(rows[i][c] for c in qi_cols), i))
                for cut in range(k, len(g) - k + 1):
                    moves.append(("split", (x, tuple(ordered[:cut]), tuple(ordered[cut:]))))
        return moves

    def apply_move(move: tuple[str, tuple]) -> list[list[int]]:
        kind, args = move
        new = [list(g) for g in groups]
        if kind == "merge":
            x, y = args
            new[x] = new[x] + new[y]
            del new[y]
        elif kind == "swap":
            x, a, y, b = args
            new[x][a], new[y][b] = new[y][b], new[x][a]
        else:
            x, left, right = args
            new[x] = list(left)
            new.append(list(right))
        return new

    budget = problem.limits.max_nodes if problem.limits.max_nodes is not None else 200
    clustering, rp, reports, violations, loss = snapshot()
    steps = 0
    while violations > 0:
        if steps >= budget:
            stats.wall_time = time.monotonic() - start
            return Unknown(f"repair budget of {budget} steps exhausted", stats)
        if (
            problem.limits.time_budget is not None
            and time.monotonic() - start > problem.limits.time_budget
        ):
            stats.wall_time = time.monotonic() - start
            return Unknown("repair ran out of time", stats)
        scored: list[tuple[tuple[int, int], list[list[int]]]] = []
        saved = groups
        for move in candidate_moves():
            groups = apply_move(move)
            stats.nodes_expanded += 1
            _, _, _, new_violations, new_loss = snapshot()
            scored.append(((violations - new_violations, loss - new_loss), groups))
            groups = saved
        if not scored:
            stats.wall_time = time.monotonic() - start
            return Unknown("no applicable repair move", stats)
        best_score = max(score for score, _ in scored)
        if best_score <= (0, 0):
            stats.wall_time = time.monotonic() - start
            return Unknown("repair stalled: no move removes a violation", stats)
        ties = [g for score, g in scored if score == best_score]
        groups = ties[rng.randrange(len(ties))]
        clustering, rp, reports, violations, loss = snapshot()
        steps += 1

    stats.wall_time = time.monotonic() - start
    return _make_solution(problem, clustering, rp, reports, False, stats)
