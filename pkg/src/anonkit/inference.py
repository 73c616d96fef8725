"""Implication, satisfiability and minimal cover for fixed-bound constraints.

All three operations rest on one primitive: the tightest count range a
constraint set forces onto a target value. A constraint on the same
target contributes its own range; a constraint on a strictly smaller
target caps the count from above (every row matching the larger target
also matches the smaller one); a constraint on a strictly larger target
pushes the count up from below. Intersecting the contributions gives the
derived range.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

from .constraints import Constraint, ConstraintKind, FrequencyRange, UNIVERSAL_RANGE
from .errors import InferenceError, LintWarning
from .relation import TargetValue


@dataclass(frozen=True)
class FixedConstraint:
    """A target value with a constant count range."""

    target: TargetValue
    bounds: FrequencyRange

    def __str__(self) -> str:
        return f"({self.target}) in {self.bounds}"


def to_fixed(constraint: Constraint, k: Optional[int] = None) -> FixedConstraint:
    """Project a fixed-bound diversity constraint into inference form.

    Fairness and variable-bound constraints have no constant range to
    reason over, so they are rejected rather than approximated. With k
    given, a positive lower bound below k draws a lint warning: such a
    count is unreachable in a k-anonymous output built from groups.
    """
    if constraint.kind is not ConstraintKind.DIVERSITY:
        raise InferenceError(
            f"({constraint.target}): fairness constraints are outside the "
            "inference fragment; only fixed-bound diversity constraints qualify"
        )
    if not constraint.is_fixed_bound:
        raise InferenceError(
            f"({constraint.target}): variable bounds are outside the "
            "inference fragment; only fixed-bound diversity constraints qualify"
        )
    lo, hi = constraint.fixed_bounds()
    if k is not None and 0 < lo < k:
        warnings.warn(
            f"({constraint.target}): lower bound {lo} is below k={k}; "
            "revealed counts are 0 or at least k",
            LintWarning,
            stacklevel=2,
        )
    return FixedConstraint(constraint.target, FrequencyRange(lo, hi))


def to_fixed_all(
    constraints: Iterable[Constraint], k: Optional[int] = None
) -> list[FixedConstraint]:
    return [to_fixed(c, k) for c in constraints]


class Axiom(enum.Enum):
    FIXED_ATTRIBUTES = "fixed-attributes"
    ATTRIBUTE_EXTENSION = "attribute-extension"
    ATTRIBUTE_REDUCTION = "attribute-reduction"
    RANGE_INTERSECTION = "range-intersection"


@dataclass(frozen=True)
class TraceStep:
    """One rule application: which constraint contributed which range."""

    axiom: Axiom
    contributed: FrequencyRange
    source: Optional[FixedConstraint] = None


@dataclass(frozen=True)
class InferenceOutcome:
    implied: bool
    derived_range: FrequencyRange
    trace: tuple[TraceStep, ...]


def range_for_target(
    sigma: Sequence[FixedConstraint], tv: TargetValue
) -> tuple[FrequencyRange, tuple[TraceStep, ...]]:
    """The tightest range the constraint set forces on tv, with its derivation."""
    delta = UNIVERSAL_RANGE
    steps: list[TraceStep] = []
    for c in sigma:
        if c.target == tv:
            contributed = c.bounds
            axiom = Axiom.FIXED_ATTRIBUTES
        elif c.target.is_strict_subset(tv):
            # Rows matching tv also match the smaller target, so its
            # upper bound carries over; its lower bound does not.
            contributed = FrequencyRange(0, c.bounds.hi)
            axiom = Axiom.ATTRIBUTE_EXTENSION
        elif tv.is_strict_subset(c.target):
            contributed = FrequencyRange(c.bounds.lo, None)
            axiom = Axiom.ATTRIBUTE_REDUCTION
        else:
            continue
        steps.append(TraceStep(axiom, contributed, c))
        delta = delta.intersect(contributed)
    steps.append(TraceStep(Axiom.RANGE_INTERSECTION, delta))
    return delta, tuple(steps)


def implies(
    sigma: Sequence[FixedConstraint], query: FixedConstraint
) -> InferenceOutcome:
    """Does every relation satisfying the set also satisfy the query?

    Holds exactly when the derived range for the query's target sits
    inside the query's own range: no count the set permits can fall
    outside what the query demands.
    """
    delta, trace = range_for_target(sigma, query.target)
    return InferenceOutcome(delta.issubset(query.bounds), delta, trace)


@dataclass(frozen=True)
class Satisfiable:
    """Positive verdict, with one concrete count per constrained target.

    The witness picks each target's smallest permitted count. Smallest
    counts are automatically monotone: a larger target never gets a
    bigger count than any of the targets it contains.
    """

    witness_counts: dict[TargetValue, int] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return True


@dataclass(frozen=True)
class Unsatisfiable:
    """Negative verdict: this target's derived range is empty."""

    false_constraint: FixedConstraint

    def __bool__(self) -> bool:
        return False


SatisfiabilityResult = Union[Satisfiable, Unsatisfiable]


def _sorted_targets(sigma: Sequence[FixedConstraint]) -> list[TargetValue]:
    targets = {c.target for c in sigma}
    return sorted(targets, key=lambda tv: (len(tv), tv.sorted_entries()))


def is_satisfiable(sigma: Sequence[FixedConstraint]) -> SatisfiabilityResult:
    """Check the set for internal contradictions.

    Only targets that occur in the set need checking: a conflict between
    a small target's upper bound and a large target's lower bound
    already empties the derived range of one of those two. Targets are
    visited smallest first, so the reported false constraint sits on the
    least specific conflicting target.
    """
    witness: dict[TargetValue, int] = {}
    for tv in _sorted_targets(sigma):
        delta, _ = range_for_target(sigma, tv)
        if delta.is_empty:
            return Unsatisfiable(FixedConstraint(tv, delta))
        witness[tv] = delta.lo
    return Satisfiable(witness)


def minimal_cover(sigma: Sequence[FixedConstraint]) -> list[FixedConstraint]:
    """Drop constraints the rest of the set already implies.

    Single pass in input order; a removal is permanent. Different orders
    can produce different covers, all equally minimal.
    """
    if isinstance(is_satisfiable(sigma), Unsatisfiable):
        raise InferenceError("minimal cover is undefined for an unsatisfiable set")
    kept = [True] * len(sigma)
    for i, candidate in enumerate(sigma):
        rest = [c for j, c in enumerate(sigma) if kept[j] and j != i]
        if implies(rest, candidate).implied:
            kept[i] = False
    return [c for i, c in enumerate(sigma) if kept[i]]
