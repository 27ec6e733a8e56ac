"""Deterministic single-shot semantics for site-wise postselection.

One shot runs k local trials in parallel. Each trial carries two survival
bits (injection, then cultivation); a site survives the early stages iff
both are 1. Surviving sites form the candidate set, a predetermined rule
picks exactly one candidate to continue, and the continuation either passes
or fails its final acceptance check. Everything here is pure; randomness
and any notion of a decoder live elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass


class InvalidIndicatorError(ValueError):
    """Survival bits are malformed (e.g. cultivation passed without injection)."""


class EmptyCandidateSet(Exception):
    """Shot-discard signal: no site survived, nothing to select."""


class ContractViolation(ValueError):
    """Caller broke an operation contract (not a statistics event)."""


@dataclass(frozen=True)
class SiteIndicators:
    """Per-site survival bits for the two early stages."""

    inj: tuple[int, ...]
    cult: tuple[int, ...]

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if len(self.inj) != len(self.cult):
            raise InvalidIndicatorError(
                f"stage vectors differ in length: {len(self.inj)} vs {len(self.cult)}"
            )
        if not self.inj:
            raise InvalidIndicatorError("need at least one site")
        for i, (a, b) in enumerate(zip(self.inj, self.cult), start=1):
            if a not in (0, 1) or b not in (0, 1):
                raise InvalidIndicatorError(f"site {i}: bits must be 0 or 1")
            if b == 1 and a == 0:
                raise InvalidIndicatorError(
                    f"site {i}: cultivation cannot pass after failed injection"
                )

    @property
    def k(self) -> int:
        return len(self.inj)

    @property
    def survival(self) -> tuple[int, ...]:
        """Overall early-stage survival bit per site (inj AND cult)."""
        return tuple(a & b for a, b in zip(self.inj, self.cult))

    @classmethod
    def from_survival(cls, bits: tuple[int, ...] | list[int]) -> "SiteIndicators":
        """Collapse of the two stages into one draw: both bits equal survival."""
        t = tuple(int(b) for b in bits)
        return cls(inj=t, cult=t)


@dataclass(frozen=True)
class CandidateSet:
    """Indices (1-based) of the sites that survived the early stages."""

    members: frozenset[int]
    k: int

    def __post_init__(self) -> None:
        if not self.members <= set(range(1, self.k + 1)):
            raise ValueError(f"members {sorted(self.members)} outside 1..{self.k}")

    def __bool__(self) -> bool:
        return bool(self.members)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class SelectionRule:
    """Predetermined choice of one candidate; never uses downstream data.

    ``priority=None`` selects the lowest surviving index. A fixed priority is
    a permutation of 1..k tried in order.
    """

    priority: tuple[int, ...] | None = None

    @classmethod
    def lowest_index(cls) -> "SelectionRule":
        return cls(priority=None)

    @classmethod
    def fixed_priority(cls, order) -> "SelectionRule":
        perm = tuple(int(i) for i in order)
        if sorted(perm) != list(range(1, len(perm) + 1)):
            raise ValueError(f"{perm} is not a permutation of 1..{len(perm)}")
        return cls(priority=perm)


def form_candidate_set(indicators: SiteIndicators) -> CandidateSet:
    """Surviving indices: exactly the sites whose both stage bits are 1."""
    indicators.validate()
    members = frozenset(
        i for i, bit in enumerate(indicators.survival, start=1) if bit
    )
    return CandidateSet(members=members, k=indicators.k)


def select_candidate(candidates: CandidateSet, rule: SelectionRule) -> int:
    """Apply the predetermined rule; raises EmptyCandidateSet on a dead shot."""
    if not candidates:
        raise EmptyCandidateSet("no surviving site in this shot")
    if rule.priority is None:
        return min(candidates.members)
    if len(rule.priority) != candidates.k:
        raise ContractViolation(
            f"priority over {len(rule.priority)} sites applied to k={candidates.k}"
        )
    for i in rule.priority:
        if i in candidates.members:
            return i
    raise AssertionError("unreachable: permutation covers all indices")


@dataclass(frozen=True)
class ShotOutcome:
    """Everything one shot decided: survivors, the chosen site, the verdict."""

    indicators: SiteIndicators
    candidates: CandidateSet
    selected: int | None
    continuation: tuple[int, ...]
    escape_kept: bool | None

    def __post_init__(self) -> None:
        k = self.indicators.k
        if bool(self.candidates) != (self.selected is not None):
            raise ContractViolation("selected site must exist iff candidates do")
        if self.selected is not None and self.selected not in self.candidates.members:
            raise ContractViolation(f"selected site {self.selected} is not a candidate")
        if (self.selected is None) != (self.escape_kept is None):
            raise ContractViolation("escape verdict must exist iff a site was selected")
        expected = tuple(
            1 if (self.selected is not None and i == self.selected) else 0
            for i in range(1, k + 1)
        )
        if self.continuation != expected:
            raise ContractViolation("continuation bits must mark exactly the selected site")

    @property
    def discarded(self) -> bool:
        """True when the shot died before its continuation stage."""
        return self.selected is None


def complete_shot(
    indicators: SiteIndicators,
    rule: SelectionRule,
    escape_verdict: bool | None = None,
) -> ShotOutcome:
    """Run one shot end to end from survival bits and an injected verdict.

    The verdict must be supplied exactly when some site survives; supplying
    it for a dead shot (or omitting it for a live one) is a contract error.
    """
    candidates = form_candidate_set(indicators)
    k = indicators.k
    if not candidates:
        if escape_verdict is not None:
            raise ContractViolation("escape verdict supplied for a discarded shot")
        return ShotOutcome(
            indicators=indicators,
            candidates=candidates,
            selected=None,
            continuation=(0,) * k,
            escape_kept=None,
        )
    if escape_verdict is None:
        raise ContractViolation("escape verdict missing for a surviving shot")
    selected = select_candidate(candidates, rule)
    continuation = tuple(1 if i == selected else 0 for i in range(1, k + 1))
    return ShotOutcome(
        indicators=indicators,
        candidates=candidates,
        selected=selected,
        continuation=continuation,
        escape_kept=bool(escape_verdict),
    )
