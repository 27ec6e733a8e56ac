import itertools

import numpy as np
import pytest

from patchmux.pipeline import (
    CandidateSet,
    ContractViolation,
    EmptyCandidateSet,
    InvalidIndicatorError,
    SelectionRule,
    SiteIndicators,
    complete_shot,
    form_candidate_set,
    select_candidate,
)


def test_candidate_set_from_indicators():
    ind = SiteIndicators(inj=(1, 0, 1, 1), cult=(1, 0, 0, 1))
    assert form_candidate_set(ind).members == {1, 4}


def test_candidate_set_empty_and_full():
    assert form_candidate_set(SiteIndicators.from_survival((0, 0, 0, 0))).members == frozenset()
    assert form_candidate_set(SiteIndicators.from_survival((1, 1, 1, 1))).members == {1, 2, 3, 4}


def test_inconsistent_indicators_rejected():
    with pytest.raises(InvalidIndicatorError):
        SiteIndicators(inj=(0, 1), cult=(1, 1))
    with pytest.raises(InvalidIndicatorError):
        SiteIndicators(inj=(2, 0), cult=(0, 0))
    with pytest.raises(InvalidIndicatorError):
        SiteIndicators(inj=(1, 1), cult=(1,))


def test_lowest_index_selection():
    candidates = CandidateSet(members=frozenset({2, 4}), k=4)
    assert select_candidate(candidates, SelectionRule.lowest_index()) == 2


def test_singleton_selection_any_rule():
    candidates = CandidateSet(members=frozenset({3}), k=4)
    for rule in (SelectionRule.lowest_index(), SelectionRule.fixed_priority((4, 3, 2, 1))):
        assert select_candidate(candidates, rule) == 3


def test_empty_selection_is_a_discard_signal():
    with pytest.raises(EmptyCandidateSet):
        select_candidate(CandidateSet(members=frozenset(), k=4), SelectionRule.lowest_index())


def test_selection_always_returns_a_member():
    # exhaustive for k=4: every non-empty subset, lowest-index plus all 24
    # fixed priorities
    rules = [SelectionRule.lowest_index()] + [
        SelectionRule.fixed_priority(perm) for perm in itertools.permutations(range(1, 5))
    ]
    subsets = [
        frozenset(c)
        for r in range(1, 5)
        for c in itertools.combinations(range(1, 5), r)
    ]
    assert len(subsets) == 15
    for members in subsets:
        candidates = CandidateSet(members=members, k=4)
        for rule in rules:
            assert select_candidate(candidates, rule) in members


def test_fixed_priority_must_be_permutation():
    with pytest.raises(ValueError):
        SelectionRule.fixed_priority((1, 1, 2, 3))
    with pytest.raises(ValueError):
        SelectionRule.fixed_priority((2, 3, 4, 5))


def test_priority_size_mismatch_is_contract_error():
    candidates = CandidateSet(members=frozenset({1}), k=4)
    with pytest.raises(ContractViolation):
        select_candidate(candidates, SelectionRule.fixed_priority((2, 1)))


def test_discarded_shot_outcome():
    ind = SiteIndicators.from_survival((0, 0, 0, 0))
    outcome = complete_shot(ind, SelectionRule.lowest_index())
    assert outcome.discarded
    assert outcome.selected is None
    assert outcome.continuation == (0, 0, 0, 0)
    assert outcome.escape_kept is None


def test_full_survival_lowest_index_kept():
    ind = SiteIndicators.from_survival((1, 1, 1, 1))
    outcome = complete_shot(ind, SelectionRule.lowest_index(), escape_verdict=True)
    assert outcome.selected == 1
    assert outcome.continuation == (1, 0, 0, 0)
    assert outcome.escape_kept is True


def test_hand_traced_partial_survival():
    # injection passes at sites 1-2, cultivation only at site 2; kept fails
    ind = SiteIndicators(inj=(1, 1, 0, 0), cult=(0, 1, 0, 0))
    outcome = complete_shot(ind, SelectionRule.lowest_index(), escape_verdict=False)
    assert outcome.candidates.members == {2}
    assert outcome.selected == 2
    assert outcome.escape_kept is False


def test_directly_built_outcome_must_select_a_candidate():
    from patchmux.pipeline import CandidateSet, ShotOutcome

    ind = SiteIndicators.from_survival((0, 1))
    with pytest.raises(ContractViolation):
        ShotOutcome(
            indicators=ind,
            candidates=CandidateSet(members=frozenset({2}), k=2),
            selected=1,
            continuation=(1, 0),
            escape_kept=True,
        )


def test_verdict_contract_enforced():
    dead = SiteIndicators.from_survival((0, 0))
    live = SiteIndicators.from_survival((1, 0))
    with pytest.raises(ContractViolation):
        complete_shot(dead, SelectionRule.lowest_index(), escape_verdict=True)
    with pytest.raises(ContractViolation):
        complete_shot(live, SelectionRule.lowest_index())


def test_exactly_one_continuation_bit():
    rng = np.random.default_rng(29)
    for _ in range(200):
        k = int(rng.integers(1, 7))
        bits = tuple(int(b) for b in rng.integers(0, 2, size=k))
        ind = SiteIndicators.from_survival(bits)
        verdict = bool(rng.integers(0, 2)) if any(bits) else None
        outcome = complete_shot(ind, SelectionRule.lowest_index(), verdict)
        assert sum(outcome.continuation) == (1 if any(bits) else 0)
        assert len(outcome.candidates) == k - bits.count(0)


def test_single_site_degeneration():
    # with k=1 the shot is discarded exactly when the lone site fails
    dead = complete_shot(SiteIndicators.from_survival((0,)), SelectionRule.lowest_index())
    assert dead.discarded
    live = complete_shot(
        SiteIndicators.from_survival((1,)), SelectionRule.lowest_index(), escape_verdict=True
    )
    assert not live.discarded and live.selected == 1
