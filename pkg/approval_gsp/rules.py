"""
Multi-winner approval rules (minisum, minimax, k-completion, serial
dictatorship, constant, explicit tables), single-winner ranking rules, and
the minimax approximation ratio.
"""
import functools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Tuple, Union

import singer

from approval_gsp import utils
from approval_gsp.core import (ApprovalProfile, ElectionParams, Committee, ballot_space, committees,
                               enumerate_profiles, members, permutations, popcount, profile_at,
                               profile_count, is_committee)
from approval_gsp.errors import CAP_ERROR, TABLE_LOOKUP_ERROR, CapExceededError, ParameterError, TableLookupError

LOGGER = singer.get_logger('approval_gsp')

DEFAULT_EVAL_CAP = 10 ** 8

RULE_KINDS = ('minisum', 'minimax', 'k-completion', 'serial-dictatorship', 'constant', 'table')
RANKING_KINDS = ('dictatorship', 'constant', 'plurality', 'borda', 'table')

_members = functools.lru_cache(maxsize=None)(members)


@dataclass(frozen=True)
class Sampled:
    count: int
    seed: int

    def describe(self) -> str:
        return 'sampled({},{})'.format(self.count, self.seed)


@dataclass(frozen=True)
class TieOrder:
    """Total order over committees used to break ties.

    Without arguments this is the canonical order of ``committees``
    (lexicographic over sorted member lists). ``priority`` ranks alternatives
    instead, ``committees`` fixes an explicit order.
    """
    committees: Optional[Tuple[Committee, ...]] = None
    priority: Optional[Tuple[int, ...]] = None

    @property
    def scheme(self) -> str:
        if self.committees is not None:
            return 'explicit'
        if self.priority is not None:
            return 'priority'
        return 'lexicographic'

    def order(self, params: ElectionParams) -> Tuple[Committee, ...]:
        return _tie_order(self, params.m, params.k)

    @classmethod
    def preferring(cls, params: ElectionParams, committee: Committee) -> 'TieOrder':
        canonical = committees(params.m, params.k)
        if committee not in canonical:
            raise ParameterError("{} is not a committee of size {}".format(members(committee), params.k))
        return cls(committees=(committee,) + tuple(c for c in canonical if c != committee))

    @classmethod
    def from_priority(cls, params: ElectionParams, priority: Sequence[int]) -> 'TieOrder':
        if sorted(priority) != list(range(params.m)):
            raise ParameterError("priority {} is not a permutation of 0..{}".format(list(priority), params.m - 1))
        return cls(priority=tuple(priority))


@functools.lru_cache(maxsize=None)
def _tie_order(tie: TieOrder, m: int, k: int) -> Tuple[Committee, ...]:
    canonical = committees(m, k)
    if tie.committees is not None:
        if sorted(tie.committees) != sorted(canonical):
            raise ParameterError("explicit tie order does not list every committee of size {} exactly once".format(k))
        return tuple(tie.committees)
    if tie.priority is not None:
        rank = {a: r for r, a in enumerate(tie.priority)}
        return tuple(sorted(canonical, key=lambda c: sorted(rank[a] for a in _members(c))))
    return canonical


CANONICAL = TieOrder()


@dataclass(frozen=True)
class RuleTable:
    """Explicit profile -> outcome function over a fully enumerated space.

    ``outcomes[i]`` belongs to the i-th profile of the canonical enumeration:
    approval profiles over ``ballot_space(m, k, restriction)`` (outcome is a
    committee mask) or ranking profiles over ``permutations(m)`` (outcome is
    an alternative).
    """
    side: str
    params: ElectionParams
    restriction: str
    outcomes: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'outcomes', tuple(self.outcomes))
        if self.side not in ('approval', 'ranking'):
            raise ParameterError("unknown table side '{}'".format(self.side))
        expected = len(self.space()) ** self.params.n
        if len(self.outcomes) != expected:
            raise ParameterError("table has {} outcomes for a space of {} profiles".format(len(self.outcomes), expected))
        for outcome in self.outcomes:
            if self.side == 'approval' and not is_committee(outcome, self.params):
                raise ParameterError("table outcome {} is not a committee of size {}".format(outcome, self.params.k))
            if self.side == 'ranking' and not 0 <= outcome < self.params.m:
                raise ParameterError("table outcome {} is not an alternative".format(outcome))

    def space(self) -> tuple:
        if self.side == 'ranking':
            return permutations(self.params.m)
        return ballot_space(self.params.m, self.params.k, self.restriction)

    def lookup(self, profile: tuple) -> int:
        positions = _positions(self.side, self.params.m, self.params.k, self.restriction)
        index = 0
        try:
            for item in profile:
                index = index * len(positions) + positions[item]
        except KeyError:
            raise TableLookupError(TABLE_LOOKUP_ERROR.format(profile)) from None
        return self.outcomes[index]

    def profiles(self):
        return ((profile_at(i, self.space(), self.params.n), outcome) for i, outcome in enumerate(self.outcomes))

    def describe(self) -> str:
        return '{} {} ballots={}'.format(self.side, self.params.describe(), self.restriction)


@functools.lru_cache(maxsize=None)
def _positions(side, m, k, restriction):
    space = permutations(m) if side == 'ranking' else ballot_space(m, k, restriction)
    return {item: i for i, item in enumerate(space)}


@dataclass(frozen=True)
class RuleSpec:
    kind: str
    dictator: int = 0
    agent_order: Tuple[int, ...] = ()
    committee: Committee = 0
    table: Optional[RuleTable] = None
    tie: TieOrder = field(default=CANONICAL)

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ParameterError("unknown rule kind '{}'".format(self.kind))

    @property
    def name(self) -> str:
        if self.kind == 'k-completion':
            return 'kcompletion:{}'.format(self.dictator)
        if self.kind == 'serial-dictatorship':
            return 'serial:{}'.format(','.join(str(a) for a in self.agent_order))
        if self.kind == 'constant':
            return 'constant:{}'.format(members(self.committee))
        if self.kind == 'table':
            return 'table:{}'.format(self.table.describe())
        return self.kind

    def validate(self, params: ElectionParams):
        if self.kind == 'k-completion' and not 0 <= self.dictator < params.n:
            raise ParameterError("dictator {} is not an agent of n={}".format(self.dictator, params.n))
        if self.kind == 'serial-dictatorship' and sorted(self.agent_order) != list(range(params.n)):
            raise ParameterError("agent order {} is not a permutation of 0..{}".format(list(self.agent_order), params.n - 1))
        if self.kind == 'constant' and not is_committee(self.committee, params):
            raise ParameterError("constant committee {} is not valid for m={} k={}".format(
                members(self.committee), params.m, params.k))
        if self.kind == 'table':
            if self.table.side != 'approval':
                raise ParameterError("a ranking table is not a multi-winner approval rule")
            if self.table.params != params:
                raise ParameterError("rule table is for {}, election is {}".format(
                    self.table.params.describe(), params.describe()))

    def evaluate(self, params: ElectionParams, ballots: tuple) -> Committee:
        """Fast path without validation; ``apply_rule`` is the checked entry point"""
        if self.kind == 'minisum':
            return _minisum(params, ballots, self.tie.order(params))
        if self.kind == 'minimax':
            return _minimax(ballots, self.tie.order(params))
        if self.kind == 'k-completion':
            return _k_completion(params, ballots[self.dictator], self.tie.order(params))
        if self.kind == 'serial-dictatorship':
            return _serial(ballots, self.agent_order, self.tie.order(params))
        if self.kind == 'constant':
            return self.committee
        return self.table.lookup(ballots)


def apply_rule(rule: RuleSpec, profile: ApprovalProfile) -> Committee:
    rule.validate(profile.params)
    return rule.evaluate(profile.params, profile.ballots)


def _minisum(params, ballots, order):
    scores = [0] * params.m
    for ballot in ballots:
        for a in _members(ballot):
            scores[a] += 1
    best, best_score = None, -1
    for c in order:
        score = sum(scores[a] for a in _members(c))
        if score > best_score:
            best, best_score = c, score
    return best


def _minimax(ballots, order):
    best, best_cost = None, None
    for c in order:
        cost = max(popcount(c ^ b) for b in ballots)
        if best_cost is None or cost < best_cost:
            best, best_cost = c, cost
    return best


def _k_completion(params, ballot, order):
    size = popcount(ballot)
    if size == params.k:
        return ballot
    if size < params.k:
        committee = ballot
        for a in range(params.m):
            if size == params.k:
                break
            if not committee >> a & 1:
                committee |= 1 << a
                size += 1
        return committee
    for c in order:
        if c & ~ballot == 0:
            return c
    raise AssertionError('unreachable: a ballot larger than k has a k-subset')


def _serial(ballots, agent_order, order):
    candidates = list(order)
    for agent in agent_order:
        ballot = ballots[agent]
        best = min(popcount(c ^ ballot) for c in candidates)
        candidates = [c for c in candidates if popcount(c ^ ballot) == best]
    return candidates[0]


def minisum(profile: ApprovalProfile, tie: TieOrder = CANONICAL) -> Committee:
    return _minisum(profile.params, profile.ballots, tie.order(profile.params))


def minimax(profile: ApprovalProfile, tie: TieOrder = CANONICAL) -> Committee:
    return _minimax(profile.ballots, tie.order(profile.params))


def max_distance(committee: Committee, profile: ApprovalProfile) -> int:
    """D(C, P): the largest Hamming distance from C to a ballot"""
    return max(popcount(committee ^ b) for b in profile.ballots)


def optimal_cost(profile: ApprovalProfile) -> int:
    return min(max(popcount(c ^ b) for b in profile.ballots)
               for c in committees(profile.params.m, profile.params.k))


def minisum_rule(tie: TieOrder = CANONICAL) -> RuleSpec:
    return RuleSpec('minisum', tie=tie)


def minimax_rule(tie: TieOrder = CANONICAL) -> RuleSpec:
    return RuleSpec('minimax', tie=tie)


def k_completion(dictator: int, tie: TieOrder = CANONICAL) -> RuleSpec:
    return RuleSpec('k-completion', dictator=dictator, tie=tie)


def serial_dictatorship(agent_order: Sequence[int], tie: TieOrder = CANONICAL) -> RuleSpec:
    return RuleSpec('serial-dictatorship', agent_order=tuple(agent_order), tie=tie)


def constant(committee: Committee) -> RuleSpec:
    return RuleSpec('constant', committee=committee)


def table_rule(table: RuleTable) -> RuleSpec:
    return RuleSpec('table', table=table)


@dataclass(frozen=True)
class RankingRule:
    """Single-winner rule over ranking profiles"""
    kind: str
    agent: int = 0
    alternative: int = 0
    table: Optional[RuleTable] = None

    def __post_init__(self):
        if self.kind not in RANKING_KINDS:
            raise ParameterError("unknown ranking rule kind '{}'".format(self.kind))

    @property
    def name(self) -> str:
        if self.kind == 'dictatorship':
            return 'dictator:{}'.format(self.agent)
        if self.kind == 'constant':
            return 'winner:{}'.format(self.alternative)
        if self.kind == 'table':
            return 'table:{}'.format(self.table.describe())
        return self.kind

    def winner(self, params: ElectionParams, rankings: tuple) -> int:
        if self.kind == 'dictatorship':
            return rankings[self.agent][0]
        if self.kind == 'constant':
            return self.alternative
        if self.kind == 'table':
            return self.table.lookup(rankings)
        scores = [0] * params.m
        for ranking in rankings:
            if self.kind == 'plurality':
                scores[ranking[0]] += 1
            else:
                for pos, a in enumerate(ranking):
                    scores[a] += params.m - 1 - pos
        # index tie-break: max() keeps the first maximum
        return max(range(params.m), key=lambda a: scores[a])


@dataclass(frozen=True)
class ApproxReport:
    rule_cost: int
    optimal_cost: int
    worst_profile: Optional[ApprovalProfile]
    visited: int = 0
    coverage: str = 'exhaustive'

    @property
    def is_infinite(self) -> bool:
        return self.optimal_cost == 0 and self.rule_cost > 0

    @property
    def ratio(self) -> Optional[Fraction]:
        """Exact ratio; None when unbounded (see ``is_infinite``)"""
        if self.optimal_cost == 0:
            return None if self.rule_cost > 0 else Fraction(1)
        return Fraction(self.rule_cost, self.optimal_cost)

    def ratio_text(self) -> str:
        if self.is_infinite:
            return 'inf'
        return str(self.ratio)


def _ratio_key(rule_cost, opt_cost):
    if opt_cost == 0:
        return (1, Fraction(0)) if rule_cost > 0 else (0, Fraction(1))
    return (0, Fraction(rule_cost, opt_cost))


def _approx_chunk(rule, params, restriction, indices):
    space = ballot_space(params.m, params.k, restriction)
    all_committees = committees(params.m, params.k)
    best = None
    for index in indices:
        ballots = profile_at(index, space, params.n)
        chosen = rule.evaluate(params, ballots)
        rule_cost = max(popcount(chosen ^ b) for b in ballots)
        opt = min(max(popcount(c ^ b) for b in ballots) for c in all_committees)
        key = _ratio_key(rule_cost, opt)
        if best is None or key > best[0]:
            best = (key, index, rule_cost, opt)
    return best


def approx_ratio(rule: RuleSpec, params: ElectionParams, mode: Union[str, Sampled] = 'exhaustive',
                 restriction: str = 'all', eval_cap: int = DEFAULT_EVAL_CAP, workers: int = 1) -> ApproxReport:
    """Worst ratio D(R(P),P) / D(C*,P) over the visited profiles"""
    rule.validate(params)
    total = profile_count(params, restriction)
    if isinstance(mode, Sampled):
        indices = random.Random(mode.seed).sample(range(total), min(mode.count, total))
        coverage = mode.describe()
    else:
        if total > eval_cap:
            raise CapExceededError(CAP_ERROR.format(total, eval_cap))
        indices = range(total)
        coverage = 'exhaustive'
    LOGGER.info("Measuring approximation ratio of %s over %d profiles (%s)", rule.name, len(indices), coverage)
    chunks = utils.partition(indices, workers)
    results = utils.run_partitioned(_approx_chunk, [(rule, params, restriction, c) for c in chunks], workers)
    best = None
    for result in results:
        # chunks are in visiting order, so ties keep the earliest profile
        if result is not None and (best is None or result[0] > best[0]):
            best = result
    if best is None:
        return ApproxReport(0, 0, None, 0, coverage)
    _, index, rule_cost, opt = best
    worst = ApprovalProfile(params, profile_at(index, ballot_space(params.m, params.k, restriction), params.n))
    return ApproxReport(rule_cost, opt, worst, len(indices), coverage)


def iter_profiles(params: ElectionParams, restriction: str = 'all'):
    return (ApprovalProfile(params, ballots) for ballots in enumerate_profiles(params, restriction))
