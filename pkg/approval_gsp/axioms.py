"""
Axioms as decidable checks over enumerated profile spaces.

Approval side: unanimity, Pareto efficiency, strategyproofness, weak and
strong group-strategyproofness. Ranking side: strategyproofness, onto,
dictatorship and unanimity. A failed check carries a ``Witness`` that
``replay_witness`` re-evaluates from scratch.
"""
import itertools
import random
from math import comb
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import singer

from approval_gsp import utils
from approval_gsp.core import (ApprovalProfile, ElectionParams, RankingProfile, ballot_space, committees,
                               enumerate_ranking_profiles, permutations, popcount, position, profile_at,
                               profile_count, ranking_profile_count)
from approval_gsp.errors import CAP_ERROR, CapExceededError, ParameterError
from approval_gsp.rules import DEFAULT_EVAL_CAP, RuleSpec

LOGGER = singer.get_logger('approval_gsp')

APPROVAL_AXIOMS = ('unanimity', 'pareto', 'sp', 'weak-gsp', 'strong-gsp')
RANKING_AXIOMS = ('sp-ranking', 'onto', 'dictatorship', 'unanimity-ranking')
COVERAGE_MODES = ('auto', 'exhaustive', 'sampled')

Profile = Union[ApprovalProfile, RankingProfile]


@dataclass(frozen=True)
class Witness:
    """A concrete violation.

    ``coalition`` and ``misreports`` are aligned; ``distances`` holds the
    (before, after) pair of every coalition member, measured against its
    true ballot (Hamming distance) or true ranking (position, 0 = top).
    Unanimity and Pareto witnesses have no misreports: ``outcome_after`` is
    the committee everybody prefers and the coalition is every agent.
    """
    profile: Profile
    coalition: Tuple[int, ...]
    misreports: tuple
    outcome_before: int
    outcome_after: int
    distances: Tuple[Tuple[int, int], ...]

    @property
    def side(self) -> str:
        return 'ranking' if isinstance(self.profile, RankingProfile) else 'approval'

    def deviated_profile(self) -> Profile:
        return self.profile.deviate(dict(zip(self.coalition, self.misreports)))


@dataclass(frozen=True)
class Coverage:
    mode: str = 'exhaustive'
    count: Optional[int] = None
    seed: Optional[int] = None
    max_coalition: Optional[int] = None
    profiles: int = 0

    @property
    def is_proof(self) -> bool:
        return self.mode == 'exhaustive' and self.max_coalition is None

    def describe(self) -> str:
        text = 'sampled({},{})'.format(self.count, self.seed) if self.mode == 'sampled' else 'exhaustive'
        if self.max_coalition is not None:
            text += ',bounded-coalition({})'.format(self.max_coalition)
        return text


@dataclass(frozen=True)
class AxiomVerdict:
    axiom: str
    holds: bool
    witness: Optional[Witness] = None
    coverage: Coverage = field(default_factory=Coverage)
    dictators: Tuple[int, ...] = ()
    detail: str = ''


@dataclass(frozen=True)
class ProfileSpace:
    restriction: str = 'all'
    mode: str = 'auto'
    count: int = 10000
    seed: int = 20240101
    deviations: str = 'all'

    def __post_init__(self):
        if self.mode not in COVERAGE_MODES:
            raise ParameterError("unknown coverage mode '{}'".format(self.mode))
        if self.deviations not in ('all', 'same'):
            raise ParameterError("unknown deviation restriction '{}'".format(self.deviations))


def deviation_space(rule: RuleSpec, params: ElectionParams, space: ProfileSpace) -> tuple:
    # a table only answers inside its own space
    if space.deviations == 'same' or rule.kind == 'table':
        return ballot_space(params.m, params.k, space.restriction)
    return ballot_space(params.m, params.k, 'all')


def _coalition_cost(n, max_coalition, deviations):
    return sum(comb(n, size) * (deviations ** size - 1)
               for size in range(1, max_coalition + 1))


def _visit(params, space, per_profile, eval_cap, max_coalition=None):
    """Profile indices to visit and the coverage they give"""
    total = profile_count(params, space.restriction)
    needed = total * max(per_profile, 1)
    sampled = space.mode == 'sampled'
    if space.mode == 'exhaustive' and needed > eval_cap:
        raise CapExceededError(CAP_ERROR.format(needed, eval_cap))
    if space.mode == 'auto' and needed > eval_cap:
        LOGGER.warning("Space needs %d evaluations (cap %d), falling back to %d sampled profiles (seed %d)",
                       needed, eval_cap, space.count, space.seed)
        sampled = True
    if sampled:
        indices = random.Random(space.seed).sample(range(total), min(space.count, total))
        return indices, Coverage('sampled', space.count, space.seed, max_coalition, len(indices))
    return range(total), Coverage('exhaustive', max_coalition=max_coalition, profiles=total)


def _pareto_witness(rule, params, ballots):
    before = rule.evaluate(params, ballots)
    old = [popcount(before ^ b) for b in ballots]
    for c in committees(params.m, params.k):
        if c == before:
            continue
        new = [popcount(c ^ b) for b in ballots]
        if all(y <= x for x, y in zip(old, new)) and any(y < x for x, y in zip(old, new)):
            return Witness(ApprovalProfile(params, ballots), tuple(range(params.n)), (), before, c,
                           tuple(zip(old, new)))
    return None


def _coalition_witness(rule, params, ballots, deviations, strict, max_coalition):
    before = rule.evaluate(params, ballots)
    old = [popcount(before ^ b) for b in ballots]
    for size in range(1, max_coalition + 1):
        for coalition in itertools.combinations(range(params.n), size):
            if strict and any(old[a] == 0 for a in coalition):
                continue
            if not strict and all(old[a] == 0 for a in coalition):
                continue
            truthful = tuple(ballots[a] for a in coalition)
            for joint in itertools.product(deviations, repeat=size):
                if joint == truthful:
                    continue
                deviated = list(ballots)
                for agent, ballot in zip(coalition, joint):
                    deviated[agent] = ballot
                after = rule.evaluate(params, tuple(deviated))
                pairs = tuple((old[a], popcount(after ^ ballots[a])) for a in coalition)
                if strict:
                    violated = all(y < x for x, y in pairs)
                else:
                    violated = all(y <= x for x, y in pairs) and any(y < x for x, y in pairs)
                if violated:
                    return Witness(ApprovalProfile(params, ballots), coalition, joint, before, after, pairs)
    return None


def _scan_chunk(kind, rule, params, restriction, deviations, max_coalition, indices):
    """First witness among ``indices`` in visiting order, or None"""
    space = ballot_space(params.m, params.k, restriction)
    for index in indices:
        ballots = profile_at(index, space, params.n)
        if kind == 'pareto':
            witness = _pareto_witness(rule, params, ballots)
        else:
            witness = _coalition_witness(rule, params, ballots, deviations, kind == 'weak', max_coalition)
        if witness is not None:
            return witness
    return None


def _scan(axiom, kind, rule, params, space, per_profile, eval_cap, workers, max_coalition, bounded):
    rule.validate(params)
    indices, coverage = _visit(params, space, per_profile, eval_cap, max_coalition if bounded else None)
    LOGGER.info("Checking %s of %s on %s (%s)", axiom, rule.name, params.describe(), coverage.describe())
    deviations = deviation_space(rule, params, space)
    tasks = [(kind, rule, params, space.restriction, deviations, max_coalition, chunk)
             for chunk in utils.partition(indices, workers)]
    results = utils.run_partitioned(_scan_chunk, tasks, workers, stop=lambda found: found is not None)
    witness = next((w for w in results if w is not None), None)
    LOGGER.info("%s: %s", axiom, 'holds' if witness is None else 'violated')
    return AxiomVerdict(axiom, witness is None, witness, coverage)


def check_unanimity(rule: RuleSpec, params: ElectionParams) -> AxiomVerdict:
    rule.validate(params)
    for c in committees(params.m, params.k):
        ballots = (c,) * params.n
        before = rule.evaluate(params, ballots)
        if before != c:
            distance = popcount(before ^ c)
            witness = Witness(ApprovalProfile(params, ballots), tuple(range(params.n)), (), before, c,
                              ((distance, 0),) * params.n)
            return AxiomVerdict('unanimity', False, witness, Coverage(profiles=len(committees(params.m, params.k))))
    return AxiomVerdict('unanimity', True, None, Coverage(profiles=len(committees(params.m, params.k))))


def check_pareto(rule: RuleSpec, params: ElectionParams, space: ProfileSpace = ProfileSpace(),
                 eval_cap: int = DEFAULT_EVAL_CAP, workers: int = 1) -> AxiomVerdict:
    return _scan('pareto', 'pareto', rule, params, space, len(committees(params.m, params.k)),
                 eval_cap, workers, params.n, False)


def check_weak_gsp(rule: RuleSpec, params: ElectionParams, space: ProfileSpace = ProfileSpace(),
                   max_coalition: Optional[int] = None, eval_cap: int = DEFAULT_EVAL_CAP,
                   workers: int = 1) -> AxiomVerdict:
    return _check_coalitions('weak-gsp', True, rule, params, space, max_coalition, eval_cap, workers)


def check_strong_gsp(rule: RuleSpec, params: ElectionParams, space: ProfileSpace = ProfileSpace(),
                     max_coalition: Optional[int] = None, eval_cap: int = DEFAULT_EVAL_CAP,
                     workers: int = 1) -> AxiomVerdict:
    return _check_coalitions('strong-gsp', False, rule, params, space, max_coalition, eval_cap, workers)


def check_sp(rule: RuleSpec, params: ElectionParams, space: ProfileSpace = ProfileSpace(),
             eval_cap: int = DEFAULT_EVAL_CAP, workers: int = 1) -> AxiomVerdict:
    """Weak GSP restricted to singleton coalitions"""
    return _check_coalitions('sp', True, rule, params, space, 1, eval_cap, workers)


def _check_coalitions(axiom, strict, rule, params, space, max_coalition, eval_cap, workers):
    limit = params.n if max_coalition is None else max_coalition
    if limit < 1:
        raise ParameterError("max coalition size {} (need at least 1)".format(max_coalition))
    limit = min(limit, params.n)
    deviations = len(deviation_space(rule, params, space))
    bounded = axiom != 'sp' and limit < params.n
    return _scan(axiom, 'weak' if strict else 'strong', rule, params, space,
                 _coalition_cost(params.n, limit, deviations), eval_cap, workers, limit, bounded)


def _check_ranking_size(params, eval_cap, per_profile=1):
    total = ranking_profile_count(params)
    if total * per_profile > eval_cap:
        raise CapExceededError(CAP_ERROR.format(total * per_profile, eval_cap))
    return total


def _sp_ranking_chunk(rule, params, indices):
    space = permutations(params.m)
    for index in indices:
        rankings = profile_at(index, space, params.n)
        before = rule.winner(params, rankings)
        for agent in range(params.n):
            true = rankings[agent]
            old = position(true, before)
            if old == 0:
                continue
            for misreport in space:
                if misreport == true:
                    continue
                deviated = rankings[:agent] + (misreport,) + rankings[agent + 1:]
                after = rule.winner(params, deviated)
                new = position(true, after)
                if new < old:
                    return Witness(RankingProfile(params, rankings), (agent,), (misreport,), before, after,
                                   ((old, new),))
    return None


def check_sp_ranking(rule, params: ElectionParams, eval_cap: int = DEFAULT_EVAL_CAP,
                     workers: int = 1) -> AxiomVerdict:
    """No agent gets a strictly better winner, under its true ranking, by misreporting"""
    total = _check_ranking_size(params, eval_cap, params.n * len(permutations(params.m)))
    LOGGER.info("Checking sp-ranking of %s over %d ranking profiles", rule.name, total)
    tasks = [(rule, params, chunk) for chunk in utils.partition(range(total), workers)]
    results = utils.run_partitioned(_sp_ranking_chunk, tasks, workers, stop=lambda found: found is not None)
    witness = next((w for w in results if w is not None), None)
    return AxiomVerdict('sp-ranking', witness is None, witness, Coverage(profiles=total))


def check_onto(rule, params: ElectionParams, eval_cap: int = DEFAULT_EVAL_CAP) -> AxiomVerdict:
    """Failures list the unreachable alternatives in ``detail``; there is no single-profile witness"""
    total = _check_ranking_size(params, eval_cap)
    reached = set()
    for rankings in enumerate_ranking_profiles(params):
        reached.add(rule.winner(params, rankings))
        if len(reached) == params.m:
            break
    missing = sorted(set(range(params.m)) - reached)
    detail = '' if not missing else 'never selected: {}'.format(','.join(str(a) for a in missing))
    return AxiomVerdict('onto', not missing, None, Coverage(profiles=total), detail=detail)


def check_dictatorship(rule, params: ElectionParams, eval_cap: int = DEFAULT_EVAL_CAP) -> AxiomVerdict:
    """``holds`` means some agent is a dictator; ``dictators`` lists them.

    For every agent that is not a dictator, ``detail`` names the first
    profile index whose winner is not that agent's top choice.
    """
    total = _check_ranking_size(params, eval_cap, params.n)
    candidates = set(range(params.n))
    counters = {}
    for index, rankings in enumerate(enumerate_ranking_profiles(params)):
        if not candidates:
            break
        winner = rule.winner(params, rankings)
        for agent in sorted(candidates):
            if rankings[agent][0] != winner:
                candidates.discard(agent)
                counters[agent] = index
    dictators = tuple(sorted(candidates))
    detail = ' '.join('agent{}@profile{}'.format(agent, index) for agent, index in sorted(counters.items()))
    return AxiomVerdict('dictatorship', bool(dictators), None, Coverage(profiles=total), dictators, detail)


def check_unanimity_ranking(rule, params: ElectionParams) -> AxiomVerdict:
    """Whenever every agent ranks ``a`` first, ``a`` wins"""
    tops = {}
    for ranking in permutations(params.m):
        tops.setdefault(ranking[0], []).append(ranking)
    visited = 0
    for alternative in range(params.m):
        for rankings in itertools.product(tops[alternative], repeat=params.n):
            visited += 1
            before = rule.winner(params, rankings)
            if before != alternative:
                pairs = tuple((position(r, before), 0) for r in rankings)
                witness = Witness(RankingProfile(params, rankings), tuple(range(params.n)), (), before,
                                  alternative, pairs)
                return AxiomVerdict('unanimity-ranking', False, witness, Coverage(profiles=visited))
    return AxiomVerdict('unanimity-ranking', True, None, Coverage(profiles=visited))


def run_check(axiom: str, rule, params: ElectionParams, space: ProfileSpace = ProfileSpace(),
              max_coalition: Optional[int] = None, eval_cap: int = DEFAULT_EVAL_CAP,
              workers: int = 1) -> AxiomVerdict:
    if axiom in RANKING_AXIOMS and isinstance(rule, RuleSpec):
        raise ParameterError("axiom '{}' needs a single-winner ranking rule".format(axiom))
    if axiom in APPROVAL_AXIOMS and not isinstance(rule, RuleSpec):
        raise ParameterError("axiom '{}' needs a multi-winner approval rule".format(axiom))
    if axiom == 'unanimity':
        return check_unanimity(rule, params)
    if axiom == 'pareto':
        return check_pareto(rule, params, space, eval_cap, workers)
    if axiom == 'sp':
        return check_sp(rule, params, space, eval_cap, workers)
    if axiom == 'weak-gsp':
        return check_weak_gsp(rule, params, space, max_coalition, eval_cap, workers)
    if axiom == 'strong-gsp':
        return check_strong_gsp(rule, params, space, max_coalition, eval_cap, workers)
    if axiom == 'sp-ranking':
        return check_sp_ranking(rule, params, eval_cap, workers)
    if axiom == 'onto':
        return check_onto(rule, params, eval_cap)
    if axiom == 'dictatorship':
        return check_dictatorship(rule, params, eval_cap)
    if axiom == 'unanimity-ranking':
        return check_unanimity_ranking(rule, params)
    raise ParameterError("unknown axiom '{}'".format(axiom))


def _certifies(axiom, pairs):
    if axiom in ('sp', 'sp-ranking') and len(pairs) != 1:
        return False
    if axiom in ('sp', 'weak-gsp', 'sp-ranking'):
        return all(after < before for before, after in pairs)
    return all(after <= before for before, after in pairs) and any(after < before for before, after in pairs)


def replay_witness(rule, witness: Witness, axiom: str) -> bool:
    """Re-evaluate ``witness`` under ``rule`` and confirm it proves ``axiom`` violated"""
    profile = witness.profile
    params = profile.params
    if witness.side == 'ranking':
        before = rule.winner(params, profile.rankings)
        true = profile.rankings
        if axiom == 'unanimity-ranking':
            if len(set(r[0] for r in true)) != 1 or true[0][0] != witness.outcome_after:
                return False
            after = witness.outcome_after
        else:
            after = rule.winner(params, witness.deviated_profile().rankings)
        pairs = tuple((position(true[a], before), position(true[a], after)) for a in witness.coalition)
    else:
        before = rule.evaluate(params, profile.ballots)
        true = profile.ballots
        if axiom == 'unanimity':
            if len(set(true)) != 1 or true[0] != witness.outcome_after:
                return False
            after = witness.outcome_after
        elif axiom == 'pareto':
            if popcount(witness.outcome_after) != params.k or witness.coalition != tuple(range(params.n)):
                return False
            after = witness.outcome_after
        else:
            after = rule.evaluate(params, witness.deviated_profile().ballots)
        pairs = tuple((popcount(before ^ true[a]), popcount(after ^ true[a])) for a in witness.coalition)
    if (before, after, pairs) != (witness.outcome_before, witness.outcome_after, witness.distances):
        return False
    if axiom in ('unanimity', 'unanimity-ranking'):
        return before != after
    return _certifies(axiom, pairs)
