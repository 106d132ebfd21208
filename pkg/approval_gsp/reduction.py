"""
Ranking elections embedded into approval elections.

Every source agent ``i`` with ranking ``r`` becomes ``m - 1`` copies; copy
``(i, j)`` approves the top ``j`` alternatives of ``r`` plus the ``k - 1``
dummy alternatives ``D``, which take the indices ``m .. m + k - 2``. A
multi-winner rule ``R`` then induces a single-winner rule: the one
non-dummy member of ``R`` on the embedded profile.
"""
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import singer

from approval_gsp.axioms import (AxiomVerdict, Witness, check_dictatorship, check_onto, check_sp_ranking,
                                 replay_witness)
from approval_gsp.core import (ApprovalProfile, ElectionParams, RankingProfile, as_mask, members, popcount,
                               position, ranking_params, to_bitstring)
from approval_gsp.errors import NotSingletonError, ParameterError, VerificationError
from approval_gsp.rules import DEFAULT_EVAL_CAP, RuleSpec, apply_rule

LOGGER = singer.get_logger('approval_gsp')


@dataclass(frozen=True)
class ReductionOutput:
    approval: ApprovalProfile
    dummies: int
    copy_map: Tuple[Tuple[int, int], ...]
    source_params: ElectionParams
    k: int

    def agent(self, source_agent: int, level: int) -> int:
        """Approval-side index of copy (source_agent, level), level in 1..m-1"""
        return source_agent * (self.source_params.m - 1) + level - 1


def dummy_mask(m: int, k: int) -> int:
    return as_mask(range(m, m + k - 1))


def build_approval_election(ranking: RankingProfile, k: int) -> ReductionOutput:
    m, n = ranking.params.m, ranking.params.n
    if m < 2:
        raise ParameterError("the reduction needs m >= 2 source alternatives, got {}".format(m))
    if k < 1:
        raise ParameterError("k={} (need k >= 1)".format(k))
    dummies = dummy_mask(m, k)
    ballots = []
    copy_map = []
    for i, order in enumerate(ranking.rankings):
        for j in range(1, m):
            ballots.append(as_mask(order[:j]) | dummies)
            copy_map.append((i, j))
    params = ElectionParams(m=m + k - 1, k=k, n=n * (m - 1))
    return ReductionOutput(ApprovalProfile(params, tuple(ballots)), dummies, tuple(copy_map), ranking.params, k)


def induced_winner(rule: RuleSpec, ranking: RankingProfile, k: int) -> int:
    reduced = build_approval_election(ranking, k)
    committee = apply_rule(rule, reduced.approval)
    rest = committee & ~reduced.dummies
    if popcount(rest) != 1:
        raise NotSingletonError(committee, to_bitstring(committee, reduced.approval.params.m))
    return members(rest)[0]


@dataclass(frozen=True)
class InducedRule:
    """The single-winner rule T induced by a multi-winner rule and k"""
    base: RuleSpec
    k: int

    @property
    def name(self) -> str:
        return 'induced:{}'.format(self.base.name)

    def winner(self, params: ElectionParams, rankings: tuple) -> int:
        return induced_winner(self.base, RankingProfile(params, rankings), self.k)


@dataclass(frozen=True)
class TransferReport:
    rule: str
    source_params: ElectionParams
    k: int
    onto: AxiomVerdict
    sp: AxiomVerdict
    dictatorship: Optional[AxiomVerdict] = None
    gsp_witness: Optional[Witness] = None
    improved: Tuple[int, ...] = ()
    indifferent: Tuple[int, ...] = ()


def transfer_check(rule: RuleSpec, params: ElectionParams, k: int, eval_cap: int = DEFAULT_EVAL_CAP,
                   workers: int = 1) -> TransferReport:
    """Check that the induced rule is onto and SP; turn an SP failure into a GSP witness.

    A beneficial misreport of source agent ``i`` becomes a joint misreport of
    all copies of ``i``. With the truthful winner at 1-based position ``r`` and
    the manipulated one at ``r' < r`` of the true ranking, copies ``(i, j)``
    with ``r' <= j < r`` strictly improve and all others are indifferent.
    """
    induced = InducedRule(rule, k)
    source = ranking_params(params.m, params.n)
    LOGGER.info("Transfer check of %s on m=%d n=%d k=%d", induced.name, source.m, source.n, k)
    onto = check_onto(induced, source, eval_cap)
    sp = check_sp_ranking(induced, source, eval_cap, workers)
    dictatorship = check_dictatorship(induced, source, eval_cap)
    if sp.holds:
        return TransferReport(rule.name, source, k, onto, sp, dictatorship)

    ranking_witness = sp.witness
    agent = ranking_witness.coalition[0]
    truthful = build_approval_election(ranking_witness.profile, k)
    deviated = build_approval_election(ranking_witness.deviated_profile(), k)
    copies = tuple(truthful.agent(agent, j) for j in range(1, source.m))
    before = apply_rule(rule, truthful.approval)
    after = apply_rule(rule, deviated.approval)
    true_ballots = truthful.approval.ballots
    pairs = tuple((popcount(before ^ true_ballots[c]), popcount(after ^ true_ballots[c])) for c in copies)
    witness = Witness(truthful.approval, copies, tuple(deviated.approval.ballots[c] for c in copies),
                      before, after, pairs)
    if not replay_witness(rule, witness, 'strong-gsp'):
        raise VerificationError("converted copy-coalition witness does not replay as a strong-GSP violation")
    improved = tuple(c for c, (old, new) in zip(copies, pairs) if new < old)
    indifferent = tuple(c for c, (old, new) in zip(copies, pairs) if new == old)
    return TransferReport(rule.name, source, k, onto, sp, dictatorship, witness, improved, indifferent)


@dataclass(frozen=True)
class CounterexampleReport:
    rule: str
    source_m: int
    k: int
    x: int
    y: int
    dummies: int
    profiles: Dict[str, ApprovalProfile] = field(default_factory=dict)
    outcomes: Dict[str, int] = field(default_factory=dict)
    premise_failure: Optional[str] = None
    case: Optional[str] = None
    witness: Optional[Witness] = None

    @property
    def violation_found(self) -> bool:
        return self.witness is not None


def _first_two(m, first, second):
    return (first, second) + tuple(a for a in range(m) if a not in (first, second))


def counterexample_run(rule: RuleSpec, m_prime: int, k: int, x: int = 0, y: int = 1) -> CounterexampleReport:
    """Run the closing step of the impossibility argument on ``rule``.

    Source rankings ``x > y > rest`` and ``y > x > rest`` (rest in index
    order) give P_x = P(x-first, x-first, y-first) and P_y = P(y-first,
    x-first, y-first); P_xy is P_x with copy (1,1) approving {x, y} and D.
    """
    if not 1 <= k <= m_prime - 2:
        raise ParameterError("need 1 <= k <= m'-2, got m'={} k={}".format(m_prime, k))
    m = m_prime - k + 1
    if not (0 <= x < m and 0 <= y < m and x != y):
        raise ParameterError("x={} and y={} must be distinct source alternatives in 0..{}".format(x, y, m - 1))
    prefer_x = _first_two(m, x, y)
    prefer_y = _first_two(m, y, x)
    source = ranking_params(m, 3)
    reduced_x = build_approval_election(RankingProfile(source, (prefer_x, prefer_x, prefer_y)), k)
    reduced_y = build_approval_election(RankingProfile(source, (prefer_y, prefer_x, prefer_y)), k)
    dummies = reduced_x.dummies
    first_copy = reduced_x.agent(0, 1)
    p_x = reduced_x.approval
    p_y = reduced_y.approval
    p_xy = p_x.deviate({first_copy: (1 << x) | (1 << y) | dummies})
    profiles = {'P_x': p_x, 'P_y': p_y, 'P_xy': p_xy}
    outcomes = {label: apply_rule(rule, profile) for label, profile in profiles.items()}
    report = dict(rule=rule.name, source_m=m, k=k, x=x, y=y, dummies=dummies, profiles=profiles,
                  outcomes=outcomes)

    x_slate = (1 << x) | dummies
    y_slate = (1 << y) | dummies
    if outcomes['P_x'] != x_slate:
        LOGGER.info("Premise failed: R(P_x) = %s", members(outcomes['P_x']))
        return CounterexampleReport(premise_failure='P_x', **report)
    if outcomes['P_y'] != y_slate:
        LOGGER.info("Premise failed: R(P_y) = %s", members(outcomes['P_y']))
        return CounterexampleReport(premise_failure='P_y', **report)

    chosen = outcomes['P_xy']
    if chosen != x_slate:
        case, partner, misreport, target = 'not-x', reduced_x.agent(1, 1), x_slate, outcomes['P_x']
    else:
        case, partner, misreport, target = 'x', reduced_x.agent(2, 1), y_slate, outcomes['P_y']
    coalition = (first_copy, partner)
    pairs = tuple((popcount(chosen ^ p_xy.ballots[a]), popcount(target ^ p_xy.ballots[a])) for a in coalition)
    witness = Witness(p_xy, coalition, (misreport, p_xy.ballots[partner]), chosen, target, pairs)
    if not replay_witness(rule, witness, 'strong-gsp'):
        LOGGER.info("Case %s coalition does not certify a strong-GSP violation", case)
        return CounterexampleReport(case=case, **report)
    LOGGER.info("Case %s: coalition %s violates strong GSP", case, coalition)
    return CounterexampleReport(case=case, witness=witness, **report)


def alternative_names(m: int, x: int, y: int) -> Dict[int, str]:
    names = {x: 'x', y: 'y'}
    rest = [a for a in range(m) if a not in names]
    for number, a in enumerate(rest):
        names[a] = 'z' if len(rest) == 1 else 'z{}'.format(number + 1)
    return names


def symbolic(mask: int, dummies: int, names: Dict[int, str]) -> str:
    core = [names[a] for a in sorted(members(mask & ~dummies), key=lambda a: names[a])]
    if not dummies:
        return '{' + ','.join(core) + '}'
    if not core:
        return 'D'
    return '{' + ','.join(core) + '} ∪ D'


def render_table(report: CounterexampleReport) -> str:
    """Copies as rows, P_x / P_y / P_xy as columns, outcomes in the last row"""
    names = alternative_names(report.source_m, report.x, report.y)
    labels = ('P_x', 'P_y', 'P_xy')
    rows = [('agent',) + labels]
    levels = report.source_m - 1
    for index in range(report.profiles['P_x'].params.n):
        i, j = divmod(index, levels)
        rows.append(('({},{})'.format(i + 1, j + 1),) + tuple(
            symbolic(report.profiles[label].ballots[index], report.dummies, names) for label in labels))
    rows.append(('R',) + tuple(symbolic(report.outcomes[label], report.dummies, names) for label in labels))
    widths = [max(len(row[c]) for row in rows) for c in range(4)]
    lines = ['  '.join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() for row in rows]
    lines.insert(1, '  '.join('-' * width for width in widths))
    lines.insert(len(lines) - 1, '  '.join('-' * width for width in widths))
    return '\n'.join(lines) + '\n'
