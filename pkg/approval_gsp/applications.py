"""
Approval rules read as mechanisms in other settings: minimax committee
approximation, participatory budgeting with equal project costs, binary
classification with shared inputs, and facility location on hypercube
nodes with exactly k ones.
"""
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

import singer

from approval_gsp import utils
from approval_gsp.axioms import check_unanimity
from approval_gsp.core import ApprovalProfile, ElectionParams, committees, hamming, popcount
from approval_gsp.errors import CAP_ERROR, CapExceededError, NodeNotAllowableError, ParameterError
from approval_gsp.rules import (CANONICAL, DEFAULT_EVAL_CAP, ApproxReport, RuleSpec, TieOrder, apply_rule,
                                k_completion, max_distance, optimal_cost)

LOGGER = singer.get_logger('approval_gsp')

OBJECTIVES = ('max', 'total')


@dataclass(frozen=True)
class InfiniteRatioCertificate:
    applicable: bool
    report: Optional[ApproxReport] = None
    note: str = ''


def minimax_infinite_ratio_check(rule: RuleSpec, params: ElectionParams) -> InfiniteRatioCertificate:
    """A rule that is not unanimous has unbounded minimax approximation ratio"""
    verdict = check_unanimity(rule, params)
    if verdict.holds:
        return InfiniteRatioCertificate(False, note='rule is unanimous; no unbounded ratio follows from unanimity')
    profile = verdict.witness.profile
    report = ApproxReport(max_distance(apply_rule(rule, profile), profile), optimal_cost(profile), profile, 1)
    LOGGER.info("%s is not unanimous: D(R(P),P)=%d against optimum %d", rule.name, report.rule_cost,
                report.optimal_cost)
    return InfiniteRatioCertificate(True, report, 'unanimous profile with zero optimum')


# Participatory budgeting, equal costs: k projects fit the budget, so the
# maximal feasible sets are exactly the k-subsets.

@dataclass(frozen=True)
class BudgetInstance:
    projects: int
    slots: int
    ballots: Tuple[int, ...]
    feasible_ballots_only: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'ballots', tuple(self.ballots))
        params = self.params
        if self.feasible_ballots_only:
            for citizen, ballot in enumerate(self.ballots):
                if popcount(ballot) > params.k:
                    raise ParameterError("citizen {} approves {} projects, above the budget of {}".format(
                        citizen, popcount(ballot), self.slots))

    @property
    def params(self) -> ElectionParams:
        return ElectionParams(self.projects, self.slots, len(self.ballots))

    @property
    def restriction(self) -> str:
        return 'feasible' if self.feasible_ballots_only else 'all'

    def maximal_sets(self) -> Tuple[int, ...]:
        return committees(self.projects, self.slots)

    def to_profile(self) -> ApprovalProfile:
        return ApprovalProfile(self.params, self.ballots)

    @classmethod
    def from_profile(cls, profile: ApprovalProfile, feasible_ballots_only: bool = False) -> 'BudgetInstance':
        return cls(profile.params.m, profile.params.k, profile.ballots, feasible_ballots_only)


def pb_roundtrip(instance: BudgetInstance) -> Tuple[ApprovalProfile, BudgetInstance]:
    profile = instance.to_profile()
    return profile, BudgetInstance.from_profile(profile, instance.feasible_ballots_only)


@dataclass(frozen=True)
class BudgetMechanism:
    rule: RuleSpec

    @property
    def name(self) -> str:
        return 'maximal:{}'.format(self.rule.name)

    def fund(self, instance: BudgetInstance) -> int:
        return apply_rule(self.rule, instance.to_profile())


def maximal_mechanism(rule: RuleSpec) -> BudgetMechanism:
    return BudgetMechanism(rule)


# Classification: points are alternatives, a classifier labels exactly k
# points positive, an agent's labeling is its positive set.

@dataclass(frozen=True)
class ClassificationInstance:
    params: ElectionParams
    labelings: Tuple[int, ...]
    weights: Tuple[Fraction, ...]
    realizable: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'labelings', tuple(self.labelings))
        object.__setattr__(self, 'weights', tuple(Fraction(w) for w in self.weights))
        if len(self.labelings) != self.params.n or len(self.weights) != self.params.n:
            raise ParameterError("expected {} labelings and weights".format(self.params.n))
        if any(w <= 0 for w in self.weights):
            raise ParameterError("weights must be positive")
        if sum(self.weights) != 1:
            raise ParameterError("weights sum to {}, not 1".format(sum(self.weights)))
        for agent, labeling in enumerate(self.labelings):
            if not 0 <= labeling <= self.params.full_mask:
                raise ParameterError("labeling of agent {} covers points outside 0..{}".format(
                    agent, self.params.m - 1))
            if self.realizable and popcount(labeling) != self.params.k:
                raise ParameterError("labeling of agent {} has {} positive points; a realizable dataset "
                                     "needs exactly {}".format(agent, popcount(labeling), self.params.k))

    @classmethod
    def from_text(cls, text: str, source: str = '<input>', realizable: bool = False) -> 'ClassificationInstance':
        params, labelings, weights = utils.parse_classification(text, source)
        return cls(params, labelings, weights, realizable)

    @classmethod
    def equal_weights(cls, params: ElectionParams, labelings, realizable: bool = False):
        return cls(params, labelings, (Fraction(1, params.n),) * params.n, realizable)

    def to_profile(self) -> ApprovalProfile:
        return ApprovalProfile(self.params, self.labelings)

    def is_realizable(self) -> bool:
        return all(popcount(y) == self.params.k for y in self.labelings)


def agent_loss(h, y) -> int:
    """Points on which classifier ``h`` and labeling ``y`` disagree"""
    return hamming(h, y)


def global_risk(h: int, instance: ClassificationInstance) -> Fraction:
    return sum((w * agent_loss(h, y) for w, y in zip(instance.weights, instance.labelings)), Fraction(0))


def erm(instance: ClassificationInstance, tie: TieOrder = CANONICAL) -> int:
    best, best_risk = None, None
    for h in tie.order(instance.params):
        risk = global_risk(h, instance)
        if best_risk is None or risk < best_risk:
            best, best_risk = h, risk
    return best


@dataclass(frozen=True)
class ClassificationCertificate:
    instance: ClassificationInstance
    classifier: int
    mechanism_risk: Fraction
    erm_risk: Fraction


@dataclass(frozen=True)
class ClassificationMechanism:
    rule: RuleSpec
    realizable_only: bool = False

    @property
    def name(self) -> str:
        return 'classifier:{}'.format(self.rule.name)

    def classify(self, instance: ClassificationInstance) -> int:
        if self.realizable_only and not instance.is_realizable():
            raise ParameterError("mechanism accepts realizable datasets only")
        return apply_rule(self.rule, instance.to_profile())

    def infinite_ratio_certificate(self, params: ElectionParams) -> Optional[ClassificationCertificate]:
        """A shared labeling the rule does not return: ERM risk 0, mechanism risk positive"""
        verdict = check_unanimity(self.rule, params)
        if verdict.holds:
            return None
        instance = ClassificationInstance.equal_weights(params, verdict.witness.profile.ballots)
        classifier = self.classify(instance)
        return ClassificationCertificate(instance, classifier, global_risk(classifier, instance),
                                         global_risk(erm(instance), instance))


def classification_adapter(mechanism: RuleSpec, realizable_only: bool = False) -> ClassificationMechanism:
    return ClassificationMechanism(mechanism, realizable_only)


# Facility location on the m-dimensional hypercube. Shortest paths between
# nodes are Hamming distances between their coordinate sets.

@dataclass(frozen=True)
class FacilityInstance:
    params: ElectionParams
    nodes: Tuple[int, ...]
    allowable: str = 'k-ones'

    def __post_init__(self):
        object.__setattr__(self, 'nodes', tuple(self.nodes))
        if self.allowable not in ('k-ones', 'all'):
            raise ParameterError("unknown allowable set '{}'".format(self.allowable))
        if len(self.nodes) != self.params.n:
            raise ParameterError("expected {} agent nodes, got {}".format(self.params.n, len(self.nodes)))
        for node in self.nodes:
            if not 0 <= node <= self.params.full_mask:
                raise ParameterError("node {} is not on the {}-cube".format(node, self.params.m))

    @classmethod
    def from_text(cls, text: str, source: str = '<input>', allowable: str = 'k-ones') -> 'FacilityInstance':
        params, nodes = utils.parse_facility(text, source)
        return cls(params, nodes, allowable)

    def is_allowable(self, node: int) -> bool:
        if not 0 <= node <= self.params.full_mask:
            return False
        return self.allowable == 'all' or popcount(node) == self.params.k

    def allowable_nodes(self) -> Tuple[int, ...]:
        if self.allowable == 'all':
            return tuple(range(1 << self.params.m))
        return committees(self.params.m, self.params.k)


def facility_costs(instance: FacilityInstance, node: int) -> Tuple[int, int]:
    """(maximum, total) shortest-path distance from the agents to ``node``"""
    if not instance.is_allowable(node):
        raise NodeNotAllowableError(node)
    distances = [popcount(node ^ agent) for agent in instance.nodes]
    return max(distances), sum(distances)


def _cost(instance, node, objective):
    costs = facility_costs(instance, node)
    return costs[0] if objective == 'max' else costs[1]


@dataclass(frozen=True)
class FacilityCertificate:
    instance: FacilityInstance
    location: int
    mechanism_costs: Tuple[int, int]
    optimal_costs: Tuple[int, int]


@dataclass(frozen=True)
class FacilityMechanism:
    rule: RuleSpec

    @property
    def name(self) -> str:
        return 'facility:{}'.format(self.rule.name)

    def locate(self, instance: FacilityInstance) -> int:
        return apply_rule(self.rule, ApprovalProfile(instance.params, instance.nodes))

    def infinite_ratio_certificate(self, params: ElectionParams) -> Optional[FacilityCertificate]:
        """Every agent on one allowable node the rule avoids: zero optimum, positive cost"""
        verdict = check_unanimity(self.rule, params)
        if verdict.holds:
            return None
        instance = FacilityInstance(params, verdict.witness.profile.ballots)
        location = self.locate(instance)
        return FacilityCertificate(instance, location, facility_costs(instance, location),
                                   facility_costs(instance, instance.nodes[0]))


@dataclass(frozen=True)
class DictatorshipFacility:
    """The agent's own node, or its k-completion when only k-ones nodes are allowed"""
    agent: int = 0

    @property
    def name(self) -> str:
        return 'facility-dictator:{}'.format(self.agent)

    def locate(self, instance: FacilityInstance) -> int:
        if instance.allowable == 'all':
            return instance.nodes[self.agent]
        return k_completion(self.agent).evaluate(instance.params, instance.nodes)


def facility_adapter(mechanism: RuleSpec) -> FacilityMechanism:
    return FacilityMechanism(mechanism)


def dictatorship_facility(agent: int = 0) -> DictatorshipFacility:
    return DictatorshipFacility(agent)


def facility_ratio(mechanism, params: ElectionParams, objective: str = 'max', allowable: str = 'k-ones',
                   eval_cap: int = DEFAULT_EVAL_CAP) -> ApproxReport:
    """Worst mechanism/optimum cost ratio over every placement of the agents"""
    if objective not in OBJECTIVES:
        raise ParameterError("unknown objective '{}'".format(objective))
    total = (1 << params.m) ** params.n
    if total > eval_cap:
        raise CapExceededError(CAP_ERROR.format(total, eval_cap))
    best = None
    for nodes in itertools.product(range(1 << params.m), repeat=params.n):
        instance = FacilityInstance(params, nodes, allowable)
        mechanism_cost = _cost(instance, mechanism.locate(instance), objective)
        optimum = min(_cost(instance, node, objective) for node in instance.allowable_nodes())
        report = ApproxReport(mechanism_cost, optimum, ApprovalProfile(params, nodes), total)
        if best is None or _worse(report, best):
            best = report
    LOGGER.info("%s on the %d-cube, %s cost: ratio %s", mechanism.name, params.m, objective, best.ratio_text())
    return best


def _worse(report, best):
    if report.is_infinite or best.is_infinite:
        return report.is_infinite and not best.is_infinite
    return report.ratio > best.ratio

