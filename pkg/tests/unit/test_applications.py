import dataclasses
import itertools
import random
import unittest
from fractions import Fraction

import networkx as nx

from approval_gsp import applications, rules
from approval_gsp.applications import BudgetInstance, ClassificationInstance, FacilityInstance
from approval_gsp.core import ElectionParams, from_bitstring, hamming
from approval_gsp.errors import CapExceededError, NodeNotAllowableError, ParameterError


class TestApplications(unittest.TestCase):
    """
    Unit Tests for applications module
    """

    def test_minimax_claim_for_non_unanimous_rules(self):
        params = ElectionParams(3, 1, 2)
        certificate = applications.minimax_infinite_ratio_check(rules.constant(from_bitstring('100')), params)
        self.assertTrue(certificate.applicable)
        self.assertTrue(certificate.report.is_infinite)
        self.assertEqual(certificate.report.optimal_cost, 0)
        self.assertEqual(len(set(certificate.report.worst_profile.ballots)), 1)

        certificate = applications.minimax_infinite_ratio_check(rules.minisum_rule(), params)
        self.assertFalse(certificate.applicable)
        self.assertIsNone(certificate.report)

    def test_every_constant_rule_has_unbounded_ratio(self):
        params = ElectionParams(3, 2, 2)
        for committee in ('110', '101', '011'):
            certificate = applications.minimax_infinite_ratio_check(rules.constant(from_bitstring(committee)),
                                                                    params)
            self.assertTrue(certificate.applicable)
            self.assertEqual(certificate.report.ratio_text(), 'inf')

    def test_participatory_budgeting_roundtrip(self):
        instance = BudgetInstance(4, 2, (from_bitstring('1100'), from_bitstring('0111')))
        profile, decoded = applications.pb_roundtrip(instance)
        self.assertEqual(decoded, instance)
        self.assertEqual(profile.params, ElectionParams(4, 2, 2))
        self.assertEqual(len(instance.maximal_sets()), 6)
        self.assertEqual(instance.restriction, 'all')

        mechanism = applications.maximal_mechanism(rules.minisum_rule())
        self.assertEqual(mechanism.name, 'maximal:minisum')
        self.assertEqual(mechanism.fund(instance), from_bitstring('1100'))

    def test_feasible_ballots_only(self):
        with self.assertRaises(ParameterError):
            BudgetInstance(3, 1, (from_bitstring('110'),), feasible_ballots_only=True)
        instance = BudgetInstance(3, 2, (from_bitstring('110'),), feasible_ballots_only=True)
        self.assertEqual(instance.restriction, 'feasible')

    def test_classification_risk(self):
        params = ElectionParams(3, 1, 2)
        instance = ClassificationInstance(params, (from_bitstring('100'), from_bitstring('010')),
                                          (Fraction(3, 4), Fraction(1, 4)))
        self.assertEqual(applications.agent_loss(from_bitstring('100'), from_bitstring('010')), 2)
        self.assertEqual(applications.global_risk(from_bitstring('100'), instance), Fraction(1, 2))
        self.assertEqual(applications.global_risk(from_bitstring('001'), instance), Fraction(2))
        self.assertEqual(applications.erm(instance), from_bitstring('100'))

        with self.assertRaises(ParameterError):
            ClassificationInstance(params, (1, 2), (Fraction(1, 2), Fraction(1, 3)))
        with self.assertRaises(ParameterError):
            ClassificationInstance(params, (1, 3), (Fraction(1, 2), Fraction(1, 2)), realizable=True)

    def test_erm_with_equal_weights_is_minisum(self):
        for m, k, n in itertools.product((2, 3, 4), (1, 2), (1, 2, 3)):
            if k > m or 2 ** (m * n) > 4096:
                continue
            params = ElectionParams(m, k, n)
            for election in rules.iter_profiles(params):
                instance = ClassificationInstance.equal_weights(params, election.ballots)
                self.assertEqual(applications.erm(instance), rules.minisum(election))

    def test_classification_mechanism(self):
        params = ElectionParams(3, 1, 2)
        mechanism = applications.classification_adapter(rules.minisum_rule(), realizable_only=True)
        realizable = ClassificationInstance.equal_weights(params, (from_bitstring('100'), from_bitstring('100')),
                                                          realizable=True)
        self.assertEqual(mechanism.classify(realizable), from_bitstring('100'))
        self.assertIsNone(mechanism.infinite_ratio_certificate(params))

        with self.assertRaises(ParameterError):
            mechanism.classify(ClassificationInstance.equal_weights(params, (from_bitstring('110'), 0)))

        constant = applications.classification_adapter(rules.constant(from_bitstring('001')))
        certificate = constant.infinite_ratio_certificate(params)
        self.assertEqual(certificate.erm_risk, 0)
        self.assertGreater(certificate.mechanism_risk, 0)

    def test_hypercube_distance_is_hamming(self):
        generator = random.Random(5)
        for m in range(3, 11):
            cube = nx.hypercube_graph(m)
            for _ in range(1000):
                first = tuple(generator.randint(0, 1) for _ in range(m))
                second = tuple(generator.randint(0, 1) for _ in range(m))
                first_mask = sum(bit << i for i, bit in enumerate(first))
                second_mask = sum(bit << i for i, bit in enumerate(second))
                self.assertEqual(nx.shortest_path_length(cube, first, second), hamming(first_mask, second_mask))

    def test_facility_costs(self):
        params = ElectionParams(3, 1, 3)
        instance = FacilityInstance(params, (from_bitstring('100'), from_bitstring('100'), from_bitstring('010')))
        self.assertEqual(applications.facility_costs(instance, from_bitstring('100')), (2, 2))
        self.assertEqual(len(instance.allowable_nodes()), 3)
        with self.assertRaises(NodeNotAllowableError):
            applications.facility_costs(instance, from_bitstring('110'))

        unrestricted = FacilityInstance(params, instance.nodes, allowable='all')
        self.assertEqual(applications.facility_costs(unrestricted, from_bitstring('110')), (1, 3))
        self.assertEqual(len(unrestricted.allowable_nodes()), 8)

    def test_facility_mechanisms(self):
        params = ElectionParams(3, 1, 2)
        minimax = applications.facility_adapter(rules.minimax_rule())
        instance = FacilityInstance(params, (from_bitstring('110'), from_bitstring('011')))
        self.assertEqual(minimax.locate(instance), from_bitstring('010'))
        self.assertIsNone(minimax.infinite_ratio_certificate(params))

        constant = applications.facility_adapter(rules.constant(from_bitstring('100')))
        certificate = constant.infinite_ratio_certificate(params)
        self.assertEqual(certificate.optimal_costs, (0, 0))
        self.assertGreater(certificate.mechanism_costs[0], 0)

    def test_facility_ratio(self):
        params = ElectionParams(2, 1, 2)
        report = applications.facility_ratio(applications.facility_adapter(rules.minimax_rule()), params)
        self.assertEqual(report.ratio, 1)

        dictator = applications.dictatorship_facility(0)
        report = applications.facility_ratio(dictator, params, 'max', 'all')
        self.assertFalse(report.is_infinite)
        self.assertEqual(report.ratio, 2)

        constant = applications.facility_adapter(rules.constant(from_bitstring('10')))
        self.assertTrue(applications.facility_ratio(constant, params).is_infinite)

        with self.assertRaises(ParameterError):
            applications.facility_ratio(dictator, params, 'median')
        with self.assertRaises(CapExceededError):
            applications.facility_ratio(dictator, ElectionParams(4, 2, 3), eval_cap=100)

    def test_restricted_dictatorship_uses_k_completion(self):
        params = ElectionParams(3, 2, 1)
        instance = FacilityInstance(params, (from_bitstring('111'),))
        dictator = applications.dictatorship_facility(0)
        self.assertEqual(dictator, applications.DictatorshipFacility(agent=0))
        # the allowable set comes from the instance only
        self.assertEqual([f.name for f in dataclasses.fields(dictator)], ['agent'])
        self.assertEqual(dictator.locate(instance), from_bitstring('110'))
        unrestricted = FacilityInstance(params, instance.nodes, 'all')
        self.assertEqual(dictator.locate(unrestricted), from_bitstring('111'))
