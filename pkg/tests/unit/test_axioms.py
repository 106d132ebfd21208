import unittest

from approval_gsp import axioms, rules
from approval_gsp.axioms import ProfileSpace, Witness
from approval_gsp.core import ApprovalProfile, ElectionParams, committees, from_bitstring, ranking_params
from approval_gsp.errors import CapExceededError, ParameterError


class TestAxioms(unittest.TestCase):
    """
    Unit Tests for axioms module
    """

    def test_unanimity(self):
        params = ElectionParams(3, 2, 2)
        self.assertTrue(axioms.check_unanimity(rules.minisum_rule(), params).holds)
        self.assertTrue(axioms.check_unanimity(rules.k_completion(0), params).holds)

        verdict = axioms.check_unanimity(rules.constant(from_bitstring('110')), params)
        self.assertFalse(verdict.holds)
        self.assertEqual(verdict.witness.outcome_before, from_bitstring('110'))
        self.assertNotEqual(verdict.witness.outcome_after, from_bitstring('110'))
        self.assertTrue(axioms.replay_witness(rules.constant(from_bitstring('110')), verdict.witness, 'unanimity'))

    def test_pareto(self):
        params = ElectionParams(3, 1, 2)
        self.assertTrue(axioms.check_pareto(rules.minisum_rule(), params).holds)

        rule = rules.constant(from_bitstring('001'))
        verdict = axioms.check_pareto(rule, params)
        self.assertFalse(verdict.holds)
        self.assertEqual(verdict.witness.coalition, (0, 1))
        self.assertTrue(axioms.replay_witness(rule, verdict.witness, 'pareto'))

    def test_minisum_is_strategyproof_with_lexicographic_ties(self):
        for k, n in ((1, 2), (2, 2), (1, 3), (2, 3)):
            verdict = axioms.check_sp(rules.minisum_rule(), ElectionParams(3, k, n))
            self.assertTrue(verdict.holds, 'k={} n={}'.format(k, n))
            self.assertTrue(verdict.coverage.is_proof)

    def test_minimax_is_not_strategyproof(self):
        rule = rules.minimax_rule()
        params = ElectionParams(3, 1, 2)
        verdict = axioms.check_sp(rule, params)
        self.assertFalse(verdict.holds)
        self.assertEqual(len(verdict.witness.coalition), 1)
        self.assertTrue(axioms.replay_witness(rule, verdict.witness, 'sp'))

        # agent 1 reports {1,2} and moves the outcome from {0} to its own {1}
        profile = ApprovalProfile(params, (from_bitstring('100'), from_bitstring('010')))
        witness = Witness(profile, (1,), (from_bitstring('011'),), from_bitstring('100'), from_bitstring('010'),
                          ((2, 0),))
        self.assertTrue(axioms.replay_witness(rule, witness, 'sp'))

    def test_k_completion_separates_weak_and_strong_gsp(self):
        rule = rules.k_completion(0)
        params = ElectionParams(3, 1, 2)
        self.assertTrue(axioms.check_weak_gsp(rule, params).holds)

        verdict = axioms.check_strong_gsp(rule, params)
        self.assertFalse(verdict.holds)
        self.assertTrue(axioms.replay_witness(rule, verdict.witness, 'strong-gsp'))
        self.assertFalse(axioms.replay_witness(rule, verdict.witness, 'weak-gsp'))
        before, after = zip(*verdict.witness.distances)
        self.assertTrue(all(a <= b for b, a in zip(before, after)))

    def test_serial_dictatorship_is_strongly_gsp(self):
        for k in (1, 2):
            verdict = axioms.check_strong_gsp(rules.serial_dictatorship((0, 1)), ElectionParams(3, k, 2))
            self.assertTrue(verdict.holds)
            self.assertEqual(verdict.coverage.describe(), 'exhaustive')

    def test_group_strategyproofness_implies_strategyproofness(self):
        for params in (ElectionParams(3, 1, 2), ElectionParams(3, 2, 2), ElectionParams(2, 1, 3)):
            agents = tuple(range(params.n))
            candidates = [rules.minisum_rule(), rules.minimax_rule(), rules.k_completion(0), rules.k_completion(1),
                          rules.serial_dictatorship(agents), rules.serial_dictatorship(agents[::-1]),
                          rules.constant(committees(params.m, params.k)[0])]
            for rule in candidates:
                strong = axioms.check_strong_gsp(rule, params).holds
                weak = axioms.check_weak_gsp(rule, params).holds
                sp = axioms.check_sp(rule, params).holds
                label = '{} {}'.format(rule.name, params.describe())
                if strong:
                    self.assertTrue(weak, label)
                if weak:
                    self.assertTrue(sp, label)

    def test_tampered_witness_does_not_replay(self):
        rule = rules.minimax_rule()
        verdict = axioms.check_sp(rule, ElectionParams(3, 1, 2))
        witness = verdict.witness
        tampered = Witness(witness.profile, witness.coalition, witness.misreports, witness.outcome_before,
                           witness.outcome_before, witness.distances)
        self.assertFalse(axioms.replay_witness(rule, tampered, 'sp'))
        self.assertFalse(axioms.replay_witness(rules.minisum_rule(), witness, 'sp'))

    def test_bounded_coalitions_are_reported(self):
        rule = rules.serial_dictatorship((0, 1, 2))
        params = ElectionParams(2, 1, 3)
        verdict = axioms.check_strong_gsp(rule, params, max_coalition=1)
        self.assertTrue(verdict.holds)
        self.assertFalse(verdict.coverage.is_proof)
        self.assertEqual(verdict.coverage.describe(), 'exhaustive,bounded-coalition(1)')

        # an indifferent first dictator can hand the choice to the third agent
        verdict = axioms.check_strong_gsp(rule, params, max_coalition=2)
        self.assertFalse(verdict.holds)
        self.assertEqual(len(verdict.witness.coalition), 2)
        self.assertTrue(axioms.replay_witness(rule, verdict.witness, 'strong-gsp'))

        with self.assertRaises(ParameterError):
            axioms.check_weak_gsp(rules.minisum_rule(), ElectionParams(2, 1, 2), max_coalition=0)

    def test_coverage_modes(self):
        params = ElectionParams(4, 2, 3)
        with self.assertRaises(CapExceededError):
            axioms.check_sp(rules.minisum_rule(), params, ProfileSpace(mode='exhaustive'), eval_cap=1000)

        with self.assertLogs('approval_gsp', level='WARNING'):
            verdict = axioms.check_sp(rules.minisum_rule(), params, ProfileSpace(count=50, seed=3), eval_cap=1000)
        self.assertEqual(verdict.coverage.mode, 'sampled')
        self.assertEqual(verdict.coverage.profiles, 50)
        self.assertEqual(verdict.coverage.describe(), 'sampled(50,3)')

        with self.assertRaises(ParameterError):
            ProfileSpace(mode='random')

    def test_restricted_deviations(self):
        rule = rules.minimax_rule()
        params = ElectionParams(3, 1, 2)
        space = ProfileSpace(restriction='proper', deviations='same')
        self.assertEqual(len(axioms.deviation_space(rule, params, space)), 6)
        self.assertEqual(len(axioms.deviation_space(rule, params, ProfileSpace(restriction='proper'))), 8)

    def test_parallel_scan_agrees_with_serial(self):
        rule = rules.minimax_rule()
        params = ElectionParams(3, 1, 2)
        serial = axioms.check_strong_gsp(rule, params, workers=1)
        parallel = axioms.check_strong_gsp(rule, params, workers=2)
        self.assertEqual(serial, parallel)

    def test_ranking_side(self):
        params = ranking_params(3, 2)
        dictator = rules.RankingRule('dictatorship', agent=1)
        self.assertTrue(axioms.check_sp_ranking(dictator, params).holds)
        self.assertTrue(axioms.check_onto(dictator, params).holds)
        verdict = axioms.check_dictatorship(dictator, params)
        self.assertTrue(verdict.holds)
        self.assertEqual(verdict.dictators, (1,))
        self.assertTrue(axioms.check_unanimity_ranking(dictator, params).holds)

        borda = rules.RankingRule('borda')
        verdict = axioms.check_sp_ranking(borda, params)
        self.assertFalse(verdict.holds)
        self.assertTrue(axioms.replay_witness(borda, verdict.witness, 'sp-ranking'))

        plurality = axioms.check_dictatorship(rules.RankingRule('plurality'), params)
        self.assertFalse(plurality.holds)
        self.assertEqual(plurality.dictators, ())
        self.assertIn('agent0@profile', plurality.detail)

        constant = rules.RankingRule('constant', alternative=2)
        onto = axioms.check_onto(constant, params)
        self.assertFalse(onto.holds)
        self.assertEqual(onto.detail, 'never selected: 0,1')
        self.assertFalse(axioms.check_unanimity_ranking(constant, params).holds)

    def test_run_check_dispatch(self):
        params = ElectionParams(3, 1, 2)
        self.assertTrue(axioms.run_check('weak-gsp', rules.k_completion(0), params).holds)
        with self.assertRaises(ParameterError):
            axioms.run_check('onto', rules.minisum_rule(), params)
        with self.assertRaises(ParameterError):
            axioms.run_check('sp', rules.RankingRule('borda'), ranking_params(3, 2))
        with self.assertRaises(ParameterError):
            axioms.run_check('anonymity', rules.minisum_rule(), params)
