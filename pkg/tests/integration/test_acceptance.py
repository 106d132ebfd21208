import contextlib
import io
import os
import tempfile
import unittest
from fractions import Fraction

from pysat.formula import CNF
from pysat.solvers import Glucose3

import approval_gsp
from approval_gsp import axioms, reduction, report, rules, utils
from approval_gsp.core import ElectionParams

import tests.integration.utils as test_utils


def run_main(*argv):
    stdout = io.StringIO()
    with contextlib.redirect_stdout(stdout):
        try:
            approval_gsp.main(list(argv))
        except SystemExit as exc:
            return exc.code, stdout.getvalue()
    return 0, stdout.getvalue()


def records(text):
    return dict(line.split('=', 1) for line in text.splitlines() if '=' in line)


class TestIntegration(unittest.TestCase):
    """
    Integration Tests
    """
    maxDiff = None

    def setUp(self):
        self.config_path = test_utils.get_resource_path('config.json')
        self.temp_dir = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.temp_dir.cleanup()

    def run_records(self, *argv):
        code, output = run_main(*argv, '-c', self.config_path)
        return code, records(output), output

    def assert_replays(self, rule, output):
        witness = report.parse_witness_records(output)
        self.assertTrue(axioms.replay_witness(rule, witness, 'strong-gsp'))
        return witness

    def test_reduction_of_the_worked_example(self):
        approval_path = os.path.join(self.temp_dir.name, 'approval.txt')
        code, fields, _ = self.run_records('reduce', '--ranking', test_utils.get_resource_path('example-ranking.txt'),
                                           '--k', '2', '--emit-approval', approval_path)
        self.assertEqual(code, 0)
        self.assertEqual(fields['approval'], 'm=4 k=2 n=4')
        self.assertEqual(fields['dummies'], '3')
        self.assertEqual(fields['copies'], '(1,1) (1,2) (2,1) (2,2)')
        self.assertEqual(utils.read_text(approval_path), '4 2 4\n1001\n1101\n0101\n0111\n')

    def test_closing_profiles_match_fixtures(self):
        run = reduction.counterexample_run(rules.k_completion(0), 4, 2)
        for label, filename in (('P_x', 'closing-p-x.txt'), ('P_y', 'closing-p-y.txt'), ('P_xy', 'closing-p-xy.txt')):
            fixture = utils.parse_approval_profile(test_utils.get_resource_text(filename), filename)
            self.assertEqual(run.profiles[label], fixture)

    def test_counterexample_on_k_completion(self):
        code, fields, output = self.run_records('counterexample', '--rule', 'kcompletion:0', '--m', '4', '--k', '2')
        self.assertEqual(code, 10)
        self.assertEqual(fields['case'], 'not-x')
        self.assertEqual(fields['witness.coalition'], '0,2')
        self.assertEqual(fields['witness.distances'], '1:1,2:0')
        self.assert_replays(rules.k_completion(0), output)

    def test_both_pareto_efficient_outcomes_are_manipulated(self):
        params = ElectionParams(4, 2)
        for slate, case in (('1001', 'x'), ('0101', 'not-x')):
            code, fields, output = self.run_records('counterexample', '--rule', 'kcompletion:0', '--m', '4',
                                                    '--k', '2', '--tie', 'prefer:' + slate)
            self.assertEqual(code, 10)
            self.assertEqual(fields['outcome.P_xy'], slate)
            self.assertEqual(fields['case'], case)
            witness = self.assert_replays(rules.k_completion(0, approval_gsp.parse_tie('prefer:' + slate, params)),
                                          output)
            self.assertEqual(len(witness.coalition), 2)

    def test_k_completion_is_weakly_but_not_strongly_gsp(self):
        code, fields, _ = self.run_records('check', '--axiom', 'weak-gsp', '--rule', 'kcompletion:0', '--m', '3',
                                           '--k', '1', '--n', '2')
        self.assertEqual(code, 0)
        self.assertEqual(fields['holds'], 'true')
        self.assertEqual(fields['coverage'], 'exhaustive')

        code, fields, output = self.run_records('check', '--axiom', 'strong-gsp', '--rule', 'kcompletion:0',
                                                '--m', '3', '--k', '1', '--n', '2')
        self.assertEqual(code, 10)
        self.assert_replays(rules.k_completion(0), output)

    def test_serial_dictatorship_is_strongly_gsp_for_two_agents(self):
        for k in ('1', '2'):
            code, fields, _ = self.run_records('check', '--axiom', 'strong-gsp', '--rule', 'serial:0,1', '--m', '3',
                                               '--k', k, '--n', '2')
            self.assertEqual(code, 0)
            self.assertEqual(fields['holds'], 'true')
            self.assertEqual(fields['coverage'], 'exhaustive')

    def test_minisum_is_strategyproof_with_lexicographic_ties(self):
        rule = rules.minisum_rule()
        for m in (2, 3):
            for k in (1, 2):
                for n in (1, 2, 3):
                    if k > m:
                        continue
                    verdict = axioms.check_sp(rule, ElectionParams(m, k, n))
                    self.assertTrue(verdict.holds, (m, k, n))
                    self.assertTrue(verdict.coverage.is_proof)

    def test_approximation_bounds(self):
        for m, k, bound in (('3', '1', Fraction(2)), ('4', '2', Fraction(7, 3))):
            code, fields, _ = self.run_records('approx', '--rule', 'minisum', '--m', m, '--k', k, '--n', '2')
            self.assertEqual(code, 0)
            self.assertEqual(Fraction(fields['bound']), bound)
            self.assertLessEqual(Fraction(fields['ratio']), bound)

            # k-completion can overshoot the bound but stays finite and at most 3
            code, fields, _ = self.run_records('approx', '--rule', 'kcompletion:0', '--m', m, '--k', k, '--n', '2')
            self.assertNotEqual(fields['ratio'], 'inf')
            self.assertLessEqual(Fraction(fields['ratio']), 3)

    def test_constant_rules_have_unbounded_ratio(self):
        for committee in ('100', '010', '001'):
            code, fields, _ = self.run_records('apps', 'minimax-claim', '--rule', 'constant:' + committee,
                                               '--m', '3')
            self.assertEqual(code, 10)
            self.assertEqual(fields['applicable'], 'true')
            self.assertEqual(fields['ratio'], 'inf')
            self.assertEqual(fields['optimal_cost'], '0')
            self.assertEqual(len(set(fields['witness_profile'].split(','))), 1)

    def test_gibbard_satterthwaite_at_small_scale(self):
        gs = ('--side', 'ranking', '--axioms', 'sp-ranking,onto,non-dictatorship', '--m', '3', '--n', '2')
        code, fields, _ = self.run_records('search', *gs)
        self.assertEqual(code, 0)
        self.assertEqual(fields['status'], 'unsat')

        cnf_path = os.path.join(self.temp_dir.name, 'gs.cnf')
        code, fields, _ = self.run_records('search', *gs, '--emit-cnf', cnf_path)
        self.assertEqual(code, 0)
        formula = CNF(from_file=fields['cnf_file'])
        self.assertEqual(formula.nv, 108)
        with Glucose3(bootstrap_with=formula.clauses) as solver:
            self.assertFalse(solver.solve())

    def test_found_tables_are_pareto_efficient(self):
        for m, n in (('2', '2'), ('3', '2')):
            table_path = os.path.join(self.temp_dir.name, 'table-{}-{}.csv'.format(m, n))
            code, fields, _ = self.run_records('search', '--axioms', 'unanimity,strong-gsp', '--m', m, '--k', '1',
                                               '--n', n, '--emit-table', table_path)
            self.assertEqual(fields['status'], 'sat')
            code, fields, _ = self.run_records('check', '--axiom', 'pareto', '--rule', 'table:' + table_path,
                                               '--m', m, '--k', '1', '--n', n)
            self.assertEqual(code, 0)
            self.assertEqual(fields['holds'], 'true')

    def test_application_adapters(self):
        code, fields, _ = self.run_records('apps', 'classify', '--rule', 'minisum',
                                           '--instance', test_utils.get_resource_path('classification.txt'))
        self.assertEqual(code, 0)
        self.assertEqual(fields['classifier'], fields['erm'])
        self.assertEqual(fields['risk'], '1')

        code, fields, _ = self.run_records('apps', 'facility', '--rule', 'minimax',
                                           '--instance', test_utils.get_resource_path('facility.txt'))
        self.assertEqual(fields['location'], '100')
        self.assertEqual(fields['max_cost'], '2')
        self.assertEqual(fields['unbounded_ratio'], 'false')

        code, fields, _ = self.run_records('apps', 'pb', '--rule', 'minisum',
                                           '--profile', test_utils.get_resource_path('unanimous.txt'))
        self.assertEqual(fields['roundtrip_lossless'], 'true')
        self.assertEqual(fields['funded'], '110')

    def test_malformed_inputs(self):
        for filename in ('malformed-length.txt', 'malformed-header.txt'):
            with self.assertLogs('approval_gsp', level='ERROR'):
                code, _, _ = self.run_records('eval', '--rule', 'minisum',
                                              '--profile', test_utils.get_resource_path(filename))
            self.assertEqual(code, 2)

        with self.assertLogs('approval_gsp', level='ERROR') as logs:
            code, _ = run_main('eval', '--rule', 'minisum', '--profile',
                               test_utils.get_resource_path('unanimous.txt'),
                               '-c', test_utils.get_resource_path('invalid-config.json'))
        self.assertEqual(code, 1)
        self.assertIn('Invalid configuration', logs.output[0])
