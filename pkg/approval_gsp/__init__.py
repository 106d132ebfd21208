#!/usr/bin/env python3

import argparse
import sys
import time
from fractions import Fraction

import singer

from approval_gsp import applications
from approval_gsp import axioms
from approval_gsp import reduction
from approval_gsp import report as reports
from approval_gsp import rules
from approval_gsp import search
from approval_gsp import utils
from approval_gsp.core import ElectionParams, from_bitstring, members, ranking_params, to_bitstring
from approval_gsp.errors import ParameterError, ToolkitError
from approval_gsp.file_handlers import read_rule_table, write_rule_table

LOGGER = singer.get_logger('approval_gsp')

VIOLATION_EXIT_CODE = 10
RANKING_ONLY = ('sp-ranking', 'onto', 'dictatorship', 'unanimity-ranking')


def parse_tie(text, params):
    """``lex``, ``priority:<a,b,...>`` or ``prefer:<bitstring>``"""
    if not text or text == 'lex':
        return rules.CANONICAL
    kind, _, value = text.partition(':')
    if kind == 'priority':
        return rules.TieOrder.from_priority(params, [int(a) for a in value.split(',')])
    if kind == 'prefer':
        return rules.TieOrder.preferring(params, from_bitstring(value, params.m))
    raise ParameterError("unknown tie order '{}'".format(text))


def parse_rule_spec(text, tie=rules.CANONICAL):
    """Multi-winner rule from its command-line name"""
    kind, _, value = text.partition(':')
    try:
        if text == 'minisum':
            return rules.minisum_rule(tie)
        if text == 'minimax':
            return rules.minimax_rule(tie)
        if kind == 'kcompletion':
            return rules.k_completion(int(value), tie)
        if kind == 'serial':
            return rules.serial_dictatorship([int(a) for a in value.split(',')], tie)
        if kind == 'constant':
            return rules.constant(from_bitstring(value))
    except ValueError:
        raise ParameterError("malformed rule '{}'".format(text)) from None
    if kind == 'table':
        table = read_rule_table(value)
        if table.side != 'approval':
            raise ParameterError("{} holds a ranking table".format(value))
        return rules.table_rule(table)
    raise ParameterError("unknown rule '{}'".format(text))


def parse_ranking_rule(text, k=None, tie=rules.CANONICAL):
    """Single-winner rule from its command-line name"""
    kind, _, value = text.partition(':')
    try:
        if kind == 'dictator':
            return rules.RankingRule('dictatorship', agent=int(value))
        if kind == 'winner':
            return rules.RankingRule('constant', alternative=int(value))
    except ValueError:
        raise ParameterError("malformed rule '{}'".format(text)) from None
    if text in ('plurality', 'borda'):
        return rules.RankingRule(text)
    if kind == 'induced':
        if k is None:
            raise ParameterError("induced rules need --k")
        return reduction.InducedRule(parse_rule_spec(value, tie), k)
    if kind == 'table':
        table = read_rule_table(value)
        if table.side != 'ranking':
            raise ParameterError("{} holds an approval table".format(value))
        return rules.RankingRule('table', table=table)
    raise ParameterError("unknown ranking rule '{}'".format(text))


def parse_mode(text, config):
    """``auto``, ``exhaustive`` or ``sample:<count>:<seed>``"""
    if text is None or text in ('auto', 'exhaustive'):
        return text or 'auto', None, None
    parts = text.split(':')
    if parts[0] == 'sample':
        try:
            count = int(parts[1]) if len(parts) > 1 else config.get('sample_count', utils.DEFAULTS['sample_count'])
            seed = int(parts[2]) if len(parts) > 2 else None
        except ValueError:
            raise ParameterError("malformed mode '{}'".format(text)) from None
        return 'sampled', count, seed
    raise ParameterError("unknown mode '{}'".format(text))


class Toolkit:
    """One command-line invocation: settings plus a ``cmd_*`` per subcommand"""

    def __init__(self, config, args, argv):
        self.config = config
        self.args = args
        self.command = ' '.join(argv)
        self.seed = utils.setting('seed', getattr(args, 'seed', None), config)
        self.eval_cap = utils.setting('eval_cap', getattr(args, 'eval_cap', None), config)
        self.workers = utils.setting('workers', getattr(args, 'workers', None), config)
        self.inputs = [self.command]

    def read(self, path):
        text = utils.read_text(path)
        self.inputs.append(text)
        return text

    def new_report(self):
        return reports.RunReport(self.command, '', self.seed)

    def finish(self, report):
        report.inputs_digest = utils.digest(*self.inputs)
        return report

    def params(self):
        return ElectionParams(self.args.m, getattr(self.args, 'k', None) or 1, self.args.n)

    def profile_space(self):
        mode, count, seed = parse_mode(getattr(self.args, 'mode', None), self.config)
        return axioms.ProfileSpace(
            restriction=utils.setting('ballots', getattr(self.args, 'ballots', None), self.config),
            mode=mode,
            count=count or self.config.get('sample_count', utils.DEFAULTS['sample_count']),
            seed=self.seed if seed is None else seed,
            deviations=utils.setting('deviations', getattr(self.args, 'deviations', None), self.config))

    def cmd_eval(self):
        profile = utils.parse_approval_profile(self.read(self.args.profile), self.args.profile)
        rule = parse_rule_spec(self.args.rule, parse_tie(self.args.tie, profile.params))
        committee = rules.apply_rule(rule, profile)
        report = self.new_report()
        report.add('rule', rule.name).add('params', profile.params.describe())
        report.add('committee', to_bitstring(committee, profile.params.m))
        report.add('max_distance', rules.max_distance(committee, profile))
        return self.finish(report)

    def cmd_check(self):
        params = self.params()
        axiom = self.args.axiom
        if axiom in RANKING_ONLY:
            params = ranking_params(self.args.m, self.args.n)
            rule = parse_ranking_rule(self.args.rule, self.args.k, parse_tie(self.args.tie, params))
        else:
            rule = parse_rule_spec(self.args.rule, parse_tie(self.args.tie, params))
        verdict = axioms.run_check(axiom, rule, params, self.profile_space(), self.args.max_coalition,
                                   self.eval_cap, self.workers)
        report = self.new_report()
        report.add('axiom', axiom).add('rule', rule.name).add('params', params.describe())
        report.add('holds', verdict.holds).add('coverage', verdict.coverage.describe())
        report.add('profiles', verdict.coverage.profiles)
        if axiom == 'dictatorship':
            report.add('dictators', verdict.dictators or 'none')
        if verdict.detail:
            report.add('detail', verdict.detail)
        if verdict.witness is not None:
            report.witness, report.witness_axiom = verdict.witness, axiom
        if not verdict.holds and axiom != 'dictatorship':
            report.exit_code = VIOLATION_EXIT_CODE
        return self.finish(report)

    def cmd_reduce(self):
        ranking = utils.parse_ranking_profile(self.read(self.args.ranking), self.args.ranking)
        reduced = reduction.build_approval_election(ranking, self.args.k)
        text = utils.dump_approval_profile(reduced.approval)
        if self.args.emit_approval:
            utils.write_text(self.args.emit_approval, text)
        report = self.new_report()
        report.add('source', ranking.params.describe()).add('approval', reduced.approval.params.describe())
        report.add('dummies', members(reduced.dummies))
        report.add('copies', ' '.join('({},{})'.format(i + 1, j) for i, j in reduced.copy_map))
        report.section('approval profile', text)
        if self.args.rule:
            rule = parse_rule_spec(self.args.rule)
            report.add('induced_winner', reduction.induced_winner(rule, ranking, self.args.k))
            transfer = reduction.transfer_check(rule, ranking.params, self.args.k, self.eval_cap, self.workers)
            report.add('onto', transfer.onto.holds).add('sp_ranking', transfer.sp.holds)
            report.add('dictators', transfer.dictatorship.dictators or 'none')
            if transfer.gsp_witness is not None:
                report.add('improved_copies', transfer.improved).add('indifferent_copies', transfer.indifferent)
                report.witness, report.witness_axiom = transfer.gsp_witness, 'strong-gsp'
                report.exit_code = VIOLATION_EXIT_CODE
        return self.finish(report)

    def cmd_counterexample(self):
        source_m = self.args.m - self.args.k + 1
        params = ElectionParams(self.args.m, self.args.k, 3 * max(source_m - 1, 1))
        rule = parse_rule_spec(self.args.rule, parse_tie(self.args.tie, params))
        run = reduction.counterexample_run(rule, self.args.m, self.args.k, self.args.x, self.args.y)
        report = self.new_report()
        report.add('rule', rule.name).add('m', self.args.m).add('k', self.args.k)
        report.add('agents', params.n)
        for label, profile in run.profiles.items():
            report.add('outcome.{}'.format(label), to_bitstring(run.outcomes[label], self.args.m))
            report.section(label, utils.dump_approval_profile(profile))
        report.add('premise_failure', run.premise_failure or 'none')
        report.add('case', run.case or 'none')
        report.add('violation', run.violation_found)
        report.section('table', reduction.render_table(run))
        if run.witness is not None:
            report.witness, report.witness_axiom = run.witness, 'strong-gsp'
            report.exit_code = VIOLATION_EXIT_CODE
        return self.finish(report)

    def _space(self):
        k = self.args.k or 1
        params = ranking_params(self.args.m, self.args.n) if self.args.side == 'ranking' else \
            ElectionParams(self.args.m, k, self.args.n)
        return search.SearchSpace(self.args.side, params,
                                  utils.setting('ballots', self.args.ballots, self.config))

    def _emit_table(self, table, report):
        if self.args.emit_table and table is not None:
            path = write_rule_table(table, self.args.emit_table,
                                    utils.setting('table_format', self.args.table_format, self.config),
                                    self.config.get('compression', 'none'))
            report.add('table_file', path)

    def cmd_search(self):
        space = self._space()
        requested = [a for a in self.args.axioms.split(',') if a]
        report = self.new_report()
        report.add('space', space.describe())
        if self.args.emit_cnf:
            export = search.export_cnf(requested, space, utils.setting('clause_cap', None, self.config))
            compression = self.config.get('compression', 'none')
            cnf_path = utils.write_text(self.args.emit_cnf, export.dimacs(), compression)
            utils.write_text(self.args.emit_cnf + '.map', export.variable_map())
            report.add('axioms', export.axioms).add('variables', export.num_vars)
            report.add('clauses', len(export.clauses)).add('cnf_file', cnf_path)
            report.add('map_file', self.args.emit_cnf + '.map')
            return self.finish(report)
        budget_nodes = utils.setting('budget_nodes', self.args.budget_nodes, self.config)
        budget_secs = utils.setting('budget_secs', self.args.budget_secs, self.config)
        if self.args.no_escalate:
            result = search.synthesize(requested, space, not self.args.no_propagation, self.args.first_fail,
                                       budget_nodes, budget_secs, self.eval_cap)
        else:
            result = search.decide(requested, space, not self.args.no_propagation, self.args.first_fail,
                                   budget_nodes, budget_secs, utils.setting('clause_cap', None, self.config),
                                   self.eval_cap)
        self._add_result(report, result)
        self._emit_table(result.table, report)
        if result.status == 'timeout':
            report.exit_code = 4
        return self.finish(report)

    def _add_result(self, report, result, prefix=''):
        report.add(prefix + 'status', result.status).add(prefix + 'axioms', result.axioms)
        report.add(prefix + 'solver', result.label if result.label == 'cnf' else 'backtracking')
        for key in sorted(result.stats):
            report.add('{}stats.{}'.format(prefix, key), result.stats[key])
        report.elapsed = (report.elapsed or 0.0) + result.elapsed
        if result.table is not None:
            report.add(prefix + 'table', _table_text(result.table))

    def cmd_approx(self):
        params = self.params()
        rule = parse_rule_spec(self.args.rule, parse_tie(self.args.tie, params))
        mode, count, seed = parse_mode(self.args.mode, self.config)
        if mode == 'sampled':
            selected = rules.Sampled(count, self.seed if seed is None else seed)
        else:
            selected = 'exhaustive'
        restriction = utils.setting('ballots', self.args.ballots, self.config)
        result = rules.approx_ratio(rule, params, selected, restriction, self.eval_cap, self.workers)
        report = self.new_report()
        report.add('rule', rule.name).add('params', params.describe()).add('coverage', result.coverage)
        report.add('ratio', result.ratio_text()).add('rule_cost', result.rule_cost)
        report.add('optimal_cost', result.optimal_cost)
        if result.worst_profile is not None:
            report.add('worst_profile', result.worst_profile.bitstrings())
        report.add('bound', Fraction(3) - Fraction(2, params.k + 1))
        return self.finish(report)

    def cmd_apps(self):
        return getattr(self, 'app_' + self.args.app.replace('-', '_'))()

    def app_minimax_claim(self):
        params = self.params()
        rule = parse_rule_spec(self.args.rule, parse_tie(self.args.tie, params))
        certificate = applications.minimax_infinite_ratio_check(rule, params)
        report = self.new_report()
        report.add('rule', rule.name).add('applicable', certificate.applicable).add('note', certificate.note)
        if certificate.applicable:
            found = certificate.report
            report.add('ratio', found.ratio_text()).add('witness_profile', found.worst_profile.bitstrings())
            report.add('rule_cost', found.rule_cost).add('optimal_cost', found.optimal_cost)
            report.exit_code = VIOLATION_EXIT_CODE
        return self.finish(report)

    def app_pb(self):
        profile = utils.parse_approval_profile(self.read(self.args.profile), self.args.profile)
        instance = applications.BudgetInstance.from_profile(profile, self.args.feasible_only)
        rule = parse_rule_spec(self.args.rule, parse_tie(self.args.tie, profile.params))
        encoded, decoded = applications.pb_roundtrip(instance)
        mechanism = applications.maximal_mechanism(rule)
        report = self.new_report()
        report.add('mechanism', mechanism.name).add('projects', instance.projects).add('slots', instance.slots)
        report.add('roundtrip_lossless', decoded == instance and encoded == profile)
        report.add('funded', to_bitstring(mechanism.fund(instance), instance.projects))
        return self.finish(report)

    def app_classify(self):
        instance = applications.ClassificationInstance.from_text(
            self.read(self.args.instance), self.args.instance, self.args.realizable)
        rule = parse_rule_spec(self.args.rule, parse_tie(self.args.tie, instance.params))
        mechanism = applications.classification_adapter(rule, self.args.realizable)
        classifier = mechanism.classify(instance)
        best = applications.erm(instance)
        report = self.new_report()
        report.add('mechanism', mechanism.name)
        report.add('classifier', to_bitstring(classifier, instance.params.m))
        report.add('risk', applications.global_risk(classifier, instance))
        report.add('erm', to_bitstring(best, instance.params.m))
        report.add('erm_risk', applications.global_risk(best, instance))
        certificate = mechanism.infinite_ratio_certificate(instance.params)
        report.add('unbounded_ratio', certificate is not None)
        if certificate is not None:
            report.section('unbounded-ratio dataset', utils.dump_classification(
                certificate.instance.params, certificate.instance.labelings, certificate.instance.weights))
            report.add('certificate_risk', certificate.mechanism_risk).add('certificate_erm_risk',
                                                                           certificate.erm_risk)
        return self.finish(report)

    def app_facility(self):
        instance = applications.FacilityInstance.from_text(self.read(self.args.instance), self.args.instance,
                                                           self.args.allowable)
        kind, _, value = self.args.rule.partition(':')
        if kind == 'dictator':
            try:
                mechanism = applications.dictatorship_facility(int(value))
            except ValueError:
                raise ParameterError("malformed rule '{}'".format(self.args.rule)) from None
        else:
            rule = parse_rule_spec(self.args.rule, parse_tie(self.args.tie, instance.params))
            mechanism = applications.facility_adapter(rule)
        location = mechanism.locate(instance)
        max_cost, total_cost = applications.facility_costs(instance, location)
        report = self.new_report()
        report.add('mechanism', mechanism.name).add('location', to_bitstring(location, instance.params.m))
        report.add('max_cost', max_cost).add('total_cost', total_cost)
        if self.args.objective:
            worst = applications.facility_ratio(mechanism, instance.params, self.args.objective,
                                                self.args.allowable, self.eval_cap)
            report.add('ratio.' + self.args.objective, worst.ratio_text())
            report.add('ratio_profile', worst.worst_profile.bitstrings())
        if isinstance(mechanism, applications.FacilityMechanism):
            certificate = mechanism.infinite_ratio_certificate(instance.params)
            report.add('unbounded_ratio', certificate is not None)
            if certificate is not None:
                report.section('unbounded-ratio instance', utils.dump_facility(certificate.instance.params,
                                                                               certificate.instance.nodes))
                report.add('certificate_costs', certificate.mechanism_costs)
                report.add('certificate_optimum', certificate.optimal_costs)
        return self.finish(report)

    def cmd_explore(self):
        budget_nodes = utils.setting('budget_nodes', self.args.budget_nodes, self.config)
        budget_secs = utils.setting('budget_secs', self.args.budget_secs, self.config)
        results = search.explore_open_cases(self.args.case, [a for a in self.args.axioms.split(',') if a],
                                            budget_nodes, budget_secs, self.eval_cap)
        report = self.new_report()
        report.add('case', self.args.case)
        for number, result in enumerate(results):
            report.add('run{}.space'.format(number), result.label)
            self._add_result(report, result, 'run{}.'.format(number))
        if any(r.status == 'timeout' for r in results):
            report.exit_code = 4
        return self.finish(report)


def _table_text(table):
    if table.side == 'ranking':
        return ''.join(str(a) for a in table.outcomes)
    return ' '.join(to_bitstring(c, table.params.m) for c in table.outcomes)


def emit_report(report, output_format, timing):
    sys.stdout.write(reports.render(report, output_format, timing))
    sys.stdout.flush()


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-c', '--config', help='Config file')
    common.add_argument('--format', choices=reports.FORMATS, help='Report format')
    common.add_argument('--seed', type=int, help='Seed for sampled coverage')
    common.add_argument('--eval-cap', type=int, help='Largest number of rule evaluations for exhaustive runs')
    common.add_argument('--workers', type=int, help='Worker processes')
    common.add_argument('--timing', action='store_true', help='Print wall time in the report')
    return common


def _election_flags(parser, k_default=None, n_default=None):
    parser.add_argument('--m', type=int, required=True, help='Number of alternatives')
    parser.add_argument('--k', type=int, default=k_default, help='Committee size')
    parser.add_argument('--n', type=int, default=n_default, required=n_default is None, help='Number of agents')


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(prog='approval-gsp',
                                     description='Approval voting rules, axioms, reductions and rule search')
    commands = parser.add_subparsers(dest='command', required=True)

    evaluate = commands.add_parser('eval', parents=[common], help='Apply a rule to a profile file')
    evaluate.add_argument('--rule', required=True)
    evaluate.add_argument('--profile', required=True)
    evaluate.add_argument('--tie', default='lex')

    check = commands.add_parser('check', parents=[common], help='Check an axiom')
    check.add_argument('--axiom', required=True, choices=axioms.APPROVAL_AXIOMS + RANKING_ONLY)
    check.add_argument('--rule', required=True)
    _election_flags(check, n_default=2)
    check.add_argument('--ballots', choices=('all', 'nonempty', 'proper', 'feasible'))
    check.add_argument('--deviations', choices=('all', 'same'))
    check.add_argument('--max-coalition', type=int)
    check.add_argument('--mode', help='auto | exhaustive | sample:<count>:<seed>')
    check.add_argument('--tie', default='lex')

    reduce = commands.add_parser('reduce', parents=[common], help='Embed a ranking profile')
    reduce.add_argument('--ranking', required=True)
    reduce.add_argument('--k', type=int, required=True)
    reduce.add_argument('--emit-approval')
    reduce.add_argument('--rule', help='Also check the rule it induces')

    counterexample = commands.add_parser('counterexample', parents=[common], help='Run the closing profiles')
    counterexample.add_argument('--rule', required=True)
    counterexample.add_argument('--m', type=int, required=True, help="Alternatives of the approval side (m')")
    counterexample.add_argument('--k', type=int, required=True)
    counterexample.add_argument('--x', type=int, default=0)
    counterexample.add_argument('--y', type=int, default=1)
    counterexample.add_argument('--tie', default='lex')

    synth = commands.add_parser('search', parents=[common], help='Search for a rule table')
    synth.add_argument('--side', choices=search.SIDES, default='approval')
    synth.add_argument('--axioms', required=True)
    _election_flags(synth)
    synth.add_argument('--ballots', choices=('all', 'nonempty', 'proper', 'feasible'))
    synth.add_argument('--budget-nodes', type=int)
    synth.add_argument('--budget-secs', type=float)
    synth.add_argument('--no-propagation', action='store_true')
    synth.add_argument('--first-fail', action='store_true')
    synth.add_argument('--no-escalate', action='store_true', help='Report a timeout instead of calling the SAT solver')
    synth.add_argument('--emit-cnf')
    synth.add_argument('--emit-table')
    synth.add_argument('--table-format', choices=('csv', 'parquet'))

    approx = commands.add_parser('approx', parents=[common], help='Minimax approximation ratio')
    approx.add_argument('--rule', required=True)
    _election_flags(approx, 1, 2)
    approx.add_argument('--ballots', choices=('all', 'nonempty', 'proper', 'feasible'))
    approx.add_argument('--mode', help='exhaustive | sample:<count>:<seed>')
    approx.add_argument('--tie', default='lex')

    apps = commands.add_parser('apps', help='Application adapters')
    app_commands = apps.add_subparsers(dest='app', required=True)
    claim = app_commands.add_parser('minimax-claim', parents=[common])
    claim.add_argument('--rule', required=True)
    _election_flags(claim, 1, 2)
    claim.add_argument('--tie', default='lex')
    budget = app_commands.add_parser('pb', parents=[common])
    budget.add_argument('--rule', required=True)
    budget.add_argument('--profile', required=True)
    budget.add_argument('--feasible-only', action='store_true')
    budget.add_argument('--tie', default='lex')
    classify = app_commands.add_parser('classify', parents=[common])
    classify.add_argument('--rule', required=True)
    classify.add_argument('--instance', required=True)
    classify.add_argument('--realizable', action='store_true')
    classify.add_argument('--tie', default='lex')
    facility = app_commands.add_parser('facility', parents=[common])
    facility.add_argument('--rule', required=True)
    facility.add_argument('--instance', required=True)
    facility.add_argument('--allowable', choices=('k-ones', 'all'), default='k-ones')
    facility.add_argument('--objective', choices=applications.OBJECTIVES, help='Also compute the worst-case ratio')
    facility.add_argument('--tie', default='lex')

    explore = commands.add_parser('explore', parents=[common], help='Search the open small cases')
    explore.add_argument('--case', required=True, choices=tuple(search.OPEN_CASES))
    explore.add_argument('--axioms', default='unanimity,strong-gsp')
    explore.add_argument('--budget-nodes', type=int)
    explore.add_argument('--budget-secs', type=float, default=60.0)
    return parser


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)

    try:
        config = utils.load_config(args.config)
    except ToolkitError as exc:
        LOGGER.error(str(exc))
        sys.exit(1)

    config_errors = utils.validate_config(config)
    if len(config_errors) > 0:
        LOGGER.error("Invalid configuration:\n   * {}".format('\n   * '.join(config_errors)))
        sys.exit(1)

    started = time.monotonic()
    toolkit = Toolkit(config, args, argv)
    try:
        run_report = getattr(toolkit, 'cmd_' + args.command)()
    except ToolkitError as exc:
        LOGGER.error(str(exc))
        sys.exit(exc.exit_code)
    except OSError as exc:
        LOGGER.error("Unable to access {}: {}".format(exc.filename or '<unknown>', exc.strerror))
        sys.exit(1)

    if run_report.elapsed is None:
        run_report.elapsed = time.monotonic() - started
    LOGGER.info("Finished %s in %.3fs", args.command, time.monotonic() - started)
    emit_report(run_report, utils.setting('format', args.format, config), args.timing)
    if run_report.exit_code:
        sys.exit(run_report.exit_code)

    LOGGER.debug("Exiting normally")


if __name__ == '__main__':
    main()
