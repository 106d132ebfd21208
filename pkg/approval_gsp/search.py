"""
Rule synthesis over fully enumerated election spaces.

Every profile of the space is a variable whose domain is the set of legal
outcomes (committees on the approval side, alternatives on the ranking
side). Unanimity and Pareto efficiency prune single domains; SP and GSP
become binary constraints between profiles one (coalition) deviation apart;
onto and non-dictatorship are global. The solver is depth-first
backtracking that maintains arc consistency after every assignment.
"""
import collections
import collections.abc
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import singer
from pysat.formula import CNF
from pysat.solvers import Glucose3

from approval_gsp.axioms import (ProfileSpace, check_dictatorship, check_onto, check_sp_ranking,
                                 check_unanimity_ranking, run_check)
from approval_gsp.core import (ElectionParams, ballot_space, committees, members, permutations, popcount,
                               profile_at, to_bitstring)
from approval_gsp.errors import (CLAUSE_CAP_ERROR, INCONSISTENT_ASSIGNMENT_ERROR, CapExceededError,
                                 InconsistentAssignmentError, ParameterError, ParseError, SearchTimeout,
                                 VerificationError)
from approval_gsp.rules import DEFAULT_EVAL_CAP, RuleTable, table_rule

LOGGER = singer.get_logger('approval_gsp')

SIDES = ('approval', 'ranking')
APPROVAL_SEARCH_AXIOMS = ('unanimity', 'pareto', 'sp', 'weak-gsp', 'strong-gsp')
RANKING_SEARCH_AXIOMS = ('unanimity', 'sp-ranking', 'onto', 'non-dictatorship')
DEVIATION_AXIOMS = ('sp', 'weak-gsp', 'strong-gsp', 'sp-ranking')
DEFAULT_CLAUSE_CAP = 5_000_000
OPEN_CASES = {
    'k-equals-m-minus-1': ((3, 2, 2), (3, 2, 3)),
    'small-n': ((3, 1, 3), (3, 1, 4), (3, 1, 5)),
}


@dataclass(frozen=True)
class SearchSpace:
    side: str
    params: ElectionParams
    restriction: str = 'all'

    def __post_init__(self):
        if self.side not in SIDES:
            raise ParameterError("unknown side '{}'".format(self.side))

    def items(self) -> tuple:
        if self.side == 'ranking':
            return permutations(self.params.m)
        return ballot_space(self.params.m, self.params.k, self.restriction)

    def values(self) -> Tuple[int, ...]:
        if self.side == 'ranking':
            return tuple(range(self.params.m))
        return committees(self.params.m, self.params.k)

    def size(self) -> int:
        return len(self.items()) ** self.params.n

    def outcome_bits(self, value: int) -> str:
        mask = 1 << value if self.side == 'ranking' else value
        return to_bitstring(mask, self.params.m)

    def describe(self) -> str:
        return 'side={} m={} k={} n={} ballots={}'.format(
            self.side, self.params.m, self.params.k, self.params.n, self.restriction)


def normalize_axioms(side: str, axioms: Iterable[str]) -> Tuple[str, ...]:
    allowed = APPROVAL_SEARCH_AXIOMS if side == 'approval' else RANKING_SEARCH_AXIOMS
    requested = tuple(dict.fromkeys(a.strip() for a in axioms if a.strip()))
    unknown = [a for a in requested if a not in allowed]
    if unknown:
        raise ParameterError("axioms {} are not available on the {} side (choose from {})".format(
            ','.join(unknown), side, ','.join(allowed)))
    return requested


@dataclass
class SearchResult:
    status: str
    side: str
    axioms: Tuple[str, ...]
    space: str
    table: Optional[RuleTable] = None
    stats: Dict[str, int] = field(default_factory=dict)
    elapsed: float = 0.0
    label: str = ''


class _Problem:
    """Domains, distances and constraint tests for one (space, axioms) pair"""

    def __init__(self, space: SearchSpace, axioms: Tuple[str, ...]):
        self.space = space
        self.axioms = axioms
        self.n = space.params.n
        self.items = space.items()
        self.values = space.values()
        self.size = space.size()
        self.positions = {item: i for i, item in enumerate(self.items)}
        self.cells = [profile_at(index, self.items, self.n) for index in range(self.size)]
        self.dist = [self._distances(cell) for cell in self.cells]
        self.deviation_axioms = tuple(a for a in axioms if a in DEVIATION_AXIOMS)
        self.single_agent_only = all(a in ('sp', 'sp-ranking') for a in self.deviation_axioms)
        self.onto = 'onto' in axioms
        self.non_dictatorship = 'non-dictatorship' in axioms
        self._neighbors = {}

    def _distances(self, cell):
        if self.space.side == 'ranking':
            return tuple(tuple(ranking.index(v) for v in self.values) for ranking in cell)
        return tuple(tuple(popcount(v ^ ballot) for v in self.values) for ballot in cell)

    def top_index(self, cell: int, agent: int) -> int:
        return self.cells[cell][agent][0]

    def initial_domains(self) -> List[Tuple[int, ...]]:
        all_values = tuple(range(len(self.values)))
        domains = []
        for index, cell in enumerate(self.cells):
            domain = all_values
            if 'unanimity' in self.axioms:
                domain = self._unanimous(cell, domain)
            if 'pareto' in self.axioms:
                dist = self.dist[index]
                domain = tuple(a for a in domain if not any(self._dominates(dist, c, a) for c in all_values))
            domains.append(domain)
        return domains

    def _unanimous(self, cell, domain):
        if self.space.side == 'ranking':
            tops = set(ranking[0] for ranking in cell)
            return (self.values.index(tops.pop()),) if len(tops) == 1 else domain
        if len(set(cell)) == 1 and cell[0] in self.values:
            return (self.values.index(cell[0]),)
        return domain

    def _dominates(self, dist, c, a):
        return (c != a and all(d[c] <= d[a] for d in dist) and any(d[c] < d[a] for d in dist))

    def neighbors(self, cell: int) -> Sequence[int]:
        if not self.deviation_axioms:
            return ()
        if not self.single_agent_only:
            return _AllBut(self.size, cell)
        found = self._neighbors.get(cell)
        if found is None:
            width = len(self.items)
            digits = [self.positions[item] for item in self.cells[cell]]
            found = []
            for agent in range(self.n):
                weight = width ** (self.n - 1 - agent)
                base = cell - digits[agent] * weight
                found.extend(base + d * weight for d in range(width) if d != digits[agent])
            self._neighbors[cell] = found
        return found

    def violates(self, p: int, a: int, q: int, b: int) -> bool:
        """Would the agents truthful at ``p`` gain by moving the outcome ``a`` to ``b`` at ``q``?"""
        if a == b:
            return False
        truth, dev, dist = self.cells[p], self.cells[q], self.dist[p]
        deviators = [i for i in range(self.n) if truth[i] != dev[i]]
        for axiom in self.deviation_axioms:
            if axiom in ('sp', 'sp-ranking'):
                if len(deviators) == 1 and dist[deviators[0]][b] < dist[deviators[0]][a]:
                    return True
            elif axiom == 'weak-gsp':
                if all(dist[i][b] < dist[i][a] for i in deviators):
                    return True
            elif all(dist[i][b] <= dist[i][a] for i in deviators):
                if any(dist[i][b] < dist[i][a] for i in range(self.n)):
                    return True
        return False

    def compatible(self, p: int, a: int, q: int, b: int) -> bool:
        return not self.violates(p, a, q, b) and not self.violates(q, b, p, a)

    def globals_ok(self, domains, final: bool) -> bool:
        if self.onto:
            covered = set()
            for domain in domains:
                covered.update(domain)
            if len(covered) < len(self.values):
                return False
        if self.non_dictatorship:
            for agent in range(self.n):
                if all(domain == (self.top_index(c, agent),) for c, domain in enumerate(domains)):
                    return False
        if final:
            return all(len(domain) == 1 for domain in domains)
        return True


class _AllBut(collections.abc.Sequence):
    """Every cell index except one, without materializing the list"""

    def __init__(self, size, skip):
        self._size = size
        self._skip = skip

    def __len__(self):
        return self._size - 1

    def __getitem__(self, index):
        if isinstance(index, slice):
            return [self[i] for i in range(*index.indices(len(self)))]
        if index < 0:
            index += len(self)
        if not 0 <= index < len(self):
            raise IndexError(index)
        return index if index < self._skip else index + 1


class Synthesizer:
    """Backtracking search for a rule table satisfying a set of axioms"""

    def __init__(self, space: SearchSpace, axioms: Iterable[str], propagation: bool = True,
                 first_fail: bool = False, budget_nodes: Optional[int] = None,
                 budget_secs: Optional[float] = None, verify: bool = True,
                 eval_cap: int = DEFAULT_EVAL_CAP):
        self.space = space
        self.axioms = normalize_axioms(space.side, axioms)
        self.propagation = propagation
        self.first_fail = first_fail
        self.budget_nodes = budget_nodes
        self.budget_secs = budget_secs
        self.verify = verify
        self.eval_cap = eval_cap
        self.stats = {'nodes': 0, 'backtracks': 0, 'revisions': 0, 'pruned': 0}
        self._started = 0.0
        self.problem = None

    def _check_budget(self):
        if self.budget_nodes is not None and self.stats['nodes'] >= self.budget_nodes:
            raise SearchTimeout(dict(self.stats))
        if self.budget_secs is not None and time.monotonic() - self._started >= self.budget_secs:
            raise SearchTimeout(dict(self.stats))

    def run(self) -> SearchResult:
        self._started = time.monotonic()
        LOGGER.info("Synthesizing %s over %s (%d profiles)", ','.join(self.axioms), self.space.describe(),
                    self.space.size())
        try:
            self._check_budget()
            self.problem = _Problem(self.space, self.axioms)
            solution = self._search()
        except SearchTimeout as timeout:
            LOGGER.info("Search budget exhausted after %d nodes", timeout.stats['nodes'])
            return self._result('timeout')
        if solution is None:
            LOGGER.info("No table satisfies %s (%d nodes)", ','.join(self.axioms), self.stats['nodes'])
            return self._result('unsat')
        table = RuleTable(self.space.side, self.space.params, self.space.restriction,
                          tuple(self.problem.values[domain[0]] for domain in solution))
        if self.verify:
            verify_table(table, self.axioms, self.eval_cap)
        return self._result('sat', table)

    def _result(self, status, table=None):
        return SearchResult(status, self.space.side, self.axioms, self.space.describe(), table,
                            dict(self.stats), time.monotonic() - self._started)

    def _search(self):
        problem = self.problem
        domains = problem.initial_domains()
        if any(not d for d in domains):
            return None
        if self.propagation and not self._propagate(domains, range(problem.size)):
            return None
        if not self.propagation:
            fixed = [c for c, d in enumerate(domains) if len(d) == 1]
            if not all(self._consistent(domains, c) for c in fixed):
                return None
        cell = self._select(domains)
        if cell is None:
            return domains if problem.globals_ok(domains, True) else None
        stack = [(domains, cell, list(domains[cell]))]
        while stack:
            saved, cell, pending = stack[-1]
            if not pending:
                stack.pop()
                self.stats['backtracks'] += 1
                continue
            value = pending.pop(0)
            self._check_budget()
            self.stats['nodes'] += 1
            trial = list(saved)
            trial[cell] = (value,)
            if not self._consistent(trial, cell):
                continue
            following = self._select(trial)
            if following is None:
                if problem.globals_ok(trial, True):
                    return trial
                continue
            stack.append((trial, following, list(trial[following])))
        return None

    def _consistent(self, domains, cell):
        if self.propagation:
            return self._propagate(domains, (cell,))
        problem = self.problem
        (value,) = domains[cell]
        for other in problem.neighbors(cell):
            if len(domains[other]) == 1 and not problem.compatible(cell, value, other, domains[other][0]):
                return False
        # globals only decide on complete assignments without propagation
        return True

    def _select(self, domains):
        open_cells = [c for c, d in enumerate(domains) if len(d) > 1]
        if not open_cells:
            return None
        if self.first_fail:
            return min(open_cells, key=lambda c: (len(domains[c]), c))
        return open_cells[0]

    def _propagate(self, domains, changed) -> bool:
        """Arc consistency plus global pruning to a fixpoint; False on a wipe-out"""
        problem = self.problem
        queue = collections.deque(changed)
        queued = set(queue)
        while True:
            while queue:
                source = queue.popleft()
                queued.discard(source)
                for target in problem.neighbors(source):
                    revised = self._revise(domains, target, source)
                    if revised is None:
                        continue
                    if not revised:
                        return False
                    domains[target] = revised
                    if target not in queued:
                        queue.append(target)
                        queued.add(target)
            if not problem.globals_ok(domains, False):
                return False
            forced = self._force_onto(domains)
            if not forced:
                return True
            for cell in forced:
                if cell not in queued:
                    queue.append(cell)
                    queued.add(cell)

    def _revise(self, domains, target, source):
        self.stats['revisions'] += 1
        if self.stats['revisions'] % 1024 == 0:
            self._check_budget()
        problem = self.problem
        support = domains[source]
        kept = tuple(a for a in domains[target]
                     if any(problem.compatible(target, a, source, b) for b in support))
        if len(kept) == len(domains[target]):
            return None
        self.stats['pruned'] += len(domains[target]) - len(kept)
        return kept

    def _force_onto(self, domains):
        """An outcome still uncovered by assigned cells that only one cell can take is forced there"""
        if not self.problem.onto:
            return []
        assigned = set(d[0] for d in domains if len(d) == 1)
        forced = []
        for value in range(len(self.problem.values)):
            if value in assigned:
                continue
            holders = [c for c, d in enumerate(domains) if value in d]
            if len(holders) == 1:
                domains[holders[0]] = (value,)
                assigned.add(value)
                forced.append(holders[0])
        return forced


def synthesize(axioms: Iterable[str], space: SearchSpace, propagation: bool = True, first_fail: bool = False,
               budget_nodes: Optional[int] = None, budget_secs: Optional[float] = None,
               eval_cap: int = DEFAULT_EVAL_CAP) -> SearchResult:
    return Synthesizer(space, axioms, propagation, first_fail, budget_nodes, budget_secs,
                       eval_cap=eval_cap).run()


def verify_table(table: RuleTable, axioms: Iterable[str], eval_cap: int = DEFAULT_EVAL_CAP):
    """Re-check a table with the independent axiom checkers; raises VerificationError"""
    params = table.params
    failures = []
    if table.side == 'approval':
        rule = table_rule(table)
        space = ProfileSpace(table.restriction, 'exhaustive', deviations='same')
        for axiom in axioms:
            if not run_check(axiom, rule, params, space, eval_cap=eval_cap).holds:
                failures.append(axiom)
    else:
        rule = _TableRankingRule(table)
        for axiom in axioms:
            if axiom == 'unanimity':
                holds = check_unanimity_ranking(rule, params).holds
            elif axiom == 'sp-ranking':
                holds = check_sp_ranking(rule, params, eval_cap).holds
            elif axiom == 'onto':
                holds = check_onto(rule, params, eval_cap).holds
            else:
                holds = not check_dictatorship(rule, params, eval_cap).holds
            if not holds:
                failures.append(axiom)
    if failures:
        raise VerificationError("table fails {} when re-checked".format(','.join(failures)))


@dataclass(frozen=True)
class _TableRankingRule:
    table: RuleTable

    @property
    def name(self):
        return 'table:{}'.format(self.table.describe())

    def winner(self, params, rankings):
        return self.table.lookup(rankings)


@dataclass
class CnfExport:
    space: SearchSpace
    axioms: Tuple[str, ...]
    num_vars: int
    clauses: List[List[int]]

    def dimacs(self) -> str:
        lines = ['c approval-gsp {} axioms={}'.format(self.space.describe(), ','.join(self.axioms)),
                 'p cnf {} {}'.format(self.num_vars, len(self.clauses))]
        lines.extend(' '.join(str(lit) for lit in clause) + ' 0' for clause in self.clauses)
        return '\n'.join(lines) + '\n'

    def variable_map(self) -> str:
        params = self.space.params
        lines = ['c side={} m={} k={} n={} ballots={} axioms={}'.format(
            self.space.side, params.m, params.k, params.n, self.space.restriction, ','.join(self.axioms))]
        values = self.space.values()
        for cell in range(self.space.size()):
            for index, value in enumerate(values):
                lines.append('v {} profile {} outcome {}'.format(
                    cell * len(values) + index + 1, cell, self.space.outcome_bits(value)))
        return '\n'.join(lines) + '\n'


def export_cnf(axioms: Iterable[str], space: SearchSpace, clause_cap: int = DEFAULT_CLAUSE_CAP) -> CnfExport:
    """One selector variable per (profile, outcome), exactly-one per profile"""
    axioms = normalize_axioms(space.side, axioms)
    problem = _Problem(space, axioms)
    width = len(problem.values)
    clauses = []

    def add(clause):
        if len(clauses) >= clause_cap:
            raise CapExceededError(CLAUSE_CAP_ERROR.format(clause_cap))
        clauses.append(clause)

    def var(cell, value):
        return cell * width + value + 1

    domains = problem.initial_domains()
    for cell in range(problem.size):
        add([var(cell, v) for v in range(width)])
        for first in range(width):
            for second in range(first + 1, width):
                add([-var(cell, first), -var(cell, second)])
        if len(domains[cell]) == 1:
            add([var(cell, domains[cell][0])])
        for v in range(width):
            if v not in domains[cell]:
                add([-var(cell, v)])
    for p in range(problem.size):
        for q in problem.neighbors(p):
            if q < p:
                continue
            for a in domains[p]:
                for b in domains[q]:
                    if not problem.compatible(p, a, q, b):
                        add([-var(p, a), -var(q, b)])
    if problem.onto:
        for v in range(width):
            add([var(cell, v) for cell in range(problem.size)])
    if problem.non_dictatorship:
        for agent in range(problem.n):
            add([-var(cell, problem.top_index(cell, agent)) for cell in range(problem.size)])
    LOGGER.info("Encoded %s over %s: %d variables, %d clauses", ','.join(axioms), space.describe(),
                problem.size * width, len(clauses))
    return CnfExport(space, axioms, problem.size * width, clauses)


def _parse_map(map_text):
    header = None
    variables = {}
    for number, raw in enumerate(map_text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith('c '):
            if header is None:
                header = dict(part.split('=', 1) for part in line[2:].split() if '=' in part)
            continue
        parts = line.split()
        if len(parts) != 6 or parts[0] != 'v' or parts[2] != 'profile' or parts[4] != 'outcome':
            raise ParseError("malformed map line '{}'".format(line), '<map>', number)
        variables[int(parts[1])] = (int(parts[3]), parts[5])
    if header is None:
        raise ParseError('map file has no header line', '<map>', 0)
    try:
        params = ElectionParams(int(header['m']), int(header['k']), int(header['n']))
        space = SearchSpace(header['side'], params, header.get('ballots', 'all'))
    except (KeyError, ValueError) as exc:
        raise ParseError("map header is incomplete: {}".format(exc), '<map>', 1) from None
    axioms = tuple(a for a in header.get('axioms', '').split(',') if a)
    return space, axioms, variables


def decode_model(assignment: Sequence[int], map_text: str, verify: bool = True,
                 eval_cap: int = DEFAULT_EVAL_CAP) -> RuleTable:
    """Turn solver literals (positive = true) into a RuleTable"""
    space, axioms, variables = _parse_map(map_text)
    chosen = collections.defaultdict(list)
    for literal in assignment:
        if literal > 0 and literal in variables:
            cell, bits = variables[literal]
            chosen[cell].append(bits)
    outcomes = []
    for cell in range(space.size()):
        picked = chosen.get(cell, [])
        if len(picked) != 1:
            raise InconsistentAssignmentError(INCONSISTENT_ASSIGNMENT_ERROR.format(len(picked), cell))
        mask = sum(1 << i for i, c in enumerate(picked[0]) if c == '1')
        outcomes.append(members(mask)[0] if space.side == 'ranking' else mask)
    table = RuleTable(space.side, space.params, space.restriction, tuple(outcomes))
    if verify:
        verify_table(table, axioms, eval_cap)
    return table


def solve_cnf(export: CnfExport, eval_cap: int = DEFAULT_EVAL_CAP) -> SearchResult:
    """Decide an export with Glucose; sat models are decoded and re-verified"""
    started = time.monotonic()
    formula = CNF(from_clauses=export.clauses)
    with Glucose3(bootstrap_with=formula.clauses) as solver:
        satisfiable = solver.solve()
        model = solver.get_model() if satisfiable else None
        stats = {'nodes': 0, 'conflicts': solver.accum_stats().get('conflicts', 0)}
    LOGGER.info("External solver: %s", 'sat' if satisfiable else 'unsat')
    table = decode_model(model, export.variable_map(), eval_cap=eval_cap) if satisfiable else None
    return SearchResult('sat' if satisfiable else 'unsat', export.space.side, export.axioms,
                        export.space.describe(), table, stats, time.monotonic() - started, label='cnf')


def decide(axioms: Iterable[str], space: SearchSpace, propagation: bool = True, first_fail: bool = False,
           budget_nodes: Optional[int] = None, budget_secs: Optional[float] = None,
           clause_cap: int = DEFAULT_CLAUSE_CAP, eval_cap: int = DEFAULT_EVAL_CAP) -> SearchResult:
    """``synthesize``, escalating to the CNF path when the internal search times out"""
    result = synthesize(axioms, space, propagation, first_fail, budget_nodes, budget_secs, eval_cap)
    if result.status != 'timeout':
        return result
    LOGGER.warning("Internal search timed out after %d nodes, escalating to the external solver",
                   result.stats.get('nodes', 0))
    escalated = solve_cnf(export_cnf(result.axioms, space, clause_cap), eval_cap)
    escalated.stats.update({'search_' + key: value for key, value in result.stats.items()})
    return escalated


def explore_open_cases(case: str, axioms: Iterable[str] = ('unanimity', 'strong-gsp'),
                       budget_nodes: Optional[int] = None, budget_secs: Optional[float] = None,
                       eval_cap: int = DEFAULT_EVAL_CAP) -> List[SearchResult]:
    """Preconfigured searches; every result speaks only about its enumerated space"""
    if case not in OPEN_CASES:
        raise ParameterError("unknown case '{}' (choose from {})".format(case, ','.join(OPEN_CASES)))
    results = []
    for m, k, n in OPEN_CASES[case]:
        space = SearchSpace('approval', ElectionParams(m, k, n))
        result = synthesize(axioms, space, first_fail=True, budget_nodes=budget_nodes,
                            budget_secs=budget_secs, eval_cap=eval_cap)
        result.label = '{} m={} k={} n={}'.format(case, m, k, n)
        results.append(result)
    return results
