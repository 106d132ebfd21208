"""
Run reports in three renderings: ``human`` (transcript), ``records``
(``key=value`` lines) and ``json``. Witnesses serialize to ``witness.*``
records that parse back into replayable witnesses.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import simplejson as json

from approval_gsp.axioms import Witness
from approval_gsp.core import (ApprovalProfile, ElectionParams, RankingProfile, from_bitstring, ranking_params,
                               to_bitstring)
from approval_gsp.errors import ParseError

TOOL_VERSION = '0.1.0'
FORMATS = ('human', 'records', 'json')


@dataclass
class RunReport:
    command: str
    inputs_digest: str
    seed: int
    fields: List[Tuple[str, str]] = field(default_factory=list)
    sections: List[Tuple[str, str]] = field(default_factory=list)
    witness: Optional[Witness] = None
    witness_axiom: str = ''
    elapsed: Optional[float] = None
    exit_code: int = 0
    version: str = TOOL_VERSION

    def add(self, key, value):
        self.fields.append((key, _text(value)))
        return self

    def section(self, title, text):
        self.sections.append((title, text))
        return self


def _text(value):
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (list, tuple)):
        return ','.join(_text(v) for v in value)
    if value is None:
        return '-'
    return str(value)


def _outcome(witness, value):
    if witness.side == 'ranking':
        return str(value)
    return to_bitstring(value, witness.profile.params.m)


def _item(witness, item):
    if witness.side == 'ranking':
        return ''.join(str(a) for a in item)
    return to_bitstring(item, witness.profile.params.m)


def witness_records(witness: Witness, axiom: str = '') -> List[Tuple[str, str]]:
    params = witness.profile.params
    items = witness.profile.rankings if witness.side == 'ranking' else witness.profile.ballots
    return [
        ('witness.axiom', axiom),
        ('witness.side', witness.side),
        ('witness.m', str(params.m)),
        ('witness.k', str(params.k)),
        ('witness.n', str(params.n)),
        ('witness.profile', ','.join(_item(witness, i) for i in items)),
        ('witness.coalition', ','.join(str(a) for a in witness.coalition)),
        ('witness.misreports', ','.join(_item(witness, i) for i in witness.misreports)),
        ('witness.before', _outcome(witness, witness.outcome_before)),
        ('witness.after', _outcome(witness, witness.outcome_after)),
        ('witness.distances', ','.join('{}:{}'.format(b, a) for b, a in witness.distances)),
    ]


def _split(value):
    return [part for part in value.split(',') if part] if value else []


def parse_witness_records(text: str, source: str = '<records>') -> Witness:
    """Inverse of ``witness_records`` over a records-format report"""
    values = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip('\n')
        if line.startswith('witness.'):
            if '=' not in line:
                raise ParseError("malformed record '{}'".format(line), source, number)
            key, value = line.split('=', 1)
            values[key[len('witness.'):]] = value
    try:
        side = values['side']
        m, k, n = int(values['m']), int(values['k']), int(values['n'])
        if side == 'ranking':
            params = ranking_params(m, n)

            def item(text):
                return tuple(int(c) for c in text)

            profile = RankingProfile(params, tuple(item(t) for t in _split(values['profile'])))
            before, after = int(values['before']), int(values['after'])
        else:
            params = ElectionParams(m, k, n)

            def item(text):
                return from_bitstring(text, m)

            profile = ApprovalProfile(params, tuple(item(t) for t in _split(values['profile'])))
            before, after = item(values['before']), item(values['after'])
        coalition = tuple(int(a) for a in _split(values['coalition']))
        misreports = tuple(item(t) for t in _split(values['misreports']))
        distances = tuple(tuple(int(d) for d in pair.split(':')) for pair in _split(values['distances']))
    except (KeyError, ValueError) as exc:
        raise ParseError("incomplete witness records: {}".format(exc), source, 0) from None
    return Witness(profile, coalition, misreports, before, after, distances)


def witness_transcript(witness: Witness, axiom: str = '') -> str:
    lines = ['Witness{}'.format(' ({} violated)'.format(axiom) if axiom else '')]
    items = witness.profile.rankings if witness.side == 'ranking' else witness.profile.ballots
    for agent, item in enumerate(items):
        lines.append('  agent {}: {}'.format(agent, _item(witness, item)))
    reports = dict(zip(witness.coalition, witness.misreports))
    unit = 'position' if witness.side == 'ranking' else 'distance'
    for agent, (before, after) in zip(witness.coalition, witness.distances):
        action = 'reports {}'.format(_item(witness, reports[agent])) if agent in reports else 'truthful'
        lines.append('  coalition member {} {}: {} {} -> {}'.format(agent, action, unit, before, after))
    lines.append('  outcome: {} -> {}'.format(_outcome(witness, witness.outcome_before),
                                               _outcome(witness, witness.outcome_after)))
    return '\n'.join(lines) + '\n'


def _header(report, timing):
    header = [('tool_version', report.version), ('command', report.command),
              ('inputs_digest', report.inputs_digest), ('seed', str(report.seed))]
    if timing and report.elapsed is not None:
        header.append(('wall_time', '{:.3f}'.format(report.elapsed)))
    return header


def render_records(report: RunReport, timing: bool = False) -> str:
    pairs = _header(report, timing) + list(report.fields)
    if report.witness is not None:
        pairs += witness_records(report.witness, report.witness_axiom)
    return ''.join('{}={}\n'.format(key, value) for key, value in pairs)


def render_human(report: RunReport, timing: bool = False) -> str:
    width = max([len(key) for key, _ in _header(report, timing) + report.fields] or [0])
    lines = ['{}  {}'.format(key.ljust(width), value) for key, value in _header(report, timing) + report.fields]
    text = '\n'.join(lines) + '\n'
    for title, body in report.sections:
        text += '\n{}\n{}'.format(title, body if body.endswith('\n') else body + '\n')
    if report.witness is not None:
        text += '\n' + witness_transcript(report.witness, report.witness_axiom)
    return text


def render_json(report: RunReport, timing: bool = False) -> str:
    document = dict(_header(report, timing))
    document['results'] = dict(report.fields)
    if report.sections:
        document['sections'] = {title: body for title, body in report.sections}
    if report.witness is not None:
        document['witness'] = {key[len('witness.'):]: value
                               for key, value in witness_records(report.witness, report.witness_axiom)}
    return json.dumps(document, sort_keys=True, indent=2) + '\n'


def render(report: RunReport, output_format: str = 'human', timing: bool = False) -> str:
    if output_format == 'records':
        return render_records(report, timing)
    if output_format == 'json':
        return render_json(report, timing)
    return render_human(report, timing)
