#!/usr/bin/env python3
import concurrent.futures
import gzip
import hashlib
from fractions import Fraction

import singer
import simplejson as json
from jsonschema import Draft7Validator

from approval_gsp.core import (ApprovalProfile, ElectionParams, RankingProfile, from_bitstring, ranking_params,
                               to_bitstring)
from approval_gsp.errors import ConfigError, ParameterError, ParseError

LOGGER = singer.get_logger('approval_gsp')

DEFAULTS = {
    'eval_cap': 10 ** 8,
    'seed': 20240101,
    'workers': 1,
    'sample_count': 10000,
    'clause_cap': 5_000_000,
    'budget_nodes': None,
    'budget_secs': None,
    'ballots': 'all',
    'deviations': 'all',
    'format': 'human',
    'table_format': 'csv',
    'compression': 'none',
}

CONFIG_SCHEMA = {
    'type': 'object',
    'additionalProperties': False,
    'properties': {
        'eval_cap': {'type': 'integer', 'minimum': 1},
        'seed': {'type': 'integer', 'minimum': 0},
        'workers': {'type': 'integer', 'minimum': 1},
        'sample_count': {'type': 'integer', 'minimum': 1},
        'clause_cap': {'type': 'integer', 'minimum': 1},
        'budget_nodes': {'type': ['integer', 'null'], 'minimum': 0},
        'budget_secs': {'type': ['number', 'null'], 'minimum': 0},
        'ballots': {'enum': ['all', 'nonempty', 'proper', 'feasible']},
        'deviations': {'enum': ['all', 'same']},
        'format': {'enum': ['human', 'records', 'json']},
        'table_format': {'enum': ['csv', 'parquet']},
        'compression': {'enum': ['none', 'gzip']},
    },
}


def validate_config(config):
    """Validates config, returns a list of error strings"""
    validator = Draft7Validator(CONFIG_SCHEMA)
    errors = []
    for error in sorted(validator.iter_errors(config), key=lambda e: list(e.path)):
        location = '.'.join(str(p) for p in error.path) or '<root>'
        errors.append("{}: {}".format(location, error.message))
    return errors


def load_config(path):
    if not path:
        return {}
    try:
        with open(path) as input_json:
            config = json.load(input_json)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("Unable to read config file {}: {}".format(path, exc)) from exc
    if not isinstance(config, dict):
        raise ConfigError("Config file {} must hold a JSON object".format(path))
    return config


def setting(key, flag_value, config):
    """Command-line flag > config file > built-in default"""
    if flag_value is not None:
        return flag_value
    return config.get(key, DEFAULTS[key])


# Text formats. Lines starting with '#' and blank lines are ignored; errors
# carry the 1-based line number of the offending line.

def content_lines(text, source='<input>'):
    lines = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line and not line.startswith('#'):
            lines.append((number, line))
    if not lines:
        raise ParseError('empty input', source, 0)
    return lines


def _ints(line, number, source, count):
    try:
        values = [int(v) for v in line.split()]
    except ValueError:
        raise ParseError("expected {} integers, got '{}'".format(count, line), source, number) from None
    if len(values) != count:
        raise ParseError("expected {} integers, got {}".format(count, len(values)), source, number)
    return values


def _header(lines, source, count, expected_body):
    number, line = lines[0]
    values = _ints(line, number, source, count)
    body = lines[1:]
    needed = expected_body(values)
    if len(body) < needed:
        last = body[-1][0] if body else number
        raise ParseError("expected {} data lines, found {}".format(needed, len(body)), source, last)
    if len(body) > needed:
        raise ParseError("unexpected extra line", source, body[needed][0])
    return values, body


def _params(number, source, m, k=1, n=1):
    try:
        return ElectionParams(m=m, k=k, n=n)
    except ParameterError as exc:
        raise ParseError(str(exc), source, number) from None


def _bitstring(line, number, source, m):
    try:
        return from_bitstring(line, m)
    except ParseError as exc:
        raise ParseError(exc.detail, source, number) from None


def parse_approval_profile(text, source='<input>'):
    lines = content_lines(text, source)
    (m, k, n), body = _header(lines, source, 3, lambda v: max(v[2], 0))
    params = _params(lines[0][0], source, m, k, n)
    return ApprovalProfile(params, tuple(_bitstring(line, number, source, m) for number, line in body))


def dump_approval_profile(profile, comment=None):
    params = profile.params
    lines = ['# {}'.format(comment)] if comment else []
    lines.append('{} {} {}'.format(params.m, params.k, params.n))
    lines.extend(profile.bitstrings())
    return '\n'.join(lines) + '\n'


def parse_ranking_profile(text, source='<input>'):
    lines = content_lines(text, source)
    (m, n), body = _header(lines, source, 2, lambda v: max(v[1], 0))
    params = _params(lines[0][0], source, m, 1, n)
    rankings = []
    for number, line in body:
        ranking = _ints(line, number, source, m)
        if sorted(ranking) != list(range(m)):
            raise ParseError("'{}' is not a permutation of 0..{}".format(line, m - 1), source, number)
        rankings.append(tuple(ranking))
    return RankingProfile(ranking_params(params.m, params.n), tuple(rankings))


def dump_ranking_profile(profile):
    lines = ['{} {}'.format(profile.params.m, profile.params.n)]
    lines.extend(' '.join(str(a) for a in ranking) for ranking in profile.rankings)
    return '\n'.join(lines) + '\n'


def parse_classification(text, source='<input>'):
    """Returns (params, positive-set masks, weights)"""
    lines = content_lines(text, source)
    (m, k, n), body = _header(lines, source, 3, lambda v: max(v[2], 0) + 1)
    params = _params(lines[0][0], source, m, k, n)
    labelings = []
    for number, line in body[:-1]:
        if len(line) != m or any(c not in '+-' for c in line):
            raise ParseError("labeling '{}' is not a sign string of length {}".format(line, m), source, number)
        labelings.append(sum(1 << i for i, c in enumerate(line) if c == '+'))
    number, line = body[-1]
    try:
        weights = tuple(Fraction(w) for w in line.split())
    except (ValueError, ZeroDivisionError):
        raise ParseError("malformed weights '{}'".format(line), source, number) from None
    if len(weights) != n:
        raise ParseError("expected {} weights, got {}".format(n, len(weights)), source, number)
    return params, tuple(labelings), weights


def dump_classification(params, labelings, weights):
    lines = ['{} {} {}'.format(params.m, params.k, params.n)]
    lines.extend(''.join('+' if y >> i & 1 else '-' for i in range(params.m)) for y in labelings)
    lines.append(' '.join(str(w) for w in weights))
    return '\n'.join(lines) + '\n'


def parse_facility(text, source='<input>'):
    """Returns (params, agent node masks)"""
    lines = content_lines(text, source)
    (m, k, n), body = _header(lines, source, 3, lambda v: max(v[2], 0))
    params = _params(lines[0][0], source, m, k, n)
    return params, tuple(_bitstring(line, number, source, m) for number, line in body)


def dump_facility(params, nodes):
    lines = ['{} {} {}'.format(params.m, params.k, params.n)]
    lines.extend(to_bitstring(node, params.m) for node in nodes)
    return '\n'.join(lines) + '\n'


def read_text(path):
    if path.endswith('.gz'):
        with gzip.open(path, 'rt', encoding='utf-8') as handle:
            return handle.read()
    with open(path, encoding='utf-8') as handle:
        return handle.read()


def write_text(path, text, compression='none'):
    if compression == 'gzip':
        if not path.endswith('.gz'):
            path = path + '.gz'
        with gzip.open(path, 'wt', encoding='utf-8') as handle:
            handle.write(text)
    else:
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
    return path


def digest(*texts):
    sha = hashlib.sha256()
    for text in texts:
        sha.update(text.encode('utf-8') if isinstance(text, str) else text)
        sha.update(b'\0')
    return sha.hexdigest()


# Partitioned execution. Work is split into ordered chunks; results come back
# in chunk order whatever the worker count, so reductions stay deterministic.

def partition(indices, workers):
    chunks = max(1, workers * 4 if workers > 1 else 1)
    total = len(indices)
    size = max(1, -(-total // chunks))
    return [indices[start:start + size] for start in range(0, total, size)] or [indices]


def run_partitioned(worker, tasks, workers=1, stop=None):
    """Run ``worker(*task)`` for each task and return results in task order.

    With ``stop`` set, results after the first one for which ``stop(result)``
    holds are dropped and pending tasks are cancelled.
    """
    results = []
    if workers <= 1 or len(tasks) <= 1:
        for task in tasks:
            result = worker(*task)
            results.append(result)
            if stop is not None and stop(result):
                break
        return results

    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(worker, *task) for task in tasks]
        for number, future in enumerate(futures):
            result = future.result()
            LOGGER.debug("Chunk %d/%d done", number + 1, len(futures))
            results.append(result)
            if stop is not None and stop(result):
                for pending in futures[number + 1:]:
                    pending.cancel()
                break
    return results
