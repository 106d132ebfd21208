import csv
import gzip
from abc import ABC, abstractmethod

import pyarrow as pa
from pyarrow import parquet as pq

from approval_gsp.core import (ElectionParams, ballot_space, from_bitstring, members, permutations, profile_at,
                               to_bitstring)
from approval_gsp.errors import ParameterError, ParseError
from approval_gsp.rules import RuleTable

COLUMNS = ['side', 'm', 'k', 'n', 'ballots', 'profile', 'items', 'outcome']


def _profile_texts(side, params, restriction):
    """Text of every profile of the space, in canonical order"""
    if side == 'ranking':
        space = permutations(params.m)
        for index in range(len(space) ** params.n):
            yield ' '.join(''.join(str(a) for a in r) for r in profile_at(index, space, params.n))
    else:
        space = ballot_space(params.m, params.k, restriction)
        for index in range(len(space) ** params.n):
            yield ' '.join(to_bitstring(b, params.m) for b in profile_at(index, space, params.n))


def table_rows(table: RuleTable):
    params = table.params
    texts = _profile_texts(table.side, params, table.restriction)
    for index, (text, outcome) in enumerate(zip(texts, table.outcomes)):
        mask = 1 << outcome if table.side == 'ranking' else outcome
        yield {
            'side': table.side,
            'm': params.m,
            'k': params.k,
            'n': params.n,
            'ballots': table.restriction,
            'profile': index,
            'items': text,
            'outcome': to_bitstring(mask, params.m),
        }


def table_from_rows(rows, source):
    """Rebuild a RuleTable, checking every row against the canonical enumeration"""
    if not rows:
        raise ParseError('rule table is empty', source, 0)
    first = rows[0]
    try:
        side = first['side']
        params = ElectionParams(int(first['m']), int(first['k']), int(first['n']))
        expected = list(_profile_texts(side, params, first['ballots']))
    except (KeyError, ValueError, ParameterError) as exc:
        raise ParseError("bad rule table header: {}".format(exc), source, 2) from None
    if len(rows) != len(expected):
        raise ParseError("rule table has {} rows, the space has {} profiles".format(len(rows), len(expected)),
                         source, len(rows) + 1)
    outcomes = []
    for number, (row, text) in enumerate(zip(rows, expected), start=2):
        if int(row['profile']) != number - 2 or row['items'] != text:
            raise ParseError("row does not match profile {} ({})".format(number - 2, text), source, number)
        try:
            mask = from_bitstring(row['outcome'], params.m)
        except ParseError as exc:
            raise ParseError(exc.detail, source, number) from None
        if side == 'ranking':
            if len(members(mask)) != 1:
                raise ParseError("ranking outcome must name one alternative", source, number)
            outcomes.append(members(mask)[0])
        else:
            outcomes.append(mask)
    try:
        return RuleTable(side, params, first['ballots'], tuple(outcomes))
    except ParameterError as exc:
        raise ParseError(str(exc), source, 0) from None


class FileHandler(ABC):
    suffix = None

    def __init__(self, compression='none') -> None:
        self.compression = compression

    @abstractmethod
    def write_table(self, table: RuleTable, filename: str) -> str:
        """Write ``table`` and return the file name actually used"""

    @abstractmethod
    def read_table(self, filename: str) -> RuleTable:
        ...


class CSVFileHandler(FileHandler):
    suffix = ".csv"

    @staticmethod
    def _open(filename, mode):
        if filename.endswith('.gz'):
            return gzip.open(filename, mode + 't', encoding='utf-8', newline='')
        return open(filename, mode, encoding='utf-8', newline='')

    def write_table(self, table, filename):
        if self.compression == 'gzip' and not filename.endswith('.gz'):
            filename += '.gz'
        with self._open(filename, 'w') as csvfile:
            writer = csv.DictWriter(csvfile, COLUMNS)
            writer.writeheader()
            for row in table_rows(table):
                writer.writerow(row)
        return filename

    def read_table(self, filename):
        with self._open(filename, 'r') as csvfile:
            reader = csv.DictReader(csvfile)
            missing = [c for c in COLUMNS if c not in (reader.fieldnames or [])]
            if missing:
                raise ParseError("missing columns {}".format(','.join(missing)), filename, 1)
            rows = list(reader)
        return table_from_rows(rows, filename)


class ParquetFileHandler(FileHandler):
    suffix = ".parquet"

    def write_table(self, table, filename):
        arrow_table = pa.Table.from_pylist(list(table_rows(table)))
        codec = 'gzip' if self.compression == 'gzip' else 'none'
        with pq.ParquetWriter(filename, arrow_table.schema, compression=codec) as writer:
            writer.write_table(arrow_table)
        return filename

    def read_table(self, filename):
        rows = pq.read_table(filename).to_pylist()
        return table_from_rows([{k: str(v) for k, v in row.items()} for row in rows], filename)


def handler_for(table_format='csv', compression='none') -> FileHandler:
    if table_format == 'parquet':
        return ParquetFileHandler(compression)
    if table_format == 'csv':
        return CSVFileHandler(compression)
    raise ParameterError("unknown table format '{}'".format(table_format))


def write_rule_table(table: RuleTable, filename: str, table_format='csv', compression='none') -> str:
    return handler_for(table_format, compression).write_table(table, filename)


def read_rule_table(filename: str) -> RuleTable:
    table_format = 'parquet' if filename.endswith('.parquet') else 'csv'
    return handler_for(table_format).read_table(filename)
