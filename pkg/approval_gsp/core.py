"""
Election primitives: alternatives, ballots, committees, profiles and the
Hamming distance every preference comparison in the toolkit is based on.

Ballots and committees are plain ``int`` bit masks: bit ``i`` set means
alternative ``i`` is approved (or selected). ``to_bitstring`` renders them
with alternative 0 first, so ``'101'`` is the ballot ``{0, 2}``.
"""
import functools
import itertools
from dataclasses import dataclass
from math import comb
from typing import Iterable, Iterator, Optional, Sequence, Tuple

import singer

from approval_gsp.errors import ParameterError, ParseError

LOGGER = singer.get_logger('approval_gsp')

Ballot = int
Committee = int

BALLOT_RESTRICTIONS = ('all', 'nonempty', 'proper', 'feasible')


def popcount(mask: int) -> int:
    return bin(mask).count('1')


def as_mask(members: Iterable[int]) -> int:
    mask = 0
    for alternative in members:
        mask |= 1 << alternative
    return mask


def members(mask: int) -> Tuple[int, ...]:
    """Sorted alternative indices of a mask"""
    result = []
    index = 0
    while mask:
        if mask & 1:
            result.append(index)
        mask >>= 1
        index += 1
    return tuple(result)


def to_bitstring(mask: int, m: int) -> str:
    return ''.join('1' if mask >> i & 1 else '0' for i in range(m))


def from_bitstring(text: str, m: Optional[int] = None) -> int:
    text = text.strip()
    if not text or any(c not in '01' for c in text):
        raise ParseError("malformed bit-string '{}'".format(text))
    if m is not None and len(text) != m:
        raise ParseError("bit-string '{}' has length {}, expected {}".format(text, len(text), m))
    return sum(1 << i for i, c in enumerate(text) if c == '1')


def hamming(q, t) -> int:
    """|q \\ t| + |t \\ q|; accepts masks or iterables of alternatives"""
    if not isinstance(q, int):
        q = as_mask(q)
    if not isinstance(t, int):
        t = as_mask(t)
    return popcount(q ^ t)


@dataclass(frozen=True)
class ElectionParams:
    m: int
    k: int = 1
    n: int = 1

    def __post_init__(self):
        if self.m < 1:
            raise ParameterError("m={} (need at least one alternative)".format(self.m))
        if self.n < 1:
            raise ParameterError("n={} (need at least one agent)".format(self.n))
        if not 1 <= self.k <= self.m:
            raise ParameterError("k={} outside 1..m={}".format(self.k, self.m))

    @property
    def full_mask(self) -> int:
        return (1 << self.m) - 1

    def with_n(self, n: int) -> 'ElectionParams':
        return ElectionParams(self.m, self.k, n)

    def describe(self) -> str:
        return 'm={} k={} n={}'.format(self.m, self.k, self.n)


@functools.lru_cache(maxsize=None)
def committees(m: int, k: int) -> Tuple[int, ...]:
    """All k-subsets of range(m), lexicographic by sorted member list"""
    return tuple(as_mask(c) for c in itertools.combinations(range(m), k))


def enumerate_committees(params: ElectionParams) -> Tuple[Committee, ...]:
    return committees(params.m, params.k)


@functools.lru_cache(maxsize=None)
def ballot_space(m: int, k: int, restriction: str = 'all') -> Tuple[int, ...]:
    if restriction not in BALLOT_RESTRICTIONS:
        raise ParameterError("unknown ballot restriction '{}'".format(restriction))
    full = (1 << m) - 1
    masks = range(1 << m)
    if restriction == 'nonempty':
        masks = [b for b in masks if b]
    elif restriction == 'proper':
        masks = [b for b in masks if b and b != full]
    elif restriction == 'feasible':
        masks = [b for b in masks if popcount(b) <= k]
    return tuple(masks)


def enumerate_ballot_space(params: ElectionParams, restriction: str = 'all') -> Tuple[Ballot, ...]:
    return ballot_space(params.m, params.k, restriction)


def is_committee(mask: int, params: ElectionParams) -> bool:
    return 0 <= mask <= params.full_mask and popcount(mask) == params.k


@dataclass(frozen=True)
class ApprovalProfile:
    params: ElectionParams
    ballots: Tuple[Ballot, ...]

    def __post_init__(self):
        object.__setattr__(self, 'ballots', tuple(self.ballots))
        if len(self.ballots) != self.params.n:
            raise ParameterError("profile has {} ballots but n={}".format(len(self.ballots), self.params.n))
        for ballot in self.ballots:
            if not 0 <= ballot <= self.params.full_mask:
                raise ParameterError("ballot {} indexes alternatives outside 0..{}".format(ballot, self.params.m - 1))

    def deviate(self, misreports) -> 'ApprovalProfile':
        """Replace the ballots of the agents in ``misreports`` (agent -> ballot)"""
        ballots = list(self.ballots)
        for agent, ballot in misreports.items():
            ballots[agent] = ballot
        return ApprovalProfile(self.params, tuple(ballots))

    def bitstrings(self) -> Tuple[str, ...]:
        return tuple(to_bitstring(b, self.params.m) for b in self.ballots)

    @classmethod
    def unanimous(cls, params: ElectionParams, committee: Committee) -> 'ApprovalProfile':
        return cls(params, (committee,) * params.n)


@dataclass(frozen=True)
class RankingProfile:
    """Rankings list alternatives most-preferred first. ``params.k`` is unused."""
    params: ElectionParams
    rankings: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, 'rankings', tuple(tuple(r) for r in self.rankings))
        if len(self.rankings) != self.params.n:
            raise ParameterError("profile has {} rankings but n={}".format(len(self.rankings), self.params.n))
        expected = tuple(range(self.params.m))
        for ranking in self.rankings:
            if tuple(sorted(ranking)) != expected:
                raise ParameterError("ranking {} is not a permutation of 0..{}".format(ranking, self.params.m - 1))

    def top(self, agent: int) -> int:
        return self.rankings[agent][0]

    def deviate(self, misreports) -> 'RankingProfile':
        rankings = list(self.rankings)
        for agent, ranking in misreports.items():
            rankings[agent] = tuple(ranking)
        return RankingProfile(self.params, tuple(rankings))


def ranking_params(m: int, n: int) -> ElectionParams:
    return ElectionParams(m=m, k=1, n=n)


@functools.lru_cache(maxsize=None)
def permutations(m: int) -> Tuple[Tuple[int, ...], ...]:
    return tuple(itertools.permutations(range(m)))


def position(ranking: Sequence[int], alternative: int) -> int:
    """0 for the top choice"""
    return ranking.index(alternative)


# Profile spaces. Profiles enumerate as itertools.product over the ballot
# space, agent 0 most significant; an index is the mixed-radix number of the
# agents' positions in that space.

def profile_count(params: ElectionParams, restriction: str = 'all') -> int:
    return len(enumerate_ballot_space(params, restriction)) ** params.n


def enumerate_profiles(params: ElectionParams, restriction: str = 'all') -> Iterator[Tuple[Ballot, ...]]:
    return itertools.product(enumerate_ballot_space(params, restriction), repeat=params.n)


def profile_at(index: int, space: Sequence, n: int) -> tuple:
    """Inverse of ``index_of`` for any enumerated per-agent space"""
    size = len(space)
    items = [None] * n
    for agent in range(n - 1, -1, -1):
        index, digit = divmod(index, size)
        items[agent] = space[digit]
    return tuple(items)


def index_of(items: Sequence, positions: dict) -> int:
    size = len(positions)
    index = 0
    for item in items:
        index = index * size + positions[item]
    return index


def ranking_profile_count(params: ElectionParams) -> int:
    return len(permutations(params.m)) ** params.n


def enumerate_ranking_profiles(params: ElectionParams) -> Iterator[Tuple[Tuple[int, ...], ...]]:
    return itertools.product(permutations(params.m), repeat=params.n)


def committee_count(params: ElectionParams) -> int:
    return comb(params.m, params.k)
