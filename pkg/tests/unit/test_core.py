import itertools
import math
import unittest

from approval_gsp import core
from approval_gsp.core import ApprovalProfile, ElectionParams, RankingProfile
from approval_gsp.errors import ParameterError, ParseError


class TestCore(unittest.TestCase):
    """
    Unit Tests for core module
    """

    def test_bitstrings(self):
        """Alternative 0 is the leftmost character"""
        self.assertEqual(core.from_bitstring('101'), 0b101)
        self.assertEqual(core.to_bitstring(0b001, 3), '100')
        self.assertEqual(core.members(core.from_bitstring('0110')), (1, 2))

        with self.assertRaises(ParseError):
            core.from_bitstring('1021')
        with self.assertRaises(ParseError):
            core.from_bitstring('10', 3)

    def test_hamming_accepts_masks_and_sets(self):
        self.assertEqual(core.hamming({0, 1}, {1, 2}), 2)
        self.assertEqual(core.hamming(0b011, 0b110), 2)
        self.assertEqual(core.hamming(set(), {0, 1, 2}), 3)
        self.assertEqual(core.hamming(0b101, 0b101), 0)

    def test_hamming_is_a_metric(self):
        for m in range(1, 6):
            masks = range(1 << m)
            for q, t in itertools.product(masks, repeat=2):
                naive = sum(1 for i in range(m) if (q >> i) & 1 != (t >> i) & 1)
                self.assertEqual(core.hamming(q, t), naive)
                self.assertEqual(core.hamming(q, t), core.hamming(t, q))
                self.assertEqual(core.hamming(q, t) == 0, q == t)
        for q, t, u in itertools.product(range(32), repeat=3):
            self.assertLessEqual(core.hamming(q, u), core.hamming(q, t) + core.hamming(t, u))

    def test_params_validation(self):
        with self.assertRaises(ParameterError):
            ElectionParams(3, 4, 1)
        with self.assertRaises(ParameterError):
            ElectionParams(3, 0, 1)
        with self.assertRaises(ParameterError):
            ElectionParams(3, 1, 0)
        self.assertEqual(ElectionParams(4, 2, 3).full_mask, 0b1111)

    def test_committees_are_k_subsets_in_canonical_order(self):
        found = core.committees(4, 2)
        self.assertEqual(len(found), 6)
        self.assertEqual([core.members(c) for c in found],
                         [c for c in itertools.combinations(range(4), 2)])
        self.assertEqual(core.committee_count(ElectionParams(4, 2)), 6)

    def test_committee_counts(self):
        for m in range(1, 9):
            for k in range(1, m + 1):
                found = core.enumerate_committees(ElectionParams(m, k))
                self.assertEqual(len(found), math.comb(m, k))
                self.assertEqual(len(set(found)), len(found))
                self.assertTrue(all(core.popcount(c) == k for c in found))

    def test_ballot_restrictions(self):
        self.assertEqual(len(core.ballot_space(3, 1, 'all')), 8)
        self.assertEqual(len(core.ballot_space(3, 1, 'nonempty')), 7)
        self.assertEqual(len(core.ballot_space(3, 1, 'proper')), 6)
        self.assertEqual(len(core.ballot_space(3, 1, 'feasible')), 4)
        self.assertEqual(len(core.ballot_space(4, 2, 'feasible')), 11)

        with self.assertRaises(ParameterError):
            core.ballot_space(3, 1, 'odd')

    def test_profile_validation(self):
        params = ElectionParams(3, 1, 2)
        with self.assertRaises(ParameterError):
            ApprovalProfile(params, (0b001,))
        with self.assertRaises(ParameterError):
            ApprovalProfile(params, (0b001, 0b1000))
        with self.assertRaises(ParameterError):
            RankingProfile(core.ranking_params(3, 1), ((0, 0, 1),))

    def test_deviate_replaces_only_listed_agents(self):
        profile = ApprovalProfile(ElectionParams(3, 1, 3), (0b001, 0b010, 0b100))
        deviated = profile.deviate({1: 0b111})
        self.assertEqual(deviated.ballots, (0b001, 0b111, 0b100))
        self.assertEqual(profile.ballots, (0b001, 0b010, 0b100))

    def test_profile_index_roundtrip(self):
        params = ElectionParams(2, 1, 3)
        space = core.enumerate_ballot_space(params)
        positions = {b: i for i, b in enumerate(space)}
        profiles = list(core.enumerate_profiles(params))
        self.assertEqual(len(profiles), core.profile_count(params))
        for index, profile in enumerate(profiles):
            self.assertEqual(core.profile_at(index, space, params.n), profile)
            self.assertEqual(core.index_of(profile, positions), index)

    def test_ranking_enumeration(self):
        params = core.ranking_params(3, 2)
        self.assertEqual(core.ranking_profile_count(params), 36)
        self.assertEqual(len(list(core.enumerate_ranking_profiles(params))), 36)
        self.assertEqual(core.position((2, 0, 1), 2), 0)
        self.assertEqual(core.position((2, 0, 1), 1), 2)
