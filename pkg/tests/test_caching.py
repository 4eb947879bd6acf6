import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import cachemod as cm
from cachemod.caching import (
    SubfileMap,
    all_subsets,
    largest_remainder,
    proposed_piece_len,
    quantize_expected_map,
)
from conftest import subfile_map


class TestLibrary:
    def test_rejects_bad_fractions(self):
        with pytest.raises(cm.ConfigurationError):
            cm.Library((0.5, 0.6), 10)
        with pytest.raises(cm.ConfigurationError):
            cm.Library((1.0,), 0)
        with pytest.raises(cm.ConfigurationError):
            cm.Library((0.0, 1.0), 10)

    def test_file_bits_partition_total(self):
        lib = cm.Library((1 / 3, 1 / 3, 1 / 3), 100)
        assert sum(lib.file_bits) == 100
        assert sorted(lib.file_bits) == [33, 33, 34]


class TestCacheProfile:
    def test_requires_sorted(self):
        with pytest.raises(cm.ConfigurationError):
            cm.CacheProfile((0.5, 0.2))

    def test_requires_unit_interval(self):
        with pytest.raises(cm.ConfigurationError):
            cm.CacheProfile((-0.1, 0.5))
        with pytest.raises(cm.ConfigurationError):
            cm.CacheProfile((0.5, 1.1))


class TestExpectedSubfileLengths:
    def test_hand_evaluated_pair(self):
        # F=(0.6,0.4), B=15, mu=(1/3,1/3): file 1 cached only by user 2 covers
        # 9 * (1/3) * (2/3) = 2 bits on average
        lib = cm.Library((0.6, 0.4), 15)
        caches = cm.CacheProfile((1 / 3, 1 / 3))
        em = cm.expected_subfile_lengths(lib, caches)
        assert em.length(1, frozenset({2})) == pytest.approx(2.0, rel=1e-12)
        assert em.kind == "expected"

    def test_no_caching(self):
        lib = cm.Library((0.6, 0.4), 15)
        em = cm.expected_subfile_lengths(lib, cm.CacheProfile((0.0, 0.0)))
        for i, frac in ((1, 0.6), (2, 0.4)):
            assert em.length(i, frozenset()) == pytest.approx(frac * 15)
            for subset in all_subsets(2):
                assert em.length(i, subset) == 0.0

    def test_full_caching(self):
        lib = cm.Library((0.6, 0.4), 15)
        em = cm.expected_subfile_lengths(lib, cm.CacheProfile((1.0, 1.0)))
        assert em.length(1, frozenset({1, 2})) == pytest.approx(9.0)
        assert em.length(1, frozenset({1})) == 0.0
        assert em.length(1, frozenset()) == 0.0

    @given(
        mus=st.lists(st.floats(0, 1), min_size=1, max_size=4),
        fracs=st.lists(st.floats(0.05, 1), min_size=1, max_size=4),
        b=st.integers(1, 10**6),
    )
    def test_per_file_totals(self, mus, fracs, b):
        total = sum(fracs)
        lib = cm.Library(tuple(f / total for f in fracs), b)
        caches = cm.CacheProfile(tuple(sorted(mus)))
        em = cm.expected_subfile_lengths(lib, caches)
        for i, frac in enumerate(lib.file_fractions, start=1):
            assert em.file_total(i) == pytest.approx(frac * b, rel=1e-9)


class TestSamplePlacement:
    def test_deterministic(self):
        lib = cm.Library((0.6, 0.4), 500)
        caches = cm.CacheProfile((0.3, 0.7))
        a = cm.sample_placement(lib, caches, seed=9)
        b = cm.sample_placement(lib, caches, seed=9)
        for fa, fb in zip(a.bit_values, b.bit_values):
            assert np.array_equal(fa, fb)
        for ma, mb in zip(a.cached_by, b.cached_by):
            assert np.array_equal(ma, mb)

    def test_full_cache_user(self):
        lib = cm.Library((0.6, 0.4), 200)
        pl = cm.sample_placement(lib, cm.CacheProfile((0.2, 1.0)), seed=1)
        for mask in pl.cached_by:
            assert mask[1].all()

    def test_enumeration_guard(self):
        lib = cm.Library((1.0,), 10**7 + 1)
        with pytest.raises(cm.ConfigurationError):
            cm.sample_placement(lib, cm.CacheProfile((0.5,)), seed=0)

    def test_binomial_concentration(self):
        # realized |W_{1,{2}}| ~ Binom(60000, 2/9); one seed stays within 3 sigma
        lib = cm.Library((0.6, 0.4), 10**5)
        caches = cm.CacheProfile((1 / 3, 1 / 3))
        pl = cm.sample_placement(lib, caches, seed=3)
        rm = cm.realized_subfile_map(pl)
        n, p = 60000, (1 / 3) * (2 / 3)
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(rm.length(1, frozenset({2})) - n * p) <= 3 * sigma


class TestRealizedSubfileMap:
    def test_pair_fixture_lengths(self, two_user_pair_placement):
        rm = cm.realized_subfile_map(two_user_pair_placement)
        assert rm.length(1, frozenset({2})) == 3
        assert rm.length(2, frozenset({1})) == 2
        assert rm.length(1, frozenset()) == 3
        assert rm.length(1, frozenset({1, 2})) == 0

    def test_empty_caches(self):
        lib = cm.Library((0.6, 0.4), 50)
        pl = cm.sample_placement(lib, cm.CacheProfile((0.0, 0.0)), seed=0)
        rm = cm.realized_subfile_map(pl)
        assert rm.length(1, frozenset()) == 30
        assert rm.length(2, frozenset()) == 20

    @given(seed=st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_partition_property(self, seed):
        lib = cm.Library((0.35, 0.65), 400)
        caches = cm.CacheProfile((0.25, 0.5))
        rm = cm.realized_subfile_map(cm.sample_placement(lib, caches, seed))
        for i, nbits in enumerate(lib.file_bits, start=1):
            assert rm.file_total(i) == nbits


class TestQuantization:
    def test_largest_remainder(self):
        assert largest_remainder([1.4, 1.4, 1.2], 4) == [2, 1, 1]
        assert largest_remainder([2.0, 2.0], 4) == [2, 2]

    def test_conserves_file_totals(self):
        lib = cm.Library((1 / 3, 2 / 3), 100)
        caches = cm.CacheProfile((0.21, 0.47))
        em = cm.expected_subfile_lengths(lib, caches)
        qm = quantize_expected_map(em, lib)
        assert qm.is_integral()
        for i, nbits in enumerate(lib.file_bits, start=1):
            assert qm.file_total(i) == nbits


class TestBuildDeliveryPlan:
    def test_pair_message_single_block(self, two_user_pair_placement, pair_demands):
        rm = cm.realized_subfile_map(two_user_pair_placement)
        plan = cm.build_delivery_plan(rm, pair_demands, cm.PROPOSED, 3)
        sched = plan.per_subset[frozenset({1, 2})]
        assert sched.n_blocks == 1
        block = plan.block(frozenset({1, 2}), 1)
        assert block.per_user_piece_len == {1: 3, 2: 2}

    def test_three_to_one_split_proposed(self):
        # 9-bit vs 3-bit subfiles at 3 bits/symbol: 3 blocks, pieces 3 and 1
        smap = subfile_map(2, 2, {(1, (2,)): 9, (2, (1,)): 3})
        plan = cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), cm.PROPOSED, 3)
        sched = plan.per_subset[frozenset({1, 2})]
        assert sched.n_blocks == 3
        assert sched.n_useful == {1: 3, 2: 3}
        for i in range(1, 4):
            assert plan.block(frozenset({1, 2}), i).per_user_piece_len == {1: 3, 2: 1}

    def test_three_to_one_split_zero_padding(self):
        smap = subfile_map(2, 2, {(1, (2,)): 9, (2, (1,)): 3})
        plan = cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), cm.ZERO_PADDING, 3)
        sched = plan.per_subset[frozenset({1, 2})]
        assert sched.n_blocks == 3
        assert sched.n_useful == {1: 3, 2: 1}
        assert plan.block(frozenset({1, 2}), 1).per_user_piece_len == {1: 3, 2: 3}
        assert plan.block(frozenset({1, 2}), 2).per_user_piece_len == {1: 3, 2: 0}

    def test_duplicate_demands_rejected(self):
        with pytest.raises(cm.ConfigurationError):
            cm.DemandVector((1, 1))

    def test_bad_symbol_width(self):
        smap = subfile_map(2, 2, {(1, (2,)): 4})
        with pytest.raises(cm.ConfigurationError):
            cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), cm.PROPOSED, 0)

    def test_empty_plan_is_not_an_error(self):
        smap = subfile_map(2, 2, {})
        plan = cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), cm.PROPOSED, 3)
        assert plan.blocks == ()
        assert plan.per_subset == {}

    def test_load_matches_message_bits(self, two_user_pair_placement, pair_demands):
        rm = cm.realized_subfile_map(two_user_pair_placement)
        plan = cm.build_delivery_plan(rm, pair_demands, cm.PROPOSED, 3)
        # messages: W_{1,empty}=3, W_{2,empty}=2, pair max(3,2)=3 -> 8/15
        assert plan.load == pytest.approx(8 / 15)

    def test_load_equal_across_schemes(self):
        smap = subfile_map(2, 2, {(1, (2,)): 7, (2, (1,)): 3, (1, ()): 5, (2, ()): 2})
        loads = [
            cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), s, 3).load
            for s in cm.SCHEMES
        ]
        assert loads[0] == loads[1]

    def test_quantizes_fractional_maps(self):
        lib = cm.Library((0.5, 0.5), 40)
        caches = cm.CacheProfile((0.3, 0.6))
        em = cm.expected_subfile_lengths(lib, caches)
        plan = cm.build_delivery_plan(em, cm.DemandVector((1, 2)), cm.PROPOSED, 2, lib)
        for sched in plan.per_subset.values():
            for v in sched.subfile_len.values():
                assert isinstance(v, int)

    @given(
        w1=st.integers(0, 40),
        w2=st.integers(0, 40),
        m=st.integers(1, 6),
        scheme=st.sampled_from(cm.SCHEMES),
    )
    def test_plan_conserves_subfile_bits(self, w1, w2, m, scheme):
        smap = subfile_map(2, 2, {(1, (2,)): w1, (2, (1,)): w2})
        plan = cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), scheme, m)
        subset = frozenset({1, 2})
        if max(w1, w2) == 0:
            assert subset not in plan.per_subset
            return
        sched = plan.per_subset[subset]
        for user, w in ((1, w1), (2, w2)):
            pieces = [
                plan.block(subset, i).piece_len(user) for i in range(1, sched.n_blocks + 1)
            ]
            assert sum(pieces) == w
            assert all(0 <= x <= m for x in pieces)
            if scheme == cm.PROPOSED:
                assert max(pieces) - min(pieces) <= 1
                assert pieces == sorted(pieces, reverse=True)

    @given(w=st.integers(1, 40), m=st.integers(1, 6))
    def test_proposed_split_sizes(self, w, m):
        n = -(-w // m)
        sizes = [proposed_piece_len(w, n, i) for i in range(1, n + 1)]
        assert sum(sizes) == w
        assert max(sizes) <= m


class TestEncodeDecode:
    def test_pair_block_encoding(self, two_user_pair_placement, pair_demands):
        rm = cm.realized_subfile_map(two_user_pair_placement)
        plan = cm.build_delivery_plan(rm, pair_demands, cm.PROPOSED, 3)
        block = plan.block(frozenset({1, 2}), 1)
        label = cm.encode_block(block, {1: "010", 2: "10"})
        assert label.tolist() == [0, 0, 0]

    def test_single_piece_identity(self):
        smap = subfile_map(1, 1, {(1, ()): 3})
        plan = cm.build_delivery_plan(smap, cm.DemandVector((1,)), cm.PROPOSED, 3)
        block = plan.block(frozenset({1}), 1)
        assert cm.encode_block(block, {1: "101"}).tolist() == [1, 0, 1]

    def test_all_zero_pieces(self, two_user_pair_placement, pair_demands):
        rm = cm.realized_subfile_map(two_user_pair_placement)
        plan = cm.build_delivery_plan(rm, pair_demands, cm.PROPOSED, 3)
        block = plan.block(frozenset({1, 2}), 1)
        assert cm.encode_block(block, {1: "000", 2: "00"}).tolist() == [0, 0, 0]

    def test_piece_length_mismatch_rejected(self, two_user_pair_placement, pair_demands):
        rm = cm.realized_subfile_map(two_user_pair_placement)
        plan = cm.build_delivery_plan(rm, pair_demands, cm.PROPOSED, 3)
        block = plan.block(frozenset({1, 2}), 1)
        with pytest.raises(cm.ConfigurationError):
            cm.encode_block(block, {1: "0100", 2: "10"})

    def test_decode_recovers_piece(self, two_user_pair_placement, pair_demands):
        rm = cm.realized_subfile_map(two_user_pair_placement)
        plan = cm.build_delivery_plan(rm, pair_demands, cm.PROPOSED, 3)
        block = plan.block(frozenset({1, 2}), 1)
        piece = cm.decode_block("000", block, 2, {1: "010"})
        assert piece.tolist() == [1, 0]

    def test_decode_missing_piece(self, two_user_pair_placement, pair_demands):
        rm = cm.realized_subfile_map(two_user_pair_placement)
        plan = cm.build_delivery_plan(rm, pair_demands, cm.PROPOSED, 3)
        block = plan.block(frozenset({1, 2}), 1)
        with pytest.raises(cm.ConfigurationError):
            cm.decode_block("000", block, 2, {})

    @given(
        w1=st.integers(1, 30),
        w2=st.integers(1, 30),
        m=st.integers(1, 5),
        scheme=st.sampled_from(cm.SCHEMES),
        data=st.data(),
    )
    @settings(max_examples=200)
    def test_roundtrip(self, w1, w2, m, scheme, data):
        smap = subfile_map(2, 2, {(1, (2,)): w1, (2, (1,)): w2})
        plan = cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), scheme, m)
        subset = frozenset({1, 2})
        bits1 = np.array(data.draw(st.lists(st.integers(0, 1), min_size=w1, max_size=w1)), dtype=np.uint8)
        bits2 = np.array(data.draw(st.lists(st.integers(0, 1), min_size=w2, max_size=w2)), dtype=np.uint8)
        payload = {1: bits1, 2: bits2}
        taken = {1: 0, 2: 0}
        got = {1: [], 2: []}
        for i in range(1, plan.per_subset[subset].n_blocks + 1):
            block = plan.block(subset, i)
            pieces = {}
            for u in (1, 2):
                n = block.piece_len(u)
                pieces[u] = payload[u][taken[u] : taken[u] + n]
                taken[u] += n
            label = cm.encode_block(block, pieces)
            for u, other in ((1, 2), (2, 1)):
                out = cm.decode_block(label, block, u, {other: pieces[other]})
                got[u].extend(out.tolist())
        assert got[1] == bits1.tolist()
        assert got[2] == bits2.tolist()


class TestKnownBitMask:
    def test_pair_block_masks(self, two_user_pair_placement, pair_demands):
        rm = cm.realized_subfile_map(two_user_pair_placement)
        plan = cm.build_delivery_plan(rm, pair_demands, cm.PROPOSED, 3)
        assert cm.known_bit_mask(plan, {1, 2}, 1, 2) == (1, 0)
        assert cm.known_bit_mask(plan, {1, 2}, 1, 1) == (0, 0)

    def test_uneven_split_prefixes(self):
        smap = subfile_map(2, 2, {(1, (2,)): 9, (2, (1,)): 3})
        plan = cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), cm.PROPOSED, 3)
        for i in range(1, 4):
            assert cm.known_bit_mask(plan, {1, 2}, i, 2) == (2, 0)

    def test_zero_padding_suffix(self):
        smap = subfile_map(2, 2, {(1, (2,)): 6, (2, (1,)): 4})
        plan = cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), cm.ZERO_PADDING, 3)
        assert cm.known_bit_mask(plan, {1, 2}, 1, 2) == (0, 0)
        assert cm.known_bit_mask(plan, {1, 2}, 2, 2) == (0, 2)

    def test_useless_block_raises(self):
        smap = subfile_map(2, 2, {(1, (2,)): 9, (2, (1,)): 3})
        plan = cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), cm.ZERO_PADDING, 3)
        with pytest.raises(cm.UselessBlockError):
            cm.known_bit_mask(plan, {1, 2}, 2, 2)

    def test_divisible_lengths_dominate_zero_padding(self):
        # when the symbol width divides everything, the even split never knows
        # fewer bits than sequential fill on any useful block
        smap = subfile_map(2, 2, {(1, (2,)): 12, (2, (1,)): 6})
        pp = cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), cm.PROPOSED, 3)
        pz = cm.build_delivery_plan(smap, cm.DemandVector((1, 2)), cm.ZERO_PADDING, 3)
        subset = frozenset({1, 2})
        for u in (1, 2):
            for i in range(1, pz.per_subset[subset].n_useful[u] + 1):
                prop = cm.known_bit_mask(pp, subset, i, u)[0]
                zp = cm.known_bit_mask(pz, subset, i, u)[0]
                assert prop >= zp
