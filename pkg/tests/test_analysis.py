import json
import math
import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from trident.analysis import (CycleReport, birthday_expected, bitplane_periods,
                              coefficient_period, coefficient_period_closed, distinct_count,
                              find_cycle, lcg_recover, map_cycle, measure_periods,
                              random_small_key, return_map, sample_params, sample_period,
                              sawtooth_segments, trident_cycle, trident_period_study)
from trident.coremap import MapParams, MapState, classify_params, keystream, step
from trident.errors import InsufficientData, NonInvertibleDifference
from trident.generator import TridentKey, TridentState, trident_step


def naive_cycle(step_fn, initial):
    seen = {}
    state, t = initial, 0
    while state not in seen:
        seen[state] = t
        state = step_fn(state)
        t += 1
    return seen[state], t - seen[state]


class TestFindCycle:
    @settings(max_examples=200)
    @given(st.lists(st.integers(0, 63), min_size=1, max_size=64), st.integers(0, 63))
    def test_matches_store_all_on_random_mappings(self, table, start):
        f = lambda v: table[v % len(table)]
        start %= len(table)
        rep = find_cycle(f, start)
        assert (rep.tail, rep.period) == naive_cycle(f, start)

    def test_identity_has_period_one(self):
        assert find_cycle(lambda v: v, 7) == CycleReport(0, 1)

    def test_cap_reports_in_band(self):
        rep = find_cycle(lambda v: v + 1, 0, cap=1000)
        assert rep.capped and rep.period is None

    def test_bad_cap(self):
        with pytest.raises(ValueError):
            find_cycle(lambda v: v, 0, cap=0)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(4, 7), st.integers(0, 2 ** 32))
    def test_compiled_map_cycle_matches_naive(self, n, seed):
        rng = random.Random(seed)
        w = lambda: rng.getrandbits(n)
        p = MapParams(n=n, s=rng.randint(1, n), a0=w(), delta_a=w(), c0=w(), delta_c=w(), x0=w())

        def f(xac):
            nxt = step(MapState(*xac), p)[0]
            return nxt.x, nxt.a, nxt.c

        rep = map_cycle(p)
        assert (rep.tail, rep.period) == naive_cycle(f, (p.x0, p.a0, p.c0))

    @settings(max_examples=25, deadline=None)
    @given(st.just(4), st.integers(0, 2 ** 32))
    def test_compiled_trident_cycle_matches_naive(self, n, seed):
        key = random_small_key(random.Random(seed), n)
        rep = trident_cycle(key)
        f = lambda w: trident_step(TridentState(*w), key)[0].words()
        assert (rep.tail, rep.period) == naive_cycle(f, TridentState.initial(key).words())

    def test_map_cycle_capped(self):
        p = sample_params(random.Random(0), 16, "full")
        assert map_cycle(p, cap=100).capped


class TestPeriods:
    def test_5x_plus_1_is_maximal(self):
        assert map_cycle(MapParams.lcg(8, 5, 1)).period == 256

    def test_even_multiplier_is_short(self):
        rep = map_cycle(MapParams.lcg(8, 2, 2, x0=1))
        assert rep.period < 256

    @pytest.mark.parametrize("delta, expected", [(4, 64), (12, 64), (8, 32), (0, 1), (1, 256)])
    def test_coefficient_period(self, delta, expected):
        assert coefficient_period(5, delta, 8).period == expected
        assert coefficient_period_closed(delta, 8) == expected

    @pytest.mark.parametrize("family", ["lcg", "dyn", "full"])
    def test_sampled_params_are_in_class(self, family):
        rng = random.Random(1)
        for _ in range(200):
            pc = classify_params(sample_params(rng, 12, family))
            assert pc.lcg_maximal or family != "lcg"
            assert pc.dyn_maximal or family == "lcg"
            assert pc.full_recommended or family != "full"

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            sample_params(random.Random(0), 8, "bogus")

    def test_dyn_is_256_at_n8(self):
        stats = measure_periods("dyn", 8, 30, seed=3)
        assert stats.periods == [256] * 30 and stats.s == 8

    def test_full_map_periods_are_long(self):
        stats = measure_periods("full", 8, 20, s=4, seed=5)
        assert stats.median >= 2 ** 12
        assert stats.max <= 2 ** 22 and stats.capped_fraction == 0

    def test_measure_periods_reproducible(self):
        a = measure_periods("full", 6, 10, seed=9)
        b = measure_periods("full", 6, 10, seed=9)
        assert a.periods == b.periods

    def test_sample_period_divides_state_period(self):
        rng = random.Random(2)
        for _ in range(20):
            p = sample_params(rng, 6, "full")
            rep = map_cycle(p)
            sp = sample_period(p, rep)
            assert rep.period % sp == 0

    def test_sample_period_capped(self):
        assert sample_period(MapParams.lcg(8, 5, 1), CycleReport(None, None, True)) is None


class TestReturnMap:
    def test_5x_plus_1_pairs_on_sawtooth(self):
        dump = return_map(MapParams.lcg(16, 5, 1), 1 << 16)
        seg = sawtooth_segments(dump, 5, 1, 16)
        assert dump.count == (1 << 16) - 1
        assert set(seg.tolist()) == {0, 1, 2, 3, 4}

    def test_chaining(self):
        p = sample_params(random.Random(4), 16, "full")
        pairs = return_map(p, 500).pairs
        assert pairs[0, 0] == p.x0
        assert np.array_equal(pairs[1:, 0], pairs[:-1, 1])

    def test_perturbed_map_leaves_sawtooth(self):
        p = MapParams(n=16, s=8, a0=5, delta_a=0, c0=1, delta_c=0)
        seg = sawtooth_segments(return_map(p, 2000), 5, 1, 16)
        assert (seg == -1).mean() > 0.9

    def test_minimum_points(self):
        assert return_map(MapParams.lcg(16, 5, 1), 2).count == 1
        with pytest.raises(ValueError):
            return_map(MapParams.lcg(16, 5, 1), 1)

    def test_csv(self):
        dump = return_map(MapParams.lcg(16, 5, 1), 4)
        assert dump.to_csv() == "0,1\n1,6\n6,31\n"
        assert dump.to_csv(header=True).startswith("x_prev,x_curr\n")


class TestBitplanes:
    def test_5x_plus_1_low_bits(self):
        periods = bitplane_periods(keystream(MapParams.lcg(16, 5, 1), 1 << 12), 16)
        assert periods[:2] == [2, 4]

    def test_constant_sequence(self):
        assert bitplane_periods([0] * 10, 4) == [1, 1, 1, 1]

    def test_too_short(self):
        with pytest.raises(InsufficientData):
            bitplane_periods([1], 4)

    @pytest.mark.parametrize("n", [6, 9, 12])
    def test_lcg_planes_divide_power_of_two(self, n):
        rng = random.Random(n)
        for _ in range(5):
            p = sample_params(rng, n, "lcg")
            periods = bitplane_periods(keystream(p, 4 << n), n)
            for k, per in enumerate(periods):
                assert (1 << (k + 1)) % per == 0

    def test_perturbation_breaks_low_bit_period(self):
        p = MapParams(n=16, s=8, a0=5, delta_a=0, c0=1, delta_c=0)
        per = bitplane_periods(keystream(p, 1 << 12), 16)[0]
        assert per is None or per > 4


class TestBirthday:
    @pytest.mark.parametrize("m, N", [(2 ** 16, 2 ** 18), (365, 23), (10, 3), (2 ** 32, 1000)])
    def test_against_mpmath(self, m, N):
        mpmath.mp.dps = 50
        exact = m * (1 - (1 - mpmath.mpf(1) / m) ** N)
        assert birthday_expected(m, N) == pytest.approx(float(exact), rel=1e-12)

    def test_reference_scale_value(self):
        assert round(birthday_expected(2 ** 16, 2 ** 18)) == 64336

    def test_edges(self):
        assert birthday_expected(100, 0) == 0
        assert birthday_expected(1, 5) == 1
        assert birthday_expected(100, 1) == pytest.approx(1)

    @given(st.integers(1, 2 ** 20), st.integers(0, 2 ** 20))
    def test_monotone_and_bounded(self, m, N):
        e0, e1 = birthday_expected(m, N), birthday_expected(m, N + 1)
        assert e0 <= e1 <= m * (1 + 1e-12)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            birthday_expected(0, 5)

    @pytest.mark.parametrize("seq, expected", [([1, 1, 1], 1), (range(256), 256), ([], 0)])
    def test_distinct_count(self, seq, expected):
        assert distinct_count(list(seq)) == expected


class TestLcgRecover:
    def test_5x_plus_1_orbit(self):
        r = lcg_recover([0, 1, 6, 31], 1 << 16)
        assert (r.a, r.c, r.consistent) == (5, 1, True)

    def test_identity_multiplier(self):
        r = lcg_recover([0, 1, 2], 1 << 16)
        assert (r.a, r.c, r.consistent) == (1, 1, True)

    def test_even_difference(self):
        with pytest.raises(NonInvertibleDifference):
            lcg_recover([0, 2, 4], 1 << 16)

    def test_too_few(self):
        with pytest.raises(InsufficientData):
            lcg_recover([0, 1], 1 << 16)

    def test_inconsistent_window(self):
        assert not lcg_recover([0, 1, 6, 30], 1 << 16).consistent

    def test_json_fields(self):
        d = lcg_recover([0, 1, 6, 31], 1 << 16).to_dict()
        assert json.loads(json.dumps(d)) == {"recovered_a": 5, "recovered_c": 1, "consistent": True}

    def test_exhaustive_n8(self):
        m = 256
        for a in range(1, m, 4):
            for c in range(1, m, 2):
                x0 = (a * 7 + c) % m
                seq = [x0] + keystream(MapParams.lcg(8, a, c, x0), 3).tolist()
                r = lcg_recover(seq, m)
                assert (r.a, r.c, r.consistent) == (a, c, True)


class TestTridentStudy:
    @pytest.mark.parametrize("seed", range(5))
    def test_n4_lower_bound(self, seed):
        rep = trident_period_study(random_small_key(random.Random(seed), 4))
        assert rep.joint.period >= 4

    @pytest.mark.parametrize("seed", range(5))
    def test_n5_joint_at_least_components(self, seed):
        rep = trident_period_study(random_small_key(random.Random(seed), 5))
        assert rep.joint_ge_max_component
        assert rep.ratio is not None and rep.lcm is not None

    def test_uncoupled_equals_product_system(self):
        for seed in range(5):
            k = random_small_key(random.Random(seed), 5)
            k = TridentKey(**{f: getattr(k, f) for f in k.__dataclass_fields__
                              if f != "require_distinct"} | {"s": 5}, require_distinct=False)
            rep = trident_period_study(k)
            # the hidden y map does not feed back when s = n, but it is part of the state
            assert rep.joint.period == rep.bare_lcm

    def test_report_fields(self):
        d = trident_period_study(random_small_key(random.Random(0), 4)).to_dict()
        for name in ("tail", "period", "capped", "components", "lcm", "ratio"):
            assert name in d
        json.dumps(d)
