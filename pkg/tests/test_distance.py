import random
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracesim.cooccur import build_cooccurrence
from tracesim.corpus import RoleLabel, TraceItem, Vocabulary
from tracesim.distance import (DistanceSpec, Metric, apply_time_decay,
                               cosine_distance, edit_distance, pairwise_matrix,
                               read_matrix_binary, sed_ed_normalized,
                               sed_max_normalized, semantic_edit_distance,
                               time_sensitive, write_matrix_binary,
                               write_matrix_csv)
from oracle import (exhaustive_sed, random_sim_table, table_sim,
                    textbook_levenshtein)

DAY = 86400


def stipulated_sim(x, y):
    if x == y:
        return 1.0
    if {x, y} == {"like", "love"}:
        return 0.8
    return 0.0


class TestOracleItself:
    def test_script_counts_match_delannoy(self):
        # the number of monotone edit scripts between lengths n and m is the
        # Delannoy number D(n, m); recurrence D(n,m) = D(n-1,m) + D(n,m-1) + D(n-1,m-1)
        from oracle import enumerate_scripts
        delannoy = [[1] * 5 for _ in range(5)]
        for n in range(1, 5):
            for m in range(1, 5):
                delannoy[n][m] = (delannoy[n - 1][m] + delannoy[n][m - 1]
                                  + delannoy[n - 1][m - 1])
        for n in range(5):
            for m in range(5):
                scripts = list(enumerate_scripts(n, m))
                assert len(scripts) == delannoy[n][m]
                assert len(set(scripts)) == len(scripts)  # no duplicates


class TestEditDistance:
    def test_paper_worked_example(self):
        assert edit_distance("i like music".split(), "i love music".split()) == 1

    def test_identity(self):
        assert edit_distance(["a", "b"], ["a", "b"]) == 0

    def test_empty_base_case(self):
        assert edit_distance([], ["x", "y", "z"]) == 3
        assert edit_distance(["x"], []) == 1
        assert edit_distance([], []) == 0

    def test_against_textbook(self):
        rng = random.Random(11)
        for _ in range(300):
            a = [rng.randrange(5) for _ in range(rng.randint(0, 7))]
            b = [rng.randrange(5) for _ in range(rng.randint(0, 7))]
            assert edit_distance(a, b) == textbook_levenshtein(a, b)


class TestSemanticEditDistance:
    def test_single_substitution_cost(self):
        got = semantic_edit_distance(["i", "like", "music"],
                                     ["i", "love", "music"], stipulated_sim)
        assert got == pytest.approx(0.2, abs=1e-12)

    def test_identity_zero(self):
        seq = ["a", "b", "c"]
        assert semantic_edit_distance(seq, seq, stipulated_sim) == 0.0

    def test_first_position_unit_cost(self):
        assert semantic_edit_distance([], ["x"], stipulated_sim) == 1.0
        assert semantic_edit_distance(["x"], [], stipulated_sim) == 1.0

    def test_matches_exhaustive_oracle(self):
        rng = random.Random(23)
        for trial in range(20):
            table = random_sim_table(5, rng)
            sim = table_sim(table)
            for _ in range(25):
                a = [rng.randrange(5) for _ in range(rng.randint(0, 4))]
                b = [rng.randrange(5) for _ in range(rng.randint(0, 4))]
                dp = semantic_edit_distance(a, b, sim)
                brute = exhaustive_sed(a, b, sim)
                assert dp == pytest.approx(brute, abs=1e-12), (a, b, trial)

    def test_cheaper_than_forced_match(self):
        # aligning the equal trailing tokens is not forced: substituting x by z
        # and deleting the repeat-context z is cheaper when sim(x, z) is high
        sim = table_sim({(0, 0): 1.0, (1, 1): 1.0, (0, 1): 0.9, (1, 0): 0.9})
        got = semantic_edit_distance([0, 1], [1], sim)
        assert got == pytest.approx(0.2, abs=1e-12)
        assert got < 1.0  # the forced-match reading would give 1.0

    @given(st.lists(st.integers(0, 4), max_size=5),
           st.lists(st.integers(0, 4), max_size=5),
           st.integers(0, 10_000))
    @settings(max_examples=150, deadline=None)
    def test_symmetry_and_bounds(self, a, b, seed):
        table = random_sim_table(5, random.Random(seed))
        sim = table_sim(table)
        sed_ab = semantic_edit_distance(a, b, sim)
        sed_ba = semantic_edit_distance(b, a, sim)
        ed = edit_distance(a, b)
        assert sed_ab == pytest.approx(sed_ba, abs=1e-9)
        assert -1e-12 <= sed_ab <= ed + 1e-12
        assert ed <= max(len(a), len(b))

    def test_degenerate_sim_equals_ed(self):
        # identity-only sim turns every op cost unit for repeat-free sequences
        sim = lambda x, y: 1.0 if x == y else 0.0
        rng = random.Random(31)
        for _ in range(200):
            a = _no_adjacent_repeat(rng, 6)
            b = _no_adjacent_repeat(rng, 6)
            assert semantic_edit_distance(a, b, sim) == float(edit_distance(a, b))

    def test_repeated_token_deletion_is_free(self):
        sim = lambda x, y: 1.0 if x == y else 0.0
        # deleting the second of two equal adjacent tokens costs nothing
        assert semantic_edit_distance([0, 0], [], sim) == 1.0
        assert edit_distance([0, 0], []) == 2


def _no_adjacent_repeat(rng, max_len):
    out = []
    for _ in range(rng.randint(0, max_len)):
        choices = [t for t in range(5) if not out or t != out[-1]]
        out.append(rng.choice(choices))
    return out


class TestNormalizedVariants:
    def test_max_identical(self):
        assert sed_max_normalized(["a", "b"], ["a", "b"], stipulated_sim) == 0.0

    def test_max_empty_vs_one(self):
        assert sed_max_normalized([], ["x"], stipulated_sim) == 1.0

    def test_max_worked_example(self):
        got = sed_max_normalized(["i", "like", "music"], ["i", "love", "music"],
                                 stipulated_sim)
        assert got == pytest.approx(0.2 / 3, abs=1e-12)

    def test_max_both_empty(self):
        assert sed_max_normalized([], [], stipulated_sim) == 0.0

    def test_ratio_identical(self):
        assert sed_ed_normalized(["a"], ["a"], stipulated_sim) == 0.0

    def test_ratio_worked_example(self):
        got = sed_ed_normalized(["i", "like", "music"], ["i", "love", "music"],
                                stipulated_sim)
        assert got == pytest.approx(0.2, abs=1e-12)

    @given(st.lists(st.integers(0, 4), max_size=5),
           st.lists(st.integers(0, 4), max_size=5),
           st.integers(0, 10_000))
    @settings(max_examples=100, deadline=None)
    def test_both_in_unit_interval(self, a, b, seed):
        sim = table_sim(random_sim_table(5, random.Random(seed)))
        assert -1e-12 <= sed_max_normalized(a, b, sim) <= 1 + 1e-12
        assert -1e-12 <= sed_ed_normalized(a, b, sim) <= 1 + 1e-12


class TestCosineDistance:
    def test_identity(self):
        assert cosine_distance(["a", "a"], ["a", "a"]) == 0.0

    def test_disjoint(self):
        assert cosine_distance(["a"], ["b"]) == 1.0

    def test_hand_computed(self):
        # counts (2,1) vs (1,1): cos = 3/sqrt(10)
        got = cosine_distance(["a", "a", "b"], ["a", "b"])
        assert got == pytest.approx(1 - 3 / np.sqrt(10), abs=1e-12)

    def test_empty_convention(self):
        assert cosine_distance([], ["a"]) == 1.0
        assert cosine_distance([], []) == 1.0

    def test_order_blind(self):
        assert cosine_distance(["a", "b", "c"], ["c", "b", "a"]) == 0.0


class TestTimeSensitive:
    def test_zero_gap(self):
        assert time_sensitive(2.0, 1000, 1000, 0.5) == 2.0

    def test_e_folding(self):
        got = time_sensitive(1.0, 0, 10 * DAY, 0.1)
        assert got == pytest.approx(np.e, rel=1e-12)

    def test_zero_base(self):
        assert time_sensitive(0.0, 0, 10**9, 5.0) == 0.0

    def test_theta_zero_reduces(self):
        assert time_sensitive(3.25, 0, 10**9, 0.0) == 3.25

    def test_overflow_saturates_finite(self):
        got = time_sensitive(1.0, 0, 10**7 * DAY, 1.0)
        assert got == sys.float_info.max
        assert np.isfinite(got)

    def test_negative_theta_rejected(self):
        with pytest.raises(ValueError):
            time_sensitive(1.0, 0, 1, -0.1)

    def test_strictly_increasing_in_gap(self):
        values = [time_sensitive(1.5, 0, d * DAY, 0.05) for d in range(0, 200, 10)]
        assert all(x < y for x, y in zip(values, values[1:]))


def toy_corpus():
    vocab = Vocabulary([f"w{i}" for i in range(6)], [2] * 6, 1)
    rng = random.Random(5)
    items = []
    for i in range(9):
        toks = tuple(rng.randrange(6) for _ in range(rng.randint(1, 5)))
        items.append(TraceItem(i, f"acc{i % 3}", i * 7 * DAY, toks,
                               RoleLabel(i % 3)))
    sim = build_cooccurrence(items, vocab)
    return items, sim


class TestPairwiseMatrix:
    def test_zero_diagonal_under_ed(self):
        items, _ = toy_corpus()
        m = pairwise_matrix(items, items, DistanceSpec(base=Metric.ED))
        assert np.array_equal(np.diag(m), np.zeros(len(items)))

    def test_symmetric_when_theta_zero(self):
        items, sim = toy_corpus()
        for base in Metric:
            spec = DistanceSpec(base=base, sim_source=sim)
            m = pairwise_matrix(items, items, spec)
            assert np.allclose(m, m.T, atol=1e-9), base

    def test_sed_matches_scalar_calls(self):
        items, sim = toy_corpus()
        spec = DistanceSpec(base=Metric.SED, sim_source=sim)
        m = pairwise_matrix(items[:3], items[3:6], spec)
        for p in range(3):
            for q in range(3):
                expected = semantic_edit_distance(
                    items[p].tokens, items[3 + q].tokens, sim.similarity)
                assert m[p, q] == pytest.approx(expected, abs=1e-12)

    def test_all_bases_match_scalar_calls(self):
        items, sim = toy_corpus()
        scalar = {
            Metric.ED: lambda a, b: float(edit_distance(a, b)),
            Metric.SED: lambda a, b: semantic_edit_distance(a, b, sim.similarity),
            Metric.SED_MAX: lambda a, b: sed_max_normalized(a, b, sim.similarity),
            Metric.SED_RATIO: lambda a, b: sed_ed_normalized(a, b, sim.similarity),
            Metric.COSINE: cosine_distance,
        }
        for base, fn in scalar.items():
            spec = DistanceSpec(base=base, sim_source=sim)
            m = pairwise_matrix(items, items, spec)
            for p in range(len(items)):
                for q in range(len(items)):
                    assert m[p, q] == pytest.approx(
                        fn(items[p].tokens, items[q].tokens), abs=1e-12), base

    def test_theta_matches_scalar_wrapper(self):
        items, sim = toy_corpus()
        base_spec = DistanceSpec(base=Metric.SED, sim_source=sim)
        spec = DistanceSpec(base=Metric.SED, theta=0.05, sim_source=sim)
        base_m = pairwise_matrix(items, items, base_spec)
        m = pairwise_matrix(items, items, spec)
        for p in range(len(items)):
            for q in range(len(items)):
                expected = time_sensitive(base_m[p, q], items[p].timestamp,
                                          items[q].timestamp, 0.05)
                assert m[p, q] == pytest.approx(expected, rel=1e-12)

    def test_empty_sequences_allowed(self):
        items, sim = toy_corpus()
        empty = TraceItem(99, "acc9", 0, (), RoleLabel.LEFT_TROLL)
        spec = DistanceSpec(base=Metric.SED, sim_source=sim)
        m = pairwise_matrix([empty], [empty] + list(items[:2]), spec)
        assert m[0, 0] == 0.0
        assert m[0, 1] > 0

    def test_worker_count_does_not_change_output(self):
        items, sim = toy_corpus()
        spec = DistanceSpec(base=Metric.SED, theta=0.01, sim_source=sim)
        single = pairwise_matrix(items, items, spec, workers=1)
        multi = pairwise_matrix(items, items, spec, workers=3)
        assert np.array_equal(single, multi)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            DistanceSpec(base=Metric.SED)  # no similarity source
        with pytest.raises(ValueError):
            DistanceSpec(base=Metric.ED, theta=-1.0)

    def test_decay_kills_zero_times_inf(self):
        base = np.array([[0.0, 1.0]])
        ts_a = np.array([0])
        ts_b = np.array([0, 10**7 * DAY])
        out = apply_time_decay(base, ts_a, ts_b, 1.0)
        assert out[0, 0] == 0.0
        assert out[0, 1] == sys.float_info.max


class TestMatrixFiles:
    def test_binary_round_trip(self, tmp_path):
        items, sim = toy_corpus()
        m = pairwise_matrix(items, items, DistanceSpec(base=Metric.SED, sim_source=sim))
        write_matrix_binary(m, tmp_path / "m.bin")
        assert np.array_equal(read_matrix_binary(tmp_path / "m.bin"), m)

    def test_csv_has_nine_significant_digits(self, tmp_path):
        m = np.array([[0.123456789123, 1e-12], [3.0, 0.0]])
        write_matrix_csv(m, [10, 11], [20, 21], tmp_path / "m.csv")
        lines = (tmp_path / "m.csv").read_text().splitlines()
        assert lines[0] == "item_id,20,21"
        assert lines[1].startswith("10,0.123456789,")
        assert lines[2] == "11,3,0"
