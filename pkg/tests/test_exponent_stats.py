"""Test analysis.exponent_stats and analysis.profile"""
import numpy as np
import pytest

from analysis.exponent_stats import (
    ExponentWindow, average_bits, check_unimodal, compute_histogram,
    coverage_for_average_bits, coverage_ratio_topk, entropy_bound_ratio,
    histogram_from_counts, is_top7_contiguous, select_shared_window, select_window,
    shannon_entropy, top_k_contiguous, top_share, topk_exponents, window_coverage,
)
from analysis.gaussian_model import gaussian_exponent_histogram
from analysis.profile import profile_corpus, profile_matrix, profiles_table_rows
from core.bf16 import assemble_fields, sample_gaussian_bf16
from core.errors import EmptyInputError, ModelParameterError


def histogram_at(counts_by_exponent):
    counts = np.zeros(256, dtype=np.int64)
    for e, c in counts_by_exponent.items():
        counts[e] = c
    return histogram_from_counts(counts)


class TestHistogram:
    @staticmethod
    def test_counts_small_input():
        h = compute_histogram([0x3F80, 0x3F80, 0xC000])
        assert h.counts[127] == 2
        assert h.counts[128] == 1
        assert h.total == 3

    @staticmethod
    def test_empty_input():
        h = compute_histogram(np.array([], dtype=np.uint16))
        assert h.total == 0
        assert not h.counts.any()

    @staticmethod
    def test_conservation(rng):
        words = rng.integers(0, 1 << 16, size=(37, 53), dtype=np.uint16)
        h = compute_histogram(words)
        assert int(h.counts.sum()) == h.total == words.size

    @staticmethod
    def test_gaussian_mode_exponent(rng):
        h = compute_histogram(sample_gaussian_bf16(rng, 1_000_000, 1.0))
        assert int(np.argmax(h.counts)) == 126

    @staticmethod
    def test_pooling_adds_counts():
        a = histogram_at({100: 3})
        b = histogram_at({100: 1, 101: 2})
        pooled = a + b
        assert pooled.total == 6
        assert pooled.counts[100] == 4


class TestSelectWindow:
    @staticmethod
    def test_single_exponent_takes_smallest_start():
        w = select_window(histogram_at({127: 50}))
        assert (w.low, w.high, w.base_exp, w.covered) == (121, 127, 120, 50)

    @staticmethod
    def test_uniform_block_of_seven():
        w = select_window(histogram_at({e: 10 for e in range(10, 17)}))
        assert (w.low, w.high, w.base_exp, w.covered) == (10, 16, 9, 70)

    @staticmethod
    def test_matches_brute_force_on_gaussian_histogram():
        h = gaussian_exponent_histogram(1.0, 10 ** 8)
        best = max(range(250), key=lambda s: (int(h.counts[s:s + 7].sum()), -s))
        w = select_window(h)
        assert w.low == best
        assert w.contains(126)

    @staticmethod
    def test_matches_exhaustive_search(rng):
        def random_counts(kind):
            if kind == 'dense':
                return rng.integers(0, 1000, size=256)
            counts = np.zeros(256, dtype=np.int64)
            if kind == 'sparse':
                # few equal spikes make ties between windows common
                counts[rng.choice(256, size=rng.integers(1, 6), replace=False)] = rng.integers(1, 3)
                return counts
            grid = np.arange(256)
            for centre in rng.integers(0, 256, size=rng.integers(2, 5)):
                bump = rng.integers(10, 500) * np.exp(-0.5 * ((grid - centre) / rng.uniform(0.5, 4)) ** 2)
                counts += np.rint(bump).astype(np.int64)
            counts[rng.integers(0, 256)] += 1
            return counts

        for trial in range(300):
            counts = random_counts(('dense', 'sparse', 'multimodal')[trial % 3])
            sums = [int(counts[s:s + 7].sum()) for s in range(250)]
            best = max(sums)
            w = select_window(histogram_from_counts(counts))
            assert w.covered == best
            assert w.low == sums.index(best)
            assert w.base_exp == w.low - 1

    @staticmethod
    def test_ties_go_to_smallest_start():
        # both clusters hold 5; the first window reaching exponent 10 starts at 4
        w = select_window(histogram_at({10: 5, 30: 5}))
        assert (w.low, w.base_exp, w.covered) == (4, 3, 5)
        w = select_window(histogram_at({200: 2, 40: 1, 46: 1}))
        assert (w.low, w.covered) == (40, 2)

    @staticmethod
    def test_low_exponents_allow_base_minus_one():
        w = select_window(histogram_at({0: 5, 1: 5}))
        assert w.base_exp == -1
        assert w.low == 0

    @staticmethod
    def test_empty_histogram_rejected():
        with pytest.raises(EmptyInputError):
            select_window(histogram_at({}))

    @staticmethod
    def test_shared_window_uses_pooled_counts():
        left = histogram_at({100: 10})
        right = histogram_at({110: 30})
        w = select_shared_window([left, right])
        assert w.contains(110)
        assert w.covered == 30

    @staticmethod
    def test_window_range_checked():
        with pytest.raises(ModelParameterError):
            ExponentWindow(base_exp=249)


class TestCoverage:
    @staticmethod
    def test_window_coverage_examples():
        w = ExponentWindow(base_exp=120)
        assert window_coverage(histogram_at({125: 8}), w) == 1.0
        assert window_coverage(histogram_at({125: 4, 200: 4}), w) == 0.5

    @staticmethod
    def test_gaussian_matrix_coverage(rng):
        h = compute_histogram(sample_gaussian_bf16(rng, (512, 512), 0.02))
        assert window_coverage(h, select_window(h)) >= 0.93

    @staticmethod
    def test_topk_examples():
        assert coverage_ratio_topk(histogram_at({127: 9}), 3) == 1.0
        h = histogram_at({120: 40, 121: 30, 122: 20, 123: 10})
        assert coverage_ratio_topk(h, 2) == pytest.approx(0.9)

    @staticmethod
    def test_topk_matches_sorted_pmf():
        h = gaussian_exponent_histogram(1.0, 10 ** 9)
        expected = np.sort(h.probabilities())[::-1][:7].sum()
        assert coverage_ratio_topk(h, 3) == pytest.approx(expected)

    @staticmethod
    @pytest.mark.parametrize('n', [0, 9])
    def test_codeword_bits_range(n):
        with pytest.raises(ModelParameterError):
            coverage_ratio_topk(histogram_at({1: 1}), n)

    @staticmethod
    def test_topk_exponents_tie_break():
        h = histogram_at({50: 5, 40: 5, 60: 7})
        assert topk_exponents(h, 3) == [(60, 7), (40, 5), (50, 5)]
        assert top_share(h, 1) == pytest.approx(7 / 17)

    @staticmethod
    def test_top7_contiguity():
        assert is_top7_contiguous(histogram_at({e: 10 + e for e in range(100, 107)}))
        assert not is_top7_contiguous(histogram_at({100: 9, 102: 9, 103: 1}))


class TestEntropy:
    @staticmethod
    def test_uniform_over_four():
        assert shannon_entropy(histogram_at({1: 5, 2: 5, 3: 5, 4: 5})) == pytest.approx(2.0)

    @staticmethod
    def test_single_exponent():
        assert shannon_entropy(histogram_at({127: 3})) == 0.0

    @staticmethod
    def test_gaussian_range():
        assert 2.3 <= shannon_entropy(gaussian_exponent_histogram(1.0, 10 ** 9)) <= 2.8

    @staticmethod
    def test_bound_ratio():
        h = histogram_at({1: 5, 2: 5, 3: 5, 4: 5})
        assert entropy_bound_ratio(h) == pytest.approx(16 / 10)

    @staticmethod
    def test_empty_rejected():
        with pytest.raises(EmptyInputError):
            shannon_entropy(histogram_at({}))


class TestAverageBits:
    @staticmethod
    @pytest.mark.parametrize('n, r, expected', [
        (3, 0.964, 11.288),
        (3, 1.0, 11.0),
        (2, 0.70, 12.4),
        (4, 0.9875, 12.1),
        (3, 0.0, 19.0),
    ])
    def test_values(n, r, expected):
        assert average_bits(n, r) == pytest.approx(expected)

    @staticmethod
    def test_eleven_point_three():
        assert abs(average_bits(3, 0.964) - 11.3) <= 0.05

    @staticmethod
    @pytest.mark.parametrize('n', range(1, 9))
    def test_strictly_decreasing_in_coverage(n):
        grid = np.linspace(0.0, 1.0, 201)
        bits = np.array([average_bits(n, r) for r in grid])
        assert np.all(np.diff(bits) < 0)
        assert bits[0] == pytest.approx(n + 16)
        assert bits[-1] == pytest.approx(n + 8)

    @staticmethod
    def test_inversion():
        assert coverage_for_average_bits(2, 12.4) == pytest.approx(0.70)
        assert coverage_for_average_bits(4, 12.1) == pytest.approx(0.9875)

    @staticmethod
    def test_rejects_bad_inputs():
        with pytest.raises(ModelParameterError):
            average_bits(0, 0.5)
        with pytest.raises(ModelParameterError):
            average_bits(3, 1.5)


class TestShapeChecks:
    @staticmethod
    def test_unimodal_examples():
        assert check_unimodal([1, 3, 2, 4])[0] is False
        assert check_unimodal([2, 2, 2, 2]) == (True, 0)
        assert check_unimodal([1, 2, 5, 3, 1]) == (True, 2)

    @staticmethod
    def test_top_k_contiguous_examples():
        assert top_k_contiguous([3, 1, 3], 2) is False
        assert top_k_contiguous([3, 1, 3], 1) is True
        assert top_k_contiguous([1, 4, 3, 2], 3) is True


class TestProfile:
    @staticmethod
    def test_profile_matrix_fields(rng):
        words = sample_gaussian_bf16(rng, (128, 128), 0.02)
        p = profile_matrix('layer0', words)
        assert p.elements == 128 * 128
        assert p.topk_coverage[3] >= p.coverage
        assert p.average_bits_table[3] == pytest.approx(average_bits(3, p.topk_coverage[3]))
        assert p.top7_contiguous
        payload = p.to_dict()
        assert payload['window']['high'] - payload['window']['low'] == 6
        assert sum(payload['histogram'].values()) == p.elements

    @staticmethod
    def test_corpus_reports_both_aggregations(rng):
        a = profile_matrix('a', sample_gaussian_bf16(rng, (64, 64), 0.02))
        b = profile_matrix('b', np.full((64, 64), assemble_fields(0, 60, 0), dtype=np.uint16))
        summary = profile_corpus([a, b])
        assert summary.matrices == 2
        assert summary.mean_coverage == pytest.approx((a.coverage + 1.0) / 2)
        # pooled window can only cover one of the two clusters
        assert summary.pooled_coverage < summary.mean_coverage
        assert summary.contiguity_rate == 1.0

    @staticmethod
    def test_table_rows(rng):
        p = profile_matrix('x', sample_gaussian_bf16(rng, (64, 64), 0.1))
        rows = profiles_table_rows([p])
        assert rows[0]['name'] == 'x'
        assert set(f'r{n}' for n in range(1, 9)) <= set(rows[0])

    @staticmethod
    def test_corpus_needs_profiles():
        with pytest.raises(EmptyInputError):
            profile_corpus([])
