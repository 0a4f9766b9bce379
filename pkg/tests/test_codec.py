"""Test codec.compressor, codec.reference_decoder and codec.verify"""
import numpy as np
import pytest
from numpy.testing import assert_array_equal

from analysis.exponent_stats import ExponentWindow
from codec.compressor import WeightMatrix, compress
from codec.reference_decoder import decode_fragment_reference, decompress_reference
from codec.verify import first_mismatch, verify_roundtrip
from core.errors import EmptyInputError, ShapeMismatchError
from tbeformat.container import deserialize, serialize

from conftest import SPECIAL_PATTERNS, gaussian_words, inject_specials


class TestWeightMatrix:
    @staticmethod
    def test_from_array_promotes_vectors():
        w = WeightMatrix.from_array(np.array([1, 2, 3], dtype=np.uint16))
        assert (w.rows, w.cols) == (1, 3)

    @staticmethod
    def test_size_checked():
        with pytest.raises(ShapeMismatchError):
            WeightMatrix(2, 2, np.zeros(3, dtype=np.uint16))

    @staticmethod
    def test_empty_rejected():
        with pytest.raises(EmptyInputError):
            compress(np.zeros((0, 4), dtype=np.uint16))


class TestCompress:
    @staticmethod
    def test_all_ones_fragment():
        cm = compress(np.full((8, 8), 0x3F80, dtype=np.uint16))
        assert (cm.base_exp, cm.padded_rows, cm.padded_cols) == (120, 64, 64)
        assert cm.b1[0] == cm.b2[0] == cm.b3[0] == np.uint64(0xFFFFFFFFFFFFFFFF)
        assert cm.l.size == 0

    @staticmethod
    def test_nan_goes_to_fallback_verbatim():
        words = np.full((8, 8), 0x3F80, dtype=np.uint16)
        words[::2, ::3] = 0x7FC0
        cm = compress(words)
        n_nan = int((words == 0x7FC0).sum())
        assert_array_equal(cm.l[:n_nan], np.full(n_nan, 0x7FC0, dtype=np.uint16))
        assert_array_equal(decompress_reference(cm).data, words)

    @staticmethod
    def test_single_element():
        cm = compress(np.array([[0xBF80]], dtype=np.uint16))
        assert (cm.padded_rows, cm.padded_cols) == (64, 64)
        assert_array_equal(decompress_reference(cm).data, [[0xBF80]])

    @staticmethod
    def test_worker_count_does_not_change_output(rng):
        words = inject_specials(rng, gaussian_words(rng, (200, 330), 0.05), 0.05)
        assert serialize(compress(words, workers=1)) == serialize(compress(words, workers=4))

    @staticmethod
    def test_external_window(rng):
        words = gaussian_words(rng, (64, 64), 0.02)
        window = ExponentWindow(base_exp=100)
        cm = compress(words, window=window)
        assert cm.base_exp == 100
        assert_array_equal(decompress_reference(cm).data, words)

    @staticmethod
    def test_every_special_pattern_round_trips():
        words = np.resize(SPECIAL_PATTERNS, (9, 7)).astype(np.uint16)
        assert_array_equal(decompress_reference(compress(words)).data, words)

    @staticmethod
    def test_all_patterns_round_trip():
        words = np.arange(1 << 16, dtype=np.uint16).reshape(256, 256)
        assert_array_equal(decompress_reference(compress(words)).data, words)


class TestReferenceDecoder:
    @staticmethod
    @pytest.mark.parametrize('shape', [(1, 1), (7, 9), (64, 64), (65, 63), (300, 300)])
    def test_lossless_dims(rng, shape):
        words = inject_specials(rng, gaussian_words(rng, shape, 0.02), 0.05)
        assert_array_equal(decompress_reference(deserialize(serialize(compress(words)))).data, words)

    @staticmethod
    def test_fragment_decode_matches_matrix(rng):
        words = gaussian_words(rng, (64, 64), 0.02)
        cm = compress(words)
        # FragTile 1 of TensorCoreTile 0 covers rows 8..15, cols 0..7
        assert_array_equal(decode_fragment_reference(cm, 1).reshape(8, 8), words[8:16, 0:8])


class TestVerify:
    @staticmethod
    def test_report(rng):
        words = inject_specials(rng, gaussian_words(rng, (100, 90), 0.02), 0.05)
        report = verify_roundtrip(words)
        assert report.success
        assert report.decoders_agree
        assert report.first_mismatch is None
        assert 0.9 < report.r3 <= 1.0
        assert report.compression_ratio > 1.0
        assert report.to_dict()['first_mismatch'] is None

    @staticmethod
    def test_first_mismatch():
        a = np.zeros((3, 3), dtype=np.uint16)
        b = a.copy()
        b[1, 2] = 5
        assert first_mismatch(a, b) == (1, 2)
        assert first_mismatch(a, a) is None


@pytest.mark.slow
def test_lossless_property_suite():
    rng = np.random.default_rng(11)
    dims = [(1, 1), (7, 9), (64, 64), (65, 63), (300, 300), (1024, 1024)]
    for trial in range(1000):
        sigma = (0.005, 0.02, 0.1)[trial % 3]
        shape = dims[int(rng.integers(0, len(dims)))]
        words = inject_specials(rng, gaussian_words(rng, shape, sigma), 0.05)
        decoded = decompress_reference(deserialize(serialize(compress(words)))).data
        assert_array_equal(decoded, words)


@pytest.mark.slow
def test_large_gaussian_ratio():
    rng = np.random.default_rng(5)
    words = gaussian_words(rng, (4096, 4096), 0.02)
    cm = compress(words, workers=4)
    r = cm.measured_coverage()
    overhead = cm.bits_per_element() - (r * 11 + (1 - r) * 19)
    assert 0 <= overhead <= 0.2
    assert len(serialize(cm)) <= 0.73 * 2 * words.size
