"""Test execution.gemm, execution.dispatch and execution.traffic"""
import numpy as np
import pytest
from numpy.testing import assert_array_equal

from analysis.exponent_stats import ExponentWindow
from codec.compressor import WeightMatrix, compress
from core.bf16 import from_float32, sample_gaussian_bf16, widen
from core.config import Config
from core.errors import ModelParameterError, ShapeMismatchError
from execution.dispatch import StageDecision, StageMode, run_stage_aware, stage_select
from execution.gemm import ActivationMatrix, decoupled_pipeline, dense_gemm_ref, fused_gemm
from execution.traffic import (
    GemmTrafficCounter, decode_to_gemm_ratio, decoupled_weight_traffic_model, traffic_vs_model,
)

from conftest import gaussian_words


def naive_gemm(w_words, x_words):
    """Ascending-k FP32 accumulation, one output element at a time"""
    wf, xf = widen(w_words), widen(x_words)
    m, k_dim = wf.shape
    n = xf.shape[1]
    out = np.zeros((m, n), dtype=np.float32)
    for i in range(m):
        for j in range(n):
            acc = np.float32(0.0)
            for k in range(k_dim):
                acc = np.float32(acc + np.float32(wf[i, k] * xf[k, j]))
            out[i, j] = acc
    return out


def triple(rng, m, k, n, sigma=0.02):
    w = WeightMatrix.from_array(gaussian_words(rng, (m, k), sigma))
    x = ActivationMatrix.from_array(sample_gaussian_bf16(rng, (k, n), 1.0))
    return w, compress(w), x


class TestDense:
    @staticmethod
    def test_identity_weights():
        rng = np.random.default_rng(1)
        eye = from_float32(np.eye(64, dtype=np.float32))
        x = ActivationMatrix.from_array(sample_gaussian_bf16(rng, (64, 8), 1.0))
        y = dense_gemm_ref(WeightMatrix.from_array(eye), x)
        assert_array_equal(y.data, widen(x.data))

    @staticmethod
    def test_zero_weights(rng):
        x = ActivationMatrix.from_array(sample_gaussian_bf16(rng, (64, 4), 1.0))
        y = dense_gemm_ref(WeightMatrix.from_array(np.zeros((32, 64), dtype=np.uint16)), x)
        assert not y.data.any()

    @staticmethod
    def test_matches_naive_triple_loop(rng):
        w, _, x = triple(rng, 128, 128, 8)
        y = dense_gemm_ref(w, x)
        assert_array_equal(y.data.view(np.uint32), naive_gemm(w.data, x.data).view(np.uint32))

    @staticmethod
    def test_shape_mismatch(rng):
        w, _, _ = triple(rng, 16, 16, 2)
        x = ActivationMatrix.from_array(np.zeros((17, 2), dtype=np.uint16))
        with pytest.raises(ShapeMismatchError):
            dense_gemm_ref(w, x)


class TestTripleEquivalence:
    @staticmethod
    @pytest.mark.parametrize('m, k, n', [(64, 64, 1), (70, 130, 5), (128, 96, 16), (200, 65, 33)])
    def test_small_instances(rng, m, k, n):
        w, cm, x = triple(rng, m, k, n)
        dense = dense_gemm_ref(w, x)
        counter = GemmTrafficCounter()
        fused = fused_gemm(cm, x, counter=counter)
        decoupled = decoupled_pipeline(cm, x)
        assert dense.bitwise_equal(fused)
        assert dense.bitwise_equal(decoupled)
        assert counter.peak_decoded_elements <= Config.BLOCK_ELEMENTS

    @staticmethod
    def test_all_fallback_matrix(rng):
        # block-aligned so no in-window padding words exist
        w = WeightMatrix.from_array(gaussian_words(rng, (128, 64), 0.02))
        cm = compress(w, window=ExponentWindow(base_exp=0))
        assert cm.h.size == 0
        x = ActivationMatrix.from_array(sample_gaussian_bf16(rng, (64, 6), 1.0))
        assert dense_gemm_ref(w, x).bitwise_equal(fused_gemm(cm, x))

    @staticmethod
    def test_negative_zero_rows_survive(rng):
        words = np.full((64, 64), 0x8000, dtype=np.uint16)
        w = WeightMatrix.from_array(words)
        x = ActivationMatrix.from_array(sample_gaussian_bf16(rng, (64, 3), 1.0))
        assert dense_gemm_ref(w, x).bitwise_equal(fused_gemm(compress(w), x))

    @staticmethod
    def test_workers_do_not_change_result(rng):
        w, cm, x = triple(rng, 200, 150, 7)
        assert fused_gemm(cm, x, workers=1).bitwise_equal(fused_gemm(cm, x, workers=3))
        assert dense_gemm_ref(w, x, workers=1).bitwise_equal(dense_gemm_ref(w, x, workers=3))


@pytest.mark.slow
def test_fifty_random_instances():
    rng = np.random.default_rng(17)
    for _ in range(50):
        m, k = (int(v) for v in rng.integers(64, 321, size=2))
        n = int(rng.integers(1, 65))
        w, cm, x = triple(rng, m, k, n, sigma=float(rng.choice([0.005, 0.02, 0.1])))
        counter = GemmTrafficCounter()
        dense = dense_gemm_ref(w, x)
        assert dense.bitwise_equal(fused_gemm(cm, x, counter=counter))
        assert dense.bitwise_equal(decoupled_pipeline(cm, x))
        assert counter.peak_decoded_elements <= 4096


@pytest.mark.slow
def test_working_set_on_large_weight():
    rng = np.random.default_rng(19)
    _, cm, x = triple(rng, 1024, 1024, 1)
    counter = GemmTrafficCounter()
    fused_gemm(cm, x, counter=counter, workers=4)
    assert 0 < counter.peak_decoded_elements <= 4096
    assert counter.fragments_decoded == cm.n_fragtiles


class TestTraffic:
    @staticmethod
    def test_decoupled_matches_model_on_aligned_dims(rng):
        _, cm, x = triple(rng, 128, 192, 4)
        counter = GemmTrafficCounter()
        decoupled_pipeline(cm, x, counter=counter)
        assert counter.decompressed_bytes_written == 2 * 128 * 192
        assert counter.compressed_bytes_read == cm.payload_bits() // 8
        comparison = traffic_vs_model(counter, 128, 192, cm.compression_ratio())
        assert comparison['ratio'] == pytest.approx(1.0)

    @staticmethod
    def test_padding_only_adds_traffic(rng):
        _, cm, x = triple(rng, 70, 100, 2)
        counter = GemmTrafficCounter()
        decoupled_pipeline(cm, x, counter=counter)
        ratio = traffic_vs_model(counter, 70, 100, cm.compression_ratio())['ratio']
        padded_share = (cm.padded_rows * cm.padded_cols) / (70 * 100)
        assert 1.0 < ratio < padded_share

    @staticmethod
    def test_fused_never_writes_decompressed_weights(rng):
        _, cm, x = triple(rng, 64, 64, 2)
        counter = GemmTrafficCounter()
        fused_gemm(cm, x, counter=counter)
        assert counter.decompressed_bytes_written == 0
        assert counter.flops == 2 * 64 * 64 * 2
        assert counter.to_dict()['fragments_decoded'] == 64

    @staticmethod
    def test_output_bytes_follow_the_model_not_the_fp32_buffer(rng):
        _, cm, x = triple(rng, 64, 64, 3)
        counter = GemmTrafficCounter()
        out = fused_gemm(cm, x, counter=counter)
        assert counter.output_bytes_model == 2 * 64 * 3
        assert out.data.nbytes == 2 * counter.output_bytes_model

    @staticmethod
    def test_model_terms():
        assert decoupled_weight_traffic_model(4096, 4096, 1.0) == pytest.approx(4096 * 4096 * 6)
        assert decode_to_gemm_ratio(4096, 8192, 4096) < 1e-3
        assert decode_to_gemm_ratio(4096, 1, 4096) > decode_to_gemm_ratio(4096, 8, 4096)


class TestDispatch:
    @staticmethod
    @pytest.mark.parametrize('n, expected', [
        (32, StageMode.FUSED),
        (128, StageMode.FUSED),
        (129, StageMode.DECOUPLED),
        (8192, StageMode.DECOUPLED),
    ])
    def test_stage_select(n, expected):
        assert stage_select(n, StageDecision(threshold_n=128)) is expected

    @staticmethod
    def test_rejects_bad_inputs():
        with pytest.raises(ModelParameterError):
            stage_select(0, StageDecision())
        with pytest.raises(ModelParameterError):
            StageDecision(threshold_n=0)

    @staticmethod
    def test_from_config(monkeypatch):
        monkeypatch.setattr(Config, 'THRESHOLD_N', 16)
        assert StageDecision.from_config().threshold_n == 16

    @staticmethod
    def test_run_stage_aware_routes(rng):
        w, cm, x = triple(rng, 64, 64, 4)
        mode, y = run_stage_aware(cm, x, StageDecision(threshold_n=2))
        assert mode is StageMode.DECOUPLED
        assert y.bitwise_equal(dense_gemm_ref(w, x))
        forced, _ = run_stage_aware(cm, x, StageDecision(threshold_n=2, mode=StageMode.FUSED))
        assert forced is StageMode.FUSED
