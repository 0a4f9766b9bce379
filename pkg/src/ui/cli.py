"""
ZipTBE command line
Subcommands: compress, decompress, verify, analyze, gemm-check, roofline,
warp-trace, config. Exit status 0 on success, 1 when a verification or
equivalence check fails, 2 on a codec/format/input error, 3 on an I/O error.
"""

import argparse
import logging
import re
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from analysis.exponent_stats import (
    ExponentWindow, average_bits, compute_histogram, coverage_ratio_topk,
    select_shared_window, window_coverage,
)
from analysis.gaussian_model import gaussian_exponent_histogram
from analysis.profile import profile_corpus, profile_histogram, profile_matrix, profiles_table_rows
from codec.compressor import WeightMatrix, compress
from codec.reference_decoder import decode_fragment_reference, decompress_reference
from codec.verify import first_mismatch, verify_container
from codec.warp_decoder import decode_fragment_from_matrix, fragment_for
from core.bf16 import sample_gaussian_bf16
from core.config import Config
from core.errors import IngestError, ZtbeError
from execution.dispatch import StageDecision, StageMode, stage_select
from execution.gemm import ActivationMatrix, decoupled_pipeline, dense_gemm_ref, fused_gemm
from execution.traffic import GemmTrafficCounter, traffic_vs_model
from ingest.raw_tensor import read_raw, write_raw
from ingest.safetensors_reader import open_safetensors
from perf.roofline import HardwareProfile, degradation_report, speedup_report
from tbeformat.container import deserialize, load, save, serialize
from utils.logging_setup import configure_logging
from utils.reports import write_csv, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_IO_ERROR = 3

FORMATS = ('raw', 'safetensors', 'ztbe')
WORKING_SET_LIMIT = Config.BLOCK_ELEMENTS
SYNTHETIC_SIDE = 256


def detect_format(path: str, fmt: Optional[str] = None) -> str:
    if fmt:
        return fmt
    suffix = Path(path).suffix.lower()
    if suffix == '.ztbe':
        return 'ztbe'
    if suffix == '.safetensors':
        return 'safetensors'
    return 'raw'


def tensor_filename(name: str) -> str:
    return re.sub(r'[^A-Za-z0-9._-]', '_', name) + '.ztbe'


def load_matrices(args) -> List[Tuple[str, np.ndarray]]:
    """(name, uint16 words) for every matrix the input selects"""
    if getattr(args, 'synthetic_sigma', None) is not None:
        rng = np.random.default_rng(args.seed)
        shape = (args.rows or SYNTHETIC_SIDE, args.cols or SYNTHETIC_SIDE)
        return [('synthetic', sample_gaussian_bf16(rng, shape, args.synthetic_sigma))]
    if not args.input:
        raise IngestError("an --input path (or --synthetic-sigma) is required")

    fmt = detect_format(args.input, args.format)
    if fmt == 'raw':
        return [(Path(args.input).stem, read_raw(args.input))]
    if fmt == 'ztbe':
        return [(Path(args.input).stem, decompress_reference(load(args.input)).data)]

    with open_safetensors(args.input) as st:
        logger.debug("%s metadata: %s", args.input, st.metadata())
        if args.tensor:
            return [(args.tensor, st.get_tensor(args.tensor))]
        names = st.bf16_names()
        if not names:
            raise IngestError(f"{args.input}: no BF16 tensors")
        skipped = sorted(set(st.names()) - set(names))
        if skipped:
            logger.info("skipping non-BF16 tensors: %s", ', '.join(skipped))
        return [(name, st.get_tensor(name)) for name in names]


def _workers(args) -> int:
    return args.workers or Config.WORKERS


def _emit_summary(payload, args):
    write_json(payload, getattr(args, 'json', None))


def cmd_compress(args) -> int:
    if args.input and detect_format(args.input, args.format) == 'ztbe':
        raise IngestError(f"{args.input} is already a ZTBE container")
    if not args.output:
        raise IngestError("--output is required")
    matrices = load_matrices(args)

    window = None
    if args.shared_window:
        window = select_shared_window(compute_histogram(words) for _, words in matrices)
        logger.info("shared window [%d, %d]", window.low, window.high)

    # a whole safetensors file fans out into one container per tensor
    single = not (args.input and detect_format(args.input, args.format) == 'safetensors' and not args.tensor)
    out_dir = Path(args.output)
    if not single:
        out_dir.mkdir(parents=True, exist_ok=True)

    summaries = []
    for name, words in matrices:
        histogram = compute_histogram(words)
        cm = compress(words, window=window, workers=_workers(args))
        target = out_dir if single else out_dir / tensor_filename(name)
        size = save(cm, target)
        used = ExponentWindow(cm.base_exp)
        coverage = window_coverage(histogram, used)
        summaries.append({
            'name': name,
            'rows': cm.logical_rows,
            'cols': cm.logical_cols,
            'output': str(target),
            'container_bytes': size,
            'compression_ratio': cm.compression_ratio(),
            'bits_per_element': cm.bits_per_element(),
            'predicted_ratio': 16.0 / average_bits(Config.CODEWORD_BITS, coverage),
            'r3': coverage_ratio_topk(histogram, Config.CODEWORD_BITS),
            'window': {'base_exp': used.base_exp, 'low': used.low, 'high': used.high},
            'window_coverage': coverage,
        })
        logger.info("%s: %dx%d -> %s (%.4fx)", name, cm.logical_rows, cm.logical_cols, target,
                    cm.compression_ratio())
    _emit_summary({'tensors': summaries, 'shared_window': bool(args.shared_window)}, args)
    return EXIT_OK


def cmd_decompress(args) -> int:
    if not args.input or not args.output:
        raise IngestError("decompress needs --input and --output")
    w = decompress_reference(load(args.input))
    size = write_raw(args.output, w.data)
    logger.info("wrote %dx%d raw tensor (%d bytes) to %s", w.rows, w.cols, size, args.output)
    return EXIT_OK


def _verify_ztbe(path: str) -> dict:
    blob = Path(path).read_bytes()
    cm = deserialize(blob)
    agree, mismatch = verify_container(cm)
    decoded = decompress_reference(cm)
    recompressed = serialize(compress(decoded, window=ExponentWindow(cm.base_exp)))
    return {
        'name': Path(path).stem,
        'decoders_agree': agree,
        'first_decoder_mismatch': list(mismatch) if mismatch else None,
        'reencode_identical': recompressed == blob,
        'success': agree and recompressed == blob,
    }


def cmd_verify(args) -> int:
    if args.input and detect_format(args.input, args.format) == 'ztbe':
        results = [_verify_ztbe(args.input)]
    else:
        results = []
        for name, words in load_matrices(args):
            cm = deserialize(serialize(compress(words, workers=_workers(args))))
            reference = decompress_reference(cm).data
            agree, _ = verify_container(cm)
            mismatch = first_mismatch(np.asarray(words, dtype=np.uint16), reference)
            results.append({
                'name': name,
                'decoders_agree': agree,
                'first_mismatch': list(mismatch) if mismatch else None,
                'success': agree and mismatch is None,
            })
    ok = all(r['success'] for r in results)
    _emit_summary({'results': results, 'success': ok}, args)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_analyze(args) -> int:
    if args.synthetic_sigma is not None and args.input is None and args.rows is None:
        # analytic histogram: the pmf itself, no sampling
        histogram = gaussian_exponent_histogram(args.synthetic_sigma, 10 ** 9)
        profiles = [profile_histogram(f'gaussian_sigma_{args.synthetic_sigma:g}', histogram)]
    else:
        profiles = [profile_matrix(name, words) for name, words in load_matrices(args)]

    summary = profile_corpus(profiles)
    if args.output:
        write_csv(profiles_table_rows(profiles), args.output)
    _emit_summary({'matrices': [p.to_dict() for p in profiles], 'corpus': summary.to_dict()}, args)
    return EXIT_OK


def _load_activations(args, k_dim: int) -> ActivationMatrix:
    if args.activations:
        x = ActivationMatrix.from_array(read_raw(args.activations))
    else:
        rng = np.random.default_rng(args.seed + 1)
        x = ActivationMatrix.from_array(sample_gaussian_bf16(rng, (k_dim, args.n), 1.0))
    return x


def cmd_gemm_check(args) -> int:
    if args.input and detect_format(args.input, args.format) == 'ztbe':
        cm = load(args.input)
        w = decompress_reference(cm)
    else:
        w = WeightMatrix.from_array(load_matrices(args)[0][1])
        cm = compress(w, workers=_workers(args))
    x = _load_activations(args, w.cols)
    workers = _workers(args)

    decision = StageDecision(threshold_n=args.threshold_n or Config.THRESHOLD_N,
                             mode=None if args.mode == 'auto' else StageMode(args.mode))
    selected = decision.mode or stage_select(x.n_dim, decision)

    fused_counter = GemmTrafficCounter()
    decoupled_counter = GemmTrafficCounter()
    dense = dense_gemm_ref(w, x, workers=workers)
    fused = fused_gemm(cm, x, workers=workers, counter=fused_counter)
    decoupled = decoupled_pipeline(cm, x, workers=workers, counter=decoupled_counter)

    equivalent = dense.bitwise_equal(fused) and dense.bitwise_equal(decoupled)
    within_limit = fused_counter.peak_decoded_elements <= WORKING_SET_LIMIT
    report = {
        'shape': {'M': w.rows, 'K': w.cols, 'N': x.n_dim},
        'equivalent': equivalent,
        'fused_equals_dense': dense.bitwise_equal(fused),
        'decoupled_equals_dense': dense.bitwise_equal(decoupled),
        'stage_decision': selected.value,
        'threshold_n': decision.threshold_n,
        'fused_peak_working_set': fused_counter.peak_decoded_elements,
        'working_set_limit': WORKING_SET_LIMIT,
        'fused_traffic': fused_counter.to_dict(),
        'decoupled_traffic': decoupled_counter.to_dict(),
        'decoupled_vs_model': traffic_vs_model(decoupled_counter, w.rows, w.cols, cm.compression_ratio()),
    }
    _emit_summary(report, args)
    if not (equivalent and within_limit):
        logger.error("GEMM paths disagree or the fused working set exceeded %d", WORKING_SET_LIMIT)
        return EXIT_CHECK_FAILED
    return EXIT_OK


def _parse_n_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"--n-list must be comma separated integers, got {text!r}")
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("--n-list needs positive token counts")
    return values


def cmd_roofline(args) -> int:
    hw = HardwareProfile(args.peak_flops or Config.PEAK_FLOPS, args.mem_bandwidth or Config.MEM_BANDWIDTH)
    table = degradation_report(args.m, args.k, args.n_list, args.cr)
    speedups = speedup_report(args.m, args.k, args.n_list, args.cr, hw)
    table = table.merge(speedups, on='N')
    write_csv(table, args.output)
    return EXIT_OK


def cmd_warp_trace(args) -> int:
    if args.input and detect_format(args.input, args.format) == 'ztbe':
        cm = load(args.input)
    else:
        cm = compress(load_matrices(args)[0][1], workers=_workers(args))
    fragment = fragment_for(cm, args.block_row, args.block_col, args.tct, args.frag)
    result = decode_fragment_from_matrix(cm, fragment, trace=True)
    reference = decode_fragment_reference(cm, fragment)
    matches = bool(np.array_equal(result.words, reference))

    if args.json:
        write_json({
            'fragment': fragment,
            'base_exp': cm.base_exp,
            'lanes': [vars(s) for s in result.trace],
            'matches_reference': matches,
        }, args.json)
    else:
        mask = int(cm.b1[fragment] | cm.b2[fragment] | cm.b3[fragment])
        print(f"fragment {fragment} (block {args.block_row},{args.block_col} tct {args.tct} frag {args.frag})"
              f" base_exp {cm.base_exp} mask 0x{mask:016x}")
        for s in result.trace:
            if s.mask_bit:
                print(f"lane {s.lane_id:2d} p {s.p:2d} bit 1 idx_H {s.idx_h:2d} codeword {s.codeword}"
                      f" exponent {s.exponent:3d} word 0x{s.word:04x}")
            else:
                print(f"lane {s.lane_id:2d} p {s.p:2d} bit 0 idx_L {s.idx_l:2d} codeword 0"
                      f" fallback     word 0x{s.word:04x}")
        print(f"lane ops {int(result.lane_ops[0])} per lane, matches reference: {matches}")
    return EXIT_OK if matches else EXIT_CHECK_FAILED


def cmd_config(args) -> int:
    Config.print_status()
    return EXIT_OK


def _add_input_args(parser: argparse.ArgumentParser):
    group = parser.add_argument_group('Input')
    group.add_argument('--input', '-i', help='raw, .safetensors or .ztbe file')
    group.add_argument('--format', choices=FORMATS, help='override extension-based format detection')
    group.add_argument('--tensor', help='safetensors tensor name (default: every BF16 tensor)')
    group.add_argument('--synthetic-sigma', type=float,
                       help='use a Gaussian BF16 matrix with this sigma instead of --input')
    group.add_argument('--rows', type=int, default=None, help='synthetic rows')
    group.add_argument('--cols', type=int, default=None, help='synthetic columns')
    group.add_argument('--seed', type=int, default=0, help='synthetic generator seed')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='ztbe', description='Lossless BF16 weight codec (TCA-TBE)')
    parser.add_argument('--log-level', default=None, help='DEBUG, INFO, WARNING or ERROR')
    parser.add_argument('--workers', type=int, default=None, help='worker threads (default: ZTBE_WORKERS)')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('compress', help='compress a BF16 tensor to ZTBE')
    _add_input_args(p)
    p.add_argument('--output', '-o', help='output file, or directory for several tensors')
    p.add_argument('--shared-window', action='store_true',
                   help='one exponent window for every tensor of the input')
    p.add_argument('--json', help='write the summary JSON here instead of stdout')
    p.set_defaults(handler=cmd_compress)

    p = sub.add_parser('decompress', help='decompress a ZTBE file to a raw tensor')
    p.add_argument('--input', '-i')
    p.add_argument('--output', '-o')
    p.set_defaults(handler=cmd_decompress)

    p = sub.add_parser('verify', help='round trip through both decoders')
    _add_input_args(p)
    p.add_argument('--json')
    p.set_defaults(handler=cmd_verify)

    p = sub.add_parser('analyze', help='exponent statistics report')
    _add_input_args(p)
    p.add_argument('--output', '-o', help='per-matrix CSV table')
    p.add_argument('--json')
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser('gemm-check', help='dense vs fused vs decoupled equivalence')
    _add_input_args(p)
    p.add_argument('--activations', help='raw K x N activation tensor (default: synthetic)')
    p.add_argument('--n', type=int, default=8, help='synthetic activation columns')
    p.add_argument('--mode', choices=('auto', 'fused', 'decoupled'), default='auto')
    p.add_argument('--threshold-n', type=int, default=None, help='stage threshold (default: ZTBE_THRESHOLD_N)')
    p.add_argument('--json')
    p.set_defaults(handler=cmd_gemm_check)

    p = sub.add_parser('roofline', help='compute-intensity degradation table (CSV)')
    p.add_argument('--m', type=int, default=4096)
    p.add_argument('--k', type=int, default=4096)
    p.add_argument('--n-list', type=_parse_n_list, default=[8, 16, 32, 64])
    p.add_argument('--cr', type=float, default=1.51)
    p.add_argument('--peak-flops', type=float, default=None)
    p.add_argument('--mem-bandwidth', type=float, default=None)
    p.add_argument('--output', '-o')
    p.set_defaults(handler=cmd_roofline)

    p = sub.add_parser('warp-trace', help='per-lane decode trace of one FragTile')
    _add_input_args(p)
    p.add_argument('--block-row', type=int, default=0)
    p.add_argument('--block-col', type=int, default=0)
    p.add_argument('--tct', type=int, default=0)
    p.add_argument('--frag', type=int, default=0)
    p.add_argument('--json')
    p.set_defaults(handler=cmd_warp_trace)

    p = sub.add_parser('config', help='show resolved configuration')
    p.set_defaults(handler=cmd_config)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        Config.load()
        configure_logging(args.log_level or Config.LOG_LEVEL)
        if args.workers is not None and args.workers < 1:
            raise IngestError(f"--workers must be >= 1, got {args.workers}")
        return args.handler(args)
    except ZtbeError as e:
        print(f"ztbe: error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except OSError as e:
        print(f"ztbe: I/O error: {e}", file=sys.stderr)
        return EXIT_IO_ERROR
