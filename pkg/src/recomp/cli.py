"""Command line interface: ``recomp {gen,compress,decompress,stats,bench,silhouette}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 corruption.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import archive as ar
from . import clustering as cl
from .errors import ConfigError, CorruptionError, DataError
from .metrics import entropy_from_counts, shannon_entropy, weighted_mean_entropy
from .stream_model import (SyntheticSpec, generate_labeled, load_streams, write_csv,
                           write_raw16)
from .transforms import interleave

log = logging.getLogger("recomp")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CORRUPT = 0, 2, 3, 4


@dataclass(frozen=True)
class BenchRow:
    record: str
    k: int
    cluster_method: str
    rle_mode: str
    cr: float
    entropy_before: float
    entropy_after: float
    wall_time: float


BENCH_FIELDS = [f.name for f in fields(BenchRow)]


def read_bench_csv(text: str) -> list[BenchRow]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    rows = []
    for rec in csv.DictReader(lines):
        rows.append(BenchRow(rec["record"], int(rec["k"]), rec["cluster_method"], rec["rle_mode"],
                             float(rec["cr"]), float(rec["entropy_before"]),
                             float(rec["entropy_after"]), float(rec["wall_time"])))
    return rows


# ------------------------------------------------------------------ helpers


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(choices):
    def parse(text):
        items = [x.strip() for x in text.split(",") if x.strip()]
        for item in items:
            if item not in choices:
                raise argparse.ArgumentTypeError(f"{item!r} not one of {', '.join(choices)}")
        return items
    return parse


def _write_text(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _csv_text(header, rows, comment) -> str:
    out = io.StringIO()
    out.write(f"# {comment}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return out.getvalue()


def _load(args):
    columns = _int_list(args.columns) if getattr(args, "columns", None) else None
    return load_streams(args.input, args.format, header=args.header, layout=args.layout,
                        columns=columns)


def _config(args, **overrides) -> ar.CodecConfig:
    values = dict(k=args.k, cluster_method=args.cluster, rle_mode=args.rle,
                  run_threshold=args.threshold, block_len=args.block_len, seed=args.seed)
    values.update(overrides)
    return ar.CodecConfig(**values)


def cluster_entropies(streams, archive: ar.Archive):
    """Raw interleaved and entropy-coder-input entropy for every cluster."""
    data = ar.block_matrix(streams, archive.config.block_len)
    before, after = [], []
    for rec in archive.clusters:
        if rec.members.size == 0:
            continue
        before.append(shannon_entropy(interleave(data[rec.members]).symbols))
        if rec.has_payload:
            after.append(entropy_from_counts(rec.table.counts))
    return before, after


# ------------------------------------------------------------------ commands


def cmd_gen(args) -> int:
    spec = SyntheticSpec(args.num_streams, args.block_len, args.archetypes, args.noise,
                         args.seed, args.max_step)
    streams, labels = generate_labeled(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    comment = (f"recomp gen num_streams={spec.num_streams} block_len={spec.block_len} "
               f"archetypes={spec.num_archetypes} noise={spec.noise_level} seed={spec.seed} "
               f"max_step={spec.max_step}")
    (out / "streams.raw16").write_bytes(write_raw16(streams))
    (out / "streams.csv").write_text(write_csv(streams, comment=comment), encoding="utf-8")
    (out / "labels.csv").write_text(
        _csv_text(["stream", "archetype"], [[i, int(a)] for i, a in enumerate(labels)], comment),
        encoding="utf-8")
    print(f"wrote {len(streams)} streams x {spec.block_len} symbols to {out}")
    return EXIT_OK


def cmd_compress(args) -> int:
    streams = _load(args)
    config = _config(args)
    archive = ar.compress(streams, config)
    blob = ar.serialize(archive)
    Path(args.output).write_bytes(blob)
    rep = ar.size_report(archive, streams)
    sizes = " ".join(str(b) for b in rep["cluster_bits"])
    print(f"CR={rep['cr']:.4f} CR_payload={rep['cr_payload']:.4f} "
          f"original_bits={rep['original_bits']} total_bits={rep['total_bits']} "
          f"payload_bits={rep['payload_bits']} cluster_bits=[{sizes}]")
    return EXIT_OK


def cmd_decompress(args) -> int:
    archive = ar.deserialize(Path(args.input).read_bytes())
    streams = ar.decompress(archive)
    if args.format == "raw16":
        Path(args.output).write_bytes(write_raw16(streams))
    else:
        Path(args.output).write_text(write_csv(streams, header=args.header), encoding="utf-8")
    print(f"recovered {len(streams)} streams")
    return EXIT_OK


def cmd_stats(args) -> int:
    streams = _load(args)
    config = _config(args)
    rows = []
    for s in streams:
        if s.origin_len:
            e = shannon_entropy(s.symbols)
            rows.append(["stream", s.id, "raw", e.sample_count, f"{e.bits_per_symbol:.6f}", f"{e.h_max:.6f}"])
    per_stage: dict[str, list] = {}
    for j, _members, trace in ar.trace_clusters(streams, config):
        stages = [("interleaved", trace.interleaved.symbols)]
        if trace.bwt is not None:
            stages += [("delta", trace.delta.deltas), ("bwt", trace.bwt.last_column),
                       ("mtf", trace.mtf.indices), ("rle", trace.rle.payload)]
        for name, seq in stages:
            e = shannon_entropy(seq)
            per_stage.setdefault(name, []).append(e)
            rows.append(["cluster", j, name, e.sample_count, f"{e.bits_per_symbol:.6f}", f"{e.h_max:.6f}"])
    for name, reports in per_stage.items():
        rows.append(["mean", "", name, sum(r.sample_count for r in reports),
                     f"{weighted_mean_entropy(reports):.6f}", ""])
    text = _csv_text(["scope", "id", "stage", "n", "entropy", "h_max"], rows,
                     f"recomp stats input={args.input} {config.describe()}")
    _write_text(args.output, text)
    return EXIT_OK


def bench_cell(streams, config: ar.CodecConfig, record: str) -> BenchRow:
    """Compress, verify the round trip, and measure one grid cell."""
    start = time.perf_counter()
    archive = ar.compress(streams, config)
    blob = ar.serialize(archive)
    recovered = ar.decompress(ar.deserialize(blob))
    elapsed = time.perf_counter() - start
    if recovered != list(streams):
        raise CorruptionError(f"round trip failed for {record} {config.describe()}")
    rep = ar.size_report(archive, streams)
    before, after = cluster_entropies(streams, archive)
    return BenchRow(record, config.k, config.cluster_method, config.rle_mode, rep["cr"],
                    weighted_mean_entropy(before), weighted_mean_entropy(after) if after else 0.0,
                    elapsed)


def _bench_job(job):
    streams, config, record = job
    try:
        return bench_cell(streams, config, record), None
    except Exception as exc:  # reported per cell, never as a CR
        return None, f"{record} {config.describe()}: {exc}"


def bench_grid(streams, ks, methods, rles, seeds, threshold, block_len, record_prefix):
    jobs = []
    for seed in seeds:
        for k in ks:
            for method in methods:
                for rle in rles:
                    config = ar.CodecConfig(k, method, rle, threshold, block_len, seed)
                    jobs.append((streams, config, f"{record_prefix}:{seed}"))
    return jobs


def cmd_bench(args) -> int:
    streams = _load(args)
    methods = ["random" if m == "rand" else m for m in args.clusters]
    record = Path(args.input).stem
    jobs = bench_grid(streams, args.ks, methods, args.rles, range(args.seed, args.seed + args.seeds),
                      args.threshold, args.block_len, record)
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_bench_job, jobs))
    else:
        results = [_bench_job(j) for j in jobs]
    rows = [r for r, _ in results if r is not None]
    failures = [msg for _, msg in results if msg is not None]
    for msg in failures:
        log.error("bench cell failed: %s", msg)
    order = {m: i for i, m in enumerate(ar.CLUSTER_METHODS)}
    rows.sort(key=lambda r: (r.record, r.k, order[r.cluster_method], r.rle_mode))
    table = [[r.record, r.k, r.cluster_method, r.rle_mode, f"{r.cr:.6f}", f"{r.entropy_before:.6f}",
              f"{r.entropy_after:.6f}", f"{r.wall_time:.4f}"] for r in rows]
    comment = (f"recomp bench input={args.input} ks={','.join(map(str, args.ks))} "
               f"clusters={','.join(methods)} rles={','.join(args.rles)} threshold={args.threshold} "
               f"block_len={args.block_len} seeds={args.seed}..{args.seed + args.seeds - 1}")
    _write_text(args.output, _csv_text(BENCH_FIELDS, table, comment))
    return EXIT_CORRUPT if failures else EXIT_OK


def cmd_silhouette(args) -> int:
    if any(k < 2 for k in args.k):
        raise ConfigError("silhouette needs k >= 2")
    streams = _load(args)
    data = ar.block_matrix(streams, args.block_len)
    rows = []
    last = None
    for k in args.k:
        if k > data.shape[0]:
            raise ConfigError(f"k={k} exceeds the {data.shape[0]} block rows")
        means = {"kmeans": [], "random": []}
        for seed in range(args.seed, args.seed + args.seeds):
            for method in ("kmeans", "random"):
                if method == "kmeans":
                    c = cl.kmeans(data, k, seed=seed)
                else:
                    c = cl.random_partition(data.shape[0], k, seed)
                report = cl.silhouette(data, c)
                means[method].append(report.mean)
                rows.append([k, seed, method, f"{report.mean:.9f}"])
                last = (c, report) if method == "kmeans" else last
        for method, values in means.items():
            rows.append([k, "mean", method, f"{np.mean(values):.9f}"])
    comment = (f"recomp silhouette input={args.input} k={','.join(map(str, args.k))} "
               f"seeds={args.seed}..{args.seed + args.seeds - 1} block_len={args.block_len}")
    _write_text(args.output, _csv_text(["k", "seed", "method", "mean_silhouette"], rows, comment))
    if args.rows_out and last is not None:
        Path(args.rows_out).write_text(f"# {comment}\n" + cl.assignment_csv(*last), encoding="utf-8")
    return EXIT_OK


# ------------------------------------------------------------------ parser


def _add_input(p):
    p.add_argument("input", help="stream file (raw16 or csv) or directory of csv files")
    p.add_argument("--format", choices=["raw16", "csv"], default="raw16")
    p.add_argument("--header", action="store_true", help="csv input has a header row")
    p.add_argument("--layout", choices=["column", "file"], default="column",
                   help="csv streams are columns of one file, or one file each")
    p.add_argument("--columns", help="comma-separated 0-based csv columns to read")


def _add_codec(p, with_k=True):
    if with_k:
        p.add_argument("--k", type=int, default=8)
        p.add_argument("--cluster", choices=["kmeans", "rand"], default="kmeans")
        p.add_argument("--rle", choices=["static", "dynamic"], default="dynamic")
    p.add_argument("--threshold", type=int, default=3)
    p.add_argument("--block-len", type=int, default=1500)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recomp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic clustered stream set")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--num-streams", type=int, default=56)
    p.add_argument("--block-len", type=int, default=1500)
    p.add_argument("--archetypes", type=int, default=8)
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--max-step", type=int, default=1024)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("compress", help="compress streams into an .smrc archive")
    _add_input(p)
    p.add_argument("output")
    _add_codec(p)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="recover the streams of an .smrc archive")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--format", choices=["raw16", "csv"], default="raw16")
    p.add_argument("--header", action="store_true", help="write a csv header row")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("stats", help="per-stream and per-stage entropy table")
    _add_input(p)
    _add_codec(p)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("bench", help="compression-ratio sweep over the configuration grid")
    _add_input(p)
    _add_codec(p, with_k=False)
    p.add_argument("--ks", type=_int_list, default=[2, 4, 6, 8, 10, 12])
    p.add_argument("--clusters", type=_str_list(["kmeans", "rand", "random"]), default=["kmeans", "rand"])
    p.add_argument("--rles", type=_str_list(["static", "dynamic"]), default=["static", "dynamic"])
    p.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds from --seed")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("silhouette", help="silhouette of k-means vs random partitions")
    _add_input(p)
    p.add_argument("--k", type=_int_list, default=[8])
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--block-len", type=int, default=1500)
    p.add_argument("--rows-out", help="write row,cluster,silhouette for the last k-means run")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_silhouette)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"recomp: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CorruptionError as exc:
        print(f"recomp: corrupt data: {exc}", file=sys.stderr)
        return EXIT_CORRUPT
    except (DataError, OSError) as exc:
        print(f"recomp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
