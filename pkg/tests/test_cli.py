import subprocess
import sys

import pytest

from recomp.cli import BenchRow, main, read_bench_csv
from recomp.stream_model import load_streams


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    assert main(["gen", "--out", str(out), "--num-streams", "16", "--block-len", "300",
                 "--archetypes", "4", "--seed", "3"]) == 0
    return out


def test_gen_writes_all_files(corpus):
    raw = load_streams(corpus / "streams.raw16")
    csv_streams = load_streams(corpus / "streams.csv", "csv", header=True)
    assert raw == csv_streams
    assert len(raw) == 16 and raw[0].origin_len == 300
    labels = (corpus / "labels.csv").read_text().splitlines()
    assert labels[0].startswith("# recomp gen") and labels[1] == "stream,archetype"
    assert len(labels) == 18


@pytest.mark.parametrize("fmt", ["raw16", "csv"])
def test_compress_decompress_round_trip(corpus, tmp_path, capsys, fmt):
    arc = tmp_path / "a.smrc"
    assert main(["compress", str(corpus / "streams.raw16"), str(arc), "--k", "4",
                 "--block-len", "300"]) == 0
    summary = capsys.readouterr().out
    assert "CR=" in summary and "CR_payload=" in summary and "cluster_bits=[" in summary
    out = tmp_path / f"back.{fmt}"
    assert main(["decompress", str(arc), str(out), "--format", fmt, "--header"]) == 0
    back = load_streams(out, fmt, header=True)
    assert back == load_streams(corpus / "streams.raw16")


def test_stats_table(corpus, tmp_path):
    out = tmp_path / "stats.csv"
    assert main(["stats", str(corpus / "streams.raw16"), "--k", "4", "--block-len", "300",
                 "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# recomp stats") and "k=4" in lines[0]
    assert lines[1] == "scope,id,stage,n,entropy,h_max"
    scopes = {line.split(",")[0] for line in lines[2:]}
    assert scopes == {"stream", "cluster", "mean"}
    stages = {line.split(",")[2] for line in lines[2:] if line.startswith("mean")}
    assert stages == {"interleaved", "delta", "bwt", "mtf", "rle"}


def test_bench_grid_sorted_and_parsable(corpus, tmp_path):
    out = tmp_path / "bench.csv"
    assert main(["bench", str(corpus / "streams.raw16"), "--ks", "4,2", "--block-len", "300",
                 "-o", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("# recomp bench")
    rows = read_bench_csv(text)
    assert len(rows) == 8
    assert all(isinstance(r, BenchRow) and r.cr > 0 for r in rows)
    keys = [(r.k, r.cluster_method, r.rle_mode) for r in rows]
    assert keys == sorted(keys, key=lambda t: (t[0], t[1] != "kmeans", t[2]))


def test_bench_parallel_matches_serial(corpus, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["bench", str(corpus / "streams.raw16"), "--ks", "4", "--block-len", "300"]
    assert main(args + ["-o", str(a)]) == 0
    assert main(args + ["--jobs", "2", "-o", str(b)]) == 0
    strip = lambda rows: [(r.k, r.cluster_method, r.rle_mode, r.cr) for r in rows]
    assert strip(read_bench_csv(a.read_text())) == strip(read_bench_csv(b.read_text()))


def test_silhouette_command(corpus, tmp_path):
    out, rows = tmp_path / "sil.csv", tmp_path / "rows.csv"
    assert main(["silhouette", str(corpus / "streams.raw16"), "--k", "2,4", "--seeds", "3",
                 "--block-len", "300", "-o", str(out), "--rows-out", str(rows)]) == 0
    lines = out.read_text().splitlines()
    assert lines[1] == "k,seed,method,mean_silhouette"
    means = {(l.split(",")[0], l.split(",")[2]): float(l.split(",")[3])
             for l in lines[2:] if ",mean," in l}
    assert means[("4", "kmeans")] > means[("4", "random")]
    assert rows.read_text().splitlines()[1] == "row,cluster,silhouette"
    assert main(["silhouette", str(corpus / "streams.raw16"), "--k", "1", "--block-len", "300"]) == 2


def test_exit_codes(corpus, tmp_path, capsys):
    src = str(corpus / "streams.raw16")
    assert main(["compress", src, str(tmp_path / "x"), "--k", "0"]) == 2
    assert main(["compress", src, str(tmp_path / "x"), "--k", "99", "--block-len", "300"]) == 2
    assert main(["compress", str(tmp_path / "missing"), str(tmp_path / "x")]) == 3
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3,oops\n")
    assert main(["compress", str(bad), str(tmp_path / "x"), "--format", "csv", "--k", "1"]) == 3
    arc = tmp_path / "a.smrc"
    assert main(["compress", src, str(arc), "--k", "2", "--block-len", "300"]) == 0
    blob = bytearray(arc.read_bytes())
    blob[-5] ^= 0xFF
    arc.write_bytes(bytes(blob))
    assert main(["decompress", str(arc), str(tmp_path / "y")]) == 4
    assert "cluster" in capsys.readouterr().err
    with pytest.raises(SystemExit) as info:
        main(["compress", src, "x", "--rle", "sometimes"])
    assert info.value.code == 2


def test_module_entry_point_is_deterministic(corpus, tmp_path):
    outs = []
    for name in ("r1.smrc", "r2.smrc"):
        path = tmp_path / name
        subprocess.run([sys.executable, "-m", "recomp", "compress", str(corpus / "streams.raw16"),
                        str(path), "--k", "4", "--block-len", "300"], check=True, capture_output=True)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_summary_cr_matches_file_size(corpus, tmp_path, capsys):
    arc = tmp_path / "c.smrc"
    assert main(["compress", str(corpus / "streams.raw16"), str(arc), "--k", "4",
                 "--block-len", "300"]) == 0
    fields = dict(item.split("=", 1) for item in capsys.readouterr().out.split()
                  if "=" in item and not item.startswith("cluster_bits"))
    expected = 16 * 16 * 300 / (8 * arc.stat().st_size)
    assert float(fields["CR"]) == pytest.approx(expected, abs=5e-5)
