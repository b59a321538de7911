import csv
import json

import numpy as np
import pytest

from sparsead import cli
from sparsead.codes import SparseCode, load_codes, save_codes
from sparsead.dictionary import Dictionary, equal_blocks, load_dictionary, save_dictionary
from sparsead.evaluate import save_masks
from sparsead.features import FeatureMatrix, Provenance, load_features, save_features


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Small clip run through extract and train; returns the directory."""
    d = tmp_path_factory.mktemp("pipe")
    assert run("synth-video", "--frames", 40, "--height", 30, "--width", 46, "--anomaly-rate", 0,
               "--seed", 1, "--video-out", d / "train.vid", "--masks-out", d / "train.msk") == 0
    assert run("synth-video", "--frames", 40, "--height", 30, "--width", 46, "--anomaly-rate", 0.5,
               "--contrast", 0.3, "--seed", 2, "--video-out", d / "test.vid", "--masks-out", d / "test.msk") == 0
    assert run("extract", "--video", d / "train.vid", "--pca-fit", d / "pca.npz", "--pca-dim", 20,
               "--out", d / "train.fea") == 0
    assert run("extract", "--video", d / "test.vid", "--pca-model", d / "pca.npz", "--out", d / "test.fea") == 0
    assert run("train", "--features", d / "train.fea", "--atoms", 40, "--sparsity", 3, "--sweeps", 3,
               "--blocks", 4, "--out", d / "dict") == 0
    return d


def test_encode_cardinality(pipeline, capsys):
    d = pipeline
    assert run("encode", "--features", d / "test.fea", "--dict", d / "dict", "--solver", "omp",
               "--max-iter", 3, "--out", d / "omp.codes", "--csv", d / "omp.csv") == 0
    n = len(load_features(d / "test.fea"))
    codes = load_codes(d / "omp.codes")
    assert len(codes) == n == 32
    assert all(c.nnz() <= 3 for c in codes)
    assert "encode: 32 codes with omp" in capsys.readouterr().out


def test_parallel_encode_matches_serial(pipeline):
    d = pipeline
    for w in (1, 3):
        assert run("encode", "--features", d / "test.fea", "--dict", d / "dict", "--solver", "lasso",
                   "--workers", w, "--out", d / f"lasso{w}.codes") == 0
    assert (d / "lasso1.codes").read_bytes() == (d / "lasso3.codes").read_bytes()


def test_detect_and_evaluate(pipeline, capsys):
    d = pipeline
    run("encode", "--features", d / "test.fea", "--dict", d / "dict", "--max-iter", 3, "--out", d / "c")
    assert run("detect", "--features", d / "test.fea", "--dict", d / "dict", "--codes", d / "c",
               "--detector", "re", "--out", d / "s.csv", "--frames-out", d / "f.csv") == 0
    assert len(read_csv(d / "f.csv")) == 40
    assert run("evaluate", "--scores", d / "s.csv", "--masks", d / "test.msk", "--level", "both",
               "--out", d / "r.json", "--roc-csv", d / "roc.csv", "--figure", d / "roc.png") == 0
    reps = json.loads((d / "r.json").read_text())
    assert [r["level"] for r in reps] == ["frame", "pixel"]
    assert all(0.0 <= r["auc"] <= 1.0 for r in reps)
    assert (d / "roc.png").read_bytes()[:4] == b"\x89PNG"
    assert "evaluate[pixel]" in capsys.readouterr().out


def test_nc_on_unblocked_dictionary(pipeline, tmp_path):
    d = pipeline
    D = load_dictionary(d / "dict")
    save_dictionary(Dictionary(D.atoms), tmp_path / "plain")
    run("encode", "--features", d / "test.fea", "--dict", tmp_path / "plain", "--max-iter", 2,
        "--out", tmp_path / "c")
    code = run("detect", "--features", d / "test.fea", "--dict", tmp_path / "plain", "--codes", tmp_path / "c",
               "--detector", "nc", "--out", tmp_path / "s.csv")
    assert code == 7


def test_are_warning_on_full_span(pipeline, tmp_path, caplog):
    d = pipeline
    assert run("detect", "--features", d / "test.fea", "--dict", d / "dict", "--detector", "are",
               "--out", tmp_path / "s.csv") == 0
    assert "plain ARE is zero" in caplog.text


def test_exit_codes(pipeline, tmp_path, capsys):
    d = pipeline
    assert run("encode", "--features", tmp_path / "missing", "--dict", d / "dict", "--out", tmp_path / "x") == 2
    assert run("encode", "--features", d / "test.fea", "--dict", d / "dict", "--solver", "cosamp",
               "--out", tmp_path / "x") == 2
    assert run("encode", "--features", d / "test.fea") == 2
    assert run("no-such-command") == 2
    assert run() == 2
    (tmp_path / "bad").write_bytes(b"garbage!" * 4)
    assert run("encode", "--features", tmp_path / "bad", "--dict", d / "dict", "--out", tmp_path / "x") == 3
    assert run("encode", "--features", d / "test.fea", "--dict", d / "dict", "--solver", "lasso",
               "--max-iter", 1, "--tol", 1e-15, "--workers", 1, "--out", tmp_path / "x") == 4
    small = Dictionary(np.eye(3))
    save_dictionary(small, tmp_path / "small")
    assert run("encode", "--features", d / "test.fea", "--dict", tmp_path / "small", "--out", tmp_path / "x") == 6
    save_features(FeatureMatrix(np.array([[0.0, 0.0, 1.0]])), tmp_path / "f3")
    save_dictionary(Dictionary(np.eye(3)[:, :2]), tmp_path / "d2")
    assert run("encode", "--features", tmp_path / "f3", "--dict", tmp_path / "d2", "--solver", "bp",
               "--out", tmp_path / "x") == 5
    save_features(FeatureMatrix(np.ones((0, 3))), tmp_path / "empty")
    assert run("train", "--features", tmp_path / "empty", "--atoms", 2, "--sparsity", 1,
               "--out", tmp_path / "x") == 8
    err = capsys.readouterr().err
    assert "no training data" in err and "infeasible" in err


def test_config_file_and_flag_precedence(pipeline, tmp_path, monkeypatch):
    d = pipeline
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"[encode]\nfeatures = {d / 'test.fea'}\ndict = {d / 'dict'}\nsolver = omp\nmax_iter = 1\n")
    assert run("--config", cfg, "encode", "--out", tmp_path / "a") == 0
    assert max(c.nnz() for c in load_codes(tmp_path / "a")) == 1
    monkeypatch.setenv("SPARSEAD_CONFIG", str(cfg))
    assert run("encode", "--max-iter", 2, "--out", tmp_path / "b") == 0
    assert max(c.nnz() for c in load_codes(tmp_path / "b")) == 2
    cfg.write_text("[encode]\nmax_iter = many\n")
    assert run("--config", cfg, "encode", "--out", tmp_path / "c") == 2
    assert run("--config", tmp_path / "nope.ini", "encode") == 2


def test_bench_codes(tmp_path, capsys):
    assert run("synth-recovery", "--p", 16, "--m", 40, "--k", 3, "--trials", 10, "--seed", 5,
               "--dict-out", tmp_path / "d", "--features-out", tmp_path / "f", "--truth-out", tmp_path / "t") == 0
    truth = load_codes(tmp_path / "t")
    assert len(truth) == 10 and all(c.nnz() == 3 for c in truth)
    for name in ("a", "b"):
        assert run("bench-codes", "--features", tmp_path / "f", "--dict", tmp_path / "d",
                   "--solvers", "omp,bp", "--omp-max-iter", 2, "--out", tmp_path / f"{name}.csv",
                   "--figure", tmp_path / f"{name}.png") == 0
    rows = read_csv(tmp_path / "a.csv")
    assert list(rows[0]) == cli.BENCH_CODE_FIELDS
    assert [r["solver"] for r in rows] == ["omp", "bp"]
    assert float(rows[1]["mean_error"]) <= 1e-8
    assert float(rows[1]["raw_sparsity_pct"]) == 100.0
    assert len(rows[0]["time_s"].split(".")[1]) == 3
    strip = [{k: v for k, v in r.items() if k != "time_s"} for r in rows]
    assert strip == [{k: v for k, v in r.items() if k != "time_s"} for r in read_csv(tmp_path / "b.csv")]
    assert (tmp_path / "a.png").stat().st_size > 0


def test_bench_codes_records_failures(tmp_path):
    run("synth-recovery", "--p", 8, "--m", 16, "--k", 2, "--trials", 3, "--dict-out", tmp_path / "d",
        "--features-out", tmp_path / "f")
    assert run("bench-codes", "--features", tmp_path / "f", "--dict", tmp_path / "d", "--solvers",
               "bp,omp", "--bp-max-iter", 1, "--out", tmp_path / "o.csv") == 0
    rows = read_csv(tmp_path / "o.csv")
    assert rows[0]["status"].startswith("error") and rows[1]["status"] == "ok"
    assert run("bench-codes", "--features", tmp_path / "f", "--dict", tmp_path / "d", "--solvers", "",
               "--out", tmp_path / "o.csv") == 2


@pytest.fixture
def perfect(tmp_path):
    """Four frames whose features every detector separates perfectly."""
    D = Dictionary(np.eye(4), equal_blocks(4, 2))
    save_dictionary(D, tmp_path / "d")
    normal, odd = np.eye(4)[0], np.ones(4)
    Y = np.array([normal, odd, normal, odd])
    prov = [Provenance(f, 1, 0, 0, (0, 0, 23, 15)) for f in range(4)]
    save_features(FeatureMatrix(Y, prov), tmp_path / "f")
    codes = [SparseCode(np.eye(4)[0], (0,), 0.0, 1) if f % 2 == 0 else SparseCode(np.zeros(4), (), 2.0, 0)
             for f in range(4)]
    save_codes(codes, tmp_path / "c")
    masks = np.zeros((4, 15, 23), dtype=bool)
    masks[[1, 3], 2:8, 3:12] = True
    save_masks(masks, tmp_path / "m")
    return tmp_path


def test_bench_detect_grid(perfect):
    d = perfect
    assert run("bench-detect", "--features", d / "f", "--dict", d / "d", "--codes", f"omp={d / 'c'}",
               "--masks", d / "m", "--blockwise-are", "--out", d / "a.csv", "--figure", d / "a.png") == 0
    rows = read_csv(d / "a.csv")
    assert list(rows[0]) == cli.BENCH_DETECT_FIELDS
    assert [(r["solver"], r["detector"]) for r in rows] == [("omp", m) for m in ("re", "are", "mc", "nc")]
    assert all(float(r["frame_auc"]) == 1.0 and float(r["pixel_auc"]) == 1.0 for r in rows)
    assert run("bench-detect", "--features", d / "f", "--dict", d / "d", "--codes", f"omp={d / 'c'}",
               "--masks", d / "m", "--blockwise-are", "--detectors", "nc,mc,are,re", "--out", d / "b.csv") == 0
    assert (d / "a.csv").read_bytes() == (d / "b.csv").read_bytes()


def test_bench_detect_multiple_solvers(perfect):
    d = perfect
    assert run("bench-detect", "--features", d / "f", "--dict", d / "d", "--codes", f"lasso={d / 'c'}",
               "--codes", f"omp={d / 'c'}", "--detectors", "re,mc", "--masks", d / "m",
               "--out", d / "a.csv") == 0
    rows = read_csv(d / "a.csv")
    assert [(r["solver"], r["detector"]) for r in rows] == [("omp", "re"), ("omp", "mc"),
                                                            ("lasso", "re"), ("lasso", "mc")]


def test_bench_detect_records_cell_failures(perfect):
    d = perfect
    save_dictionary(Dictionary(np.eye(4)), d / "plain")
    assert run("bench-detect", "--features", d / "f", "--dict", d / "plain", "--codes", f"omp={d / 'c'}",
               "--masks", d / "m", "--out", d / "a.csv") == 0
    rows = {r["detector"]: r for r in read_csv(d / "a.csv")}
    assert rows["nc"]["status"].startswith("error") and rows["re"]["status"] == "ok"


def test_extract_from_pgm(tmp_path):
    rng = np.random.default_rng(0)
    for i in range(5):
        img = (rng.random((15, 23)) * 255).astype(np.uint8)
        (tmp_path / f"{i:03d}.pgm").write_bytes(b"P5 23 15 255\n" + img.tobytes())
    assert run("extract", "--pgm-dir", tmp_path, "--out", tmp_path / "f") == 0
    assert load_features(tmp_path / "f").vectors.shape == (1, 500)
    assert run("extract", "--pgm-dir", tmp_path, "--video", tmp_path / "f", "--out", tmp_path / "g") == 2


def test_synth_video_masks_are_optional(tmp_path):
    assert run("synth-video", "--frames", 10, "--height", 30, "--width", 46, "--anomaly-rate", 0,
               "--video-out", tmp_path / "v") == 0
    assert [p.name for p in tmp_path.iterdir()] == ["v"]
    assert run("synth-video", "--frames", 10, "--height", 30, "--width", 46) == 2
