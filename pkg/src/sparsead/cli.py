"""Command line pipeline: ``sparsead <subcommand> [options]``.

Every option may also come from an INI config file (``--config`` or the
``SPARSEAD_CONFIG`` environment variable). Keys live in a section named
after the subcommand, or in ``[DEFAULT]``, and use the option name with
underscores (``max_iter``). Flags given on the command line win.

Exit codes: 0 ok, 2 usage, 3 file format, 4 numerical failure,
5 infeasible, 6 dimension mismatch, 7 NC/blockwise ARE without a block
partition, 8 missing data.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import logging
import os
import sys
import time

import numpy as np

from sparsead import codes as codes_mod
from sparsead import datagen, detect, dictionary, evaluate, features, plotting
from sparsead.convex import ConvexConfig
from sparsead.encode import GREEDY, SOLVERS, encode_batch
from sparsead.errors import BlockPartitionError, SparseAdError
from sparsead.pursuit import PursuitConfig

log = logging.getLogger("sparsead")

CONFIG_ENV = "SPARSEAD_CONFIG"
EXIT_OK, EXIT_USAGE = 0, 2

_OPTIONS: dict[str, dict[str, tuple]] = {}


class UsageError(Exception):
    pass


def _flag(value):
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "yes", "true", "on"):
        return True
    if v in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _csv_list(value):
    return [v.strip().lower() for v in str(value).split(",") if v.strip()]


def _opt(sp, cmd, flag, type=str, default=None, help=None, boolean=False, **kw):
    dest = flag.lstrip("-").replace("-", "_")
    _OPTIONS.setdefault(cmd, {})[dest] = (_flag if boolean else type, default)
    if boolean:
        sp.add_argument(flag, dest=dest, action="store_const", const=True, default=None, help=help)
    else:
        if default is not None and help:
            shown = ",".join(default) if isinstance(default, (list, tuple)) else default
            help = f"{help} (default: {shown})"
        sp.add_argument(flag, dest=dest, type=type, default=None, help=help, **kw)


def _resolve(args, config):
    cmd = args.command
    section = config[cmd] if config.has_section(cmd) else config[configparser.DEFAULTSECT]
    for dest, (conv, default) in _OPTIONS.get(cmd, {}).items():
        if getattr(args, dest) is not None:
            continue
        if dest in section:
            try:
                setattr(args, dest, conv(section[dest]))
            except ValueError as exc:
                raise UsageError(f"config key {cmd}.{dest}: {exc}") from exc
        else:
            setattr(args, dest, default)
    return args


def _require(args, *names):
    def flag(n):
        return "--" + _FLAG_NAMES.get(n, n).replace("_", "-")

    missing = [n for n in names if getattr(args, n) in (None, "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join(flag(n) for n in missing))
    for n in names:
        if n in _INPUTS and not os.path.exists(getattr(args, n)):
            raise UsageError(f"{flag(n)}: no such file {getattr(args, n)!r}")


_FLAG_NAMES = {"codes_file": "codes"}
_INPUTS = {"features", "dict", "codes_file", "video", "masks", "scores"}


def _summary(msg):
    print(msg, flush=True)


# --- subcommands --------------------------------------------------------------

def cmd_synth_recovery(args):
    _require(args, "dict_out", "features_out")
    inst = datagen.gen_recovery(args.p, args.m, args.k, args.sigma, args.trials, args.seed,
                                shared_dictionary=True)
    D = inst[0].D
    if args.blocks:
        D = D.with_blocks(dictionary.equal_blocks(D.m, args.blocks))
    dictionary.save_dictionary(D, args.dict_out)
    features.save_features(features.FeatureMatrix(np.array([i.y for i in inst])), args.features_out)
    if args.truth_out:
        truth = [codes_mod.make_code(D.atoms, i.y, i.x_star, np.flatnonzero(i.x_star), 0) for i in inst]
        codes_mod.save_codes(truth, args.truth_out, m=D.m)
    _summary(f"synth-recovery: {args.trials} instances, D {args.p}x{args.m}, k={args.k}, sigma={args.sigma}")


def cmd_synth_video(args):
    _require(args, "video_out")
    scene = datagen.gen_scene(args.frames, args.height, args.width, args.anomaly_rate, args.seed,
                              speed=args.speed, contrast=args.contrast)
    features.save_video(scene.video, args.video_out)
    if args.masks_out:
        evaluate.save_masks(scene.pixel_masks, args.masks_out)
    n_abn = sum(scene.frame_labels.values())
    _summary(f"synth-video: {args.frames} frames {args.height}x{args.width}, "
             f"{len(scene.events)} event(s), {n_abn} abnormal frame(s)")


def cmd_extract(args):
    _require(args, "out")
    if bool(args.video) == bool(args.pgm_dir):
        raise UsageError("give exactly one of --video or --pgm-dir")
    if args.pca_fit and args.pca_model:
        raise UsageError("--pca-fit and --pca-model are mutually exclusive")
    if args.video:
        _require(args, "video")
        video = features.load_video(args.video)
    else:
        video = features.load_pgm_sequence(args.pgm_dir)
    t0 = time.perf_counter()
    fm = features.extract_features(video, args.patch_w, args.patch_h, args.depth)
    if args.pca_fit:
        model = features.pca_fit(fm, args.pca_dim)
        features.save_pca(model, args.pca_fit)
        fm = features.pca_apply(model, fm)
    elif args.pca_model:
        fm = features.pca_apply(features.load_pca(args.pca_model), fm)
    elapsed = time.perf_counter() - t0
    features.save_features(fm, args.out)
    _summary(f"extract: {len(fm)} features of dimension {fm.dim} in {elapsed:.3f}s")


def cmd_train(args):
    _require(args, "features", "out")
    fm = features.load_features(args.features)
    cfg = dictionary.TrainConfig(atom_count=args.atoms, sparsity=args.sparsity, sweeps=args.sweeps,
                                 seed=args.seed, tol=args.tol, blocks=args.blocks or None)
    t0 = time.perf_counter()
    D, hist = dictionary.ksvd_train(fm.vectors, cfg, return_history=True)
    elapsed = time.perf_counter() - t0
    dictionary.save_dictionary(D, args.out)
    if args.csv:
        dictionary.export_csv(D, args.csv)
    _summary(f"train: {D.p}x{D.m} dictionary, {len(hist)} sweep(s), "
             f"final squared error {hist[-1]:.6g}, {elapsed:.3f}s")


def _solver_config(args, solver, max_iter=None):
    max_iter = max_iter if max_iter is not None else args.max_iter
    if solver in GREEDY:
        return PursuitConfig(max_iter=max_iter, residual_tol=args.residual_tol,
                             stomp_threshold=args.stomp_threshold, stomp_stages=args.stomp_stages)
    kw = {"lam": args.lam, "epsilon": args.epsilon, "rho": args.rho}
    if max_iter is not None:
        kw["max_iter"] = max_iter
    if args.tol is not None:
        kw["tol"] = args.tol
    return ConvexConfig(**kw)


def cmd_encode(args):
    _require(args, "features", "dict", "out")
    if args.solver not in SOLVERS:
        raise UsageError(f"unknown solver {args.solver!r}; choose from {', '.join(SOLVERS)}")
    fm = features.load_features(args.features)
    D = dictionary.load_dictionary(args.dict)
    cfg = _solver_config(args, args.solver)
    t0 = time.perf_counter()
    codes = encode_batch(D, fm.vectors, args.solver, cfg, workers=args.workers)
    elapsed = time.perf_counter() - t0
    codes_mod.save_codes(codes, args.out, m=D.m)
    if args.csv:
        codes_mod.export_csv(codes, args.csv)
    density = np.mean([c.density() for c in codes]) if codes else 0.0
    _summary(f"encode: {len(codes)} codes with {args.solver}, mean density {100 * density:.2f}%, {elapsed:.3f}s")


def _load_codes_for(path, n, m):
    codes = codes_mod.load_codes(path)
    if len(codes) != n:
        raise SparseAdError(f"{path}: {len(codes)} codes for {n} features")
    if codes and codes[0].m != m:
        raise SparseAdError(f"{path}: codes have length {codes[0].m}, dictionary has {m} atoms")
    return codes


def _score(fm, D, codes, detector, blockwise_are):
    scores = detect.score_features(fm.vectors, codes, D, detector, blockwise_are=blockwise_are)
    return detect.aggregate_frames(scores, fm.provenance, detector)


def cmd_detect(args):
    _require(args, "features", "dict", "out")
    if args.detector not in detect.METHODS:
        raise UsageError(f"unknown detector {args.detector!r}; choose from {', '.join(detect.METHODS)}")
    fm = features.load_features(args.features)
    if not fm.provenance:
        raise UsageError(f"{args.features}: features carry no frame provenance")
    D = dictionary.load_dictionary(args.dict)
    codes = None
    if args.detector != "are":
        _require(args, "codes_file")
        codes = _load_codes_for(args.codes_file, len(fm), D.m)
    elif args.codes_file:
        _require(args, "codes_file")
    if args.detector == "nc" and D.blocks is None:
        raise BlockPartitionError("NC requires blocked dictionary")
    ss = _score(fm, D, codes, args.detector, args.blockwise_are)
    detect.save_scores(ss, args.out, args.frames_out)
    _summary(f"detect: {len(ss.per_feature)} feature scores, {len(ss.per_frame)} frame scores ({args.detector})")


def _load_scored(args):
    return detect.load_scores(args.scores, args.patch_w, args.patch_h, args.depth)


def cmd_evaluate(args):
    _require(args, "scores", "masks", "out")
    if args.level not in ("frame", "pixel", "both"):
        raise UsageError("--level must be frame, pixel or both")
    ss = _load_scored(args)
    gt = evaluate.GroundTruth.from_masks(evaluate.load_masks(args.masks))
    reports = []
    if args.level in ("frame", "both"):
        reports.append(evaluate.roc_frame(ss, gt))
    if args.level in ("pixel", "both"):
        reports.append(evaluate.roc_pixel(ss, gt, args.overlap))
    evaluate.write_report(reports[0] if len(reports) == 1 else reports, args.out)
    if args.roc_csv:
        evaluate.write_roc_csv(reports[0], args.roc_csv)
    if args.figure:
        plotting.plot_roc({r.level: r for r in reports}, args.figure, title="ROC")
    for r in reports:
        extra = f", EDR {r.edr:.4f}" if r.edr is not None else ""
        _summary(f"evaluate[{r.level}]: AUC {r.auc:.4f}, EER {r.eer:.4f}{extra}")


BENCH_CODE_FIELDS = ["solver", "time_s", "mean_error", "sparsity_pct", "raw_sparsity_pct", "status"]


def bench_codes(D, Y, solvers, configs, workers=1):
    """Rows of ``BENCH_CODE_FIELDS`` for each solver (failures recorded, not raised)."""
    rows = []
    for s in solvers:
        try:
            t0 = time.perf_counter()
            codes = encode_batch(D, Y, s, configs[s], workers=workers)
            elapsed = time.perf_counter() - t0
        except (SparseAdError, ValueError, np.linalg.LinAlgError) as exc:
            rows.append({"solver": s, "time_s": "", "mean_error": "", "sparsity_pct": "",
                         "raw_sparsity_pct": "", "status": f"error: {exc}"})
            continue
        rows.append({
            "solver": s,
            "time_s": f"{elapsed:.3f}",
            "mean_error": repr(float(np.mean([c.residual_norm ** 2 for c in codes]))),
            "sparsity_pct": repr(float(100 * np.mean([c.density(truncate=True) for c in codes]))),
            "raw_sparsity_pct": repr(float(100 * np.mean([c.density(truncate=False) for c in codes]))),
            "status": "ok",
        })
    return rows


def _write_csv(rows, fields, path):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields)
        w.writeheader()
        w.writerows(rows)


def cmd_bench_codes(args):
    _require(args, "features", "dict", "out")
    solvers = args.solvers
    bad = [s for s in solvers if s not in SOLVERS]
    if not solvers or bad:
        raise UsageError(f"--solvers needs one or more of {', '.join(SOLVERS)}; got {bad or 'none'}")
    fm = features.load_features(args.features)
    D = dictionary.load_dictionary(args.dict)
    per_solver_iter = {"omp": args.omp_max_iter, "mp": args.mp_max_iter,
                       "bp": args.bp_max_iter, "lasso": args.lasso_max_iter}
    configs = {s: _solver_config(args, s, per_solver_iter.get(s)) for s in solvers}
    rows = bench_codes(D, fm.vectors, solvers, configs, workers=args.workers)
    _write_csv(rows, BENCH_CODE_FIELDS, args.out)
    if args.figure:
        plotting.plot_code_bench(rows, args.figure)
    for r in rows:
        if r["status"] == "ok":
            _summary(f"bench-codes[{r['solver']}]: {r['time_s']}s, error {float(r['mean_error']):.4g}, "
                     f"{float(r['sparsity_pct']):.2f}% non-zeros ({float(r['raw_sparsity_pct']):.2f}% raw)")
        else:
            _summary(f"bench-codes[{r['solver']}]: {r['status']}")


BENCH_DETECT_FIELDS = ["solver", "detector", "frame_auc", "eer", "pixel_auc", "edr", "status"]


def _parse_codes_map(items):
    out = {}
    for item in items or []:
        for part in str(item).split(","):
            if not part.strip():
                continue
            if "=" not in part:
                raise UsageError(f"--codes expects SOLVER=PATH, got {part!r}")
            name, path = part.split("=", 1)
            out[name.strip().lower()] = path.strip()
    return out


def cmd_bench_detect(args):
    _require(args, "features", "dict", "masks", "out")
    code_paths = _parse_codes_map(args.codes)
    if not code_paths:
        raise UsageError("--codes SOLVER=PATH is required at least once")
    for path in code_paths.values():
        if not os.path.exists(path):
            raise UsageError(f"--codes: no such file {path!r}")
    dets = args.detectors
    bad = [d for d in dets if d not in detect.METHODS]
    if not dets or bad:
        raise UsageError(f"--detectors needs one or more of {', '.join(detect.METHODS)}; got {bad or 'none'}")
    fm = features.load_features(args.features)
    if not fm.provenance:
        raise UsageError(f"{args.features}: features carry no frame provenance")
    D = dictionary.load_dictionary(args.dict)
    gt = evaluate.GroundTruth.from_masks(evaluate.load_masks(args.masks))
    order = sorted(code_paths, key=lambda s: (SOLVERS.index(s) if s in SOLVERS else len(SOLVERS), s))
    dets = [d for d in detect.METHODS if d in dets]
    rows, curves = [], {}
    for solver in order:
        try:
            codes = _load_codes_for(code_paths[solver], len(fm), D.m)
        except SparseAdError as exc:
            rows += [{"solver": solver, "detector": d, "frame_auc": "", "eer": "", "pixel_auc": "",
                      "edr": "", "status": f"error: {exc}"} for d in dets]
            continue
        for d in dets:
            try:
                ss = _score(fm, D, codes, d, args.blockwise_are)
                fr = evaluate.roc_frame(ss, gt)
                px = evaluate.roc_pixel(ss, gt, args.overlap)
            except SparseAdError as exc:
                rows.append({"solver": solver, "detector": d, "frame_auc": "", "eer": "", "pixel_auc": "",
                             "edr": "", "status": f"error: {exc}"})
                continue
            curves[f"{solver}+{d}"] = fr
            rows.append({"solver": solver, "detector": d, "frame_auc": repr(fr.auc), "eer": repr(fr.eer),
                         "pixel_auc": repr(px.auc), "edr": repr(px.edr), "status": "ok"})
    _write_csv(rows, BENCH_DETECT_FIELDS, args.out)
    if args.figure and curves:
        plotting.plot_roc(curves, args.figure, title="frame-level ROC")
    for r in rows:
        if r["status"] == "ok":
            _summary(f"bench-detect[{r['solver']}+{r['detector']}]: frame AUC {float(r['frame_auc']):.4f}, "
                     f"EER {float(r['eer']):.4f}, pixel AUC {float(r['pixel_auc']):.4f}, EDR {float(r['edr']):.4f}")
        else:
            _summary(f"bench-detect[{r['solver']}+{r['detector']}]: {r['status']}")


# --- parser -----------------------------------------------------------------

def _solver_options(sp, cmd):
    _opt(sp, cmd, "--max-iter", int, help="greedy iterations / convex iterations or sweeps")
    _opt(sp, cmd, "--residual-tol", float, 1e-6, "greedy stopping residual norm")
    _opt(sp, cmd, "--stomp-threshold", float, 2.5, "StOMP threshold multiplier")
    _opt(sp, cmd, "--stomp-stages", int, 10, "StOMP stage limit")
    _opt(sp, cmd, "--lam", float, help="Lasso weight (default 0.1*max|D^T y| per feature)")
    _opt(sp, cmd, "--epsilon", float, 0.0, "BP noise bound")
    _opt(sp, cmd, "--rho", float, 1.0, "BP ADMM penalty")
    _opt(sp, cmd, "--tol", float, help="convex convergence tolerance (default 1e-6)")
    _opt(sp, cmd, "--workers", int, os.cpu_count() or 1, "encoding processes")


def _geometry_options(sp, cmd):
    _opt(sp, cmd, "--patch-w", int, features.PATCH_W, "patch width")
    _opt(sp, cmd, "--patch-h", int, features.PATCH_H, "patch height")
    _opt(sp, cmd, "--depth", int, features.DEPTH, "frames per cube")


def build_parser():
    _OPTIONS.clear()
    parser = argparse.ArgumentParser(prog="sparsead", description=__doc__.split("\n")[0])
    parser.add_argument("--config", help=f"INI config file (default: ${CONFIG_ENV})")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add(name, func, help):
        sp = sub.add_parser(name, help=help, description=help)
        sp.set_defaults(func=func)
        _opt(sp, name, "--seed", int, 0, "random seed")
        return sp

    sp = add("synth-recovery", cmd_synth_recovery, "generate sparse recovery instances")
    _opt(sp, "synth-recovery", "--p", int, 32, "feature dimension")
    _opt(sp, "synth-recovery", "--m", int, 128, "atom count")
    _opt(sp, "synth-recovery", "--k", int, 4, "non-zeros per signal")
    _opt(sp, "synth-recovery", "--sigma", float, 0.0, "noise level")
    _opt(sp, "synth-recovery", "--trials", int, 40, "number of signals")
    _opt(sp, "synth-recovery", "--blocks", int, 0, "equal atom blocks to record (0 = none)")
    _opt(sp, "synth-recovery", "--dict-out", help="dictionary file to write")
    _opt(sp, "synth-recovery", "--features-out", help="feature file to write")
    _opt(sp, "synth-recovery", "--truth-out", help="codes file for the true sparse vectors")

    sp = add("synth-video", cmd_synth_video, "generate a synthetic clip with planted anomalies")
    _opt(sp, "synth-video", "--frames", int, 200, "frame count")
    _opt(sp, "synth-video", "--height", int, 60, "frame height")
    _opt(sp, "synth-video", "--width", int, 92, "frame width")
    _opt(sp, "synth-video", "--anomaly-rate", float, 0.3, "fraction of abnormal frames")
    _opt(sp, "synth-video", "--contrast", float, 0.05, "blob brightness over background")
    _opt(sp, "synth-video", "--speed", float, 1.0, "blob speed in pixels per frame")
    _opt(sp, "synth-video", "--video-out", help="video file to write")
    _opt(sp, "synth-video", "--masks-out", help="ground-truth mask file to write")

    sp = add("extract", cmd_extract, "cube gradient features (optionally PCA-reduced)")
    _opt(sp, "extract", "--video", help="input video file")
    _opt(sp, "extract", "--pgm-dir", help="directory of PGM frames")
    _opt(sp, "extract", "--out", help="feature file to write")
    _opt(sp, "extract", "--pca-fit", help="fit PCA on these features and save the model here")
    _opt(sp, "extract", "--pca-model", help="apply a saved PCA model")
    _opt(sp, "extract", "--pca-dim", int, 100, "PCA output dimension")
    _geometry_options(sp, "extract")

    sp = add("train", cmd_train, "learn a dictionary with K-SVD")
    _opt(sp, "train", "--features", help="training feature file")
    _opt(sp, "train", "--out", help="dictionary file to write")
    _opt(sp, "train", "--atoms", int, 1000, "atom count")
    _opt(sp, "train", "--sparsity", int, 5, "non-zeros per training code")
    _opt(sp, "train", "--sweeps", int, 20, "K-SVD sweeps")
    _opt(sp, "train", "--tol", float, 1e-8, "stop once the total squared error is below this")
    _opt(sp, "train", "--blocks", int, 10, "equal atom blocks for NC (0 = none)")
    _opt(sp, "train", "--csv", help="also export atoms as CSV")

    sp = add("encode", cmd_encode, "sparse-code features")
    _opt(sp, "encode", "--features", help="feature file")
    _opt(sp, "encode", "--dict", help="dictionary file")
    _opt(sp, "encode", "--solver", str.lower, "omp", f"one of {', '.join(SOLVERS)}")
    _opt(sp, "encode", "--out", help="codes file to write")
    _opt(sp, "encode", "--csv", help="also export codes as CSV")
    _solver_options(sp, "encode")

    sp = add("detect", cmd_detect, "score features with a detection measurement")
    _opt(sp, "detect", "--features", help="feature file")
    _opt(sp, "detect", "--dict", help="dictionary file")
    _opt(sp, "detect", "--codes", help="codes file (not needed for ARE)")
    _opt(sp, "detect", "--detector", str.lower, "re", f"one of {', '.join(detect.METHODS)}")
    _opt(sp, "detect", "--blockwise-are", help="ARE as the minimum over atom blocks", boolean=True)
    _opt(sp, "detect", "--out", help="feature scores CSV to write")
    _opt(sp, "detect", "--frames-out", help="frame scores CSV to write")

    sp = add("evaluate", cmd_evaluate, "frame/pixel-level ROC, AUC, EER, EDR")
    _opt(sp, "evaluate", "--scores", help="feature scores CSV")
    _opt(sp, "evaluate", "--masks", help="ground-truth mask file")
    _opt(sp, "evaluate", "--level", str.lower, "frame", "frame, pixel or both")
    _opt(sp, "evaluate", "--overlap", float, 0.40, "pixel-level coverage needed")
    _opt(sp, "evaluate", "--out", help="report JSON to write")
    _opt(sp, "evaluate", "--roc-csv", help="ROC points CSV (first level)")
    _opt(sp, "evaluate", "--figure", help="ROC figure to write (png/pdf/svg)")
    _geometry_options(sp, "evaluate")

    sp = add("bench-codes", cmd_bench_codes, "time/error/sparsity comparison of solvers")
    _opt(sp, "bench-codes", "--features", help="feature file")
    _opt(sp, "bench-codes", "--dict", help="dictionary file")
    _opt(sp, "bench-codes", "--solvers", _csv_list, list(SOLVERS), "comma-separated solvers")
    _opt(sp, "bench-codes", "--omp-max-iter", int, help="OMP iteration cap")
    _opt(sp, "bench-codes", "--mp-max-iter", int, help="MP iteration cap")
    _opt(sp, "bench-codes", "--bp-max-iter", int, help="BP iteration cap")
    _opt(sp, "bench-codes", "--lasso-max-iter", int, help="Lasso sweep cap")
    _opt(sp, "bench-codes", "--out", help="CSV to write")
    _opt(sp, "bench-codes", "--figure", help="bar chart to write")
    _solver_options(sp, "bench-codes")

    sp = add("bench-detect", cmd_bench_detect, "solver x detector evaluation grid")
    _opt(sp, "bench-detect", "--features", help="feature file")
    _opt(sp, "bench-detect", "--dict", help="dictionary file")
    sp.add_argument("--codes", action="append", metavar="SOLVER=PATH", help="codes file per solver")
    _OPTIONS["bench-detect"]["codes"] = (lambda v: [v], None)
    _opt(sp, "bench-detect", "--detectors", _csv_list, list(detect.METHODS), "comma-separated detectors")
    _opt(sp, "bench-detect", "--masks", help="ground-truth mask file")
    _opt(sp, "bench-detect", "--blockwise-are", help="ARE as the minimum over atom blocks", boolean=True)
    _opt(sp, "bench-detect", "--overlap", float, 0.40, "pixel-level coverage needed")
    _opt(sp, "bench-detect", "--out", help="CSV to write")
    _opt(sp, "bench-detect", "--figure", help="ROC figure to write")
    return parser


def _load_config(path):
    config = configparser.ConfigParser()
    if path:
        if not os.path.exists(path):
            raise UsageError(f"config file {path!r} not found")
        config.read(path)
    return config


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.command:
        parser.print_help()
        return EXIT_USAGE
    try:
        config = _load_config(args.config or os.environ.get(CONFIG_ENV))
        _resolve(args, config)
        if args.command == "detect":
            # detect takes a single codes file; bench-detect takes a list
            args.codes_file = args.codes
        args.func(args)
    except UsageError as exc:
        print(f"sparsead {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SparseAdError as exc:
        print(f"sparsead {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"sparsead {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
