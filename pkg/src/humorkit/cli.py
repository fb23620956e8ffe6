"""Command-line entry point wiring the pipeline stages.

Every subcommand reads declared inputs, writes its outputs plus a run
manifest into --out, and exits 0 on success, 2 on validation failures, and 3
on numerical failures. Report-producing stages (agree, stats, eval, train)
render matplotlib figures next to their delimited outputs.
"""

import argparse
import csv
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, fileio, pipeline, plots
from .agreement import binary_humor, discretize, krippendorff_alpha, mean_agreement_matrix
from .dataset import loso_split, write_split_csv
from .errors import HumorkitError, NumericalError, ValidationError
from .evaluate import (
    PredictionSet,
    aggregate_results,
    comparison_table,
    format_results_text,
    late_fuse,
    roc_auc,
)
from .features import (
    align_sentences,
    read_feature_csv,
    read_feature_hfz,
    read_sentence_spans,
    segment_sequences,
    write_feature_csv,
    write_sentence_spans,
)
from .gold import corpus_stats
from .manifest import write_manifest
from .neural import (
    Clip,
    GruConfig,
    GruModel,
    GruTask,
    TrainConfig,
    VfmmConfig,
    VfmmModel,
    VfmmTask,
    param_count,
    save_checkpoint,
    train,
)
from .plots import STYLE_ORDER
from .preprocess import FRAME_MS, PreprocessConfig, preprocess_all
from .synth import SynthConfig, generate_corpus


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        config = json.load(fh)
    if not isinstance(config, dict):
        raise ValidationError(f"{path}: config file must contain a JSON object")
    return config


def _options(args, file_config: dict, section: str, defaults: dict) -> dict:
    """defaults <- config-file section <- explicitly set CLI flags."""
    merged = dict(defaults)
    merged.update(file_config.get(section, {}))
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- synth


def cmd_synth(args) -> int:
    file_config = _load_config_file(args.config)
    opts = _options(
        args,
        file_config,
        "synth",
        {
            "coaches": 4,
            "annotators": 9,
            "minutes": 5.0,
            "videos_per_coach": 3,
            "noise": 0.3,
            "episodes_per_minute": 2.0,
            "seed": 0,
        },
    )
    out = _out_dir(args)
    corpus = generate_corpus(SynthConfig(**opts))

    fileio.write_videos_csv(out / "videos.csv", corpus.video_coach, corpus.video_frames)
    fileio.write_annotations_csv(out / "annotations.csv", corpus.annotations)

    with open(out / "ground_truth.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["coach_id", "video_id", "t_ms", "sentiment", "direction"])
        for video in sorted(corpus.video_coach):
            sent = corpus.truth_sentiment[video]
            dire = corpus.truth_direction[video]
            for t in np.flatnonzero((sent != 0) | (dire != 0)):
                writer.writerow(
                    [corpus.video_coach[video], video, int(t) * FRAME_MS,
                     str(sent[t]), str(dire[t])]
                )

    features_dir = out / "features"
    features_dir.mkdir(exist_ok=True)
    outputs = [out / "videos.csv", out / "annotations.csv", out / "ground_truth.csv"]
    for (video, modality), features in sorted(corpus.features.items()):
        path = features_dir / f"{video}__{modality}.csv"
        write_feature_csv(path, features)
        outputs.append(path)
    spans = [s for video in sorted(corpus.sentences) for s in corpus.sentences[video]]
    dim = len(spans[0].vector) if spans else 0
    write_sentence_spans(features_dir / "sentences.csv", spans, dim)
    outputs.append(features_dir / "sentences.csv")

    write_manifest(out, "synth", opts, [], outputs, seed=opts["seed"])
    print(f"synth: {len(corpus.video_coach)} videos, {len(corpus.annotations)} signals -> {out}")
    return 0


# ---------------------------------------------------------------- preprocess


def cmd_preprocess(args) -> int:
    file_config = _load_config_file(args.config)
    opts = _options(
        args,
        file_config,
        "preprocess",
        {"amplitude_threshold": 0.05, "outlier_sigma": 2.5, "normalize_mode": "signed_separate"},
    )
    out = _out_dir(args)
    annotations = Path(args.annotations)
    videos = Path(args.videos) if args.videos else annotations.parent / "videos.csv"
    signals = fileio.read_annotations_csv(annotations, videos)
    processed = preprocess_all(signals, PreprocessConfig(**opts))
    fileio.write_annotations_csv(out / "annotations.csv", processed)
    fileio.write_videos_csv(
        out / "videos.csv",
        {s.video_id: s.coach_id for s in processed},
        {s.video_id: len(s.values) for s in processed},
    )
    write_manifest(
        out, "preprocess", opts, [annotations, videos],
        [out / "annotations.csv", out / "videos.csv"],
    )
    print(f"preprocess: {len(processed)} signals -> {out}")
    return 0


# ---------------------------------------------------------------- agree


def cmd_agree(args) -> int:
    out = _out_dir(args)
    annotations = Path(args.annotations)
    videos = Path(args.videos) if args.videos else annotations.parent / "videos.csv"
    signals = fileio.read_annotations_csv(annotations, videos)
    index = pipeline.index_signals(signals)
    coaches = sorted({s.coach_id for s in signals})
    annotators = sorted({s.annotator_id for s in signals})

    def concat_labels(dimension: str, coach: str | None) -> np.ndarray:
        """annotators x frames matrix of discretized labels."""
        rows = []
        for annotator in annotators:
            parts = []
            for (c, video, a, d), s in sorted(index.items()):
                if d == dimension and a == annotator and (coach is None or c == coach):
                    parts.append(discretize(s.values))
            rows.append(np.concatenate(parts))
        return np.vstack(rows)

    def concat_binary(coach: str | None) -> np.ndarray:
        rows = []
        for annotator in annotators:
            parts = []
            for (c, video, a, d), s in sorted(index.items()):
                if d == "sentiment" and a == annotator and (coach is None or c == coach):
                    other = index[(c, video, a, "direction")]
                    parts.append(binary_humor(s.values, other.values))
            rows.append(np.concatenate(parts))
        return np.vstack(rows)

    rows: list[tuple[str, str, str, str, float]] = []
    for dimension in ("sentiment", "direction"):
        rows.append(
            ("krippendorff_alpha", dimension, "ALL", "ALL",
             krippendorff_alpha(concat_labels(dimension, None)))
        )
        for coach in coaches:
            rows.append(
                ("krippendorff_alpha", dimension, coach, "ALL",
                 krippendorff_alpha(concat_labels(dimension, coach)))
            )
    rows.append(("krippendorff_alpha", "binary", "ALL", "ALL",
                 krippendorff_alpha(concat_binary(None))))
    for coach in coaches:
        rows.append(("krippendorff_alpha", "binary", coach, "ALL",
                     krippendorff_alpha(concat_binary(coach))))
    for dimension in ("sentiment", "direction"):
        for i, annotator in enumerate(annotators):
            labels = concat_labels(dimension, None)[i]
            rows.append(("nonzero_rate", dimension, "ALL", annotator,
                         float(np.mean(labels != 0))))

    per_coach_binary: dict[str, dict[str, np.ndarray]] = {}
    for coach in coaches:
        matrix = concat_binary(coach)
        per_coach_binary[coach] = {a: matrix[i] for i, a in enumerate(annotators)}
    matrix_coaches, matrix_annotators, matrix = mean_agreement_matrix(per_coach_binary)

    fileio.write_agreement_csv(out / "agreement.csv", rows)
    fileio.write_matrix_csv(out / "agreement_matrix.csv", matrix_coaches, matrix_annotators, matrix)
    plots.agreement_heatmap(matrix_coaches, matrix_annotators, matrix, out / "agreement_matrix.png")
    write_manifest(
        out, "agree", {}, [annotations, videos],
        [out / "agreement.csv", out / "agreement_matrix.csv", out / "agreement_matrix.png"],
    )
    print(f"agree: {len(rows)} metric rows -> {out}")
    return 0


# ---------------------------------------------------------------- fuse


def cmd_fuse(args) -> int:
    out = _out_dir(args)
    annotations = Path(args.annotations)
    videos = Path(args.videos) if args.videos else annotations.parent / "videos.csv"
    signals = fileio.read_annotations_csv(annotations, videos)

    if args.jobs and args.jobs > 1:
        index = pipeline.index_signals(signals)
        tree = pipeline._by_coach(index)
        tasks = [
            (coach, dimension)
            for coach in sorted(tree)
            for dimension in ("sentiment", "direction")
            if tree[coach].get(dimension)
        ]

        def one(task):
            coach, dimension = task
            from .gold import active_frames, compute_weights

            return task, compute_weights(active_frames(tree[coach][dimension]), coach_id=coach)

        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            weights = dict(pool.map(one, tasks))
    else:
        weights = pipeline.compute_all_weights(signals)
    fused = pipeline.fuse_all(signals, weights)

    fileio.write_weights_csv(out / "weights.csv", weights)
    fileio.write_gold_csv(out / "gold.csv", fused)
    write_manifest(
        out, "fuse", {}, [annotations, videos], [out / "weights.csv", out / "gold.csv"]
    )
    print(f"fuse: {len(weights)} weight groups -> {out}")
    return 0


# ---------------------------------------------------------------- segment


def cmd_segment(args) -> int:
    file_config = _load_config_file(args.config)
    opts = _options(
        args, file_config, "segment", {"drop_k": 3, "quorum": 3, "drop_scope": "coach"}
    )
    out = _out_dir(args)
    annotations = Path(args.annotations)
    videos = Path(args.videos) if args.videos else annotations.parent / "videos.csv"
    signals = fileio.read_annotations_csv(annotations, videos)
    fused = fileio.read_gold_csv(Path(args.gold)) if args.gold else None
    table = pipeline.make_segment_table(
        signals, fused,
        drop_k=opts["drop_k"], quorum=opts["quorum"], drop_scope=opts["drop_scope"],
    )
    fileio.write_segments_csv(out / "segments.csv", table)
    inputs = [annotations, videos] + ([Path(args.gold)] if args.gold else [])
    write_manifest(out, "segment", opts, inputs, [out / "segments.csv"])
    print(f"segment: {len(table)} segments ({int(table.humor.sum())} humorous) -> {out}")
    return 0


# ---------------------------------------------------------------- stats


def cmd_stats(args) -> int:
    out = _out_dir(args)
    table = fileio.read_segments_csv(Path(args.segments))
    stats = corpus_stats(table)

    with open(out / "stats.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stat", "scope", "value"])
        writer.writerow(["n_segments", "ALL", stats.n_segments])
        writer.writerow(["n_humorous", "ALL", stats.n_humorous])
        writer.writerow(["humor_rate", "ALL", str(stats.humor_rate)])
        for coach in sorted(stats.per_coach_humor_rate):
            writer.writerow(["humor_rate", coach, str(stats.per_coach_humor_rate[coach])])
        for name in STYLE_ORDER:
            writer.writerow([f"share_{name}", "ALL", str(stats.style_shares[name])])
            writer.writerow([f"share_{name}", "COACH_MEAN", str(stats.style_share_mean[name])])
            writer.writerow([f"share_{name}", "COACH_STD", str(stats.style_share_std[name])])

    with open(out / "distribution_table.txt", "w") as fh:
        fh.write(_distribution_text(stats))
    plots.humor_style_bars(stats, out / "humor_by_coach.png")
    write_manifest(
        out, "stats", {}, [Path(args.segments)],
        [out / "stats.csv", out / "distribution_table.txt", out / "humor_by_coach.png"],
    )
    print(
        f"stats: {stats.n_humorous}/{stats.n_segments} humorous "
        f"({100 * stats.humor_rate:.2f} %) -> {out}"
    )
    return 0


def _distribution_text(stats) -> str:
    s = stats.style_shares

    def cell(name):
        v = s[name]
        m, sd = stats.style_share_mean[name], stats.style_share_std[name]
        return f"{v:.4f} ({m:.4f}±{sd:.4f})"

    self_sum = s["self_negative"] + s["self_positive"]
    other_sum = s["other_negative"] + s["other_positive"]
    neg_sum = s["self_negative"] + s["other_negative"]
    pos_sum = s["self_positive"] + s["other_positive"]
    lines = [
        "Humor style shares over humorous segments (overall, then per-coach mean±std)",
        f"{'':>10}  {'negative':>24}  {'positive':>24}  {'sum':>8}",
        f"{'self':>10}  {cell('self_negative'):>24}  {cell('self_positive'):>24}  {self_sum:>8.4f}",
        f"{'other':>10}  {cell('other_negative'):>24}  {cell('other_positive'):>24}  {other_sum:>8.4f}",
        f"{'sum':>10}  {neg_sum:>24.4f}  {pos_sum:>24.4f}",
    ]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- train


def _load_video_features(features_dir: Path, video: str, modality: str):
    csv_path = features_dir / f"{video}__{modality}.csv"
    hfz_path = features_dir / f"{video}__{modality}.hfz"
    if csv_path.exists():
        return read_feature_csv(csv_path, video, modality)
    if hfz_path.exists():
        return read_feature_hfz(hfz_path)
    raise ValidationError(f"no {modality} feature file for video {video} in {features_dir}")


def load_modalities(features_dir: Path, videos: list[str]) -> dict[tuple[str, str], "object"]:
    """All three modalities for the given videos; text comes from sentences.csv."""
    features = {}
    frame_counts = {}
    for video in videos:
        for modality in ("audio", "video"):
            fs = _load_video_features(features_dir, video, modality)
            features[(video, modality)] = fs
            frame_counts.setdefault(video, fs.frames)
            if fs.frames != frame_counts[video]:
                raise ValidationError(f"frame-count mismatch across modalities for {video}")
    spans = read_sentence_spans(features_dir / "sentences.csv")
    for video in videos:
        features[(video, "text")] = align_sentences(
            spans.get(video, []), frame_counts[video], video_id=video
        )
    return features


def cmd_train(args) -> int:
    file_config = _load_config_file(args.config)
    train_opts = _options(
        args,
        file_config,
        "train",
        {
            "max_epochs": 20, "patience": 5, "learning_rate": 1e-2,
            "weight_decay": 1e-2, "batch_size": 16, "dev_fraction": 0.2,
        },
    )
    dev_fraction = train_opts.pop("dev_fraction")
    seed = args.seed if args.seed is not None else 0
    out = _out_dir(args)
    segments_path = Path(args.segments)
    features_dir = Path(args.features)
    table = fileio.read_segments_csv(segments_path)
    dataset = loso_split(table, args.held_out, dev_fraction=dev_fraction, seed=seed)
    videos = sorted(set(table.video_id))
    features = load_modalities(features_dir, videos)

    train_config = TrainConfig(seeds=(seed,), **train_opts)
    if args.model == "gru":
        modality = args.modality or "audio"
        gru_opts = _options(args, file_config, "gru", {"layers": 1, "hidden": 32})
        gru_opts["bidirectional"] = bool(file_config.get("gru", {}).get("bidirectional", False))
        x = np.concatenate(
            [segment_sequences(features[(video, modality)], table) for video in videos]
        )
        # segment_sequences iterates table rows per video; restore table order
        order = np.argsort(
            np.concatenate([np.flatnonzero(table.video_id == video) for video in videos])
        )
        x = x[order]
        model = GruModel(GruConfig(**gru_opts), d_in=x.shape[2], seed=seed)
        task = GruTask(model, x, dataset.labels, dataset.roles)
        source = f"gru_{modality}"
        model_config = {"model": "gru", "modality": modality, **gru_opts}
    elif args.model == "vfmm":
        vfmm_opts = _options(
            args, file_config, "vfmm",
            {"d": 16, "conv_kernel": 1, "attn_heads": 1, "local_window": 8, "dropout_rate": 0.0},
        )
        clips = []
        for video in videos:
            positions = np.flatnonzero(table.video_id == video)
            slices = [
                (int(table.start_ms[i]) // FRAME_MS, int(table.start_ms[i]) // FRAME_MS + 4)
                for i in positions
            ]
            clips.append(
                Clip(
                    coach_id=str(table.coach_id[positions[0]]),
                    video_id=video,
                    text=features[(video, "text")].vectors.astype(np.float64),
                    audio=features[(video, "audio")].vectors.astype(np.float64),
                    video=features[(video, "video")].vectors.astype(np.float64),
                    seg_slices=slices,
                    seg_positions=positions,
                )
            )
        dims = {m: features[(videos[0], m)].dim for m in ("text", "audio", "video")}
        model = VfmmModel(VfmmConfig(seed=seed, **vfmm_opts), dims, seed=seed)
        task = VfmmTask(model, clips, dataset.labels, dataset.roles)
        source = "vfmm"
        model_config = {"model": "vfmm", **vfmm_opts}
    else:
        raise ValidationError(f"unknown model {args.model!r}")

    result = train(task, train_config, seed)

    test_scores, test_labels = task.role_scores("test")
    test_keys = [dataset.keys[i] for i in dataset.indices("test")]
    predictions = PredictionSet(
        task="humor", source=source, keys=tuple(test_keys), scores=test_scores,
        training_quality=result.best_dev_auc,
    )

    fileio.write_predictions_csv(out / "predictions.csv", [predictions])
    write_split_csv(out / "split.csv", dataset)
    with open(out / "history.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "dev_auc", "improved"])
        for h in result.history:
            writer.writerow([h.epoch, str(h.train_loss), str(h.dev_auc), int(h.improved)])
    plots.training_curves(
        [h.__dict__ for h in result.history], out / "history.png"
    )
    save_checkpoint(
        out / "checkpoint.ckpt",
        kind=args.model,
        config={**model_config, "train": train_opts, "held_out": args.held_out},
        seed=seed,
        epoch=result.best_epoch,
        dev_auc=result.best_dev_auc,
        tensors={name: p.data for name, p in task.model.parameters().items()},
    )
    write_manifest(
        out, "train",
        {**model_config, "train": train_opts, "held_out": args.held_out},
        [segments_path],
        [out / "predictions.csv", out / "split.csv", out / "history.csv",
         out / "history.png", out / "checkpoint.ckpt"],
        seed=seed,
    )
    test_auc = None
    if len(np.unique(test_labels)) > 1:
        test_auc = roc_auc(test_scores, test_labels)
    print(
        f"train[{source}] held_out={args.held_out} seed={seed} params={param_count(task.model)} "
        f"epochs={len(result.history)} best_dev_auc={result.best_dev_auc:.4f} "
        + (f"test_auc={test_auc:.4f}" if test_auc is not None else "test_auc=NA")
    )
    return 0


# ---------------------------------------------------------------- eval


def _labels_for_task(table, task: str) -> dict[tuple[str, str, int], int]:
    keys = table.keys
    if task == "humor":
        return {k: int(v) for k, v in zip(keys, table.humor)}
    values = getattr(table, task)
    out = {}
    for k, humor, value in zip(keys, table.humor, values):
        if humor == 1 and value != 0:
            out[k] = 1 if value > 0 else -1
    return out


def cmd_eval(args) -> int:
    out = _out_dir(args)
    table = fileio.read_segments_csv(Path(args.segments))
    labels = _labels_for_task(table, args.task)

    cells: dict[str, dict[tuple[str, int], float | None]] = {}
    for run_index, path in enumerate(args.predictions):
        for pset in fileio.read_predictions_csv(Path(path)):
            if pset.task != args.task:
                continue
            by_coach: dict[str, list[tuple[tuple, float]]] = {}
            for key, score in zip(pset.keys, pset.scores):
                if key in labels:
                    by_coach.setdefault(key[0], []).append((key, score))
            for coach, entries in sorted(by_coach.items()):
                y = np.array([labels[k] for k, _ in entries])
                s = np.array([v for _, v in entries])
                cell: float | None
                if len(np.unique(y)) < 2:
                    cell = None
                else:
                    cell = roc_auc(s, y)
                cells.setdefault(pset.source, {})[(coach, run_index)] = cell

    if not cells:
        raise ValidationError(f"no prediction sets for task {args.task!r}")
    tables = [aggregate_results(source, cells[source]) for source in sorted(cells)]

    with open(out / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task", "source", "mean", "std", "min", "max", "pct_above_chance"])
        for t in tables:
            writer.writerow(
                [args.task, t.source, str(t.mean), str(t.std), str(t.min), str(t.max),
                 str(t.pct_above_chance)]
            )
    with open(out / "per_coach.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["task", "source", "coach_id", "mean_auc", "std_auc"])
        for t in tables:
            for coach in sorted(t.per_coach_mean):
                writer.writerow(
                    [args.task, t.source, coach,
                     str(t.per_coach_mean[coach]), str(t.per_coach_std[coach])]
                )
    with open(out / "results.txt", "w") as fh:
        fh.write(format_results_text(tables, args.task))
    per_source = {t.source: t.per_coach_mean for t in tables}
    with open(out / "individual.txt", "w") as fh:
        fh.write(comparison_table(per_source))
    plots.auc_by_coach(per_source, out / "auc_by_coach.png")
    write_manifest(
        out, "eval", {"task": args.task},
        [Path(args.segments)] + [Path(p) for p in args.predictions],
        [out / "results.csv", out / "per_coach.csv", out / "results.txt",
         out / "individual.txt", out / "auc_by_coach.png"],
    )
    print(format_results_text(tables, args.task))
    return 0


# ---------------------------------------------------------------- latefuse


def cmd_latefuse(args) -> int:
    out = _out_dir(args)
    sets = []
    for path in args.predictions:
        sets.extend(
            p for p in fileio.read_predictions_csv(Path(path)) if p.task == args.task
        )
    if not sets:
        raise ValidationError(f"no prediction sets for task {args.task!r}")
    fused = late_fuse(sets)
    fileio.write_predictions_csv(out / "predictions.csv", [fused])
    write_manifest(
        out, "latefuse",
        {"task": args.task, "sources": sorted(p.source for p in sets)},
        [Path(p) for p in args.predictions], [out / "predictions.csv"],
    )
    print(f"latefuse: {len(sets)} sets -> {fused.source}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="humorkit",
        description="Continuous humor-annotation fusion, segmentation, models, and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"humorkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--config", help="JSON config file with per-stage sections")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers within a stage")

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted ground truth")
    common(p)
    p.add_argument("--coaches", type=int)
    p.add_argument("--annotators", type=int)
    p.add_argument("--minutes", type=float, help="recording minutes per coach")
    p.add_argument("--videos-per-coach", dest="videos_per_coach", type=int)
    p.add_argument("--noise", type=float, help="rater noise level, 0 = perfect raters")
    p.add_argument("--episodes-per-minute", dest="episodes_per_minute", type=float)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="threshold, clip, and normalize annotation signals")
    common(p)
    p.add_argument("--annotations", required=True)
    p.add_argument("--videos", help="videos.csv (default: next to annotations)")
    p.add_argument("--threshold", dest="amplitude_threshold", type=float)
    p.add_argument("--sigma", dest="outlier_sigma", type=float)
    p.add_argument("--mode", dest="normalize_mode", choices=["signed_separate", "global"])
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("agree", help="agreement statistics and the coach x rater matrix")
    common(p)
    p.add_argument("--annotations", required=True)
    p.add_argument("--videos")
    p.set_defaults(func=cmd_agree)

    p = sub.add_parser("fuse", help="agreement-weighted gold-standard fusion")
    common(p)
    p.add_argument("--annotations", required=True)
    p.add_argument("--videos")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("segment", help="drop low-agreement raters and label 2 s segments")
    common(p)
    p.add_argument("--annotations", required=True)
    p.add_argument("--videos")
    p.add_argument("--gold", help="gold.csv from the fuse stage (recomputed when omitted)")
    p.add_argument("--drop-k", dest="drop_k", type=int)
    p.add_argument("--quorum", type=int)
    p.add_argument("--drop-scope", dest="drop_scope", choices=["coach", "video"])
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("stats", help="corpus statistics and style distribution report")
    common(p)
    p.add_argument("--segments", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a model on one leave-one-coach-out fold")
    common(p)
    p.add_argument("--model", required=True, choices=["gru", "vfmm"])
    p.add_argument("--held-out", dest="held_out", required=True)
    p.add_argument("--features", required=True, help="feature directory")
    p.add_argument("--segments", required=True)
    p.add_argument("--modality", choices=["audio", "text", "video"], help="gru input modality")
    p.add_argument("--epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--lr", dest="learning_rate", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--dev-fraction", dest="dev_fraction", type=float)
    p.add_argument("--d", type=int, help="vfmm projection size")
    p.add_argument("--hidden", type=int, help="gru hidden size")
    p.add_argument("--layers", type=int, help="gru layers")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="aggregate prediction files into results tables")
    common(p)
    p.add_argument("--predictions", nargs="+", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--task", default="humor", choices=["humor", "sentiment", "direction"])
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("latefuse", help="z-standardized, quality-weighted late fusion")
    common(p)
    p.add_argument("--predictions", nargs="+", required=True)
    p.add_argument("--task", default="humor", choices=["humor", "sentiment", "direction"])
    p.set_defaults(func=cmd_latefuse)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except HumorkitError as exc:  # pragma: no cover - catch-all for subclasses
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
