"""Command line entry point: ``weakbird {segment,classify,synth,eval,run-all}``.

Exit codes: 0 success, 1 internal error, 2 usage or I/O problem.  Progress
goes to stderr; data goes to the files named by ``--out``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from types import SimpleNamespace

from .classification import Reference, classify_corpus, labels_from_json
from .config import PipelineConfig, load_config
from .corpus import CorpusError, load_manifest
from .evaluation import evaluate, report_table
from .segmentation import read_segments, segment_spectrogram, write_segments
from .spectrogram import prepare, to_png
from .synthgen import (
    SynthesisError, build_synthetic_corpus, load_synthetic, save_synthetic, truth_from_json,
)

log = logging.getLogger("weakbird")


class UsageError(Exception):
    """Bad input paths or inconsistent inputs; maps to exit code 2."""


def _config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    return cfg.updated(seed=args.seed, threads=args.threads)


def _manifest_path(path: str) -> str:
    if os.path.isdir(path):
        path = os.path.join(path, "manifest.csv")
    if not os.path.exists(path):
        raise UsageError(f"no such corpus: {path}")
    return path


def load_spectra(path: str, cfg: PipelineConfig):
    """Spectrograms and weak labels of an audio corpus or a saved synthetic corpus."""
    if os.path.isdir(path) and os.path.exists(os.path.join(path, "meta.json")):
        syn = load_synthetic(path)
        return syn.spectra, syn.labels
    corpus = load_manifest(_manifest_path(path))
    log.info("computing spectrograms for %d recordings", len(corpus))
    spectra = {rid: prepare(rec, cfg.spectrogram) for rid, rec in corpus.items()}
    return spectra, corpus.labels


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def cmd_segment(args, cfg: PipelineConfig) -> None:
    spectra, _ = load_spectra(args.corpus, cfg)
    _ensure_parent(args.out)
    png_dir = os.path.join(os.path.dirname(os.path.abspath(args.out)), "png") if args.png else None
    if png_dir:
        os.makedirs(png_dir, exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as fh:
        for rid in sorted(spectra):
            segs = segment_spectrogram(spectra[rid], cfg.segmentation)
            log.info("%s: %d segments", rid, len(segs))
            write_segments(segs, fh)
            if png_dir:
                to_png(spectra[rid].values, os.path.join(png_dir, rid + ".png"), [s.bbox for s in segs])


def _read_truth(path: str) -> dict:
    if not os.path.exists(path):
        raise UsageError(f"no such ground truth file: {path}")
    with open(path, encoding="utf-8") as fh:
        return truth_from_json(json.load(fh))


def _exclusions(truth: dict) -> dict:
    return {rid: {p.source_recording for p in plants} for rid, plants in truth.items()}


def classify_to_file(segments, labels, reference, cfg, out, exclude=None) -> None:
    state = classify_corpus(
        segments, labels, reference, cfg.threshold, exclude=exclude, threads=cfg.threads,
    )
    _ensure_parent(out)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(state.to_jsonl())


def cmd_classify(args, cfg: PipelineConfig) -> None:
    spectra, labels = load_spectra(args.corpus, cfg)
    if not os.path.exists(args.segments):
        raise UsageError(f"no such segments file: {args.segments}")
    with open(args.segments, encoding="utf-8") as fh:
        try:
            segments = read_segments(fh, spectra)
        except KeyError as exc:
            raise UsageError(f"{args.segments}: {exc}") from exc
    if args.reference:
        ref_spectra, ref_labels = load_spectra(args.reference, cfg)
    else:
        ref_spectra, ref_labels = spectra, labels
    exclude = _exclusions(_read_truth(args.truth)) if args.truth else None
    reference = Reference(ref_spectra, ref_labels, cfg.band_pad)
    classify_to_file(segments, labels, reference, cfg, args.out, exclude)


def cmd_synth(args, cfg: PipelineConfig) -> None:
    source = load_manifest(_manifest_path(args.source))
    syn = build_synthetic_corpus(source, cfg.synthetic, cfg.spectrogram, cfg.segmentation)
    save_synthetic(syn, args.out)
    log.info("synthetic corpus: %d recordings, %d plants", len(syn.spectra), syn.n_plants)


def _read_assignments(path: str):
    if not os.path.exists(path):
        raise UsageError(f"no such assignments file: {path}")
    segments, history = {}, {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            seg = SimpleNamespace(id=obj["segment_id"], recording_id=obj["recording_id"],
                                  bbox=tuple(obj["bbox"]))
            segments.setdefault(seg.recording_id, []).append(seg)
            passes = obj.get("history") or {"var2": obj["labels"]}
            for name, labels in passes.items():
                history.setdefault(name, {})[seg.id] = labels_from_json(labels)
    return segments, history


def write_report(report, out: str | None) -> str:
    text = report_table(report, "text")
    if out:
        _ensure_parent(out)
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(report_table(report, "csv"))
        with open(os.path.splitext(out)[0] + ".txt", "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def cmd_eval(args, cfg: PipelineConfig) -> None:
    segments, history = _read_assignments(args.assignments)
    truth = _read_truth(args.truth)
    unknown = sorted(set(segments) - set(truth))
    if unknown:
        raise UsageError(f"assignments name recordings missing from ground truth: {unknown[:5]}")
    report = evaluate(history, segments, truth)
    sys.stdout.write(write_report(report, args.out))


def cmd_run_all(args, cfg: PipelineConfig) -> None:
    out = args.out
    source = load_manifest(_manifest_path(args.source))
    log.info("source corpus: %d recordings", len(source))
    src_spectra = {rid: prepare(rec, cfg.spectrogram) for rid, rec in source.items()}
    syn = build_synthetic_corpus(source, cfg.synthetic, cfg.spectrogram, cfg.segmentation,
                                 spectra=src_spectra)
    syn_dir = os.path.join(out, "synthetic")
    save_synthetic(syn, syn_dir)
    log.info("synthetic corpus: %d recordings, %d plants", len(syn.spectra), syn.n_plants)

    segments = {rid: segment_spectrogram(syn.spectra[rid], cfg.segmentation) for rid in sorted(syn.spectra)}
    with open(os.path.join(out, "segments.jsonl"), "w", encoding="utf-8") as fh:
        for rid in sorted(segments):
            write_segments(segments[rid], fh)
    if args.png:
        png_dir = os.path.join(out, "png")
        os.makedirs(png_dir, exist_ok=True)
        for rid in sorted(segments):
            to_png(syn.spectra[rid].values, os.path.join(png_dir, rid + ".png"),
                   [s.bbox for s in segments[rid]])

    reference = Reference(src_spectra, source.labels, cfg.band_pad)
    state = classify_corpus(segments, syn.labels, reference, cfg.threshold,
                            exclude=syn.exclusions, threads=cfg.threads)
    with open(os.path.join(out, "assignments.jsonl"), "w", encoding="utf-8") as fh:
        fh.write(state.to_jsonl())
    log.info("classified %d segments (%d match evaluations)",
             sum(len(v) for v in segments.values()), reference.n_evaluations)

    report = evaluate(state, segments, syn.truth)
    sys.stdout.write(write_report(report, os.path.join(out, "report.csv")))
    with open(os.path.join(out, "config.txt"), "w", encoding="utf-8") as fh:
        fh.write(cfg.updated(threads=1).dumps())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--seed", type=int, help="random seed (overrides config)")
    common.add_argument("--threads", type=int, help="worker threads for matching")
    common.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")

    parser = argparse.ArgumentParser(prog="weakbird", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", parents=[common], help="detect segments in every recording")
    p.add_argument("corpus", help="manifest CSV, corpus directory or synthetic corpus directory")
    p.add_argument("--out", required=True, help="segments JSON Lines file")
    p.add_argument("--png", action="store_true", help="also write spectrogram/bbox overlays")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("classify", parents=[common], help="label segments using weak labels")
    p.add_argument("corpus")
    p.add_argument("segments", help="JSON Lines written by 'segment'")
    p.add_argument("--reference", help="corpus searched for matches (default: the corpus itself)")
    p.add_argument("--truth", help="ground truth JSON; plant source recordings are not searched")
    p.add_argument("--out", required=True, help="assignments JSON Lines file")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("synth", parents=[common], help="build a synthetic evaluation corpus")
    p.add_argument("source", help="labelled source corpus (manifest CSV or directory)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", parents=[common], help="score assignments against ground truth")
    p.add_argument("assignments")
    p.add_argument("truth")
    p.add_argument("--out", help="report CSV (a .txt table is written alongside)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("run-all", parents=[common], help="synth, segment, classify and eval")
    p.add_argument("source")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--png", action="store_true")
    p.set_defaults(func=cmd_run_all)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s", stream=sys.stderr,
    )
    try:
        cfg = _config(args)
        if cfg.threads < 1:
            raise UsageError("--threads must be >= 1")
        args.func(args, cfg)
    except (UsageError, CorpusError, SynthesisError, OSError, KeyError, ValueError) as exc:
        print(f"weakbird {args.command}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"weakbird {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
