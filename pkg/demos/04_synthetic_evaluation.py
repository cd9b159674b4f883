"""Synthetic evaluation: plant known segments in noise, classify, score.

Builds a toy source corpus, makes a 50-recording synthetic corpus from it
and prints the Correct / Wrong / Unknown table for the three passes.

Run:  python3 demos/04_synthetic_evaluation.py [seed]
"""
import sys

from weakbird import toydata
from weakbird.classification import Reference, classify_corpus
from weakbird.evaluation import evaluate, report_table
from weakbird.segmentation import segment_spectrogram
from weakbird.spectrogram import prepare
from weakbird.synthgen import SyntheticConfig, build_synthetic_corpus

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0

# noisy source recordings with fairly variable calls
source = toydata.make_source_corpus(
    n_species=24, recordings_per_species=2, n_multi=12, noise_level=0.03, variability=0.25, seed=0,
)
spectra = {rid: prepare(rec) for rid, rec in source.items()}
print(f"source: {len(source)} recordings, {len(source.all_labels())} species")

cfg = SyntheticConfig(recording_count=50, labels_min=2, labels_max=5, rng_seed=seed)
syn = build_synthetic_corpus(source, cfg, spectra=spectra)
print(f"synthetic: {len(syn.spectra)} recordings, {syn.n_plants} planted segments")

# segments of the synthetic recordings are matched against the source corpus,
# leaving out the recordings the plants were cut from
segments = {rid: segment_spectrogram(syn.spectra[rid]) for rid in sorted(syn.spectra)}
state = classify_corpus(segments, syn.labels, Reference(spectra, source.labels), exclude=syn.exclusions)

print()
print(report_table(evaluate(state, segments, syn.truth)))
