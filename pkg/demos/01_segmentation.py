"""Segmenting a toy recording: audio -> spectrogram -> mask -> bounding boxes.

Run:  python3 demos/01_segmentation.py [out_dir]
"""
import os
import sys

import numpy as np

from weakbird import toydata
from weakbird.segmentation import clean_mask, median_clip, segment_spectrogram
from weakbird.spectrogram import prepare, to_png

out = sys.argv[1] if len(sys.argv) > 1 else "demo_output"
os.makedirs(out, exist_ok=True)

# three calls of two species in rumbling background noise
species = toydata.make_species(6, seed=1)
rng = np.random.default_rng(0)
rec = toydata.make_recording("demo", species[:2], 22050, 5.0, rng)
print(f"recording: {rec.duration:.1f} s at {rec.sample_rate} Hz, labels {sorted(rec.weak_labels)}")

# STFT magnitude, scaled to max 1, lowest 4 and highest 24 bins dropped
spec = prepare(rec)
print("spectrogram (rows = frequency bins, cols = frames):", spec.values.shape)

# pixels loud relative to both their row and their column
clipped = median_clip(spec)
print(f"median clipping keeps {clipped.mean():.2%} of pixels")

# closing, small-object removal, dilation and a 3x3 majority filter
mask = clean_mask(clipped)
print(f"after morphology: {mask.sum()} foreground pixels")

segments = segment_spectrogram(spec)
for s in segments:
    r0, r1, c0, c1 = s.bbox
    print(f"  {s.id}: rows {r0}-{r1}, frames {c0}-{c1}, {s.pixel_count} px")

to_png(spec.values, os.path.join(out, "segmentation.png"), [s.bbox for s in segments])
print("overlay written to", os.path.join(out, "segmentation.png"))
