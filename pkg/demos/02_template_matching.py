"""Normalized cross-correlation and the frequency band restriction.

Run:  python3 demos/02_template_matching.py
"""
import time

import numpy as np

from weakbird.matching import best_match, ncc_direct, ncc_map
from weakbird.segmentation import Segment
from weakbird.spectrogram import Spectrogram

rng = np.random.default_rng(3)

# a template cut out of a target scores exactly 1 at its own position
target = rng.random((60, 200))
patch = target[20:32, 50:90].copy()
scores = ncc_map(patch, target)
r, c = np.unravel_index(np.argmax(scores), scores.shape)
print(f"peak {scores[r, c]:.6f} at row {r}, col {c}")

# the score ignores brightness and contrast
print("after 3x + 0.5:", ncc_map(3 * patch + 0.5, target).max())

# the loop version gives the same numbers, only slower
small_t, small_x = rng.random((8, 8)), rng.random((32, 32))
t0 = time.perf_counter()
fast = ncc_map(small_t, small_x)
t_fast = time.perf_counter() - t0
t0 = time.perf_counter()
slow = ncc_direct(small_t, small_x)
t_slow = time.perf_counter() - t0
print(f"max difference {np.abs(fast - slow).max():.1e}, loop {t_slow / t_fast:.0f}x slower")

# best_match only searches rows within 5 of the segment's own rows,
# so the same shape at another pitch is not a match
seg = Segment("q:000", "q", (20, 31, 50, 89), patch.size, patch)
shifted = 0.05 * rng.random((60, 200))
shifted[40:52, 100:140] = patch
print("same shape, 20 rows higher:", best_match(seg, Spectrogram(shifted)).value)
near = 0.05 * rng.random((60, 200))
near[23:35, 100:140] = patch
m = best_match(seg, Spectrogram(near))
print(f"same shape, 3 rows higher: {m.value:.3f} at {m.position}")
