"""Test-only constructions shared by several modules."""
import numpy as np

from weakbird.segmentation import Segment
from weakbird.spectrogram import Spectrogram


def spec(values, rid="r"):
    return Spectrogram(np.asarray(values, dtype=float), recording_id=rid)


def make_segment(values, bbox, rid="q", sid=None):
    r0, r1, c0, c1 = bbox
    patch = np.asarray(values, dtype=float)[r0 : r1 + 1, c0 : c1 + 1].copy()
    return Segment(sid or f"{rid}:{r0}:{c0}", rid, tuple(bbox), int(patch.size), patch)


def window_with_corr(template, rho, rng, low=0.2, high=1.0):
    """A matrix whose Pearson correlation with ``template`` is exactly ``rho``."""
    t = np.asarray(template, dtype=float)
    tz = (t - t.mean()).ravel()
    tz /= np.linalg.norm(tz)
    noise = rng.normal(size=t.size)
    noise -= noise.mean()
    noise -= noise.dot(tz) * tz
    noise /= np.linalg.norm(noise)
    w = rho * tz + np.sqrt(1 - rho * rho) * noise
    w = (w - w.min()) / (w.max() - w.min())
    return (low + (high - low) * w).reshape(t.shape)


def pearson(a, b):
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    return float(np.corrcoef(a, b)[0, 1])
