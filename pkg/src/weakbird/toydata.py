"""Small synthetic bird-call corpora for demos and tests.

Each toy species has a fixed call shape (sweep, trill, warble, chevron or
harmonic stack) drawn from a seed.  Recordings mix a few calls into
coloured background noise, so the full audio -> spectrogram -> segment ->
match chain can run without field recordings.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter
from scipy.signal.windows import tukey

from .corpus import Corpus, Recording

CALL_KINDS = ("sweep", "trill", "warble", "chevron", "harmonic")


@dataclass(frozen=True)
class ToySpecies:
    name: str
    kind: str
    f0: float
    bandwidth: float
    duration: float
    rate: float


def make_species(n: int, seed: int = 0, fmin: float = 1500.0, fmax: float = 8000.0) -> list:
    """``n`` species with base frequencies spread over ``[fmin, fmax - 1500]``.

    Call kinds cycle with the frequency rank, so two species sharing a kind
    sit several frequency slots apart.
    """
    rng = np.random.default_rng(seed)
    slot = (fmax - 1500.0 - fmin) / n
    out = []
    for i in range(n):
        out.append(
            ToySpecies(
                name=f"sp{i:02d}",
                kind=CALL_KINDS[i % len(CALL_KINDS)],
                f0=float(fmin + (i + rng.uniform(0.2, 0.8)) * slot),
                bandwidth=float(rng.uniform(400.0, 1500.0) * rng.choice([-1, 1])),
                duration=float(rng.uniform(0.18, 0.45)),
                rate=float(rng.uniform(6.0, 14.0)),
            )
        )
    return out


def _phase(freq: np.ndarray, sr: int) -> np.ndarray:
    return 2 * np.pi * np.cumsum(freq) / sr


def render_call(sp: ToySpecies, sr: int, rng=None, variability: float = 0.03) -> np.ndarray:
    """Unit-amplitude waveform of one call.

    With an ``rng``, duration, pitch and sweep width vary by up to
    ``variability`` (relative) from call to call.
    """
    def jitter(scale=1.0):
        if rng is None:
            return 1.0
        return float(rng.uniform(1 - variability * scale, 1 + variability * scale))

    n = int(sp.duration * jitter() * sr)
    t = np.arange(n) / sr
    frac = t / max(t[-1], 1e-9)
    f0 = sp.f0 * jitter(0.3)
    bw = sp.bandwidth * jitter()
    if sp.kind == "sweep":
        freq = f0 + bw * frac
        y = np.sin(_phase(freq, sr))
    elif sp.kind == "warble":
        freq = f0 + 0.5 * abs(bw) * np.sin(2 * np.pi * sp.rate * t)
        y = np.sin(_phase(freq, sr))
    elif sp.kind == "chevron":
        freq = f0 + abs(bw) * (1 - np.abs(2 * frac - 1))
        y = np.sin(_phase(freq, sr))
    elif sp.kind == "harmonic":
        freq = f0 + 0.3 * bw * frac
        ph = _phase(freq, sr)
        y = np.sin(ph) + 0.6 * np.sin(1.5 * ph)
    elif sp.kind == "trill":
        # pulses close enough for dilation to merge them into one segment
        freq = f0 - 0.5 * abs(bw) * ((t * sp.rate * 2) % 1.0)
        gate = (np.sin(2 * np.pi * sp.rate * 2 * t) > -0.3).astype(float)
        y = np.sin(_phase(freq, sr)) * gate
    else:
        raise ValueError(f"unknown call kind {sp.kind!r}")
    return y * tukey(n, 0.3)


def background_noise(n: int, sr: int, rng, level: float = 0.01) -> np.ndarray:
    """White hiss plus stronger low-frequency rumble, a crude outdoor ambience."""
    white = rng.normal(0.0, level, n)
    rumble = lfilter([1.0], [1.0, -0.995], rng.normal(0.0, level * 2.0, n))
    return white + rumble


def make_recording(
    rid: str, species_calls: list, sr: int, duration: float, rng, noise_level: float = 0.01,
    calls_per_species=(2, 4), amplitude=(0.25, 0.6), variability: float = 0.03,
) -> Recording:
    n = int(duration * sr)
    y = background_noise(n, sr, rng, noise_level)
    labels = set()
    for sp in species_calls:
        labels.add(sp.name)
        for _ in range(int(rng.integers(calls_per_species[0], calls_per_species[1] + 1))):
            call = render_call(sp, sr, rng, variability)
            start = int(rng.integers(0, max(n - len(call), 1)))
            y[start : start + len(call)] += rng.uniform(*amplitude) * call[: n - start]
    peak = np.max(np.abs(y))
    if peak > 0.95:
        y *= 0.95 / peak
    return Recording(rid, y, sr, frozenset(labels))


def make_source_corpus(
    n_species: int = 12, recordings_per_species: int = 3, n_multi: int = 8, n_noise: int = 4,
    duration: float = 5.0, sample_rate: int = 22050, seed: int = 0, species: list | None = None,
    noise_level: float = 0.01, variability: float = 0.03,
) -> Corpus:
    """Corpus with single-label, multi-label (2-3 species) and noise-only recordings."""
    rng = np.random.default_rng(seed)
    if species is None:
        species = make_species(n_species, seed)
    recs = []
    for sp in species:
        for k in range(recordings_per_species):
            recs.append(make_recording(
                f"{sp.name}_{k}", [sp], sample_rate, duration, rng, noise_level, variability=variability))
    for k in range(n_multi):
        m = int(rng.integers(2, 4))
        picks = [species[j] for j in rng.choice(len(species), size=m, replace=False)]
        recs.append(make_recording(
            f"mix_{k:02d}", picks, sample_rate, duration, rng, noise_level, variability=variability))
    for k in range(n_noise):
        recs.append(make_recording(f"noise_{k}", [], sample_rate, duration, rng, noise_level))
    return Corpus(recs)
