import numpy as np
import pytest

from weakbird import toydata
from weakbird.segmentation import segment_spectrogram
from weakbird.spectrogram import prepare

ACCEPTANCE = []

# Source corpus used by the 50-recording acceptance runs: noisier and with
# more call-to-call variation than the toydata defaults.
FIELD_LIKE = dict(
    n_species=24, recordings_per_species=2, n_multi=12, noise_level=0.03, variability=0.25, seed=0,
)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def field_like_source():
    corpus = toydata.make_source_corpus(**FIELD_LIKE)
    spectra = {rid: prepare(rec) for rid, rec in corpus.items()}
    segments = {
        rid: segment_spectrogram(spec)
        for rid, spec in spectra.items() if len(corpus[rid].weak_labels) == 1
    }
    return corpus, spectra, segments


@pytest.fixture(scope="session")
def small_toy_corpus():
    return toydata.make_source_corpus(
        n_species=6, recordings_per_species=2, n_multi=3, n_noise=2, duration=3.0, seed=7,
    )


@pytest.fixture
def record_acceptance():
    def record(name, passed, detail=""):
        ACCEPTANCE.append((name, bool(passed), detail))
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{name}: {'PASS' if passed else 'FAIL'}  {detail}")
