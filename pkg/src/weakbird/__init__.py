"""Bird vocalization detection and weak-label classification by template matching."""
from .corpus import Corpus, Recording, load_manifest, load_recording, single_label_species
from .spectrogram import Spectrogram, SpectrogramParams, compute_spectrogram, crop_rows, normalize, prepare
from .segmentation import Segment, SegmentationParams, segment_recording, segment_spectrogram
from .matching import MatchScore, best_match, ncc_map
from .classification import MNF, ClassificationState, Reference, classify_corpus
from .synthgen import SyntheticConfig, build_synthetic_corpus
from .evaluation import EvaluationReport, evaluate, report_table

__version__ = "0.1.0"
