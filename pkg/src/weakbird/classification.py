"""Weak-label classification of detected segments.

Every segment starts with its recording's weak labels as candidates.  The
first pass narrows them by template matching against reference recordings
grouped by which of those labels they carry.  Two repair passes then use
the constraint that each weak label of a recording should own at least one
segment: :func:`variation_1` hands unallocated labels to unmatched (MNF)
segments, :func:`variation_2` moves one duplicated segment per unallocated
label.
"""
from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Mapping

from .matching import best_match

PASSES = ("first_pass", "var1", "var2")


class _MatchNotFound:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "MNF"

    def __reduce__(self):
        return (_MatchNotFound, ())


MNF = _MatchNotFound()


def is_mnf(labels) -> bool:
    return labels is MNF


def labels_to_json(labels):
    return "MNF" if labels is MNF else sorted(labels)


def labels_from_json(obj):
    return MNF if obj == "MNF" else frozenset(obj)


def _combo_key(combo: frozenset) -> tuple:
    return (len(combo), tuple(sorted(combo)))


class Reference:
    """Labelled spectrograms searched for matches, with a score cache.

    ``spectra`` maps recording id to a normalized, cropped
    :class:`~weakbird.spectrogram.Spectrogram`; ``labels`` maps the same ids
    to weak label sets.  Scores are cached per (segment id, recording id).
    """

    def __init__(self, spectra: Mapping, labels: Mapping, band_pad: int = 5):
        missing = set(labels) - set(spectra)
        if missing:
            raise KeyError(f"no spectrogram for recordings {sorted(missing)}")
        self.spectra = dict(spectra)
        self.labels = {rid: frozenset(ls) for rid, ls in labels.items()}
        self.band_pad = band_pad
        self._cache = {}
        self._lock = threading.Lock()
        self.n_evaluations = 0

    def score(self, segment, rec_id: str) -> float:
        key = (segment.id, rec_id)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        value = best_match(segment, self.spectra[rec_id], self.band_pad).value
        with self._lock:
            self._cache[key] = value
            self.n_evaluations += 1
        return value


def group_recordings(labels_rec, labels: Mapping, exclude=()) -> dict:
    """Group recordings by which subset of ``labels_rec`` they carry.

    Returns ``{combination: [recording ids]}`` for every non-empty subset of
    ``labels_rec``.  A recording joins the group equal to its overlap with
    ``labels_rec``; any other labels it carries are ignored.
    """
    labels_rec = frozenset(labels_rec)
    if not labels_rec:
        raise ValueError("labels_rec must be non-empty")
    if isinstance(exclude, str):
        exclude = {exclude}
    exclude = set(exclude)
    ordered = sorted(labels_rec)
    groups = {
        frozenset(c): [] for j in range(1, len(ordered) + 1) for c in combinations(ordered, j)
    }
    for rid in sorted(labels):
        if rid in exclude:
            continue
        common = labels_rec & frozenset(labels[rid])
        if common:
            groups[common].append(rid)
    return groups


@dataclass
class Decision:
    """Candidate labels of one segment plus how they were reached."""
    segment: object
    labels: object
    decided_by: str = "first_pass"
    combination: frozenset | None = None
    score_sum: float | None = None
    group_size: int | None = None
    tied: bool = False
    sums: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "segment_id": self.segment.id,
            "recording_id": self.segment.recording_id,
            "labels": labels_to_json(self.labels),
            "decided_by": self.decided_by,
            "winning_combination": None if self.combination is None else sorted(self.combination),
            "score_sum": self.score_sum,
        }


def first_pass(segment, labels_rec, groups: Mapping, reference: Reference, threshold: float = 0.4) -> Decision:
    """Narrow a segment's candidates by matching group after group.

    Groups are visited by increasing combination size.  At the first size
    where any recording matches with score >= ``threshold``, the combination
    with the largest score sum wins and the search stops.  Ties go to the
    lexicographically smallest combination.
    """
    labels_rec = frozenset(labels_rec)
    by_size = {}
    for combo, recs in groups.items():
        by_size.setdefault(len(combo), []).append((combo, recs))
    for j in sorted(by_size):
        sums = {}
        for combo, recs in sorted(by_size[j], key=lambda cr: _combo_key(cr[0])):
            total = 0.0
            hits = 0
            for rid in recs:
                s = reference.score(segment, rid)
                if s >= threshold:
                    total += s
                    hits += 1
            if hits:
                sums[combo] = total
        if not sums:
            continue
        ranked = sorted(sums.items(), key=lambda kv: (-kv[1], _combo_key(kv[0])))
        best_combo, best_sum = ranked[0]
        tied = len(ranked) > 1 and ranked[1][1] == best_sum
        return Decision(
            segment, best_combo & labels_rec, "first_pass", best_combo, best_sum, j, tied,
            {tuple(sorted(c)): v for c, v in sums.items()},
        )
    return Decision(segment, MNF, "first_pass")


@dataclass
class ClassificationState:
    """Per-recording decisions plus snapshots of the labels after each pass."""
    weak_labels: dict
    decisions: dict
    history: dict = field(default_factory=dict)

    def unallocated(self, rec_id: str) -> frozenset:
        used = set()
        for d in self.decisions.get(rec_id, ()):
            if d.labels is not MNF:
                used |= d.labels
        return frozenset(self.weak_labels[rec_id]) - used

    def mnf_decisions(self, rec_id: str) -> list:
        return [d for d in self.decisions.get(rec_id, ()) if d.labels is MNF]

    def duplicated(self, rec_id: str) -> dict:
        """Single labels owned by two or more segments of ``rec_id``."""
        owners = {}
        for d in self.decisions.get(rec_id, ()):
            if d.labels is not MNF and len(d.labels) == 1:
                owners.setdefault(next(iter(d.labels)), []).append(d)
        return {lab: ds for lab, ds in owners.items() if len(ds) >= 2}

    def labels_of(self, segment_id: str, pass_name: str | None = None):
        if pass_name is not None:
            return self.history[pass_name][segment_id]
        for ds in self.decisions.values():
            for d in ds:
                if d.segment.id == segment_id:
                    return d.labels
        raise KeyError(segment_id)

    def all_decisions(self) -> list:
        return [d for rid in sorted(self.decisions) for d in self.decisions[rid]]

    def snapshot(self, pass_name: str) -> None:
        self.history[pass_name] = {d.segment.id: d.labels for d in self.all_decisions()}

    def _copy(self) -> "ClassificationState":
        return ClassificationState(
            dict(self.weak_labels),
            {rid: [replace(d) for d in ds] for rid, ds in self.decisions.items()},
            dict(self.history),
        )

    def to_jsonl(self) -> str:
        lines = []
        for d in self.all_decisions():
            obj = d.to_json()
            obj["bbox"] = [int(b) for b in d.segment.bbox]
            obj["history"] = {
                p: labels_to_json(self.history[p][d.segment.id]) for p in PASSES if p in self.history
            }
            lines.append(json.dumps(obj, sort_keys=True))
        return "".join(line + "\n" for line in lines)


def variation_1(state: ClassificationState) -> ClassificationState:
    """Give every MNF segment the full set of unallocated labels of its recording."""
    new = state._copy()
    for rid in sorted(new.decisions):
        c_un = new.unallocated(rid)
        mnf = new.mnf_decisions(rid)
        if not c_un or not mnf:
            continue
        for d in mnf:
            d.labels = c_un
            d.decided_by = "var1"
            d.combination = None
            d.score_sum = None
    new.snapshot("var1")
    return new


def variation_2(
    state: ClassificationState, reference: Reference, threshold: float = 0.4, exclude: Mapping | None = None,
) -> ClassificationState:
    """Move one duplicated segment onto each unallocated label.

    Only recordings with unallocated labels, no MNF segments and at least one
    label owned by two or more segments are touched.  For each unallocated
    label (in sorted order) the duplicated segment scoring highest against
    reference recordings carrying that label is relabelled, provided the
    score reaches ``threshold`` and its current label keeps another owner.
    """
    new = state._copy()
    exclude = exclude or {}
    for rid in sorted(new.decisions):
        c_un = new.unallocated(rid)
        if not c_un or new.mnf_decisions(rid) or not new.duplicated(rid):
            continue
        skip = set(exclude.get(rid, ())) | {rid}
        moved = set()
        for label in sorted(c_un):
            targets = [
                r for r in sorted(reference.labels) if label in reference.labels[r] and r not in skip
            ]
            if not targets:
                continue
            best = None
            for owner_label, ds in sorted(new.duplicated(rid).items()):
                for d in ds:
                    if d.segment.id in moved:
                        continue
                    s = max(reference.score(d.segment, r) for r in targets)
                    if best is None or s > best[0]:
                        best = (s, d)
            if best is None or best[0] < threshold:
                continue
            s, d = best
            d.labels = frozenset([label])
            d.decided_by = "var2"
            d.combination = frozenset([label])
            d.score_sum = s
            moved.add(d.segment.id)
    new.snapshot("var2")
    return new


def run_first_pass(
    segments: Mapping, weak_labels: Mapping, reference: Reference, threshold: float = 0.4,
    exclude: Mapping | None = None, threads: int = 1,
) -> ClassificationState:
    """Apply :func:`first_pass` to every segment of every labelled recording.

    Recordings without weak labels are skipped.  ``exclude`` maps a query
    recording id to reference ids it must not be matched against; the query
    id itself is always excluded.
    """
    exclude = exclude or {}
    jobs = []
    group_cache = {}
    for rid in sorted(segments):
        labels_rec = frozenset(weak_labels.get(rid, ()))
        if not labels_rec:
            continue
        skip = frozenset(set(exclude.get(rid, ())) | {rid})
        key = (labels_rec, skip)
        if key not in group_cache:
            group_cache[key] = group_recordings(labels_rec, reference.labels, skip)
        for seg in segments[rid]:
            jobs.append((rid, seg, labels_rec, group_cache[key]))

    def work(job):
        _, seg, labels_rec, groups = job
        return first_pass(seg, labels_rec, groups, reference, threshold)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(job) for job in jobs]

    decisions = {
        rid: [] for rid in sorted(segments) if weak_labels.get(rid)
    }
    for (rid, *_), dec in zip(jobs, results):
        decisions[rid].append(dec)
    state = ClassificationState(
        {rid: frozenset(weak_labels[rid]) for rid in decisions}, decisions,
    )
    state.snapshot("first_pass")
    return state


def classify_corpus(
    segments: Mapping, weak_labels: Mapping, reference: Reference, threshold: float = 0.4,
    exclude: Mapping | None = None, threads: int = 1,
) -> ClassificationState:
    """First pass, then variation 1, then variation 2, each applied once."""
    state = run_first_pass(segments, weak_labels, reference, threshold, exclude, threads)
    state = variation_1(state)
    return variation_2(state, reference, threshold, exclude)
