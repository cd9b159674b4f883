"""Scoring against synthetic ground truth: Correct / Wrong / Unknown."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .classification import MNF, PASSES

CHANCE_PCT = 33.3
SPURIOUS = None

PASS_TITLES = {
    "first_pass": "First-Pass",
    "var1": "1st Variation",
    "var2": "2nd Variation",
}


def _overlap_area(a, b) -> int:
    rows = min(a[1], b[1]) - max(a[0], b[0]) + 1
    cols = min(a[3], b[3]) - max(a[2], b[2]) + 1
    return rows * cols if rows > 0 and cols > 0 else 0


def align(detected, plants) -> dict:
    """Map each detected segment id to the label of the plant it overlaps most.

    Overlap is the pixel area shared by the two boxes.  A segment touching no
    plant maps to ``None`` (spurious).  Equal overlaps go to the earlier plant.
    """
    out = {}
    for seg in detected:
        best_label, best_area = SPURIOUS, 0
        for plant in plants:
            area = _overlap_area(seg.bbox, plant.bbox)
            if area > best_area:
                best_label, best_area = plant.label, area
        out[seg.id] = best_label
    return out


def align_corpus(segments: dict, truth: dict) -> dict:
    out = {}
    for rid in sorted(segments):
        out.update(align(segments[rid], truth.get(rid, [])))
    return out


def outcome(labels, true_label) -> str:
    if labels is MNF or len(labels) >= 2:
        return "unknown"
    return "correct" if labels == frozenset([true_label]) else "wrong"


@dataclass
class PassScore:
    correct: int = 0
    wrong: int = 0
    unknown: int = 0

    @property
    def total(self) -> int:
        return self.correct + self.wrong + self.unknown

    def pct(self, kind: str) -> float:
        return 100.0 * getattr(self, kind) / self.total if self.total else 0.0

    @property
    def correct_pct(self) -> float:
        return self.pct("correct")

    @property
    def wrong_pct(self) -> float:
        return self.pct("wrong")

    @property
    def unknown_pct(self) -> float:
        return self.pct("unknown")

    def rounded(self) -> tuple:
        """Percentages at one decimal, adjusted so they still sum to 100."""
        if not self.total:
            return (0.0, 0.0, 0.0)
        raw = [self.correct_pct, self.wrong_pct, self.unknown_pct]
        # largest-remainder rounding in tenths
        tenths = [int(x * 10) for x in raw]
        short = 1000 - sum(tenths)
        order = sorted(range(3), key=lambda i: -(raw[i] * 10 - tenths[i]))
        for i in order[:short]:
            tenths[i] += 1
        return tuple(t / 10 for t in tenths)


@dataclass
class EvaluationReport:
    passes: dict = field(default_factory=dict)
    spurious_detections: int = 0
    missed_plants: int = 0
    chance_pct: float = CHANCE_PCT

    @property
    def final(self) -> PassScore:
        for name in reversed(PASSES):
            if name in self.passes:
                return self.passes[name]
        return PassScore()

    @property
    def n_evaluated(self) -> int:
        return self.final.total

    @property
    def correct_pct(self) -> float:
        return self.final.correct_pct

    @property
    def wrong_pct(self) -> float:
        return self.final.wrong_pct

    @property
    def unknown_pct(self) -> float:
        return self.final.unknown_pct


def score_labels(predicted: dict, alignment: dict) -> PassScore:
    """Tally one pass.  ``predicted`` maps segment id to its candidate labels."""
    ps = PassScore()
    for seg_id in sorted(alignment):
        truth = alignment[seg_id]
        if truth is SPURIOUS or seg_id not in predicted:
            continue
        kind = outcome(predicted[seg_id], truth)
        setattr(ps, kind, getattr(ps, kind) + 1)
    return ps


def score(state, alignment: dict) -> EvaluationReport:
    """Score every recorded pass of ``state``; spurious detections are counted apart.

    ``state`` is a :class:`~weakbird.classification.ClassificationState` or a
    plain ``{pass name: {segment id: labels}}`` mapping.
    """
    history = state.history if hasattr(state, "history") else state
    report = EvaluationReport()
    for name in PASSES:
        if name in history:
            report.passes[name] = score_labels(history[name], alignment)
    report.spurious_detections = sum(1 for v in alignment.values() if v is SPURIOUS)
    return report


def count_missed(segments: dict, truth: dict) -> int:
    """Plants that no detection of their recording was aligned to."""
    missed = 0
    for rid, plants in truth.items():
        hit = set(align(segments.get(rid, []), plants).values())
        missed += sum(1 for p in plants if p.label not in hit)
    return missed


def evaluate(state, segments: dict, truth: dict) -> EvaluationReport:
    """Align ``segments`` to ``truth`` and score every pass of ``state``."""
    report = score(state, align_corpus(segments, truth))
    report.missed_plants = count_missed(segments, truth)
    return report


def table_rows(report: EvaluationReport) -> list:
    return [
        (PASS_TITLES[name], *report.passes[name].rounded()) for name in PASSES if name in report.passes
    ]


def format_table(rows, chance_pct: float = CHANCE_PCT) -> str:
    """Aligned text table: a chance row then one row per ``(title, correct, wrong, unknown)``."""
    header = f"{'':<14}{'Correct':>9}{'Wrong':>9}{'Unknown':>9}"
    lines = [header, f"{'Chance':<14}{chance_pct:>8.1f}%{100 - chance_pct:>8.1f}%{'---':>9}"]
    for title, c, w, u in rows:
        lines.append(f"{title:<14}{c:>8.1f}%{w:>8.1f}%{u:>8.1f}%")
    return "\n".join(lines) + "\n"


def format_csv(rows, chance_pct: float = CHANCE_PCT) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["pass", "correct", "wrong", "unknown"])
    writer.writerow(["Chance", f"{chance_pct:.1f}", f"{100 - chance_pct:.1f}", ""])
    for title, c, w, u in rows:
        writer.writerow([title, f"{c:.1f}", f"{w:.1f}", f"{u:.1f}"])
    return buf.getvalue()


def report_table(report: EvaluationReport, fmt: str = "text") -> str:
    rows = table_rows(report)
    if fmt == "csv":
        return format_csv(rows, report.chance_pct)
    text = format_table(rows, report.chance_pct)
    if fmt == "text":
        text += (
            f"evaluated segments: {report.n_evaluated}  "
            f"spurious detections: {report.spurious_detections}  "
            f"missed plants: {report.missed_plants}\n"
        )
    return text
