"""The two-step labelling on a six-recording corpus built by hand.

Recordings q1 and q2 both carry the weak labels {A, B}.  In q1 one segment
matches nothing and B is never found, so variation 1 hands B to it.  In q2
every segment matches A, so variation 2 moves the duplicate A segment that
best resembles a B recording.

Run:  python3 demos/03_classification_walkthrough.py
"""
import numpy as np

from weakbird.classification import MNF, Reference, classify_corpus
from weakbird.segmentation import Segment
from weakbird.spectrogram import Spectrogram

rng = np.random.default_rng(20)
H, W, PH, PW = 80, 44, 6, 16
ROWS = [4, 24, 44, 64]


def correlated(template, rho):
    # a window whose Pearson correlation with template is exactly rho
    t = (template - template.mean()).ravel()
    t /= np.linalg.norm(t)
    n = rng.normal(size=t.size)
    n -= n.mean()
    n -= n.dot(t) * t
    n /= np.linalg.norm(n)
    w = rho * t + np.sqrt(1 - rho**2) * n
    return (0.2 + 0.8 * (w - w.min()) / np.ptp(w)).reshape(template.shape)


p = [0.2 + 0.8 * rng.random((PH, PW)) for _ in ROWS]
q = [0.2 + 0.8 * rng.random((PH, PW)) for _ in ROWS]
v = {rid: np.zeros((H, W)) for rid in ("q1", "q2", "ra1", "ra2", "rb1")}
for k, r in enumerate(ROWS):
    v["q1"][r : r + PH, 4 : 4 + PW] = q[k]
    v["q2"][r : r + PH, 4 : 4 + PW] = p[k]
    v["ra1"][r : r + PH, 24 : 24 + PW] = p[k]
    if k < 3:
        v["ra2"][r : r + PH, 24 : 24 + PW] = q[k]
for k, rho in {1: 0.45, 2: 0.30, 3: 0.57}.items():
    v["rb1"][ROWS[k] : ROWS[k] + PH, 24 : 24 + PW] = correlated(p[k], rho)
v["noise"] = rng.random((H, W))

labels = {"q1": {"A", "B"}, "q2": {"A", "B"}, "ra1": {"A"}, "ra2": {"A"}, "rb1": {"B"}, "noise": set()}
labels = {k: frozenset(s) for k, s in labels.items()}
spectra = {rid: Spectrogram(x, recording_id=rid) for rid, x in v.items()}
segments = {
    rid: [Segment(f"{rid}:seg{k + 1}", rid, (r, r + PH - 1, 4, 4 + PW - 1), PH * PW,
                  v[rid][r : r + PH, 4 : 4 + PW].copy()) for k, r in enumerate(ROWS)]
    for rid in ("q1", "q2")
}

state = classify_corpus(segments, labels, Reference(spectra, labels))


def show(labs):
    return "MNF" if labs is MNF else "{" + ",".join(sorted(labs)) + "}"


for rid in ("q1", "q2"):
    print(f"{rid} (weak labels {show(labels[rid])})")
    for d in state.decisions[rid]:
        trail = " -> ".join(show(state.history[p][d.segment.id]) for p in ("first_pass", "var1", "var2"))
        print(f"  {d.segment.id}: {trail}   decided by {d.decided_by}")
