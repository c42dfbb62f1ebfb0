"""
Two-class metrics, rendered reports, and threshold sweeps
=========================================================

Abnormal is the positive class everywhere. Normal's precision/recall come
from the transposed matrix, 0/0 counts as 0, and accuracy always equals the
support-weighted recall.
"""

import numpy as np

from colpoprep.dataset import ClassLabel
from colpoprep.metrics import (
    ConfusionMatrix,
    PredictionRecord,
    render_classification_report,
    render_report,
    report,
    threshold_sweep,
)

# an example validation outcome: 30 abnormal (18 caught), 9 normal (8 caught)
cm = ConfusionMatrix(tp=18, fp=1, fn=12, tn=8)
rep = report(cm)
print(render_classification_report(rep))

# the same report renders as a comparison-table row; stack several to compare runs
runs = [
    ("baseline", rep),
    ("high-threshold", report(ConfusionMatrix(tp=9, fp=0, fn=21, tn=9), threshold=0.8)),
]
text, twin = render_report(runs)
print(text)
print("machine twin keys:", sorted(twin["rows"][0]))

# sweeping the cutoff: abnormal recall can only fall as the threshold rises
rng = np.random.default_rng(1)
preds = [
    PredictionRecord(
        id=f"img{i:03d}.png",
        true_label=ClassLabel.ABNORMAL if i % 3 else ClassLabel.NORMAL,
        prob_abnormal=float(rng.random()),
    )
    for i in range(60)
]
print("tau    recall(abn)  precision(abn)")
for tau, swept in threshold_sweep(preds, [0.1, 0.3, 0.5, 0.7, 0.9]):
    abnormal = swept.per_class[ClassLabel.ABNORMAL]
    print("%.1f    %.3f        %.3f" % (tau, abnormal.recall, abnormal.precision))
