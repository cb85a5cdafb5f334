"""Pairwise ranking and metric-vs-human correlation
===================================================

Part 1 fits worths from raw pairwise outcomes with the minorization-
maximization Bradley-Terry solver: three synthetic "conditions" with known
worths are recovered from 1500 noisy comparisons.

Part 2 loads the bundled listening-study table (per-condition worth, FAD and
SDR) and asks which metric tracks the human ranking better.
"""

import numpy as np

from fadtk import PairwiseComparison, fit_plackett_luce, listening_study_table, pearson, spearman

# --- Part 1: recover known worths from sampled comparisons ------------------
rng = np.random.default_rng(3)
true = {"clean": 1.0, "mild": 0.45, "harsh": 0.2}
items = list(true)
comparisons = []
for _ in range(1500):
    i, j = rng.choice(3, size=2, replace=False)
    a, b = items[i], items[j]
    p_a = true[a] / (true[a] + true[b])
    comparisons.append(PairwiseComparison(a, b, "a" if rng.random() < p_a else "b"))

fitted = fit_plackett_luce(comparisons)
print("recovered log-worths (max anchored at 0):")
for item in fitted.ordering():
    print(f"  {item:<6} fitted {fitted.worths[item]:+.3f}   true {np.log(true[item] / 1.0):+.3f}")

# --- Part 2: which metric agrees with human raters? ------------------------
rows = listening_study_table()
worth = [r.worth for r in rows]
fad = [r.fad for r in rows]
sdr = [r.sdr_db for r in rows]

print(f"\nlistening study ({len(rows)} conditions):")
print(f"  pearson(worth, FAD) = {pearson(worth, fad):+.3f}   spearman = {spearman(worth, fad):+.3f}")
print(f"  pearson(worth, SDR) = {pearson(worth, sdr):+.3f}   spearman = {spearman(worth, sdr):+.3f}")
print("higher |correlation| with worth means the metric better matches human judgment;")
print("FAD wins (its sign is negative because larger distances mean worse audio).")
