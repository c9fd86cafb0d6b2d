"""
Scoring a dataset against a black-box model
===========================================

Build a small synthetic dataset around a known linear model, corrupt one
row, and rank every row by its negative-log-likelihood outlier score.
"""

import numpy as np

from lcattr import Dataset, LinearModel, anomaly_score, loo_variances

rng = np.random.default_rng(0)

# the "deployed" model: y = 2 a - 3 b + 1
model = LinearModel([2.0, -3.0], intercept=1.0)

# observations that mostly agree with it, except row 7
X = rng.normal(0.0, 1.0, size=(10, 2))
y = model.query_batch(X) + rng.normal(0.0, 0.1, 10)
y[7] += 2.5

data = Dataset.from_arrays(X, y, feature_names=("a", "b"))

# per-sample predictive variances from kernel-weighted leave-one-out
# residuals, then the score 0.5 ln(2 pi s2) + r^2 / (2 s2)
sigma2 = loo_variances(model, data, eta=np.ones(2)).sigma2
report = anomaly_score(data, model.query_batch(X), sigma2, threshold=3.0)

print("id   residual   sigma2    score")
for i, s in enumerate(data.samples):
    r = s.y - model.query(s.x)
    print(f"{s.id:>2}   {r:+8.3f}   {sigma2[i]:6.3f}   {report.per_sample_score[i]:7.3f}")

print()
print(f"aggregate score {report.aggregate_score:.3f}")
print(f"flagged above threshold 3.0: {list(report.flagged)}")
