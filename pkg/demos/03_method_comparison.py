"""
What each attribution method can and cannot see
===============================================

Two observations share the same inputs x = (1, 0) but different targets
(y = 0 and y = 0.2). Local-surrogate methods explain the model around x
and never read y, so they give both observations identical scores; the
compensation is defined through the likelihood of y and separates them.
"""

import numpy as np

from lcattr import (
    BackgroundDistribution,
    Dataset,
    LcHyperParams,
    MexicanHat,
    Sample,
    lime_plus,
    solve_lc,
    sv_plus,
)

model = MexicanHat()
x = np.array([1.0, 0.0])
background = BackgroundDistribution.uniform_box([-3.0, -3.0], [3.0, 3.0], 256)
params = LcHyperParams(lam=0.01, nu=0.0, eta=0.01, n_s=1000, seed=0)

print(f"f(1, 0) = {model.query(x):.4f}")
print()
print("method    y=0.0 scores           y=0.2 scores           distinguishes?")

for name in ("lime+", "sv+", "lc"):
    pair = []
    for y in (0.0, 0.2):
        sample = Sample(x=x, y=y, id="probe")
        if name == "lime+":
            res = lime_plus(model, sample, nu=1e-4, eta=1.0, n_s=2000, seed=0)
        elif name == "sv+":
            res = sv_plus(model, sample, background, seed=0)
        else:
            data = Dataset.from_arrays([x], [y])
            res = solve_lc(model, data, 0.2, params)
        pair.append(np.asarray(res.scores))
    differs = not np.array_equal(pair[0], pair[1])
    fmt = lambda v: "(" + ", ".join(f"{s:+.4f}" for s in v) + ")"
    print(f"{name:<8}  {fmt(pair[0]):<21}  {fmt(pair[1]):<21}  {differs}")

print()
print("lime+ and sv+ answer 'what does the model do near x'; the")
print("compensation answers 'what would x have to be for y to be likely'")
