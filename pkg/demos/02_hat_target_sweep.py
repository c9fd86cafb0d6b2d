"""
Compensation vs. observed target on the hat surface
===================================================

Fix the probe point x = (1, 0) on f(x) = (1 - |x|^2/2) exp(-|x|^2/2) and
sweep the observed target y. The solved compensation delta moves the
probe horizontally until the surface meets y: small targets push it
outward (delta1 > 0, downhill), large targets pull it toward the peak
(delta1 < 0). The second coordinate stays ~0 by symmetry.
"""

from lcattr import MexicanHat, experiment_mexican_hat

f_probe = MexicanHat().query([1.0, 0.0])
print(f"f(1, 0) = {f_probe:.4f}")
print()
print("    y    delta1    delta2   f(x+delta)   converged")

rows = experiment_mexican_hat([-0.2, 0.0, 0.2, 0.4, 0.6, 0.8])
for row in rows:
    moved = MexicanHat().query([1.0 + row["delta1"], row["delta2"]])
    print(f"{row['y']:+.2f}   {row['delta1']:+.4f}   {row['delta2']:+.4f}"
          f"     {moved:+.4f}      {row['converged']}")

print()
print("note the sign flip as y crosses f(1, 0): the compensation walks to")
print("the nearest height-y contour, and when no contour exists (y = -0.2")
print("is below the surface minimum) it settles at the valley floor")
